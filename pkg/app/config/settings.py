from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Paramètres globaux du moteur d'allocation « golden-rule »."""

    # Chemins
    base_dir: Path = Path(__file__).resolve().parents[2]
    logs_dir: Path = base_dir / "logs"

    # Logging
    log_level: str = "INFO"
    log_to_file: bool = False
    log_max_bytes: int = 5 * 1024 * 1024
    log_backup_count: int = 5

    # Validation / algèbre linéaire
    row_sum_tolerance: float = 1e-12
    singular_pivot_ratio: float = 1e-12
    flow_residual_tolerance: float = 1e-10

    # Vecteur propre de Perron
    eigen_tol: float = 1e-10
    eigen_max_iters: int = 100_000
    oscillation_patience: int = 100

    # Allocation
    feasibility_mode: str = "fail"  # fail | augment | thin
    feasibility_margin: float = 0.05
    golden_rule_tolerance: float = 1e-7  # écart relatif max des rapports à kappa

    # Itération distribuée
    distributed_tol: float = 1e-9
    distributed_max_rounds: int = 10_000

    # Simulation à événements discrets
    sim_horizon: int = 200_000  # arrivées exogènes par réplication
    sim_warmup: float = 0.2
    sim_batches: int = 20
    sim_replications: int = 5
    sim_seed: int = 12345
    sim_workers: int = 1

    model_config = SettingsConfigDict(
        env_prefix="GOLDENRULE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


settings = Settings()
