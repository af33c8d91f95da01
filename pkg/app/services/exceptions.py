from typing import Any, Dict, Optional, Sequence


class GoldenRuleError(Exception):
    """Erreur de base du moteur : porte un code stable et des détails sérialisables."""

    code = "ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.details = details or {}
        self.stage: Optional[str] = None
        super().__init__(message)

    def with_stage(self, stage: str) -> "GoldenRuleError":
        self.stage = stage
        return self


class DimensionMismatchError(GoldenRuleError):
    code = "DIMENSION_MISMATCH"

    def __init__(self, field: str, expected: Sequence[int], actual: Sequence[int]):
        self.field = field
        super().__init__(
            f"Field '{field}' has shape {tuple(actual)}, expected {tuple(expected)}.",
            {"field": field, "expected": list(expected), "actual": list(actual)},
        )


class InvalidSpecError(GoldenRuleError):
    code = "INVALID_SPEC"

    def __init__(self, report):
        self.report = report
        codes = sorted({v.code for v in report.violations})
        super().__init__(
            f"Network specification is invalid: {', '.join(codes)}.",
            {"violations": [v.code for v in report.violations]},
        )


class SingularSystemError(GoldenRuleError):
    code = "SINGULAR_SYSTEM"

    def __init__(self, pivot: float, threshold: float):
        super().__init__(
            f"I - R is numerically singular (pivot {pivot:.3e} < {threshold:.3e}).",
            {"pivot": pivot, "threshold": threshold},
        )


class NoConvergenceError(GoldenRuleError):
    code = "NO_CONVERGENCE"

    def __init__(self, message: str, last_state: Optional[Dict[str, Any]] = None):
        self.last_state = last_state or {}
        super().__init__(message, {"iterations": self.last_state.get("iterations")})


class DegenerateMatrixError(GoldenRuleError):
    code = "DEGENERATE"


class ZeroVectorError(GoldenRuleError):
    code = "ZERO_VECTOR"

    def __init__(self):
        super().__init__("Cannot normalize a zero (or non-finite) vector.")


class UnstableError(GoldenRuleError):
    code = "UNSTABLE"

    def __init__(self, peers: Sequence[int], message: Optional[str] = None):
        self.peers = list(peers)
        super().__init__(
            message or f"Queue stability violated at peers {[p + 1 for p in self.peers]}.",
            {"peers": [p + 1 for p in self.peers]},
        )


class InfeasibleCapacityError(GoldenRuleError):
    code = "INFEASIBLE_CAPACITY"

    def __init__(self, peers: Sequence[int]):
        self.peers = list(peers)
        super().__init__(
            f"Capacity mu_i <= Lambda_i at peers {[p + 1 for p in self.peers]}.",
            {"peers": [p + 1 for p in self.peers]},
        )


class InfeasibleError(GoldenRuleError):
    code = "INFEASIBLE"

    def __init__(self, peers: Sequence[int], shortfalls: Sequence[float]):
        self.peers = list(peers)
        self.shortfalls = [float(s) for s in shortfalls]
        listing = ", ".join(f"peer {p + 1}: {s:.6g}" for p, s in zip(self.peers, self.shortfalls))
        super().__init__(
            f"Golden-rule allocation infeasible, capacity shortfall 1/v_i + Lambda_i - mu_i: {listing}.",
            {"peers": [p + 1 for p in self.peers], "shortfalls": self.shortfalls},
        )


class ThinningImpossibleError(GoldenRuleError):
    code = "THINNING_IMPOSSIBLE"

    def __init__(self, peers: Sequence[int]):
        self.peers = list(peers)
        super().__init__(
            f"mu_i <= 1/v_i at peers {[p + 1 for p in self.peers]}: no demand scaling restores feasibility.",
            {"peers": [p + 1 for p in self.peers]},
        )


class NonFiniteStateError(GoldenRuleError):
    code = "NON_FINITE_STATE"


class ProtocolError(GoldenRuleError):
    code = "PROTOCOL_VIOLATION"


class UnstableConfigError(GoldenRuleError):
    code = "UNSTABLE_CONFIG"

    def __init__(self, report):
        self.report = report
        super().__init__(
            "Simulation refused: the local/foreign split does not keep every queue stable.",
            {"violations": [v.code for v in report.violations]},
        )


class InvalidConfigError(GoldenRuleError):
    code = "INVALID_CONFIG"


class SpecParseError(GoldenRuleError):
    code = "PARSE_ERROR"
