import sys

from app.cli.main import main

"""
Script d'entrée de la CLI, par exemple :

python run_cli.py allocate --input fixtures/three_peer.json
"""

if __name__ == "__main__":
    sys.exit(main())
