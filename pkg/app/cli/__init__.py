"""
Sous-package CLI : commandes opérateur et schémas de rapport.

Commandes : validate, solve, allocate, simulate, distributed.
Codes de sortie : 0 succès, 1 échec du domaine, 2 entrée illisible ou mal formée.
"""
