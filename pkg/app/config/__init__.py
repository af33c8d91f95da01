"""
Sous-package de configuration de l'application.

Contient :
- paramètres globaux (tolérances numériques, graines, horizons de simulation)
- configuration du logging
"""
