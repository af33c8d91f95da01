"""
Sous-package réseau : types de domaine et algèbre linéaire du modèle.

Responsabilités :
- spécification du réseau (R, λ₀, μ) et validation des hypothèses structurelles
- résolution des équations d'équilibre des flux (B, B̃, Λ)
- couple de Perron (κ, v) de B̃
"""
