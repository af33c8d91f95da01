"""
Moteur d'allocation de capacité « golden-rule » pour réseaux pair-à-pair.

Sous-packages :
- network     : spécification du réseau, équilibre des flux, vecteur de Perron
- allocation  : formules de Jackson, équilibre de Nash, paramètres d'altruisme
- distributed : itération orthogonale modifiée entre pairs simulés
- simulation  : simulateur à événements discrets du réseau de Jackson
- cli         : point d'entrée opérateur et rapports
"""

__version__ = "1.0.0"
