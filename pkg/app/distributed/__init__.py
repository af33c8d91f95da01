"""
Sous-package distribué : itération orthogonale modifiée entre pairs simulés.

Responsabilités :
- messages typés et bus synchrone (étiquettes de ronde, charges finies)
- pairs ne détenant que leur ligne de routage, de B_k et leur composante de v_k
- ordonnanceur de rondes, réductions sur arbre, équilibre des flux par Jacobi
"""
