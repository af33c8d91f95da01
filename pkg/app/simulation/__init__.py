"""
Sous-package simulation : validation empirique des formules analytiques.

Responsabilités :
- simulateur à événements discrets des files locales et étrangères
- estimateurs par lots (longueurs, délais, temps de séjour, disutilités)
- table de proportionnalité de la règle d'or
"""
