"""
Sous-package allocation : économie fermée du modèle pair-à-pair.

Responsabilités :
- longueurs de files et disutilités analytiques (formules de Jackson)
- partage de Nash entre files locale et étrangère
- paramètres d'altruisme de la règle d'or et mise en faisabilité
- procédure complète `golden_rule_pipeline`
"""
