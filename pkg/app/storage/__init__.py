"""
Sous-package de stockage des rapports d'exécution.

Contient :
- sérialisation JSON des rapports (pydantic) ;
- aplatissement CSV `section,name,i,j,value` (pandas) ;
- trace par ronde de l'itération distribuée (JSON lines).
"""
