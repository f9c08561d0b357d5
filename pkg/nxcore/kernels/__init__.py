"""Noyaux de calcul (PageRank, BFS, WCC, SCC) et oracles de vérification."""
