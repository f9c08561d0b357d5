"""Services: prétraitement, modèle de coût, générateur R-MAT."""
