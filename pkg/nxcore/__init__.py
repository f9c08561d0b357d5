"""nxcore - Moteur de traitement de graphes hors-mémoire sur une seule machine."""

__version__ = "0.1.0"
