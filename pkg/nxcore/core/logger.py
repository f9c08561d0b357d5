"""Module de configuration centralisée du logging pour nxcore.

Ce module fournit une fonction utilitaire pour créer et configurer
des instances de logger avec un format standardisé dans tout le moteur.
"""

import logging
import sys

from nxcore.core.config import settings


def setup_logger(name: str) -> logging.Logger:
    """Configure et retourne une instance de logger avec un format standardisé.

    Le handler écrit sur stderr: stdout est réservé aux lignes de résultats et
    de statistiques de la CLI. Le niveau vient de NXCORE_LOG_LEVEL (INFO par défaut).
    Les appels multiples ne dupliquent pas les handlers.

    Args:
        name: Le nom du logger, généralement le nom du module (__name__).

    Returns:
        Une instance configurée de logging.Logger prête à l'emploi.

    Example:
        >>> logger = setup_logger(__name__)
        >>> logger.info("[ENGINE] Run started")
        2026-10-18 12:00:00,000 - nxcore.engine.runner - INFO - [ENGINE] Run started
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        log_level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
        logger.setLevel(log_level)

        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(log_level)
        handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(handler)

    return logger
