"""Configuration centrale de nxcore."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Paramètres de configuration du moteur.

    Les variables sont lues depuis l'environnement (préfixe NXCORE_) ou un fichier .env.
    Exemple: NXCORE_TMPDIR=/mnt/scratch NXCORE_LOG_LEVEL=DEBUG
    """

    model_config = SettingsConfigDict(
        env_prefix="NXCORE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Répertoire des fichiers de débordement (sharding); None = répertoire temporaire système
    TMPDIR: Path | None = None

    LOG_LEVEL: str = "INFO"

    # Partitionnement et parallélisme par défaut
    DEFAULT_PARTITIONS: int = 16
    DEFAULT_THREADS: int = 4
    SORT_WORKERS: int = 4

    # Un tampon de lecture séquentielle, compté dans le plancher du budget mémoire
    STREAM_BUFFER_BYTES: int = 65536

    # Taille minimale (en arêtes) d'une unité de travail avant de découper un sous-shard
    MIN_UNIT_EDGES: int = 1024

    # Au-delà, les oracles en mémoire refusent le graphe
    ORACLE_MAX_EDGES: int = 10_000_000

    # Étiquettes de propriété des destinations (mode debug)
    DEBUG_OWNERSHIP: bool = False

    # Surcharge locale du registre des noyaux
    KERNEL_REGISTRY_LOCAL: Path | None = None


# Instance unique des paramètres pour tout le moteur
settings = Settings()
