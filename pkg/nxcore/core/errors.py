"""Hiérarchie d'exceptions de nxcore.

Chaque erreur hérite de NxcoreError et, quand c'est pertinent, de l'exception
standard équivalente (ValueError, OSError, ...) pour rester attrapable par du
code appelant qui ne connaît pas nxcore.
"""


class NxcoreError(Exception):
    """Classe de base de toutes les erreurs levées par nxcore."""


class InvalidPartitionError(NxcoreError, ValueError):
    """Nombre d'intervalles invalide (P = 0 ou P > n)."""


class VertexOutOfRangeError(NxcoreError, IndexError):
    """Identifiant de sommet hors de [0, n)."""


class EmptyGraphError(NxcoreError, ValueError):
    """Le flux d'arêtes ne contient aucune arête."""


class EdgeParseError(NxcoreError, ValueError):
    """Ligne mal formée dans une liste d'arêtes texte.

    Attributes:
        line_number: Numéro (1-based) de la ligne fautive
    """

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class StorageError(NxcoreError, OSError):
    """Échec d'entrée/sortie ou accès non séquentiel à un fichier du graphe."""


class FormatError(StorageError):
    """Fichier binaire tronqué, corrompu ou violant les invariants de son format."""


class GeometryMismatchError(FormatError):
    """Intervalle dont la géométrie ne correspond pas au manifeste."""


class InfeasibleBudgetError(NxcoreError, ValueError):
    """Budget mémoire insuffisant pour la stratégie demandée."""


class ConfigurationError(NxcoreError, ValueError):
    """Prérequis manquant (ensemble transposé ou symétrisé) pour un noyau."""


class OversizeGraphError(NxcoreError, ValueError):
    """Graphe trop grand pour les oracles en mémoire."""


class KernelContractError(NxcoreError, RuntimeError):
    """Violation du contrat entre le moteur et un noyau."""


class HubMissingError(KernelContractError):
    """Hub absent pour une ligne source active pendant FromHub."""
