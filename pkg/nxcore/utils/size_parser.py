"""
Lecture de tailles en octets lisibles, comme "512M" ou "2.5G".

Les suffixes sont des multiples binaires (K = 1024). Un nombre seul est un
nombre d'octets.
"""

import re

_SIZE_PATTERN = re.compile(r"^\s*(\d+(?:\.\d+)?|\.\d+)\s*([KMGT]?)(?:i?B)?\s*$", re.IGNORECASE)

_MULTIPLIERS = {
    "": 1,
    "K": 1024,
    "M": 1024**2,
    "G": 1024**3,
    "T": 1024**4,
}


class SizeParsingError(ValueError):
    """Exception levée quand un texte ne donne pas une taille positive en octets."""

    pass


def parse_size(text: str) -> int:
    """
    Convertit une taille avec suffixe K/M/G/T optionnel en octets.

    Args:
        text: Taille comme "4096", "64K", "1.5G" ou "256MiB"

    Returns:
        La taille en octets, arrondie à l'entier inférieur

    Raises:
        SizeParsingError: Si le texte est mal formé ou la taille non positive

    Examples:
        >>> parse_size("64K")
        65536
        >>> parse_size("1.5G")
        1610612736
    """
    match = _SIZE_PATTERN.match(text or "")
    if match is None:
        raise SizeParsingError(f"invalid size '{text}' (expected e.g. 4096, 64K, 512M, 2G)")

    number, suffix = match.groups()
    size = int(float(number) * _MULTIPLIERS[suffix.upper()])
    if size <= 0:
        raise SizeParsingError(f"size '{text}' must be positive")
    return size
