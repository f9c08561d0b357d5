"""Générateur de graphes synthétiques R-MAT (Kronecker), reproductible par graine."""

from pathlib import Path

import numpy as np

from nxcore.core.logger import setup_logger

logger = setup_logger(__name__)


def rmat_edges(
    scale: int,
    edge_factor: int = 16,
    a: float = 0.57,
    b: float = 0.19,
    c: float = 0.19,
    seed: int = 0,
    permute: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Tire edge_factor * 2^scale arêtes R-MAT sur 2^scale sommets.

    Chaque bit des deux extrémités est choisi quadrant par quadrant avec les
    probabilités (a, b, c, 1 - a - b - c). Les étiquettes sont ensuite
    permutées pour casser la corrélation entre identifiant et degré.

    Args:
        scale: log2 du nombre de sommets
        edge_factor: Arêtes par sommet
        a: Probabilité du quadrant haut-gauche
        b: Probabilité du quadrant haut-droit
        c: Probabilité du quadrant bas-gauche
        seed: Graine du générateur numpy
        permute: Permute les étiquettes des sommets

    Returns:
        (src, dst) en uint64, boucles et doublons compris
    """
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if edge_factor < 1:
        raise ValueError(f"edge_factor must be >= 1, got {edge_factor}")
    if min(a, b, c) < 0 or a + b + c >= 1:
        raise ValueError(f"invalid quadrant probabilities a={a} b={b} c={c}")

    rng = np.random.default_rng(seed)
    n = 2**scale
    m = edge_factor * n
    src = np.zeros(m, dtype=np.uint64)
    dst = np.zeros(m, dtype=np.uint64)

    ab = a + b
    c_norm = c / (1.0 - ab)
    a_norm = a / ab
    for bit in range(scale):
        src_bit = rng.random(m) > ab
        dst_bit = rng.random(m) > np.where(src_bit, c_norm, a_norm)
        src |= src_bit.astype(np.uint64) << np.uint64(bit)
        dst |= dst_bit.astype(np.uint64) << np.uint64(bit)

    if permute:
        labels = rng.permutation(n).astype(np.uint64)
        src, dst = labels[src], labels[dst]

    logger.debug(f"[RMAT] scale={scale} edge_factor={edge_factor} seed={seed}: {m} edges")
    return src, dst


def write_edge_list(path: Path, src: np.ndarray, dst: np.ndarray) -> int:
    """
    Écrit une liste d'arêtes texte "src dst" par ligne.

    Returns:
        Nombre d'arêtes écrites
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pairs = np.column_stack([np.asarray(src, dtype=np.uint64), np.asarray(dst, dtype=np.uint64)])
    np.savetxt(path, pairs, fmt="%d", delimiter=" ")
    logger.info(f"[RMAT] {pairs.shape[0]} edges written to {path}")
    return int(pairs.shape[0])
