"""Success-probability map generators.

Two kinds: "uniform" draws each cell i.i.d. from [0.2, 1.0]; the
"gaussian-mixture" kind raises two ridges along the middle row and middle
column with values decaying in the Chebyshev distance to the nearest
ridge. Both kinds then cap every cell within (Chebyshev) distance 1 of an
entry point at 0.2, so snares near the attacker's way in are poor spots.
"""

from typing import Sequence, Tuple

import numpy as np

from .rng import substream

MAP_KINDS = ("uniform", "gaussian-mixture")

ENTRY_CAP = 0.2


def generate_map(kind: str, rows: int, cols: int,
                 entry_points: Sequence[Tuple[int, int]], seed: int) -> np.ndarray:
    if rows < 2 or cols < 2:
        raise ValueError("map generation needs at least a 2x2 grid")
    if kind == "uniform":
        rng = substream(seed, "map")
        values = rng.uniform(0.2, 1.0, size=(rows, cols))
    elif kind == "gaussian-mixture":
        # Deterministic by construction; the seed is accepted for interface
        # symmetry but unused.
        mid_r, mid_c = (rows - 1) / 2.0, (cols - 1) / 2.0
        r = np.arange(rows)[:, None]
        c = np.arange(cols)[None, :]
        ridge_dist = np.minimum(np.abs(r - mid_r), np.abs(c - mid_c))
        width = max(rows, cols) / 4.0
        values = 0.2 + 0.8 * np.exp(-(ridge_dist ** 2) / (2.0 * width ** 2))
    else:
        raise ValueError(f"unknown map kind {kind!r}")

    for er, ec in entry_points:
        r_lo, r_hi = max(0, er - 1), min(rows, er + 2)
        c_lo, c_hi = max(0, ec - 1), min(cols, ec + 2)
        patch = values[r_lo:r_hi, c_lo:c_hi]
        np.minimum(patch, ENTRY_CAP, out=patch)
    return values
