"""Parameter arithmetic for (k+1, k, k) minimum-bandwidth regenerating codes.

The file size is normalized to 1, so every quantity here is a fraction of
the file. No encoding is performed; only the traffic each operation moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class MbrCodeParams:
    k: int
    n: int
    d: int
    alpha: float
    gamma: float
    retrieval: float

    @property
    def stored_total(self) -> float:
        """Data held across all n nodes."""
        return self.n * self.alpha


def mbr_exact(k: int) -> tuple[Fraction, Fraction]:
    """(block size, retrieval traffic) as exact fractions."""
    _check_k(k)
    alpha = Fraction(2, k + 1)
    return alpha, k * alpha


def mbr_params(k: int) -> MbrCodeParams:
    """At the MBR point with d = k the per-node block equals the repair
    bandwidth, 2/(k+1); rebuilding the file reads k blocks."""
    alpha, retrieval = mbr_exact(k)
    return MbrCodeParams(
        k=int(k),
        n=int(k) + 1,
        d=int(k),
        alpha=float(alpha),
        gamma=float(alpha),
        retrieval=float(retrieval),
    )


def _check_k(k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
