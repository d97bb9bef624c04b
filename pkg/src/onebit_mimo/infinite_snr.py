"""Noiseless-limit capacities: orthant counting and the SIMO input optimisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "InfSnrBounds",
    "k_func",
    "log2_k",
    "mimo_inf_bounds",
    "mmwave_inf_bounds",
    "simo_inf_mi",
    "simo_inf_capacity",
    "simo_noiseless_transition",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class InfSnrBounds:
    lower_bits: float
    upper_bits: float
    exact_bits: Optional[float] = None

    def __post_init__(self):
        if self.lower_bits > self.upper_bits:
            raise ValueError("lower bound exceeds upper bound")


def k_func(nr: int, nt: int) -> int:
    """Orthants of R^(2Nr) met by a generic 2Nt-dimensional subspace.

    ``K = 2 * sum_{k=0}^{2Nt-1} C(2Nr - 1, k)``, exact integer arithmetic.
    """
    if nr < 1 or nt < 1:
        raise ValueError("nr and nt must be >= 1")
    n = 2 * nr - 1
    return 2 * sum(math.comb(n, k) for k in range(min(2 * nt, n + 1)))


def log2_k(nr: int, nt: int) -> float:
    k = k_func(nr, nt)
    return math.log2(k)


def mimo_inf_bounds(nr: int, nt: int, rank: Optional[int] = None) -> InfSnrBounds:
    """Infinite-SNR capacity bracket.

    Without ``rank`` the channel is assumed in general position:
    ``[log2 K(Nr, Nt), log2(K(Nr, Nt) + 1)]``, exactly ``2 Nr`` when ``Nt >= Nr``.
    With ``rank`` the bracket is ``[2 rank, log2(K(Nr, rank) + 1)]``, exactly
    ``2 Nr`` when ``rank == Nr``.
    """
    if rank is None:
        if nt >= nr:
            return InfSnrBounds(2.0 * nr, 2.0 * nr, 2.0 * nr)
        k = k_func(nr, nt)
        return InfSnrBounds(math.log2(k), math.log2(k + 1))
    if not 1 <= rank <= min(nr, nt):
        raise ValueError(f"rank must lie in [1, min(Nr, Nt)] = [1, {min(nr, nt)}]")
    if rank == nr:
        return InfSnrBounds(2.0 * nr, 2.0 * nr, 2.0 * nr)
    return InfSnrBounds(2.0 * rank, math.log2(k_func(nr, rank) + 1))


def mmwave_inf_bounds(nr: int, L: int) -> InfSnrBounds:
    """``[log2 K(Nr, L), log2(K(Nr, L) + 1)]`` for an L-path channel."""
    k = k_func(nr, L)
    return InfSnrBounds(math.log2(k), math.log2(k + 1))


def _xlog2(p: float) -> float:
    return p * math.log2(p) if p > 0 else 0.0


def simo_inf_mi(nr: int, p0: float, p1: float) -> float:
    """Noiseless SIMO mutual information ``f(p0, p1)``.

    ``p0`` is the mass on the zero symbol, ``p1`` the mass on the ``4 Nr``
    boundary-phase symbols (each straddling two neighbouring regions), and the
    rest sits uniformly on the ``4 Nr`` region-interior symbols.
    """
    if p0 < 0 or p1 < 0 or p0 + p1 > 1 + 1e-15:
        raise ValueError(f"need p0, p1 >= 0 and p0 + p1 <= 1, got ({p0}, {p1})")
    four_n = 4 * nr
    four_pow = 4.0**nr
    level = (1.0 - p0 - p1) / four_n + p0 / four_pow + p1
    coeff = -1.0 + p0 - p1 - p0 * four_n / four_pow
    head = coeff * math.log2(level) if level > 0 else 0.0
    return (
        head
        - 2.0 * p1
        - 8.0 * nr**2 / four_pow * p0
        - (four_pow - four_n) / four_pow * _xlog2(p0)
    )


def simo_inf_capacity(nr: int, tol: float = 1e-10, scan_points: int = 1000) -> tuple[float, float]:
    """Maximise ``f(p0, 0)`` over ``p0 in [0, 1]``; returns ``(capacity, p0*)``.

    A grid scan picks the best grid point first and golden-section search
    refines within its two neighbouring cells, so unimodality is only relied
    on locally.
    """
    if nr < 1:
        raise ValueError("nr must be >= 1")
    f = lambda p: simo_inf_mi(nr, p, 0.0)  # noqa: E731
    grid = np.linspace(0.0, 1.0, scan_points + 1)
    values = np.array([f(p) for p in grid])
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, scan_points)]
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    candidates = [(values[best], grid[best]), (f(a), a), (f(b), b), (f(0.5 * (a + b)), 0.5 * (a + b))]
    value, p0 = max(candidates)
    return float(value), float(p0)


def simo_noiseless_transition(nr: int, include_zero: bool = True) -> np.ndarray:
    """Noiseless SIMO transition matrix over region symbols, in structural form.

    Rows: the zero symbol (uniform over all ``4^Nr`` patterns) when
    ``include_zero``, then ``4 Nr`` deterministic region symbols mapped to the
    first ``4 Nr`` output columns.  Relabelling outputs does not change any
    mutual information, so the concrete pattern assignment is immaterial.
    """
    n_out = 4**nr
    rows = [np.full(n_out, 1.0 / n_out)] if include_zero else []
    eye = np.zeros((4 * nr, n_out))
    eye[np.arange(4 * nr), np.arange(4 * nr)] = 1.0
    rows.extend(eye)
    return np.array(rows)
