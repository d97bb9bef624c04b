"""Special functions and dense linear algebra shared by the rest of the package.

Complex matrices are plain ``numpy`` arrays of dtype ``complex128``; the
real-valued equivalent of an ``Nr x Nt`` complex channel is the
``2Nr x 2Nt`` block matrix returned by :func:`real_lift`.  Vectors are lifted
as ``[Re(x); Im(x)]`` so that ``real_lift(H) @ lift_vector(x)`` equals
``lift_vector(H @ x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "SpectralData",
    "q_func",
    "binary_entropy",
    "one_bit_channel_gain",
    "singular_values",
    "real_lift",
    "lift_vector",
    "unlift_vector",
]

_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)


def q_func(x):
    """Gaussian tail probability ``Q(x) = P[N(0, 1) > x]``.

    Evaluated as ``erfc(x / sqrt(2)) / 2`` so that the far tail keeps full
    relative precision (``q_func(30)`` is ~4.9e-198, not 0).  Accepts scalars
    or arrays.
    """
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def binary_entropy(p):
    """Binary entropy in bits, with ``0 log 0 = 0``.

    Raises
    ------
    ValueError
        If any ``p`` lies outside ``[0, 1]``.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p_arr)) or np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise ValueError(f"binary_entropy needs 0 <= p <= 1, got {p!r}")
    out = (special.entr(p_arr) + special.entr(1.0 - p_arr)) / _LN2
    return float(out) if np.ndim(out) == 0 else out


def one_bit_channel_gain(x):
    """``1 - Hb(Q(x))`` computed without cancellation near ``x = 0``.

    With ``p = Q(x) = 1/2 - delta`` and ``delta = erf(x / sqrt(2)) / 2``::

        1 - Hb(p) = [(1/2 - delta) log1p(-2 delta) + (1/2 + delta) log1p(2 delta)] / ln 2

    which stays accurate when ``delta`` is tiny (the low-SNR regime where
    ``Hb`` is within 1e-12 of one).  For ``|x| >= 1`` the direct form is used.
    Even in ``x``.
    """
    x_arr = np.abs(np.asarray(x, dtype=float))
    small = np.minimum(x_arr, 1.0)
    delta = 0.5 * special.erf(small / _SQRT2)
    near = ((0.5 - delta) * np.log1p(-2.0 * delta) + (0.5 + delta) * np.log1p(2.0 * delta)) / _LN2
    far = 1.0 - binary_entropy(q_func(np.maximum(x_arr, 1.0)))
    out = np.where(x_arr < 1.0, near, far)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SpectralData:
    """Singular values (descending), numerical rank and condition number."""

    singular_values: np.ndarray
    rank: int
    condition_number: float

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        """Retained eigenvalues ``sigma_i**2`` of ``M M*``."""
        return self.singular_values[: self.rank] ** 2


def singular_values(M) -> SpectralData:
    """Singular values of a (complex) matrix with tolerance-based rank.

    The rank counts singular values above ``max(rows, cols) * sigma_max * 1e-12``;
    the condition number is ``sigma_max / sigma_min`` over the retained ones
    (``inf`` for the zero matrix).
    """
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        raise ValueError("singular_values needs a nonempty matrix")
    s = np.linalg.svd(M, compute_uv=False)
    s = np.sort(np.abs(s))[::-1]
    smax = float(s[0]) if s.size else 0.0
    tol = max(M.shape) * smax * 1e-12
    rank = int(np.count_nonzero(s > tol))
    cond = smax / float(s[rank - 1]) if rank else math.inf
    return SpectralData(singular_values=s, rank=rank, condition_number=cond)


def real_lift(H) -> np.ndarray:
    """Real embedding ``[[Re H, -Im H], [Im H, Re H]]`` of a complex matrix."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def lift_vector(x) -> np.ndarray:
    """Stack ``[Re(x); Im(x)]`` along the last axis."""
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag], axis=-1)


def unlift_vector(x_hat) -> np.ndarray:
    """Inverse of :func:`lift_vector`."""
    x_hat = np.asarray(x_hat, dtype=float)
    n = x_hat.shape[-1] // 2
    return x_hat[..., :n] + 1j * x_hat[..., n:]
