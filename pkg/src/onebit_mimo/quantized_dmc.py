"""The one-bit quantized channel as a finite discrete memoryless channel.

Each receive antenna feeds two sign detectors, so the output alphabet is the
set of ``2^(2Nr)`` sign patterns.  Patterns are stored as ``+/-1`` vectors in
real-lift order (all real parts, then all imaginary parts) and indexed
little-endian by ``bit_j = (sign_j + 1) / 2``.

Noise is CN(0, I), i.e. variance 1/2 per real dimension, so a rail whose
noiseless value is ``z`` reads ``+1`` with probability ``Q(-sqrt(2) z)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .numerics import binary_entropy, lift_vector, q_func, real_lift

__all__ = [
    "MAX_OUTPUT_BITS",
    "Constellation",
    "TransitionMatrix",
    "quantize",
    "pattern_index",
    "index_pattern",
    "all_patterns",
    "transition_prob",
    "transition_matrix",
    "divergences",
    "mutual_information",
    "conditional_entropy",
    "rail_entropy",
]

MAX_OUTPUT_BITS = 26

_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)
_TINY = 1e-300


@dataclass
class Constellation:
    """Finite input alphabet: ``symbols`` is ``(M, Nt)`` complex, ``probs`` sums to one."""

    symbols: np.ndarray
    probs: np.ndarray
    power_budget: float

    def __post_init__(self):
        self.symbols = np.atleast_2d(np.asarray(self.symbols, dtype=complex))
        self.probs = np.asarray(self.probs, dtype=float).ravel()
        if self.probs.shape[0] != self.symbols.shape[0]:
            raise ValueError(f"{self.symbols.shape[0]} symbols but {self.probs.shape[0]} probabilities")
        if self.probs.size and (np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-9):
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if self.average_power > self.power_budget * (1 + 1e-9) + 1e-300:
            raise ValueError(
                f"average power {self.average_power:.6g} exceeds budget {self.power_budget:.6g}"
            )

    def __len__(self) -> int:
        return self.symbols.shape[0]

    @property
    def average_power(self) -> float:
        return float(self.probs @ np.sum(np.abs(self.symbols) ** 2, axis=1))

    @classmethod
    def uniform(cls, symbols, power_budget: float) -> "Constellation":
        symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
        n = symbols.shape[0]
        return cls(symbols, np.full(n, 1.0 / n), power_budget)

    def with_probs(self, probs) -> "Constellation":
        return Constellation(self.symbols, probs, self.power_budget)


@dataclass
class TransitionMatrix:
    """``rows[i, r] = Pr[pattern r | symbol i]`` with ``log_rows`` kept alongside.

    The log form is exact where ``rows`` underflows, which matters for the
    near-deterministic rows at high SNR.
    """

    rows: np.ndarray
    log_rows: Optional[np.ndarray] = None

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.log_rows is None:
            with np.errstate(divide="ignore"):
                self.log_rows = np.log(self.rows)

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    def to_csv(self) -> str:
        """Inputs as rows, pattern index as columns."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["input"] + [str(r) for r in range(self.n_outputs)])
        for i, row in enumerate(self.rows):
            writer.writerow([i] + [repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TransitionMatrix":
        reader = csv.reader(io.StringIO(text))
        next(reader)
        return cls(np.array([[float(v) for v in row[1:]] for row in reader if row]))


def quantize(y) -> np.ndarray:
    """Sign pattern of a complex receive vector, with ``sgn(0) = +1``."""
    y_hat = lift_vector(np.atleast_1d(y))
    return np.where(y_hat >= 0, 1, -1).astype(int)


def pattern_index(signs) -> int:
    signs = np.asarray(signs)
    bits = (signs > 0).astype(np.int64)
    return int(np.sum(bits << np.arange(bits.size, dtype=np.int64)))


def index_pattern(index: int, n_rails: int) -> np.ndarray:
    bits = (index >> np.arange(n_rails)) & 1
    return (2 * bits - 1).astype(int)


def all_patterns(n_rails: int) -> np.ndarray:
    """``(2^n_rails, n_rails)`` array of all sign patterns in index order."""
    idx = np.arange(2**n_rails, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n_rails, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def _noiseless_rails(H, symbols) -> np.ndarray:
    Hhat = real_lift(H)
    return lift_vector(np.atleast_2d(symbols)) @ Hhat.T


def transition_prob(H, x, pattern) -> float:
    """``Pr[pattern | x] = prod_j Q(-sqrt(2) * sign_j * z_j)`` with ``z = lift(H x)``."""
    z = _noiseless_rails(H, np.atleast_1d(x))[0]
    signs = np.asarray(pattern, dtype=float)
    if signs.shape != z.shape:
        raise ValueError(f"pattern length {signs.size} != 2Nr = {z.size}")
    return float(np.exp(np.sum(special.log_ndtr(_SQRT2 * signs * z))))


def transition_matrix(H, constellation, max_output_bits: int = MAX_OUTPUT_BITS) -> TransitionMatrix:
    """Exact transition matrix of ``constellation`` (or a raw symbol array) over all patterns.

    Raises
    ------
    ValueError
        If ``2 Nr`` exceeds ``max_output_bits``.
    """
    symbols = constellation.symbols if isinstance(constellation, Constellation) else constellation
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n_rails = 2 * H.shape[0]
    if n_rails > max_output_bits:
        raise ValueError(f"2Nr = {n_rails} exceeds the output-alphabet cap of {max_output_bits} bits")
    z = _noiseless_rails(H, symbols)
    log_plus = special.log_ndtr(_SQRT2 * z)
    log_minus = special.log_ndtr(-_SQRT2 * z)
    bits = (all_patterns(n_rails) > 0).astype(float)
    log_rows = log_minus @ (1.0 - bits).T + log_plus @ bits.T
    rows = np.exp(log_rows)
    # renormalise rounding drift; log_rows stay exact
    rows /= rows.sum(axis=1, keepdims=True)
    return TransitionMatrix(rows, log_rows)


def _as_log_matrix(T) -> np.ndarray:
    if isinstance(T, TransitionMatrix):
        return T.log_rows
    with np.errstate(divide="ignore"):
        return np.log(np.atleast_2d(np.asarray(T, dtype=float)))


def divergences(T, probs) -> np.ndarray:
    """Per-input ``D(T_i || q)`` in bits where ``q = probs @ T``."""
    log_T = _as_log_matrix(T)
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (log_T.shape[0],):
        raise ValueError(f"probs has shape {probs.shape}, expected ({log_T.shape[0]},)")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.log(probs)
        log_q = special.logsumexp(log_T + log_p[:, None], axis=0)
    T_lin = np.exp(log_T)
    mask = T_lin > _TINY
    with np.errstate(invalid="ignore"):
        diff = np.where(mask, log_T - log_q[None, :], 0.0)
    return np.sum(np.where(mask, T_lin * diff, 0.0), axis=1) / _LN2


def mutual_information(T, probs) -> float:
    """Exact ``I(x; r)`` in bits for a finite input distribution."""
    probs = np.asarray(probs, dtype=float)
    d = divergences(T, probs)
    used = probs > 0
    return max(float(math.fsum(probs[used] * d[used])), 0.0)


def conditional_entropy(T, probs) -> float:
    """``H(r | x)`` in bits."""
    log_T = _as_log_matrix(T)
    T_lin = np.exp(log_T)
    h_rows = -np.sum(np.where(T_lin > _TINY, T_lin * log_T, 0.0), axis=1) / _LN2
    return float(np.asarray(probs, dtype=float) @ h_rows)


def rail_entropy(H, symbols) -> np.ndarray:
    """Per-symbol ``H(r | x)`` from the factorization ``sum_j Hb(Q(sqrt(2) z_j))``."""
    z = _noiseless_rails(H, symbols)
    return np.sum(binary_entropy(q_func(_SQRT2 * np.abs(z))), axis=1)


def symbols_power(symbols: Sequence) -> np.ndarray:
    return np.sum(np.abs(np.atleast_2d(symbols)) ** 2, axis=1)
