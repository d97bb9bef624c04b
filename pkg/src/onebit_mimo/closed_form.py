"""Closed-form capacities, rate bounds and low-SNR expansions.

SNR convention throughout: noise is CN(0, I), so the linear SNR is the total
transmit power ``Pt``.  Rates are in bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import binary_entropy, one_bit_channel_gain, q_func, singular_values
from .quantized_dmc import Constellation

__all__ = [
    "AQNM_DISTORTION",
    "RatePoint",
    "ConvexOptBoundInputs",
    "SingularChannelError",
    "qpsk_phases",
    "siso_capacity",
    "siso_constellation",
    "miso_capacity",
    "mrt_constellation",
    "miso_low_snr_expansion",
    "qpsk_low_snr_rate",
    "finite_snr_upper_bound",
    "channel_inversion_rate",
    "channel_inversion_constellation",
    "aqnm_rate",
    "waterfilling_allocation",
    "unquantized_waterfilling_capacity",
    "convexopt_lower_bound",
    "dmin_upper_check",
]

AQNM_DISTORTION = (math.pi - 2.0) / math.pi
_LN2 = math.log(2.0)


class SingularChannelError(ValueError):
    """``H H*`` is not invertible, so channel inversion does not apply."""


@dataclass(frozen=True)
class RatePoint:
    snr_linear: float
    rate_bits: float
    label: str


@dataclass(frozen=True)
class ConvexOptBoundInputs:
    """Kept-pattern count ``M``, minimum margin ``d_min`` and receive antennas ``nr``."""

    M: int
    d_min: float
    nr: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.M > 4**self.nr:
            raise ValueError(f"M = {self.M} exceeds 2^(2Nr) = {4 ** self.nr}")
        if not self.d_min > 0:
            raise ValueError("d_min must be > 0")


def _check_power(Pt: float) -> float:
    Pt = float(Pt)
    if not Pt >= 0:
        raise ValueError(f"Pt must be >= 0, got {Pt}")
    return Pt


def qpsk_phases() -> np.ndarray:
    """``exp(j (k pi/2 + pi/4))`` for ``k = 0..3``."""
    return np.exp(1j * (np.arange(4) * math.pi / 2 + math.pi / 4))


def siso_capacity(h: complex, Pt: float) -> float:
    """``2 (1 - Hb(Q(|h| sqrt(Pt))))``, the one-antenna case of :func:`miso_capacity`."""
    return miso_capacity([h], Pt)


def siso_constellation(h: complex, Pt: float) -> Constellation:
    """Rotated QPSK ``sqrt(Pt) exp(j (k pi/2 + pi/4 - angle h))``, uniform."""
    Pt = _check_power(Pt)
    symbols = math.sqrt(Pt) * qpsk_phases() * np.exp(-1j * np.angle(h))
    return Constellation.uniform(symbols[:, None], Pt)


def miso_capacity(h, Pt: float) -> float:
    """``2 (1 - Hb(Q(||h|| sqrt(Pt))))`` for the ``1 x Nt`` channel ``h*``.

    ``h`` is the length-``Nt`` channel vector; the channel row is its conjugate.
    """
    Pt = _check_power(Pt)
    return 2.0 * one_bit_channel_gain(float(np.linalg.norm(h)) * math.sqrt(Pt))


def mrt_constellation(h, Pt: float) -> Constellation:
    """MRT beamforming along ``h / ||h||`` with QPSK, uniform.

    A zero channel yields an empty alphabet (its capacity is 0 anyway).
    """
    Pt = _check_power(Pt)
    h = np.asarray(h, dtype=complex).ravel()
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        return Constellation(np.zeros((0, h.size), dtype=complex), np.zeros(0), Pt)
    symbols = math.sqrt(Pt) * qpsk_phases()[:, None] * (h / norm)[None, :]
    return Constellation.uniform(symbols, Pt)


def miso_low_snr_expansion(h, Pt: float) -> float:
    """Two-term expansion ``(2/pi) g/ln2 - (2/(3 pi^2)) g^2/ln2`` with ``g = ||h||^2 Pt``."""
    Pt = _check_power(Pt)
    g = float(np.linalg.norm(h)) ** 2 * Pt
    return (2.0 / math.pi) * g / _LN2 - (2.0 / (3.0 * math.pi**2)) * g**2 / _LN2


def qpsk_low_snr_rate(H, Pt: float) -> float:
    """Leading low-SNR rate ``(2/pi) tr(H H*) Pt / (Nt ln 2)`` of independent QPSK."""
    Pt = _check_power(Pt)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    return (2.0 / math.pi) * float(np.sum(np.abs(H) ** 2)) * Pt / (H.shape[1] * _LN2)


def finite_snr_upper_bound(H, Pt: float) -> float:
    """``2 Nr (1 - Hb(Q(sqrt(Pt sigma_max^2 / Nr))))``."""
    Pt = _check_power(Pt)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    nr = H.shape[0]
    smax = singular_values(H).sigma_max
    return 2.0 * nr * one_bit_channel_gain(math.sqrt(Pt * smax**2 / nr))


def _inverse_gram_trace(H: np.ndarray) -> float:
    spec = singular_values(H)
    if spec.rank < H.shape[0]:
        raise SingularChannelError(
            f"H H* is singular (rank {spec.rank} < Nr = {H.shape[0]}); channel inversion needs full row rank"
        )
    return float(np.sum(1.0 / spec.eigenvalues))


def channel_inversion_rate(H, Pt: float) -> float:
    """``2 Nr (1 - Hb(Q(sqrt(Pt / tr((H H*)^-1)))))``.

    Raises
    ------
    SingularChannelError
        If ``H`` does not have full row rank.
    """
    Pt = _check_power(Pt)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    trace = _inverse_gram_trace(H)
    return 2.0 * H.shape[0] * one_bit_channel_gain(math.sqrt(Pt / trace))


def channel_inversion_constellation(H, Pt: float) -> Constellation:
    """Zero-forcing precoded independent QPSK: ``c H* (H H*)^-1 s``.

    ``s`` runs over all ``4^Nr`` QPSK vectors with unit-power entries, and
    ``c = sqrt(Pt / tr((H H*)^-1))`` makes the average power exactly ``Pt``.
    """
    Pt = _check_power(Pt)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    nr = H.shape[0]
    trace = _inverse_gram_trace(H)
    precoder = H.conj().T @ np.linalg.inv(H @ H.conj().T)
    digits = (np.arange(4**nr)[:, None] // (4 ** np.arange(nr))[None, :]) % 4
    s = qpsk_phases()[digits]
    symbols = math.sqrt(Pt / trace) * s @ precoder.T
    return Constellation.uniform(symbols, Pt)


def aqnm_rate(H, Pt: float, rho: float = AQNM_DISTORTION) -> float:
    """Additive-quantization-noise lower bound ``log2 det(I + (Pt/Nt) H* D H)``."""
    Pt = _check_power(Pt)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    nt = H.shape[1]
    row_gain = np.sum(np.abs(H) ** 2, axis=1)
    D = (1.0 - rho) / (1.0 + rho * Pt * row_gain / nt)
    M = np.eye(nt) + (Pt / nt) * (H.conj().T * D[None, :]) @ H
    sign, logdet = np.linalg.slogdet(M)
    return max(float(logdet) / _LN2, 0.0)


def waterfilling_allocation(gains, Pt: float) -> np.ndarray:
    """Power per mode maximising ``sum log2(1 + p_i g_i)`` with ``sum p_i = Pt``.

    Closed form over the sorted gains: the largest active set whose water level
    ``mu = (Pt + sum 1/g_i) / n`` stays above every active ``1/g_i``.  Tied
    gains always enter together, since the level exceeds a tied ``1/g``
    once one of the tie is active.
    """
    Pt = _check_power(Pt)
    g = np.asarray(gains, dtype=float)
    p = np.zeros_like(g)
    pos = np.flatnonzero(g > 0)
    if Pt == 0 or pos.size == 0:
        return p
    order = pos[np.argsort(-g[pos], kind="stable")]
    inv = 1.0 / g[order]
    n_active = 1
    for n in range(1, order.size + 1):
        mu = (Pt + inv[:n].sum()) / n
        if mu > inv[n - 1]:
            n_active = n
        else:
            break
    mu = (Pt + inv[:n_active].sum()) / n_active
    p[order[:n_active]] = np.maximum(mu - inv[:n_active], 0.0)
    return p


def unquantized_waterfilling_capacity(H, Pt: float) -> float:
    """SVD-precoded waterfilling capacity without quantization."""
    Pt = _check_power(Pt)
    lam = singular_values(H).eigenvalues
    p = waterfilling_allocation(lam, Pt)
    return float(np.sum(np.log2(1.0 + p * lam)))


def _xlog2x(p: float) -> float:
    return p * math.log2(p) if p > 0 else 0.0


def convexopt_lower_bound(inputs: ConvexOptBoundInputs) -> float:
    """Lower bound on the uniform-input rate of the max-margin constellation.

    With ``e = Q(sqrt(2) d_min)`` and ``q = (1 - e)^(2 Nr)``::

        a1 = -(M-1)(q/M) log2(q/M) - (1 - (M-1) q/M) log2(1 - (M-1) q/M)
        a2 = -q log2(q/M) - (1-q) log2(1-q)
        bound = min(a1, a2) - 2 Nr Hb(e)

    Can be negative at low SNR; returned unclamped.
    """
    M, d, nr = inputs.M, inputs.d_min, inputs.nr
    e = q_func(math.sqrt(2.0 * d * d))
    # log1p keeps q exact when e is below machine epsilon
    q = math.exp(2 * nr * math.log1p(-e))
    a1 = -(M - 1) * _xlog2x(q / M) - _xlog2x(1.0 - (M - 1) * q / M)
    a2 = -q * math.log2(q / M) - _xlog2x(1.0 - q) if q > 0 else 0.0
    return min(a1, a2) - 2 * nr * binary_entropy(e)


def dmin_upper_check(H, Pt: float, d_min: float, rtol: float = 1e-9) -> bool:
    """Whether ``2 d_min^2 <= Pt (min_i ||h_i||)^2`` (row norms of ``H``)."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    min_row = float(np.min(np.linalg.norm(H, axis=1)))
    return 2.0 * d_min**2 <= Pt * min_row**2 * (1.0 + rtol)
