"""Transmit constellation design for one-bit receivers.

For a sign pattern ``r`` the max-margin symbol solves::

    maximize d  s.t.  diag(r) Hhat x >= d 1,   ||x||^2 <= Pt

With ``A = diag(r) Hhat`` (rows ``a_j``), minimax duality gives::

    d* = sqrt(Pt) * min_{lambda in simplex} ||A^T lambda||

whenever the origin is outside the convex hull of the rows, and ``d* = 0``
otherwise.  The optimum symbol is ``sqrt(Pt) w / ||w||`` for the min-norm
point ``w`` of that hull, so the program is solved exactly by Wolfe's
min-norm-point algorithm on the Gram matrix ``A A^T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import BAResult, blahut_arimoto, cost_constrained_capacity
from .closed_form import SingularChannelError, channel_inversion_constellation
from .numerics import real_lift, unlift_vector
from .quantized_dmc import Constellation, all_patterns, quantize, transition_matrix

__all__ = [
    "DESIGN_MAX_OUTPUT_BITS",
    "FEASIBILITY_TOL",
    "InfeasiblePatternError",
    "MarginSolverError",
    "MarginSolution",
    "DesignResult",
    "min_norm_point",
    "feasibility_check",
    "max_margin_symbol",
    "design_constellation",
    "simo_grid_capacity",
    "SimoGridResult",
    "mmwave_single_path_constellation",
    "sign_consistent",
    "designed_ba_rate",
    "combined_alphabet_rate",
]

DESIGN_MAX_OUTPUT_BITS = 20
FEASIBILITY_TOL = 1e-7


class InfeasiblePatternError(ValueError):
    """The pattern's orthant does not meet the column space of ``Hhat``."""


class MarginSolverError(RuntimeError):
    """Min-norm-point iteration hit its cap; ``best`` holds the last iterate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def min_norm_point(G: np.ndarray, max_iter: int = 1000, rtol: float = 1e-13) -> np.ndarray:
    """Convex weights ``lambda`` minimising ``lambda^T G lambda`` over the simplex.

    ``G`` is the Gram matrix of the points.  Wolfe's algorithm: a major
    step adds the point most violating optimality, minor steps project onto
    the affine hull of the corral and drop points whose weight goes to zero.
    """
    m = G.shape[0]
    scale = float(np.max(np.diag(G))) or 1.0
    start = int(np.argmin(np.diag(G)))
    corral = [start]
    lam = np.zeros(m)
    lam[start] = 1.0
    for _ in range(max_iter):
        grad = G @ lam
        norm2 = float(lam @ grad)
        j = int(np.argmin(grad))
        if norm2 - grad[j] <= rtol * scale or norm2 <= 1e-28 * scale:
            return lam
        if j in corral:
            # numerically stalled; the current point is optimal to precision
            return lam
        corral.append(j)
        for _minor in range(m + 1):
            idx = np.array(corral)
            k = idx.size
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = G[np.ix_(idx, idx)]
            kkt[:k, k] = 1.0
            kkt[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            mu = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
            if np.all(mu > 1e-15):
                lam = np.zeros(m)
                lam[idx] = mu
                break
            cur = lam[idx]
            neg = mu <= 1e-15
            theta = np.min(cur[neg] / (cur[neg] - mu[neg]))
            cur = cur + theta * (mu - cur)
            lam = np.zeros(m)
            lam[idx] = np.maximum(cur, 0.0)
            keep = cur > 1e-15
            corral = [c for c, kp in zip(corral, keep) if kp]
            lam /= lam.sum()
    raise MarginSolverError(f"min-norm-point did not converge in {max_iter} iterations", lam)


@dataclass
class MarginSolution:
    pattern: np.ndarray
    x_hat: np.ndarray
    d_star: float

    @property
    def symbol(self) -> np.ndarray:
        return unlift_vector(self.x_hat)


def _margin_direction(Hhat: np.ndarray, pattern) -> tuple[np.ndarray, float]:
    """Unit-power optimum ``(u, d*)`` of the margin program."""
    signs = np.asarray(pattern, dtype=float)
    if signs.shape != (Hhat.shape[0],):
        raise ValueError(f"pattern length {signs.size} != rows of Hhat {Hhat.shape[0]}")
    A = signs[:, None] * Hhat
    lam = min_norm_point(A @ A.T)
    w = A.T @ lam
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return np.zeros(Hhat.shape[1]), 0.0
    u = w / norm
    # the exact optimum satisfies min_j a_j.u = ||w||; report the attained margin
    return u, float(np.min(A @ u))


def _feasibility_scale(Hhat: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(Hhat, axis=1))) or 1.0


def feasibility_check(Hhat, pattern, tol: float = FEASIBILITY_TOL) -> bool:
    """Whether ``diag(pattern) Hhat x > 0`` has a solution.

    Decided by the unit-power margin: feasible iff ``d* > tol * max_j ||hhat_j||``.
    """
    Hhat = np.atleast_2d(np.asarray(Hhat, dtype=float))
    _, d = _margin_direction(Hhat, pattern)
    return d > tol * _feasibility_scale(Hhat)


def max_margin_symbol(Hhat, pattern, Pt: float, tol: float = FEASIBILITY_TOL) -> MarginSolution:
    """Max-margin real symbol for ``pattern`` under ``||x||^2 <= Pt``.

    Raises
    ------
    InfeasiblePatternError
        If the pattern is not reachable (``d* = 0``).
    MarginSolverError
        If the inner iteration fails to converge.
    """
    Hhat = np.atleast_2d(np.asarray(Hhat, dtype=float))
    u, d = _margin_direction(Hhat, pattern)
    if not d > tol * _feasibility_scale(Hhat):
        raise InfeasiblePatternError(f"pattern {list(np.asarray(pattern))} is infeasible")
    root = math.sqrt(Pt)
    return MarginSolution(np.asarray(pattern, dtype=int), root * u, root * d)


@dataclass
class DesignResult:
    constellation: Constellation
    margins: np.ndarray
    patterns: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return len(self.constellation)

    @property
    def d_min(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else 0.0

    def scaled(self, Pt: float) -> "DesignResult":
        """Same design at another power; margins scale with ``sqrt(Pt)``."""
        c = math.sqrt(Pt / self.constellation.power_budget)
        const = Constellation(self.constellation.symbols * c, self.constellation.probs, Pt)
        return DesignResult(const, self.margins * c, self.patterns)

    def to_json(self) -> str:
        s = self.constellation.symbols
        doc = {
            "M": self.M,
            "d_min": self.d_min,
            "power_budget": self.constellation.power_budget,
            "symbols_re": s.real.tolist(),
            "symbols_im": s.imag.tolist(),
            "probabilities": self.constellation.probs.tolist(),
            "margins": self.margins.tolist(),
            "patterns": self.patterns.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "DesignResult":
        doc = json.loads(text)
        symbols = np.asarray(doc["symbols_re"]) + 1j * np.asarray(doc["symbols_im"])
        const = Constellation(symbols, doc["probabilities"], doc["power_budget"])
        return cls(const, np.asarray(doc["margins"], dtype=float), np.asarray(doc["patterns"], dtype=int))


def design_constellation(H, Pt: float, max_output_bits: int = DESIGN_MAX_OUTPUT_BITS) -> DesignResult:
    """Max-margin symbol for every reachable sign pattern, uniform over the kept set.

    Patterns are visited in index order; the zero symbol is not included.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n_rails = 2 * H.shape[0]
    if n_rails > max_output_bits:
        raise ValueError(f"2Nr = {n_rails} exceeds the enumeration cap of {max_output_bits}")
    Hhat = real_lift(H)
    thresh = FEASIBILITY_TOL * _feasibility_scale(Hhat)
    root = math.sqrt(Pt)
    kept_x, kept_d, kept_p = [], [], []
    for pattern in all_patterns(n_rails):
        u, d = _margin_direction(Hhat, pattern)
        if d > thresh:
            kept_x.append(root * u)
            kept_d.append(root * d)
            kept_p.append(pattern)
    symbols = unlift_vector(np.array(kept_x)) if kept_x else np.zeros((0, H.shape[1]), dtype=complex)
    M = len(kept_x)
    probs = np.full(M, 1.0 / M) if M else np.zeros(0)
    const = Constellation(symbols, probs, Pt)
    return DesignResult(const, np.array(kept_d), np.array(kept_p, dtype=int).reshape(M, n_rails))


@dataclass
class SimoGridResult:
    capacity_bits: float
    symbols: np.ndarray
    probs: np.ndarray
    converged: bool

    def support(self, threshold: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
        keep = self.probs > threshold
        return self.symbols[keep], self.probs[keep]

    def to_json(self, threshold: float = 1e-4) -> str:
        sym, p = self.support(threshold)
        return json.dumps(
            {
                "capacity_bits": self.capacity_bits,
                "support_re": sym.real.tolist(),
                "support_im": sym.imag.tolist(),
                "probabilities": p.tolist(),
            }
        )


def _simo_candidates(h: np.ndarray, Pt: float, grid_n: int) -> np.ndarray:
    root = math.sqrt(Pt)
    axis = np.linspace(-3 * root, 3 * root, grid_n)
    re, im = np.meshgrid(axis, axis)
    square = (re + 1j * im).ravel()
    # threshold crossings sit at phases k pi/2 - angle(h_i); region bisectors between them
    crit = np.sort(np.mod(np.add.outer(np.arange(4) * math.pi / 2, -np.angle(h)).ravel(), 2 * math.pi))
    gaps = np.diff(np.append(crit, crit[0] + 2 * math.pi))
    bisect = crit + 0.5 * gaps
    radii = np.linspace(0.0, 3 * root, grid_n)[1:]
    rays = np.concatenate([crit, bisect])
    polar = (radii[:, None] * np.exp(1j * rays)[None, :]).ravel()
    circle = root * np.exp(1j * rays)
    cands = np.concatenate([[0.0], square, polar, circle])
    # coincident threshold phases would repeat candidates
    _, first = np.unique(np.round(np.c_[cands.real, cands.imag] / root, 12), axis=0, return_index=True)
    return cands[np.sort(first)]


def simo_grid_capacity(h, Pt: float, grid_n: int = 64, tol: float = 1e-7) -> SimoGridResult:
    """SIMO capacity estimate over a dense candidate set of input symbols.

    Candidates: a ``grid_n x grid_n`` square grid on ``|Re x|, |Im x| <= 3 sqrt(Pt)``,
    the origin, and rays along every threshold phase ``k pi/2 - angle(h_i)``
    and every region bisector (``grid_n - 1`` radii up to ``3 sqrt(Pt)``),
    including the points of modulus ``sqrt(Pt)``.  The capacity over these
    candidates under ``E|x|^2 <= Pt`` comes from ``cost_constrained_capacity``,
    so ``capacity_bits`` is within ``tol`` of the grid optimum.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    h = np.asarray(h, dtype=complex).ravel()
    cands = _simo_candidates(h, Pt, grid_n)
    T = transition_matrix(h[:, None], cands[:, None])
    res = cost_constrained_capacity(T, np.abs(cands) ** 2, Pt, tol=tol)
    return SimoGridResult(res.capacity_bits, cands, res.probs, res.converged)


def mmwave_single_path_constellation(alpha: complex, a_r, a_t, Pt: float, grid_n: int = 64) -> tuple[Constellation, float]:
    """Beamform along ``a_t`` and reuse the SIMO grid optimum of ``h = alpha ||a_t||^2 a_r``.

    Returns the ``Nt``-dimensional constellation and its SIMO capacity estimate.
    """
    a_r = np.asarray(a_r, dtype=complex).ravel()
    a_t = np.asarray(a_t, dtype=complex).ravel()
    gain = float(np.vdot(a_t, a_t).real)
    h = alpha * gain * a_r
    res = simo_grid_capacity(h, Pt / gain, grid_n)
    sym, p = res.support(0.0)
    keep = p > 0
    symbols = sym[keep][:, None] * a_t[None, :]
    return Constellation(symbols, p[keep] / p[keep].sum(), Pt), res.capacity_bits


def sign_consistent(H, design: DesignResult) -> bool:
    """Noiseless decoding check: every kept symbol reproduces its own pattern."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    for x, pattern in zip(design.constellation.symbols, design.patterns):
        if not np.array_equal(quantize(H @ x), pattern):
            return False
    return True


def designed_ba_rate(H, design: DesignResult, tol: float = 1e-9) -> BAResult:
    """Blahut-Arimoto over the designed symbols; every symbol already has power ``Pt``."""
    return blahut_arimoto(transition_matrix(H, design.constellation), tol=tol)


def combined_alphabet_rate(H, Pt: float, design: DesignResult | None = None, tol: float = 1e-7) -> BAResult:
    """Capacity over the designed symbols joined with the channel-inversion alphabet.

    The average power ``E||x||^2 <= Pt`` is enforced, so the channel-inversion
    symbols (whose powers differ) may be reweighted.  Uniform channel
    inversion seeds the search, so the result never falls below its rate.  Channels without full row rank use the designed
    symbols alone.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if design is None:
        design = design_constellation(H, 1.0)
    symbols = design.scaled(Pt).constellation.symbols
    init = None
    try:
        inversion = channel_inversion_constellation(H, Pt)
    except SingularChannelError:
        pass
    else:
        init = np.concatenate([np.zeros(len(symbols)), inversion.probs])
        symbols = np.concatenate([symbols, inversion.symbols])
    T = transition_matrix(H, symbols)
    return cost_constrained_capacity(T, np.sum(np.abs(symbols) ** 2, axis=1), Pt, tol=tol, init=init)
