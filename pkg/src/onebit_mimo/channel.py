"""Channel matrices: fixed, IID Rayleigh and ray-based mmWave with planar arrays."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .numerics import singular_values

__all__ = [
    "ChannelConfigError",
    "ChannelModelConfig",
    "MmwavePathSet",
    "make_rng",
    "array_response",
    "mmwave_channel",
    "draw_mmwave_paths",
    "gen_channel",
    "gen_mmwave",
    "is_general_position",
    "channel_to_json",
    "channel_from_json",
]

EXACT_GENERAL_POSITION_MAX_ROWS = 16
GENERAL_POSITION_SAMPLES = 500


class ChannelConfigError(ValueError):
    """Invalid channel configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ChannelModelConfig:
    """Description of one channel draw.

    ``kind`` is ``"fixed"`` (``matrix`` required), ``"iid_gaussian"`` (entries
    CN(0, 1)) or ``"mmwave"`` (``L`` paths between ``Yt x Zt`` and ``Yr x Zr``
    planar arrays).
    """

    kind: Literal["fixed", "iid_gaussian", "mmwave"] = "iid_gaussian"
    nr: int = 2
    nt: int = 2
    seed: int = 0
    L: int = 1
    yt: Optional[int] = None
    zt: Optional[int] = None
    yr: Optional[int] = None
    zr: Optional[int] = None
    spacing_over_wavelength: float = 0.5
    matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def validate(self) -> None:
        if self.kind not in ("fixed", "iid_gaussian", "mmwave"):
            raise ChannelConfigError("kind", f"unknown channel kind {self.kind!r}")
        if self.nr < 1:
            raise ChannelConfigError("nr", "must be >= 1")
        if self.nt < 1:
            raise ChannelConfigError("nt", "must be >= 1")
        if self.kind == "fixed":
            if self.matrix is None:
                raise ChannelConfigError("matrix", "required for kind 'fixed'")
            if np.shape(self.matrix) != (self.nr, self.nt):
                raise ChannelConfigError(
                    "matrix", f"shape {np.shape(self.matrix)} != ({self.nr}, {self.nt})"
                )
        if self.kind == "mmwave":
            if self.L < 1:
                raise ChannelConfigError("L", "must be >= 1")
            yr, zr, yt, zt = self.array_dims()
            if yr * zr != self.nr:
                raise ChannelConfigError("yr", f"yr*zr = {yr * zr} != nr = {self.nr}")
            if yt * zt != self.nt:
                raise ChannelConfigError("yt", f"yt*zt = {yt * zt} != nt = {self.nt}")
            if not self.spacing_over_wavelength > 0:
                raise ChannelConfigError("spacing_over_wavelength", "must be > 0")

    def array_dims(self) -> tuple[int, int, int, int]:
        """``(Yr, Zr, Yt, Zt)``; missing dimensions default to a linear array along z."""
        return (*_planar(self.yr, self.zr, self.nr), *_planar(self.yt, self.zt, self.nt))

    @property
    def wavenumber_spacing(self) -> float:
        """``k = 2 pi d / lambda``."""
        return 2.0 * math.pi * self.spacing_over_wavelength


def _planar(y: Optional[int], z: Optional[int], n: int) -> tuple[int, int]:
    if y is None and z is None:
        return 1, n
    if y is None:
        return max(n // z, 1), z
    if z is None:
        return y, max(n // y, 1)
    return y, z


@dataclass(frozen=True)
class MmwavePathSet:
    """Per-path complex gains and departure/arrival angles (radians)."""

    gains: np.ndarray
    phi_t: np.ndarray
    theta_t: np.ndarray
    phi_r: np.ndarray
    theta_r: np.ndarray

    def __len__(self) -> int:
        return len(self.gains)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the only random source used for channel draws."""
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


def array_response(phi: float, theta: float, Y: int, Z: int, k: float) -> np.ndarray:
    """Unit-norm UPA steering vector in the yz-plane.

    Element ``(m, n)`` (index ``m * Z + n``) is
    ``exp(j k (m sin(phi) sin(theta) + n cos(theta))) / sqrt(Y Z)``.
    """
    if Y < 1 or Z < 1:
        raise ValueError("array dimensions must be >= 1")
    m = np.arange(Y)[:, None]
    n = np.arange(Z)[None, :]
    phase = k * (m * math.sin(phi) * math.sin(theta) + n * math.cos(theta))
    return (np.exp(1j * phase) / math.sqrt(Y * Z)).ravel()


def mmwave_channel(paths: MmwavePathSet, yr: int, zr: int, yt: int, zt: int, k: float = math.pi) -> np.ndarray:
    """``H = sum_l alpha_l a_r(phi_rl, theta_rl) a_t(phi_tl, theta_tl)^*``."""
    H = np.zeros((yr * zr, yt * zt), dtype=complex)
    for ell in range(len(paths)):
        a_r = array_response(paths.phi_r[ell], paths.theta_r[ell], yr, zr, k)
        a_t = array_response(paths.phi_t[ell], paths.theta_t[ell], yt, zt, k)
        H += paths.gains[ell] * np.outer(a_r, a_t.conj())
    return H


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_mmwave_paths(L: int, rng: np.random.Generator) -> MmwavePathSet:
    """Gains CN(0, 1); azimuths U[0, 2 pi); elevations U[-pi/2, pi/2]."""
    gains = _complex_gaussian(rng, L)
    phi_t = rng.uniform(0.0, 2.0 * math.pi, L)
    theta_t = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, L)
    phi_r = rng.uniform(0.0, 2.0 * math.pi, L)
    theta_r = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, L)
    return MmwavePathSet(gains, phi_t, theta_t, phi_r, theta_r)


def gen_mmwave(config: ChannelModelConfig) -> tuple[np.ndarray, MmwavePathSet]:
    """mmWave draw returning the channel together with its paths."""
    config.validate()
    if config.kind != "mmwave":
        raise ChannelConfigError("kind", "gen_mmwave needs kind 'mmwave'")
    yr, zr, yt, zt = config.array_dims()
    paths = draw_mmwave_paths(config.L, make_rng(config.seed))
    return mmwave_channel(paths, yr, zr, yt, zt, config.wavenumber_spacing), paths


def gen_channel(config: ChannelModelConfig) -> np.ndarray:
    """Deterministic channel draw for ``config`` (same seed, same matrix)."""
    config.validate()
    if config.kind == "fixed":
        return np.array(config.matrix, dtype=complex)
    if config.kind == "iid_gaussian":
        return _complex_gaussian(make_rng(config.seed), (config.nr, config.nt))
    return gen_mmwave(config)[0]


def _rows_general(sub: np.ndarray, tol: float) -> bool:
    scale = float(np.prod(np.linalg.norm(sub, axis=1)))
    if scale == 0.0:
        return False
    return abs(np.linalg.det(sub)) > tol * scale


def is_general_position(Hhat, tol: float = 1e-9, rng: Optional[np.random.Generator] = None) -> bool:
    """Whether the rows of a real ``N x d`` matrix are in general position.

    Every ``d x d`` row submatrix must have ``|det|`` above ``tol`` times the
    product of its row norms.  With ``N <= d`` this reduces to full row rank.
    All ``C(N, d)`` subsets are checked when ``N <= 16``; larger matrices use
    500 random subsets.
    """
    A = np.atleast_2d(np.asarray(Hhat, dtype=float))
    n_rows, dim = A.shape
    if n_rows <= dim:
        s = np.linalg.svd(A, compute_uv=False)
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0.0):
            return False
        # Hadamard-normalised volume of the rows
        vol = float(np.prod(s[:n_rows]))
        return vol > tol * float(np.prod(norms))
    if n_rows <= EXACT_GENERAL_POSITION_MAX_ROWS:
        subsets = itertools.combinations(range(n_rows), dim)
    else:
        rng = rng or make_rng(0)
        subsets = (rng.choice(n_rows, dim, replace=False) for _ in range(GENERAL_POSITION_SAMPLES))
    return all(_rows_general(A[list(idx)], tol) for idx in subsets)


def channel_to_json(H) -> str:
    """Serialize to ``{"nr", "nt", "re", "im"}``."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    doc = {"nr": H.shape[0], "nt": H.shape[1], "re": H.real.tolist(), "im": H.imag.tolist()}
    return json.dumps(doc)


def channel_from_json(text) -> np.ndarray:
    """Parse a channel document (string or already-decoded mapping)."""
    doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    H = np.atleast_2d(re + 1j * im)
    if H.shape != (int(doc["nr"]), int(doc["nt"])):
        raise ValueError(f"channel document shape {H.shape} != ({doc['nr']}, {doc['nt']})")
    return H


def channel_rank(H) -> int:
    return singular_values(H).rank
