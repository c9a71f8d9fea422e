"""Measurement simulation for every quorum family.

Each sampler draws settings and outcomes from the exact distributions of
the truncated state and returns self-describing records. Randomness is
counter-based: a record stream is a pure function of (seed, substream)
regardless of how many workers executed the chunks, because chunk i of
every stream owns the Philox key (seed, substream << 32 | i).
"""

from __future__ import annotations

import dataclasses
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._parallel import CHUNK_SHOTS, chunk_map
from .errors import InvalidSpecError, TruncationError, UsageError
from .estimators.config import EstimatorConfig, SqueezeParams
from .estimators.homodyne import effective_squeezer, oscillator_wavefunctions
from .estimators.kerr import kerr_sideband_coefficients
from .estimators.parity import displaced_parity_expectation
from .frames import SettingLabel
from .operators import spin_matrices
from .states import DensityMatrix

__all__ = [
    "MeasurementRecord",
    "RngStream",
    "sample_homodyne",
    "sample_spin",
    "sample_pauli",
    "sample_displaced_parity",
    "sample_kerr_phase",
]

_LEAK_TOL = 1e-6
_CDF_GRID = 8193


@dataclasses.dataclass(frozen=True, slots=True)
class MeasurementRecord:
    quorum: str
    setting: SettingLabel
    outcome: Tuple[float, ...]


@dataclasses.dataclass(frozen=True)
class RngStream:
    """Root of a reproducible family of generators.

    generator(chunk) is identical across platforms and worker counts for
    fixed (seed, substream, chunk).
    """

    seed: int
    substream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise InvalidSpecError("seed must fit in 64 bits")
        if not (0 <= self.substream < 2**32):
            raise InvalidSpecError("substream must fit in 32 bits")

    def generator(self, chunk: int) -> np.random.Generator:
        if not (0 <= chunk < 2**32):
            raise InvalidSpecError("chunk index must fit in 32 bits")
        return np.random.Generator(
            np.random.Philox(key=[self.seed, (self.substream << 32) | chunk])
        )


def _chunk_sizes(shots: int) -> List[int]:
    if shots < 1:
        raise UsageError(f"shots must be >= 1, got {shots}")
    full, rest = divmod(shots, CHUNK_SHOTS)
    return [CHUNK_SHOTS] * full + ([rest] if rest else [])


def _check_leakage(rho: DensityMatrix) -> None:
    diag = np.diag(rho.mat).real
    mass = diag[-1] + (diag[-2] if rho.dim > 1 else 0.0)
    if mass > _LEAK_TOL:
        raise TruncationError(
            f"state mass {mass:.3e} at the truncation edge exceeds {_LEAK_TOL:g}; "
            "increase dim"
        )


# homodyne ----------------------------------------------------------------

def _quadrature_tables(rho: DensityMatrix):
    """Cumulative band integrals H_d(q) of h_d = sum_{n-m=d} rho_nm psi_n psi_m.

    The conditional CDF is then H_0 + 2 sum_{d>=1} Re[e^{-i d phi} H_d],
    evaluated per record at grid indices during the bisection search.
    """
    dim = rho.dim
    q_max = math.sqrt(max(dim - 1, 1)) + 2.0
    for _ in range(3):
        qs = np.linspace(-q_max, q_max, _CDF_GRID)
        psi = oscillator_wavefunctions(dim, qs)
        bands = np.zeros((dim, _CDF_GRID), dtype=complex)
        for d in range(dim):
            n = np.arange(d, dim)
            bands[d] = np.einsum("nq,n,nq->q", psi[n], rho.mat[n, n - d], psi[n - d])
        cdf = cumulative_trapezoid(bands, qs, axis=1, initial=0.0)
        if 1.0 - cdf[0, -1].real <= 1e-8:
            return qs, cdf
        q_max += 2.0
    raise TruncationError(
        f"quadrature mass beyond |q| = {q_max:.2f} exceeds 1e-8; state leaks "
        "through the truncation"
    )


def _homodyne_cdf_at(idx, h0: np.ndarray, hrest: np.ndarray, phases: np.ndarray):
    vals = h0[idx] + 2.0 * np.einsum("gd,dg->g", phases, hrest[:, idx]).real
    return vals


def _invert_cdf_indexed(u: np.ndarray, value_at) -> Tuple[np.ndarray, np.ndarray]:
    """Bisection over grid indices; returns the cell index and CDF at its ends."""
    lo = np.zeros(u.size, dtype=np.int64)
    hi = np.full(u.size, _CDF_GRID - 1, dtype=np.int64)
    for _ in range(14):  # 2^14 > 8193: interval collapses to one cell
        mid = (lo + hi) // 2
        less = value_at(mid) < u
        lo = np.where(less & (mid > lo), mid, lo)
        hi = np.where(~less & (mid < hi), mid, hi)
    return lo, hi


def sample_homodyne(rho: DensityMatrix, shots: int, rng: RngStream,
                    cfg: EstimatorConfig,
                    squeeze: Optional[SqueezeParams] = None,
                    phases_fixed: Optional[np.ndarray] = None) -> List[MeasurementRecord]:
    """Phase uniform on [0, pi); quadrature from the exact conditional density.

    With squeeze given, outcomes follow the squeezed quadrature operator's
    distribution, i.e. the plain distribution of the Bogoliubov-rotated
    state. phases_fixed, when given (one per shot), pins the phases
    (diagnostics); the record stream still consumes the same number of
    uniform draws.
    """
    if cfg.dim != rho.dim:
        raise UsageError(f"config dim {cfg.dim} vs state dim {rho.dim}")
    sizes = _chunk_sizes(shots)
    work = rho
    if squeeze is not None and complex(squeeze.zeta) != 0:
        s = effective_squeezer(squeeze, rho.dim).mat
        work = DensityMatrix(s @ rho.mat @ s.conj().T)
    _check_leakage(work)
    if phases_fixed is not None:
        phases_fixed = np.asarray(phases_fixed, dtype=float)
        if phases_fixed.shape != (shots,):
            raise UsageError("phases_fixed must have shape (shots,)")
    qs, cdf = _quadrature_tables(work)
    h0 = cdf[0].real
    hrest = cdf[1:]
    ds = np.arange(1, rho.dim)
    dq = qs[1] - qs[0]

    def run_chunk(i: int) -> List[MeasurementRecord]:
        gen = rng.generator(i)
        cnt = sizes[i]
        phis = gen.uniform(0.0, np.pi, cnt)
        if phases_fixed is not None:
            phis = phases_fixed[i * CHUNK_SHOTS : i * CHUNK_SHOTS + cnt]
        u = gen.uniform(0.0, 1.0, cnt)
        phases = np.exp(-1j * np.outer(phis, ds))
        total = _homodyne_cdf_at(np.full(cnt, _CDF_GRID - 1), h0, hrest, phases)
        target = u * total

        def value_at(idx):
            return _homodyne_cdf_at(idx, h0, hrest, phases)

        lo, hi = _invert_cdf_indexed(target, value_at)
        c_lo = value_at(lo)
        c_hi = value_at(hi)
        frac = np.clip((target - c_lo) / np.maximum(c_hi - c_lo, 1e-300), 0.0, 1.0)
        q = qs[lo] + frac * dq
        return [
            MeasurementRecord("homodyne", SettingLabel("homodyne", (float(p),)),
                              (float(qv),))
            for p, qv in zip(phis, q)
        ]

    out: List[MeasurementRecord] = []
    for part in chunk_map(run_chunk, len(sizes)):
        out.extend(part)
    return out


# spin --------------------------------------------------------------------

def sample_spin(rho: DensityMatrix, twice_s: int, shots: int, rng: RngStream,
                directions: Optional[np.ndarray] = None) -> List[MeasurementRecord]:
    """Directions uniform on the sphere; outcomes from the S.n eigenbasis.

    directions, when given (shots x 3 unit vectors), replaces the random
    directions; outcome draws still consume the stream deterministically.
    """
    dim = twice_s + 1
    if rho.dim != dim:
        raise UsageError(f"state dim {rho.dim} vs 2s+1 = {dim}")
    sx, sy, sz = (s.mat for s in spin_matrices(twice_s))
    sizes = _chunk_sizes(shots)
    if directions is not None:
        directions = np.asarray(directions, dtype=float)
        if directions.shape != (shots, 3):
            raise UsageError("directions must have shape (shots, 3)")

    def run_chunk(i: int) -> List[MeasurementRecord]:
        gen = rng.generator(i)
        cnt = sizes[i]
        if directions is None:
            z = gen.uniform(-1.0, 1.0, cnt)
            az = gen.uniform(0.0, 2.0 * np.pi, cnt)
            st = np.sqrt(1.0 - z * z)
            dirs = np.stack([st * np.cos(az), st * np.sin(az), z], axis=1)
        else:
            gen.uniform(size=2 * cnt)  # keep the draw budget identical
            dirs = directions[i * CHUNK_SHOTS : i * CHUNK_SHOTS + cnt]
        mats = (dirs[:, 0, None, None] * sx + dirs[:, 1, None, None] * sy
                + dirs[:, 2, None, None] * sz)
        _, vecs = np.linalg.eigh(mats)
        probs = np.einsum("gaj,ab,gbj->gj", vecs.conj(), rho.mat, vecs,
                          optimize=True).real
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        u = gen.uniform(0.0, 1.0, cnt)
        j = (u[:, None] < np.cumsum(probs, axis=1)).argmax(axis=1)
        ms = j - twice_s / 2.0
        return [
            MeasurementRecord("spin", SettingLabel("spin", tuple(map(float, nv))),
                              (float(m),))
            for nv, m in zip(dirs, ms)
        ]

    out: List[MeasurementRecord] = []
    for part in chunk_map(run_chunk, len(sizes)):
        out.extend(part)
    return out


def sample_pauli(rho: DensityMatrix, shots: int, rng: RngStream) -> List[MeasurementRecord]:
    """Round-robin x, y, z axis measurements on a qubit; outcomes +-1/2."""
    if rho.dim != 2:
        raise UsageError("pauli sampling is for qubit states")
    from .operators import pauli

    means = [float(np.trace(rho.mat @ pauli(ax).mat).real) for ax in ("x", "y", "z")]
    sizes = _chunk_sizes(shots)

    def run_chunk(i: int) -> List[MeasurementRecord]:
        gen = rng.generator(i)
        cnt = sizes[i]
        axes = (i * CHUNK_SHOTS + np.arange(cnt)) % 3
        p_up = 0.5 * (1.0 + np.array(means)[axes])
        u = gen.uniform(0.0, 1.0, cnt)
        ms = np.where(u < p_up, 0.5, -0.5)
        return [
            MeasurementRecord("pauli", SettingLabel("pauli", (float(ax),)), (float(m),))
            for ax, m in zip(axes, ms)
        ]

    out: List[MeasurementRecord] = []
    for part in chunk_map(run_chunk, len(sizes)):
        out.extend(part)
    return out


# displaced parity ----------------------------------------------------------

def sample_displaced_parity(rho: DensityMatrix, shots: int, rng: RngStream,
                            cfg: EstimatorConfig,
                            betas: Optional[np.ndarray] = None) -> List[MeasurementRecord]:
    """Displacements uniform on the proposal disk; parity of the displaced state.

    betas, when given, pins the displacements (diagnostics); the record
    stream still consumes the same number of uniform draws.
    """
    if cfg.dim != rho.dim:
        raise UsageError(f"config dim {cfg.dim} vs state dim {rho.dim}")
    sizes = _chunk_sizes(shots)
    _check_leakage(rho)
    radius = cfg.parity_radius()
    if betas is not None:
        betas = np.asarray(betas, dtype=complex)
        if betas.shape != (shots,):
            raise UsageError("betas must have shape (shots,)")

    def run_chunk(i: int) -> List[MeasurementRecord]:
        gen = rng.generator(i)
        cnt = sizes[i]
        u_r = gen.uniform(0.0, 1.0, cnt)
        u_t = gen.uniform(0.0, 1.0, cnt)
        if betas is None:
            b = radius * np.sqrt(u_r) * np.exp(2j * np.pi * u_t)
        else:
            b = betas[i * CHUNK_SHOTS : i * CHUNK_SHOTS + cnt]
        g = displaced_parity_expectation(rho, b)
        p_plus = np.clip(0.5 * (1.0 + g), 0.0, 1.0)
        u = gen.uniform(0.0, 1.0, cnt)
        s = np.where(u < p_plus, 1.0, -1.0)
        return [
            MeasurementRecord("parity",
                              SettingLabel("parity", (float(bv.real), float(bv.imag))),
                              (float(sv),))
            for bv, sv in zip(b, s)
        ]

    out: List[MeasurementRecord] = []
    for part in chunk_map(run_chunk, len(sizes)):
        out.extend(part)
    return out


# Kerr phase ----------------------------------------------------------------

def sample_kerr_phase(rho: DensityMatrix, shots: int, rng: RngStream,
                      cfg: EstimatorConfig,
                      psis: Optional[np.ndarray] = None) -> List[MeasurementRecord]:
    """Kerr strength uniform on [0, 2pi); phase from its exact conditional.

    The conditional CDF is the closed trigonometric sum over the sideband
    coefficients c_d(psi), inverted by bisection to float precision; this
    is the refinement limit of any inverse-CDF grid.
    """
    if cfg.dim != rho.dim:
        raise UsageError(f"config dim {cfg.dim} vs state dim {rho.dim}")
    sizes = _chunk_sizes(shots)
    ds = np.arange(1, rho.dim)
    if psis is not None:
        psis = np.asarray(psis, dtype=float)
        if psis.shape != (shots,):
            raise UsageError("psis must have shape (shots,)")

    def run_chunk(i: int) -> List[MeasurementRecord]:
        gen = rng.generator(i)
        cnt = sizes[i]
        if psis is None:
            ps = gen.uniform(0.0, 2.0 * np.pi, cnt)
        else:
            gen.uniform(size=cnt)
            ps = psis[i * CHUNK_SHOTS : i * CHUNK_SHOTS + cnt]
        u = gen.uniform(0.0, 1.0, cnt)
        c = kerr_sideband_coefficients(rho, ps)[:, 1:] / (1j * ds)[None, :]
        base = np.sum(c, axis=1)  # subtracted so that CDF(0) = 0

        def cdf(phi):
            e = np.exp(1j * phi[:, None] * ds[None, :])
            return phi / (2.0 * np.pi) + (np.einsum("gd,gd->g", c, e) - base).real / np.pi

        lo = np.zeros(cnt)
        hi = np.full(cnt, 2.0 * np.pi)
        for _ in range(47):
            mid = 0.5 * (lo + hi)
            less = cdf(mid) < u
            lo = np.where(less, mid, lo)
            hi = np.where(less, hi, mid)
        phi = 0.5 * (lo + hi)
        return [
            MeasurementRecord("kerr", SettingLabel("kerr", (float(pv),)), (float(fv),))
            for pv, fv in zip(ps, phi)
        ]

    out: List[MeasurementRecord] = []
    for part in chunk_map(run_chunk, len(sizes)):
        out.extend(part)
    return out
