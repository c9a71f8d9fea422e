"""Quadrature-distribution tomography via the singular-kernel route.

The kernel K(q - qhat_phi) is computed in the Fock basis through its
frequency integral: exp(-ik qhat_0) equals D(-ik/2) exactly, so the
integrand is available from the Laguerre closed form at any k, and the
phase dependence is conjugation by e^{i phi n}. The regularizer
e^{-reg_eps k^2} makes the integral absolutely convergent; it is
equivalent to smearing q by a centered Gaussian of variance 2 reg_eps,
which leaves <I> and <a> unbiased and shifts <a^dag a> by +4 reg_eps.

Phase conventions, fixed once for samplers and estimators alike:
  |q_phi> = e^{i phi n} |q>,   <n|q_phi> = e^{i n phi} psi_n(q)
  p(q; phi) = sum_nm rho_nm e^{-i(n-m)phi} psi_n(q) psi_m(q)
  K_nm(q, phi) = e^{+i(n-m)phi} F_nm(q)
"""

from __future__ import annotations

import functools
import math
from typing import Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import UsageError, DimensionMismatchError
from ..operators import Operator, annihilation
from ..states import DensityMatrix
from . import _cahill
from .config import EstimatorConfig, SqueezeParams

__all__ = [
    "homodyne_kernel_matrix",
    "homodyne_estimate",
    "squeezed_homodyne_estimate",
    "exact_homodyne_average",
    "exact_squeezed_average",
    "effective_squeezer",
    "oscillator_wavefunctions",
]

_PANELS = 256
_PANEL_ORDER = 16
_DENSE_Q_POINTS = 4097


def oscillator_wavefunctions(dim: int, q: np.ndarray) -> np.ndarray:
    """psi_n(q) for n < dim, unit-variance-1/4 convention; shape (dim, len(q)).

    The normalized three-term recurrence keeps every value O(1), so no
    rescaling is needed at the dimensions this library targets.
    """
    q = np.asarray(q, dtype=float)
    psi = np.empty((dim, q.size))
    psi[0] = (2.0 / math.pi) ** 0.25 * np.exp(-q * q)
    if dim > 1:
        psi[1] = 2.0 * q * psi[0]
    for n in range(1, dim - 1):
        psi[n + 1] = (2.0 * q * psi[n] - math.sqrt(n) * psi[n - 1]) / math.sqrt(n + 1)
    return psi


@functools.lru_cache(maxsize=8)
def _k_rule(k_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """Panel Gauss-Legendre rule over [-k_max, k_max]; resolves the |k| kink at 0."""
    nodes, weights = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    edges = np.linspace(-k_max, k_max, _PANELS + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    k = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return k, w


@functools.lru_cache(maxsize=8)
def _k_tables(dim: int, k_max: float, reg_eps: float):
    """Frequency nodes, damped weights, and D(-ik/2) blocks for the kernel integral."""
    k, w = _k_rule(k_max)
    blocks = _cahill.disp_stack(-0.5j * k, dim)  # (nk, dim, dim)
    g = w * (np.abs(k) / 4.0) * np.exp(-reg_eps * k * k)
    return k, g, blocks


def _f_at(qs: np.ndarray, dim: int, k_max: float, reg_eps: float) -> np.ndarray:
    """F[n,m](q) = int dk |k|/4 e^{ikq} e^{-eps k^2} <n|D(-ik/2)|m>; shape (d,d,nq)."""
    k, g, blocks = _k_tables(dim, k_max, reg_eps)
    out = np.empty((dim, dim, qs.size), dtype=complex)
    for i in range(0, qs.size, 256):
        qc = qs[i : i + 256]
        ph = np.exp(1j * np.outer(k, qc))  # (nk, nq)
        out[:, :, i : i + 256] = np.einsum("k,knm,kq->nmq", g, blocks, ph, optimize=True)
    return out


@functools.lru_cache(maxsize=4)
def _dense_f_grid(dim: int, k_max: float, reg_eps: float):
    """Dense q-grid F table plus its per-element cubic splines for the fast path."""
    q_max = math.sqrt(dim) + 6.0
    qs = np.linspace(-q_max, q_max, _DENSE_Q_POINTS)
    f = _f_at(qs, dim, k_max, reg_eps)
    return qs, f


def homodyne_kernel_matrix(q: float, phi: float, cfg: EstimatorConfig) -> Operator:
    """Fock-basis matrix of K(q - qhat_phi)."""
    f = _f_at(np.array([float(q)]), cfg.dim, cfg.k_max, cfg.reg_eps)[:, :, 0]
    n = np.arange(cfg.dim)
    phase = np.exp(1j * phi * (n[:, None] - n[None, :]))
    m = phase * f
    return Operator(0.5 * (m + m.conj().T))  # enforce exact hermiticity of the quadrature


def _band_splines(a_mat: np.ndarray, cfg: EstimatorConfig):
    """Per-offset splines of G_d(q) = sum_{n-m=d} A_mn F_nm(q).

    Tr[A K(q,phi)] then equals sum_d e^{i d phi} G_d(q), one spline
    evaluation per diagonal offset instead of a kernel matrix per record.
    """
    dim = cfg.dim
    qs, f = _dense_f_grid(dim, cfg.k_max, cfg.reg_eps)
    splines = {}
    for d in range(-(dim - 1), dim):
        g = np.zeros(qs.size, dtype=complex)
        hit = False
        for m in range(dim):
            n = m + d
            if 0 <= n < dim and a_mat[m, n] != 0:
                g += a_mat[m, n] * f[n, m]
                hit = True
        if hit:
            splines[d] = CubicSpline(qs, g)
    return qs, splines


def _record_arrays(records: Sequence) -> Tuple[np.ndarray, np.ndarray]:
    phis = np.fromiter((r.setting.coords[0] for r in records), dtype=float, count=len(records))
    qs = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    return phis, qs


def _estimate_from_splines(a_mat: np.ndarray, phis, qs, cfg: EstimatorConfig):
    from ..recon import Accumulator

    grid, splines = _band_splines(a_mat, cfg)
    q_lo, q_hi = grid[0], grid[-1]
    acc = Accumulator()
    for i in range(0, qs.size, 1 << 16):
        qc = np.clip(qs[i : i + (1 << 16)], q_lo, q_hi)  # beyond the grid the kernel is ~0
        pc = phis[i : i + (1 << 16)]
        vals = np.zeros(qc.size, dtype=complex)
        for d, sp in splines.items():
            vals += np.exp(1j * d * pc) * sp(qc)
        acc.push(vals)
    return acc.result()


def homodyne_estimate(a: Operator, records: Sequence, cfg: EstimatorConfig):
    """Sample mean of Tr[A K(q_i - qhat_{phi_i})] with its standard error."""
    if a.dim != cfg.dim:
        raise DimensionMismatchError(f"operator dim {a.dim} vs config dim {cfg.dim}")
    if len(records) < 2:
        raise UsageError("homodyne_estimate needs at least 2 records")
    phis, qs = _record_arrays(records)
    return _estimate_from_splines(a.mat, phis, qs, cfg)


def effective_squeezer(sq: SqueezeParams, dim: int) -> Operator:
    """Unitary with Bogoliubov action S^dag a S = mu a + nu a^dag.

    Generator exponent xi = |zeta| e^{2i arg zeta}, chosen so the induced
    (mu, nu) match SqueezeParams exactly.
    """
    from scipy.linalg import expm

    z = complex(sq.zeta)
    if z == 0:
        return Operator(np.eye(dim, dtype=complex))
    xi = abs(z) * np.exp(2j * np.angle(z))
    am = annihilation(dim).mat
    ad = am.conj().T
    return Operator(expm(0.5 * (xi * (ad @ ad) - np.conj(xi) * (am @ am))))


def squeezed_homodyne_estimate(a: Operator, records: Sequence, sq: SqueezeParams,
                               cfg: EstimatorConfig):
    """Homodyne estimate against samples of the squeezed quadrature.

    Records must come from the distribution of S^dag qhat_phi S; the
    kernel trace is then taken with S A S^dag, which reduces to the plain
    estimator at zeta = 0.
    """
    if a.dim != cfg.dim:
        raise DimensionMismatchError(f"operator dim {a.dim} vs config dim {cfg.dim}")
    if len(records) < 2:
        raise UsageError("squeezed_homodyne_estimate needs at least 2 records")
    s = effective_squeezer(sq, cfg.dim).mat
    a_tilde = s @ a.mat @ s.conj().T
    phis, qs = _record_arrays(records)
    return _estimate_from_splines(a_tilde, phis, qs, cfg)


def _as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, (DensityMatrix, Operator)) else np.asarray(rho, dtype=complex)


def exact_homodyne_average(a: Operator, rho, cfg: EstimatorConfig) -> complex:
    """Deterministic double integral of the kernel against p(q; phi).

    q by 512-node Gauss-Legendre on the faithful window, phi by uniform
    grid on [0, pi): after the q integral the phi dependence is a trig
    polynomial with only even frequencies (odd ones carry odd q-parity),
    so any grid above 2*dim points integrates it exactly.
    """
    dim = cfg.dim
    rho_m = _as_matrix(rho)
    if a.dim != dim or rho_m.shape[0] != dim:
        raise DimensionMismatchError("operator/state/config dims differ")
    q_max = math.sqrt(dim) + 4.0
    nodes, weights = np.polynomial.legendre.leggauss(512)
    qq = nodes * q_max
    qw = weights * q_max
    psi = oscillator_wavefunctions(dim, qq)
    f = _f_at(qq, dim, cfg.k_max, cfg.reg_eps)
    n_phi = cfg.homodyne_phi_points()
    phis = np.arange(n_phi) * math.pi / n_phi
    idx = np.arange(dim)
    total = 0.0 + 0.0j
    for phi in phis:
        amp = psi * np.exp(1j * idx * phi)[:, None]  # <n|q_phi> = e^{i n phi} psi_n
        p = np.einsum("nq,nm,mq->q", amp.conj(), rho_m, amp, optimize=True).real
        phase = np.exp(1j * phi * (idx[:, None] - idx[None, :]))
        r_vals = np.einsum("mn,nm,nmq->q", a.mat, phase, f, optimize=True)
        total += np.sum(qw * p * r_vals) / n_phi
    return complex(total)


def exact_squeezed_average(a: Operator, rho, sq: SqueezeParams, cfg: EstimatorConfig) -> complex:
    """Exact-average analogue of squeezed_homodyne_estimate."""
    s = effective_squeezer(sq, cfg.dim).mat
    rho_m = _as_matrix(rho)
    a_tilde = Operator(s @ a.mat @ s.conj().T)
    rho_tilde = s @ rho_m @ s.conj().T
    return exact_homodyne_average(a_tilde, rho_tilde, cfg)
