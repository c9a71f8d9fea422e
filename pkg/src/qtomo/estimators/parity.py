"""Displaced-parity tomography.

Measuring photon-number parity on displaced copies of the state samples
the function G(b) = Tr[rho P D(2b)], P the parity operator, and any
matrix element of rho comes back as a phase-space average:

    rho_elem(row, col) = int d^2b/pi  G(b) * 4 (-1)^row <row|D(2b)|col>

The displacement elements are evaluated from their Laguerre closed form,
so kernels stay faithful at arbitrary |b| regardless of the truncation
used for the state itself.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln, eval_genlaguerre

from ..errors import DimensionMismatchError, GridError, InvalidSpecError, UsageError
from ..operators import Operator, build_operator, OperatorSpec
from ..states import DensityMatrix
from . import _cahill
from .config import EstimatorConfig

__all__ = [
    "displaced_parity_kernel",
    "displaced_parity_kernel_matrix_route",
    "parity_kernel_element",
    "displaced_parity_expectation",
    "parity_estimate",
    "parity_exact_element",
]

_BIAS_ANGLES = 64
_CHUNK = 1 << 16


def displaced_parity_kernel(n: int, d: int, alpha) -> complex:
    """4 (-1)^{n+d} e^{-2|a|^2} sqrt(n!/(n+d)!) (2a)^d L_n^d(4|a|^2)."""
    if n < 0 or d < 0:
        raise InvalidSpecError("displaced_parity_kernel needs n >= 0 and d >= 0")
    a = np.asarray(alpha, dtype=complex)
    x = 4.0 * (a.real * a.real + a.imag * a.imag)
    pref = 4.0 * (-1.0) ** (n + d) * math.exp(0.5 * (gammaln(n + 1) - gammaln(n + d + 1)))
    val = pref * np.exp(-x / 2.0) * (2.0 * a) ** d * eval_genlaguerre(n, d, x)
    return complex(val) if np.isscalar(alpha) or a.ndim == 0 else val


def displaced_parity_kernel_matrix_route(n: int, d: int, alpha: complex, dim: int) -> complex:
    """<n+d| 4 D^dag(a) P D(a) |n> from dense truncated matrices; oracle route."""
    if n + d >= dim:
        raise DimensionMismatchError("n + d must lie inside the truncation")
    dm = build_operator(OperatorSpec(kind="displacement", dim=dim, alpha=complex(alpha))).mat
    par = build_operator(OperatorSpec(kind="parity", dim=dim)).mat
    return complex(4.0 * (dm.conj().T @ par @ dm)[n + d, n])


def parity_kernel_element(row: int, col: int, alpha) -> complex:
    """<row| 4 P D(2a) |col>, valid for any index pair."""
    if row < 0 or col < 0:
        raise InvalidSpecError("indices must be non-negative")
    val = 4.0 * (-1.0) ** row * _cahill.disp_element(row, col, 2.0 * np.asarray(alpha, dtype=complex))
    return complex(val) if np.isscalar(alpha) else val


def _parity_signs(dim: int) -> np.ndarray:
    return (-1.0) ** np.arange(dim)


def displaced_parity_expectation(rho: DensityMatrix, betas) -> np.ndarray:
    """G(b) = Tr[rho P D(2b)] for a batch of displacements; exactly real, in [-1, 1]."""
    b = np.atleast_1d(np.asarray(betas, dtype=complex))
    signs = _parity_signs(rho.dim)
    out = np.empty(b.size)
    for i in range(0, b.size, 1024):
        blocks = _cahill.disp_stack(2.0 * b[i : i + 1024], rho.dim)
        out[i : i + 1024] = np.einsum(
            "ij,j,gji->g", rho.mat, signs, blocks, optimize=True
        ).real
    return out


def _coeff_stack(a_mat: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """4 Tr[A P D(2b)] per displacement."""
    dim = a_mat.shape[0]
    signed = a_mat * _parity_signs(dim)[None, :]  # parity signs folded into the column index
    out = np.empty(betas.size, dtype=complex)
    for i in range(0, betas.size, 1024):
        blocks = _cahill.disp_stack(2.0 * betas[i : i + 1024], dim)
        out[i : i + 1024] = 4.0 * np.einsum("ij,gji->g", signed, blocks, optimize=True)
    return out


def _boundary_bias(target, radius: float, dim: int) -> float:
    """Largest |kernel|/4 on the proposal boundary; >1e-3 flags a truncated tail."""
    ring = radius * np.exp(2j * np.pi * np.arange(_BIAS_ANGLES) / _BIAS_ANGLES)
    if isinstance(target, Operator):
        scale = max(1.0, float(np.max(np.abs(target.mat))))
        vals = np.abs(_coeff_stack(target.mat, ring)) / (4.0 * scale)
    else:
        n, d = target
        vals = np.abs(displaced_parity_kernel(n, d, ring)) / 4.0
    return float(np.max(vals))


def parity_estimate(target: Union[Operator, Tuple[int, int]], records: Sequence,
                    cfg: EstimatorConfig):
    """Importance-weighted parity average for an operator or a single (n, d) element.

    Records must carry the displacement used (setting coords (Re b, Im b))
    and the measured parity outcome +-1; the uniform-disk proposal of
    radius cfg.parity_radius() contributes the weight R^2 that maps the
    empirical mean back onto the d^2b/pi measure.
    """
    if len(records) < 2:
        raise UsageError("parity_estimate needs at least 2 records")
    radius = cfg.parity_radius()
    if isinstance(target, Operator):
        if target.dim != cfg.dim:
            raise DimensionMismatchError(f"operator dim {target.dim} vs config dim {cfg.dim}")
    else:
        n, d = target
        if n < 0 or d < 0:
            raise InvalidSpecError("element target needs n >= 0 and d >= 0")
    if _boundary_bias(target, radius, cfg.dim) > 1e-3:
        raise GridError(
            f"kernel mass at the proposal boundary |b| = {radius:.3g} exceeds 1e-3; "
            "increase proposal_radius"
        )

    from ..recon import Accumulator

    betas = np.fromiter(
        (r.setting.coords[0] + 1j * r.setting.coords[1] for r in records),
        dtype=complex, count=len(records),
    )
    signs = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    weight = radius * radius
    acc = Accumulator()
    for i in range(0, betas.size, _CHUNK):
        bc = betas[i : i + _CHUNK]
        if isinstance(target, Operator):
            coeff = _coeff_stack(target.mat, bc)
        else:
            coeff = displaced_parity_kernel(target[0], target[1], bc)
        acc.push(weight * signs[i : i + _CHUNK] * coeff)
    return acc.result()


def parity_exact_element(rho: DensityMatrix, row: int, col: int, cfg: EstimatorConfig,
                         n_radial: int = 80, n_angular: int = 80) -> complex:
    """Deterministic polar-quadrature value of the parity-route integral.

    Gauss-Legendre in the radius against the r dr measure and a uniform
    angular grid; converged to ~1e-6 at the default orders for states
    confined well inside the disk.
    """
    if row >= cfg.dim or col >= cfg.dim or row < 0 or col < 0:
        raise InvalidSpecError("element indices must lie inside the configured dimension")
    radius = cfg.parity_radius()
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * radius * (nodes + 1.0)
    wr = 0.5 * radius * weights * r  # r dr measure
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    betas = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    wt = np.repeat(wr, n_angular) * (2.0 * np.pi / n_angular) / np.pi
    g = displaced_parity_expectation(rho, betas)
    k = parity_kernel_element(row, col, betas)
    return complex(np.sum(wt * g * k))
