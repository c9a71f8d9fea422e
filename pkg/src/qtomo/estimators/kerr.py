"""Kerr-phase tomography of number-basis coherences.

A Kerr evolution of strength psi followed by an ideal phase measurement
of outcome phi has joint density p(phi, psi)/(2pi)^2 with

    p(phi, psi) = sum_{ab} rho_ab e^{i psi (b^2 - a^2)} e^{i phi (b - a)}

and averaging the kernel e^{i psi (d^2 + 2nd) + i phi d} against it
returns the coherence <n+d|rho|n>. On uniform grids with at least
2*dim+1 phases and 2*dim^2+1 Kerr strengths every surviving Fourier
frequency is resolved exactly, so the grid average is not approximate.
The diagonal (d = 0) only admits the regularized kernel, whose eps -> 0
behavior is reported, not asserted.
"""

from __future__ import annotations

from typing import Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionMismatchError, InvalidSpecError, UsageError
from ..operators import Operator
from ..states import DensityMatrix
from .config import EstimatorConfig

__all__ = [
    "kerr_kernel",
    "kerr_kernel_regularized",
    "kerr_phase_distribution",
    "kerr_sideband_coefficients",
    "kerr_exact_element",
    "kerr_estimate",
    "kerr_epsilon_sweep",
]

_CHUNK = 1 << 16


def kerr_kernel(n: int, d: int, phi, psi):
    """exp[i psi (d^2 + 2 n d) + i phi d]; off-diagonal only."""
    if d == 0:
        raise InvalidSpecError("d = 0 is the diagonal case; use kerr_kernel_regularized")
    if n < 0 or n + d < 0:
        raise InvalidSpecError("kernel indices n and n+d must be non-negative")
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    val = np.exp(1j * (psi * (d * d + 2 * n * d) + phi * d))
    return complex(val) if val.ndim == 0 else val


def kerr_kernel_regularized(n: int, eps: float, phi, psi):
    """exp[i 2 psi n eps + i phi eps]; the eps -> 0 limit is NOT taken here."""
    if eps <= 0:
        raise InvalidSpecError(f"regularizer eps must be > 0, got {eps}")
    if n < 0:
        raise InvalidSpecError("index n must be non-negative")
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    val = np.exp(1j * (2.0 * psi * n * eps + phi * eps))
    return complex(val) if val.ndim == 0 else val


def _phase_vectors(psis: np.ndarray, phis: np.ndarray, dim: int) -> np.ndarray:
    """u_a(psi, phi) = e^{i(psi a^2 + phi a)}; p is the bilinear u^dag rho u."""
    a = np.arange(dim)
    return np.exp(
        1j * (psis[:, None, None] * (a * a)[None, None, :]
              + phis[None, :, None] * a[None, None, :])
    )


def kerr_phase_distribution(rho: DensityMatrix, psis, phis) -> np.ndarray:
    """p(phi, psi) on the grid psis x phis; real and non-negative."""
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    u = _phase_vectors(psis, phis, rho.dim)
    return np.einsum("qpa,ab,qpb->qp", u.conj(), rho.mat, u, optimize=True).real


def kerr_sideband_coefficients(rho: DensityMatrix, psis) -> np.ndarray:
    """c_d(psi) = sum_{b-a=d} rho_ab e^{i psi (b^2-a^2)} for d = 0..dim-1.

    These are the Fourier coefficients of the conditional phase density
    p(phi | psi) = [1 + 2 sum_{d>=1} Re(c_d e^{i d phi})] / 2pi.
    """
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    dim = rho.dim
    out = np.zeros((psis.size, dim), dtype=complex)
    sq = np.arange(dim) ** 2
    for d in range(dim):
        a = np.arange(dim - d)
        b = a + d
        out[:, d] = np.exp(1j * np.outer(psis, sq[b] - sq[a])) @ rho.mat[a, b]
    return out


def _grids(cfg: EstimatorConfig) -> Tuple[np.ndarray, np.ndarray]:
    p = cfg.kerr_phi_points()
    q = cfg.kerr_psi_points()
    return (2.0 * np.pi * np.arange(q) / q, 2.0 * np.pi * np.arange(p) / p)


def kerr_exact_element(rho: DensityMatrix, n: int, d: int, cfg: EstimatorConfig) -> complex:
    """Exact-grid average recovering <n+d|rho|n>."""
    if rho.dim != cfg.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} vs config dim {cfg.dim}")
    if n + d >= cfg.dim or n >= cfg.dim:
        raise InvalidSpecError("element indices must lie inside the configured dimension")
    psis, phis = _grids(cfg)
    p = kerr_phase_distribution(rho, psis, phis)
    k = kerr_kernel(n, d, phis[None, :], psis[:, None])
    return complex(np.sum(p * k) / (psis.size * phis.size))


def _observable_offdiag(a: Operator) -> np.ndarray:
    mat = a.mat.copy()
    diag = np.abs(np.diag(mat))
    if np.max(diag) > 1e-12:
        raise UsageError(
            "Kerr-phase records determine off-diagonal elements only; the "
            "observable has diagonal weight"
        )
    np.fill_diagonal(mat, 0.0)
    return mat


def kerr_estimate(target: Union[Operator, Tuple[int, int]], records: Sequence,
                  cfg: EstimatorConfig):
    """Sample mean of the off-diagonal kernel over (psi, phi) records.

    Records carry the Kerr strength in the setting and the measured phase
    as the outcome; no importance weight is needed because psi is drawn
    uniformly and phi from its exact conditional.
    """
    if len(records) < 2:
        raise UsageError("kerr_estimate needs at least 2 records")
    if isinstance(target, Operator):
        if target.dim != cfg.dim:
            raise DimensionMismatchError(f"operator dim {target.dim} vs config dim {cfg.dim}")
        a_mat = _observable_offdiag(target)
    else:
        n, d = target
        if d == 0:
            raise InvalidSpecError("d = 0 is the diagonal case; not estimable from records")
        if n < 0 or n + d < 0 or n >= cfg.dim or n + d >= cfg.dim:
            raise InvalidSpecError("element indices must lie inside the configured dimension")

    from ..recon import Accumulator

    psis = np.fromiter((r.setting.coords[0] for r in records), dtype=float, count=len(records))
    phis = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    acc = Accumulator()
    for i in range(0, psis.size, _CHUNK):
        ps, ph = psis[i : i + _CHUNK], phis[i : i + _CHUNK]
        if isinstance(target, Operator):
            aidx = np.arange(cfg.dim)
            u = np.exp(1j * (ps[:, None] * (aidx * aidx)[None, :] + ph[:, None] * aidx[None, :]))
            # value_i = sum_{r != c} A_rc conj(u_r) u_c; equals the kernel sum over elements
            vals = np.einsum("gr,rc,gc->g", u.conj(), a_mat, u, optimize=True)
        else:
            vals = kerr_kernel(target[0], target[1], ph, ps)
        acc.push(vals)
    return acc.result()


def kerr_epsilon_sweep(rho: DensityMatrix, n: int, eps_values: Sequence[float],
                       cfg: EstimatorConfig):
    """Exact-grid averages of the regularized diagonal kernel, one per eps.

    Returned for extrapolation studies; no limit value is asserted because
    the plain eps -> 0 limit of the average is Tr[rho], not rho_nn.
    """
    if rho.dim != cfg.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} vs config dim {cfg.dim}")
    psis, phis = _grids(cfg)
    p = kerr_phase_distribution(rho, psis, phis)
    out = []
    for eps in eps_values:
        k = kerr_kernel_regularized(n, float(eps), phis[None, :], psis[:, None])
        out.append((float(eps), complex(np.sum(p * k) / (psis.size * phis.size))))
    return out
