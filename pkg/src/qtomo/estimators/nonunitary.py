"""Resolution over nonunitary phase-weighted ladder operators.

The family R_n(phi) shifts by n rungs with a phase that tracks the
higher rung: R_n(phi) = sum_j e^{i phi (j+n)} |j><j+n| for n >= 0, and
R_{-k}(phi) = sum_j e^{i phi j} |j+k><j| for k > 0. Averaging
Tr[A R_n^dag(phi)] Tr[rho R_n(phi)] over phi and summing n returns
Tr[A rho] exactly in the truncated space, provided A does not reach the
truncation edge. The state-side trace doubles as a phase-representation
integral, which is the POVM reading of the scheme.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatchError, GridError, InvalidSpecError, TruncationError
from ..operators import Operator
from ..states import DensityMatrix

__all__ = [
    "phase_shift_ladder",
    "nonunitary_phase_trace",
    "nonunitary_phase_trace_routes",
    "nonunitary_reconstruct",
]


def phase_shift_ladder(n: int, phi: float, dim: int) -> Operator:
    """Matrix of R_n(phi); raises when the shift empties the truncated space."""
    if abs(n) >= dim:
        raise InvalidSpecError(f"shift |n| = {abs(n)} does not fit in dim {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    if n >= 0:
        j = np.arange(dim - n)
        m[j, j + n] = np.exp(1j * phi * (j + n))
    else:
        k = -n
        j = np.arange(dim - k)
        m[j + k, j] = np.exp(1j * phi * j)
    return Operator(m)


def _direct_trace(rho_mat: np.ndarray, q: int, psi: float) -> complex:
    dim = rho_mat.shape[0]
    m = np.arange(max(0, q), dim + min(0, q))
    return complex(np.sum(np.exp(1j * m * psi) * rho_mat[m, m - q]))


def nonunitary_phase_trace_routes(rho: DensityMatrix, q: int, psi: float,
                                  grid: int = 0):
    """(direct matrix trace, phase-representation grid integral) of Tr[rho R_q(psi)].

    The phase route averages e^{i q (phi + psi)} <e^{i phi}| rho |e^{i (phi+psi)}>
    over a uniform phi-grid; any grid of at least 4*dim points resolves
    every frequency the truncated state can produce.
    """
    dim = rho.dim
    if abs(q) >= dim:
        raise InvalidSpecError(f"shift |q| = {abs(q)} does not fit in dim {dim}")
    g = grid if grid else 4 * dim
    if g < 4 * dim:
        raise GridError(f"phase grid needs >= {4 * dim} points, got {g}")
    direct = _direct_trace(rho.mat, q, psi)
    phis = 2.0 * np.pi * np.arange(g) / g
    idx = np.arange(dim)
    bra = np.exp(1j * np.outer(phis, idx))           # <n|e^{i phi}> columns
    ket = np.exp(1j * np.outer(phis + psi, idx))
    overlap = np.einsum("gm,mn,gn->g", bra.conj(), rho.mat, ket, optimize=True)
    phase_route = complex(np.mean(np.exp(1j * q * (phis + psi)) * overlap))
    return direct, phase_route


def nonunitary_phase_trace(rho: DensityMatrix, q: int, psi: float,
                           grid: int = 0) -> complex:
    """Tr[rho R_q(psi)], cross-checked against the phase-representation route."""
    direct, phase_route = nonunitary_phase_trace_routes(rho, q, psi, grid)
    if abs(direct - phase_route) > 1e-8:
        raise GridError(
            f"phase-representation route deviates by {abs(direct - phase_route):.3e}; "
            "grid does not resolve the state"
        )
    return direct


def _support_profile(a_mat: np.ndarray):
    rows, cols = np.nonzero(np.abs(a_mat) > 0)
    if rows.size == 0:
        return -1, 0
    support_max = int(max(rows.max(), cols.max()))
    bandwidth = int(np.max(np.abs(rows - cols)))
    return support_max, bandwidth


def nonunitary_reconstruct(a: Operator, rho: DensityMatrix, grid: int = 0) -> complex:
    """sum_n int dphi/2pi Tr[A R_n^dag(phi)] Tr[rho R_n(phi)].

    Exact on the truncated space when A stays clear of the edge: the
    highest occupied index plus the widest ladder shift A uses must fit
    inside the dimension, otherwise shifted weight is silently lost and
    the identity breaks, so that case raises instead.
    """
    dim = rho.dim
    if a.dim != dim:
        raise DimensionMismatchError(f"operator dim {a.dim} vs state dim {rho.dim}")
    support_max, bandwidth = _support_profile(a.mat)
    if support_max < 0:
        return 0j
    if support_max + bandwidth > dim:
        raise TruncationError(
            f"operator reaches index {support_max} with shift {bandwidth}; "
            f"needs support_max + bandwidth <= dim = {dim}"
        )
    g = grid if grid else 4 * dim
    if g < 2 * dim - 1:
        raise GridError(f"phi grid needs >= {2 * dim - 1} points, got {g}")
    phis = 2.0 * np.pi * np.arange(g) / g
    total = 0j
    for n in range(-(dim - 1), dim):
        if n >= 0:
            j = np.arange(dim - n)
            a_diag = a.mat[j, j + n]
            a_phase = np.exp(-1j * np.outer(phis, j + n))
        else:
            j = np.arange(dim + n)
            a_diag = a.mat[j - n, j]
            a_phase = np.exp(-1j * np.outer(phis, j))
        if not np.any(a_diag):
            continue
        coef_a = a_phase @ a_diag                     # Tr[A R_n^dag(phi)]
        m = np.arange(max(0, n), dim + min(0, n))
        coef_rho = np.exp(1j * np.outer(phis, m)) @ rho.mat[m, m - n]
        total += np.sum(coef_a * coef_rho) / g
    return complex(total)
