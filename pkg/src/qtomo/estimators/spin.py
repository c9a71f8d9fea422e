"""SU(2) tomography: continuous-direction spin kernels and the Pauli shortcut.

The direction-averaged resolution needs, per measured direction n and
outcome m, the kernel value R[A](m, n). In the S.n eigenbasis the inner
phase integral against sin^2(psi/2) leaves only eigenvalue gaps 0, +-1:

    R[A](m, n) = (2s+1) [A'_{jj} - (A'_{j-1,j-1} + A'_{j+1,j+1}) / 2]

with j the index of eigenvalue m (ascending) and out-of-range neighbors
dropped. The numeric psi-quadrature route is kept as the oracle.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, InvalidSpecError, UsageError
from ..operators import Operator, spin_matrices
from ..states import DensityMatrix

__all__ = [
    "spin_kernel",
    "spin_kernel_quadrature",
    "spin_estimate",
    "spin_quadrature_expectation",
    "pauli_estimate",
    "sphere_rule",
]

_CHUNK = 1 << 16


def _unit(direction) -> np.ndarray:
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise InvalidSpecError("direction must be a 3-vector of unit norm")
    return n


def _j_index(m: float, twice_s: int) -> int:
    j = m + twice_s / 2.0
    if abs(j - round(j)) > 1e-9 or not (-0.5 < round(j) < twice_s + 0.5):
        raise InvalidSpecError(f"m = {m} is not an eigenvalue for 2s = {twice_s}")
    return int(round(j))


def _eigenframe(direction, twice_s: int) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues m = -s..s of S.n and their eigenvector columns."""
    n = _unit(direction)
    sx, sy, sz = spin_matrices(twice_s)
    evals, vecs = np.linalg.eigh(n[0] * sx.mat + n[1] * sy.mat + n[2] * sz.mat)
    return evals, vecs


def _closed_form(diag: np.ndarray, j: int, twice_s: int) -> complex:
    val = diag[j]
    if j > 0:
        val -= 0.5 * diag[j - 1]
    if j < twice_s:
        val -= 0.5 * diag[j + 1]
    return (twice_s + 1) * val


def spin_kernel(a: Operator, m: float, direction, twice_s: int) -> complex:
    """Closed-form R[A](m, n)."""
    if a.dim != twice_s + 1:
        raise DimensionMismatchError(f"operator dim {a.dim} vs 2s+1 = {twice_s + 1}")
    j = _j_index(m, twice_s)
    _, vecs = _eigenframe(direction, twice_s)
    diag = np.einsum("aj,ab,bj->j", vecs.conj(), a.mat, vecs, optimize=True)
    return complex(_closed_form(diag, j, twice_s))


def spin_kernel_quadrature(a: Operator, m: float, direction, twice_s: int,
                           n_psi: int = 2048) -> complex:
    """Oracle route: numeric psi-integral of sin^2(psi/2) Tr[A e^{-i psi (S.n - m)}]."""
    if a.dim != twice_s + 1:
        raise DimensionMismatchError(f"operator dim {a.dim} vs 2s+1 = {twice_s + 1}")
    _j_index(m, twice_s)  # validate m even though the integral tolerates any shift
    evals, vecs = _eigenframe(direction, twice_s)
    diag = np.einsum("aj,ab,bj->j", vecs.conj(), a.mat, vecs, optimize=True)
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    phases = np.exp(-1j * np.outer(psi, evals - m))  # (n_psi, 2s+1)
    integrand = np.sin(psi / 2.0) ** 2 * (phases @ diag)
    return complex((twice_s + 1) / np.pi * (2.0 * np.pi / n_psi) * np.sum(integrand))


def spin_estimate(a: Operator, records: Sequence, twice_s: int):
    """Sample mean of the closed-form kernel over (direction, outcome) records."""
    if a.dim != twice_s + 1:
        raise DimensionMismatchError(f"operator dim {a.dim} vs 2s+1 = {twice_s + 1}")
    if len(records) < 2:
        raise UsageError("spin_estimate needs at least 2 records")
    from ..recon import Accumulator

    sx, sy, sz = (s.mat for s in spin_matrices(twice_s))
    dirs = np.array([r.setting.coords for r in records], dtype=float)
    ms = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    js = ms + twice_s / 2.0
    if np.max(np.abs(js - np.round(js))) > 1e-9 or np.min(js) < -0.5 or np.max(js) > twice_s + 0.5:
        raise InvalidSpecError("record outcome is not an eigenvalue of S.n")
    js = np.round(js).astype(int)

    acc = Accumulator()
    for i in range(0, len(records), _CHUNK):
        d = dirs[i : i + _CHUNK]
        mats = (
            d[:, 0, None, None] * sx + d[:, 1, None, None] * sy + d[:, 2, None, None] * sz
        )
        _, vecs = np.linalg.eigh(mats)
        diag = np.einsum("gaj,ab,gbj->gj", vecs.conj(), a.mat, vecs, optimize=True)
        pad = np.zeros((diag.shape[0], diag.shape[1] + 2), dtype=complex)
        pad[:, 1:-1] = diag
        jc = js[i : i + _CHUNK]
        rows = np.arange(jc.size)
        vals = (twice_s + 1) * (
            pad[rows, jc + 1] - 0.5 * (pad[rows, jc] + pad[rows, jc + 2])
        )
        acc.push(vals)
    return acc.result()


def sphere_rule(twice_s: int, n_polar: int = 0, n_azimuth: int = 0):
    """Product quadrature over directions, exact for the spin integrand's degree.

    Gauss-Legendre in cos(theta) (order >= 2s+2 by default) times a
    uniform azimuthal grid (>= 4s+4 points); weights sum to 1 against
    the normalized sphere measure.
    """
    n_polar = n_polar if n_polar else twice_s + 2
    n_azimuth = n_azimuth if n_azimuth else 2 * twice_s + 4
    if n_polar < twice_s + 1 or n_azimuth < 2 * twice_s + 1:
        raise InvalidSpecError("sphere rule below the exactness order for this spin")
    u, wu = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    st = np.sqrt(1.0 - u * u)
    dirs = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.outer(u, np.ones_like(phi)).ravel(),
        ],
        axis=1,
    )
    weights = np.outer(wu / 2.0, np.full(n_azimuth, 1.0 / n_azimuth)).ravel()
    return dirs, weights


def spin_quadrature_expectation(a: Operator, rho: DensityMatrix, twice_s: int,
                                n_polar: int = 0, n_azimuth: int = 0) -> complex:
    """Exact-integration mode: directions by quadrature, outcomes summed exactly."""
    if a.dim != twice_s + 1 or rho.dim != twice_s + 1:
        raise DimensionMismatchError("operator/state dims must equal 2s+1")
    dirs, weights = sphere_rule(twice_s, n_polar, n_azimuth)
    total = 0.0 + 0.0j
    for nvec, w in zip(dirs, weights):
        evals, vecs = _eigenframe(nvec, twice_s)
        diag_a = np.einsum("aj,ab,bj->j", vecs.conj(), a.mat, vecs, optimize=True)
        probs = np.einsum("aj,ab,bj->j", vecs.conj(), rho.mat, vecs, optimize=True).real
        for j in range(twice_s + 1):
            total += w * probs[j] * _closed_form(diag_a, j, twice_s)
    return complex(total)


def pauli_estimate(a: Operator, records: Sequence):
    """Qubit shortcut: sum_axis Tr[A sigma_axis] <m>_axis + Tr[A]/2.

    The standard error combines the three per-axis variances with the
    trace coefficients, so identity-like A report zero error exactly.
    """
    if a.dim != 2:
        raise DimensionMismatchError("pauli_estimate is for 2x2 operators")
    if len(records) == 0:
        raise UsageError("pauli_estimate needs records for every axis")
    from ..operators import pauli
    from ..recon import EstimationResult

    coeffs = [complex(np.trace(a.mat @ pauli(ax).mat)) for ax in ("x", "y", "z")]
    axes = np.fromiter((int(r.setting.coords[0]) for r in records), dtype=int,
                       count=len(records))
    ms = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    mean = 0.5 * complex(np.trace(a.mat))
    var = 0.0
    for idx in range(3):
        sel = ms[axes == idx]
        if sel.size == 0:
            raise UsageError(f"no records along axis {'xyz'[idx]}")
        mean += coeffs[idx] * sel.mean()
        if sel.size > 1:
            var += abs(coeffs[idx]) ** 2 * sel.var(ddof=1) / sel.size
    return EstimationResult(mean=complex(mean), std_error=math.sqrt(var),
                            n_samples=len(records))
