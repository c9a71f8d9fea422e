"""Averaging engine: records + kernels -> expectations and density matrices.

Every estimate flows through a single count/mean/M2 accumulator so that
partitioned streams merge exactly; the merge is associative, which the
concurrency layer relies on. For complex kernels M2 tracks the total
squared deviation |x - mean|^2, whose normalized value is the variance
of the real part plus the variance of the imaginary part.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, UsageError
from .operators import Operator, fock_matrix_unit, spin_matrices
from .states import DensityMatrix

__all__ = [
    "EstimationResult",
    "Accumulator",
    "ReconstructedMatrix",
    "estimate",
    "reconstruct_matrix",
    "compare_states",
    "nearest_physical_state",
]

_CHUNK = 1 << 16


@dataclasses.dataclass(frozen=True)
class EstimationResult:
    mean: complex
    std_error: float
    n_samples: int


class Accumulator:
    """Single-pass mean/M2 accumulation over complex values, mergeable."""

    __slots__ = ("n", "mean", "m2")

    def __init__(self) -> None:
        self.n = 0
        self.mean = 0j
        self.m2 = 0.0

    def push(self, values: np.ndarray) -> None:
        v = np.asarray(values, dtype=complex).ravel()
        if v.size == 0:
            return
        cm = complex(v.mean())
        cm2 = float(np.sum(np.abs(v - cm) ** 2))
        self._combine(v.size, cm, cm2)

    def merge(self, other: "Accumulator") -> None:
        self._combine(other.n, other.mean, other.m2)

    def _combine(self, n2: int, mean2: complex, m2_2: float) -> None:
        if n2 == 0:
            return
        n1 = self.n
        n = n1 + n2
        delta = mean2 - self.mean
        self.mean += delta * (n2 / n)
        self.m2 += m2_2 + abs(delta) ** 2 * (n1 * n2 / n)
        self.n = n

    def result(self) -> EstimationResult:
        if self.n < 2:
            raise UsageError("need at least 2 values for a standard error")
        var = max(self.m2, 0.0) / (self.n - 1)
        return EstimationResult(
            mean=complex(self.mean),
            std_error=math.sqrt(var / self.n),
            n_samples=self.n,
        )


def estimate(records: Sequence, kernel: Callable) -> EstimationResult:
    """Ensemble average of kernel(setting, outcome) over the records."""
    if len(records) < 2:
        raise UsageError("estimate needs at least 2 records")
    acc = Accumulator()
    for i in range(0, len(records), _CHUNK):
        chunk = records[i : i + _CHUNK]
        acc.push(np.fromiter(
            (complex(kernel(r.setting, r.outcome)) for r in chunk),
            dtype=complex, count=len(chunk),
        ))
    return acc.result()


@dataclasses.dataclass(frozen=True)
class ReconstructedMatrix:
    """Per-element estimates for A = |k><n| plus the Hermitized point value.

    elements[k][n] estimates <k|rho|n>; None marks elements the method
    cannot reach (Kerr diagonals). hermitized is (M + M^dag)/2 with
    unreachable elements left at zero.
    """

    dim: int
    method: str
    elements: Tuple[Tuple[Optional[EstimationResult], ...], ...]
    hermitized: np.ndarray
    diagnostics: Dict[str, object]

    def element(self, k: int, n: int) -> Optional[EstimationResult]:
        return self.elements[k][n]


def _check_quorum(records: Sequence, expected: str) -> None:
    ids = {r.quorum for r in records}
    if ids != {expected}:
        raise UsageError(
            f"records carry quorum {sorted(ids)} but the method expects '{expected}'"
        )


def _homodyne_elements(records, cfg, squeeze):
    from .estimators.homodyne import homodyne_estimate, squeezed_homodyne_estimate

    out = {}
    for k in range(cfg.dim):
        for n in range(cfg.dim):
            a = fock_matrix_unit(n, k, cfg.dim)  # Tr[rho |n><k|] = <k|rho|n>
            if squeeze is None:
                out[(k, n)] = homodyne_estimate(a, records, cfg)
            else:
                out[(k, n)] = squeezed_homodyne_estimate(a, records, squeeze, cfg)
    return out


def _parity_elements(records, cfg):
    from .estimators.parity import parity_kernel_element

    radius = cfg.parity_radius()
    weight = radius * radius
    betas = np.fromiter(
        (r.setting.coords[0] + 1j * r.setting.coords[1] for r in records),
        dtype=complex, count=len(records),
    )
    signs = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))

    out = {}
    for k in range(cfg.dim):
        for n in range(cfg.dim):
            acc = Accumulator()
            for i in range(0, betas.size, _CHUNK):
                kv = parity_kernel_element(k, n, betas[i : i + _CHUNK])
                acc.push(weight * signs[i : i + _CHUNK] * kv)
            out[(k, n)] = acc.result()
    return out


def _spin_elements(records, twice_s):
    dim = twice_s + 1
    sx, sy, sz = (s.mat for s in spin_matrices(twice_s))
    dirs = np.array([r.setting.coords for r in records], dtype=float)
    ms = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    js = np.round(ms + twice_s / 2.0).astype(int)

    accs = {(k, n): Accumulator() for k in range(dim) for n in range(dim)}
    for i in range(0, len(records), _CHUNK):
        d = dirs[i : i + _CHUNK]
        jc = js[i : i + _CHUNK]
        mats = d[:, 0, None, None] * sx + d[:, 1, None, None] * sy + d[:, 2, None, None] * sz
        _, vecs = np.linalg.eigh(mats)
        rows = np.arange(jc.size)
        for k in range(dim):
            for n in range(dim):
                # (V^dag |n><k| V)_{jj} = conj(V_nj) V_kj
                diag = vecs[:, n, :].conj() * vecs[:, k, :]
                pad = np.zeros((diag.shape[0], dim + 2), dtype=complex)
                pad[:, 1:-1] = diag
                vals = (twice_s + 1) * (
                    pad[rows, jc + 1] - 0.5 * (pad[rows, jc] + pad[rows, jc + 2])
                )
                accs[(k, n)].push(vals)
    return {key: acc.result() for key, acc in accs.items()}


def _pauli_elements(records):
    from .estimators.spin import pauli_estimate

    out = {}
    for k in range(2):
        for n in range(2):
            out[(k, n)] = pauli_estimate(fock_matrix_unit(n, k, 2), records)
    return out


def _kerr_elements(records, cfg):
    dim = cfg.dim
    psis = np.fromiter((r.setting.coords[0] for r in records), dtype=float, count=len(records))
    phis = np.fromiter((r.outcome[0] for r in records), dtype=float, count=len(records))
    idx = np.arange(dim)
    accs = {(k, n): Accumulator() for k in range(dim) for n in range(dim) if k != n}
    for i in range(0, psis.size, _CHUNK):
        u = np.exp(1j * (psis[i : i + _CHUNK, None] * (idx * idx)[None, :]
                         + phis[i : i + _CHUNK, None] * idx[None, :]))
        for k in range(dim):
            for n in range(dim):
                if k != n:
                    accs[(k, n)].push(u[:, n].conj() * u[:, k])
    return {key: acc.result() for key, acc in accs.items()}


def reconstruct_matrix(records: Sequence, method: str, n_max: int,
                       cfg=None, twice_s: Optional[int] = None,
                       squeeze=None, reference: Optional[DensityMatrix] = None,
                       nearest_physical: bool = False) -> ReconstructedMatrix:
    """Estimate every element <k|rho|n> with k, n <= n_max for the given method.

    n_max is the largest Fock/spin index wanted; the working dimension is
    n_max + 1 and must not exceed what cfg (or 2s+1) supports.
    """
    if len(records) == 0:
        raise UsageError("no records to reconstruct from")
    methods = ("homodyne", "parity", "spin", "pauli", "kerr")
    if method not in methods:
        raise UsageError(f"unknown method '{method}'; choose from {methods}")
    _check_quorum(records, method)
    dim = n_max + 1

    if method == "homodyne":
        if cfg is None or cfg.dim < dim:
            raise UsageError("homodyne reconstruction needs cfg with dim > n_max")
        work = dataclasses.replace(cfg, dim=dim) if cfg.dim != dim else cfg
        results = _homodyne_elements(records, work, squeeze)
    elif method == "parity":
        if cfg is None or cfg.dim < dim:
            raise UsageError("parity reconstruction needs cfg with dim > n_max")
        work = dataclasses.replace(cfg, dim=dim) if cfg.dim != dim else cfg
        results = _parity_elements(records, work)
    elif method == "spin":
        if twice_s is None or twice_s + 1 != dim:
            raise UsageError("spin reconstruction needs twice_s with 2s = n_max * 2")
        results = _spin_elements(records, twice_s)
    elif method == "pauli":
        if dim != 2:
            raise UsageError("pauli reconstruction is for n_max = 1")
        results = _pauli_elements(records)
    else:
        if cfg is None or cfg.dim < dim:
            raise UsageError("kerr reconstruction needs cfg with dim > n_max")
        work = dataclasses.replace(cfg, dim=dim) if cfg.dim != dim else cfg
        results = _kerr_elements(records, work)

    elements = tuple(
        tuple(results.get((k, n)) for n in range(dim)) for k in range(dim)
    )
    raw = np.zeros((dim, dim), dtype=complex)
    for (k, n), res in results.items():
        raw[k, n] = res.mean
    herm = 0.5 * (raw + raw.conj().T)

    diagnostics: Dict[str, object] = {"method": method, "n_records": len(records)}
    if method == "kerr":
        diagnostics["diagonal"] = "not estimated"
    else:
        tr = sum(results[(k, k)].mean.real for k in range(dim))
        tr_se = math.sqrt(sum(results[(k, k)].std_error ** 2 for k in range(dim)))
        diagnostics["trace"] = tr
        diagnostics["trace_std_error"] = tr_se
    if reference is not None:
        diagnostics["comparison"] = compare_states(herm, reference)
    if nearest_physical:
        phys = nearest_physical_state(herm)
        diagnostics["nearest_physical_distance"] = float(
            np.linalg.norm(herm - phys.mat)
        )
    return ReconstructedMatrix(
        dim=dim, method=method, elements=elements, hermitized=herm,
        diagnostics=diagnostics,
    )


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, (DensityMatrix, Operator)):
        return x.mat
    return np.asarray(x, dtype=complex)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def compare_states(rho_est, rho_ref) -> Dict[str, float]:
    """Fidelity, trace distance, and sup-norm error of an estimate vs a reference.

    The estimate may be slightly non-physical; any negative eigenvalue
    mass met inside the fidelity is reported instead of silently clipped.
    """
    a = _as_matrix(rho_est)
    b = _as_matrix(rho_ref)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape {a.shape} vs {b.shape}")
    a = 0.5 * (a + a.conj().T)
    sq = _psd_sqrt(b)
    inner = sq @ a @ sq
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    negative_mass = float(-np.sum(np.minimum(w, 0.0)))
    fidelity = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    diff_w = np.linalg.eigvalsh(a - b)
    return {
        "fidelity": fidelity,
        "trace_distance": float(0.5 * np.sum(np.abs(diff_w))),
        "max_element_error": float(np.max(np.abs(a - b))),
        "negative_eigenvalue_mass": negative_mass,
    }


def nearest_physical_state(mat: Union[np.ndarray, Operator]) -> DensityMatrix:
    """Closest unit-trace PSD matrix in Frobenius norm (diagnostic only).

    Eigenvalues are Euclidean-projected onto the probability simplex;
    eigenvectors are kept.
    """
    m = _as_matrix(mat)
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    desc = np.sort(w)[::-1]
    csum = np.cumsum(desc)
    k = np.arange(1, w.size + 1)
    ok = desc - (csum - 1.0) / k > 0
    k_star = int(np.max(k[ok]))
    tau = (csum[k_star - 1] - 1.0) / k_star
    projected = np.clip(w - tau, 0.0, None)
    return DensityMatrix((v * projected) @ v.conj().T)
