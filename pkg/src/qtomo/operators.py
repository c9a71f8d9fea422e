"""Dense operator algebra on truncated Hilbert spaces.

Everything downstream (frames, estimator kernels, samplers) works with
plain dim x dim complex matrices wrapped in the Operator type. Builders
for the standard quantum-optics and spin operators live here; the
exponential-family ones (displacement, squeeze, Kerr shift) exponentiate
the truncated generator, so they are exactly unitary on the truncated
space but only approximate the infinite-dimensional operator when the
relevant excitation numbers stay well below dim.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatchError, InvalidSpecError

__all__ = [
    "Operator",
    "OperatorSpec",
    "hs_inner",
    "hs_norm",
    "build_operator",
    "hermitian_evolution",
    "identity",
    "annihilation",
    "creation",
    "number",
    "parity",
    "quadrature",
    "displacement",
    "squeeze",
    "kerr_shift",
    "lowering_e_minus",
    "raising_e_plus",
    "fock_matrix_unit",
    "spin_matrices",
    "spin_component",
    "pauli",
]


@dataclasses.dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex square matrix; the universal operator container."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidSpecError(f"operator must be square, got shape {m.shape}")
        if m.shape[0] < 1:
            raise InvalidSpecError("operator dimension must be >= 1")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise InvalidSpecError("operator entries must be finite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def adjoint(self) -> "Operator":
        return Operator(self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T)) <= tol)

    def __add__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.mat + other.mat)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.mat - other.mat)

    def __neg__(self) -> "Operator":
        return Operator(-self.mat)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.mat * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_dims(self, other)
        return Operator(self.mat @ other.mat)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Operator(dim={self.dim})"


def _check_dims(a: Operator, b: Operator) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def hs_inner(a: Operator, b: Operator) -> complex:
    """Hilbert-Schmidt inner product Tr[A^dag B], conjugate-linear in A."""
    _check_dims(a, b)
    # vdot conjugates its first argument; row-major flattening matches Tr[A^dag B]
    return complex(np.vdot(a.mat, b.mat))


def hs_norm(a: Operator) -> float:
    """Frobenius norm, sqrt of hs_inner(a, a)."""
    return float(np.linalg.norm(a.mat))


# ---------------------------------------------------------------------------
# builders


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim, dtype=complex))


def annihilation(dim: int) -> Operator:
    m = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        m[n - 1, n] = math.sqrt(n)
    return Operator(m)


def creation(dim: int) -> Operator:
    return annihilation(dim).adjoint()


def number(dim: int) -> Operator:
    return Operator(np.diag(np.arange(dim, dtype=float)).astype(complex))


def parity(dim: int) -> Operator:
    signs = np.array([(-1.0) ** n for n in range(dim)], dtype=complex)
    return Operator(np.diag(signs))


def quadrature(phi: float, dim: int) -> Operator:
    """Rotated quadrature (a e^{-i phi} + a^dag e^{i phi}) / 2."""
    a = annihilation(dim).mat
    m = 0.5 * (a * np.exp(-1j * phi) + a.conj().T * np.exp(1j * phi))
    return Operator(m)


def displacement(alpha: complex, dim: int) -> Operator:
    """exp(alpha a^dag - conj(alpha) a) on the truncated space.

    Exactly unitary for any alpha, but faithful to the infinite-dimensional
    displacement only while |alpha|^2 stays well below dim.
    """
    a = annihilation(dim).mat
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return Operator(expm(gen))


def squeeze(zeta: complex, dim: int) -> Operator:
    """exp((zeta^2 a^dag^2 - conj(zeta)^2 a^2) / 2) on the truncated space.

    Note the squared parameter in the generator; the induced Bogoliubov
    coefficients are mu = cosh|zeta|^2, nu = e^{2i arg zeta} sinh|zeta|^2.
    """
    a = annihilation(dim).mat
    ad = a.conj().T
    gen = 0.5 * (zeta**2 * (ad @ ad) - np.conj(zeta) ** 2 * (a @ a))
    return Operator(expm(gen))


def kerr_shift(psi: float, dim: int) -> Operator:
    """Nonlinear phase shift exp(i psi (a^dag a)^2), diagonal in Fock basis."""
    n = np.arange(dim, dtype=float)
    return Operator(np.diag(np.exp(1j * psi * n * n)))


def lowering_e_minus(dim: int) -> Operator:
    """Phase lowering ladder, ones on the first subdiagonal: sum |n+1><n|."""
    m = np.zeros((dim, dim), dtype=complex)
    for n in range(dim - 1):
        m[n + 1, n] = 1.0
    return Operator(m)


def raising_e_plus(dim: int) -> Operator:
    """Phase raising ladder, ones on the first superdiagonal: sum |n><n+1|."""
    m = np.zeros((dim, dim), dtype=complex)
    for n in range(dim - 1):
        m[n, n + 1] = 1.0
    return Operator(m)


def fock_matrix_unit(row: int, col: int, dim: int) -> Operator:
    """|row><col| in the Fock basis."""
    if not (0 <= row < dim and 0 <= col < dim):
        raise InvalidSpecError(f"matrix unit indices ({row},{col}) outside [0,{dim})")
    m = np.zeros((dim, dim), dtype=complex)
    m[row, col] = 1.0
    return Operator(m)


# ---------------------------------------------------------------------------
# spin


def _check_twice_s(twice_s: int) -> None:
    if twice_s < 1 or int(twice_s) != twice_s:
        raise InvalidSpecError(f"2s must be a positive integer, got {twice_s}")


def spin_matrices(twice_s: int) -> Tuple[Operator, Operator, Operator]:
    """(Sx, Sy, Sz) for spin s = twice_s / 2, basis ordered m = s, s-1, ..., -s."""
    _check_twice_s(twice_s)
    s = twice_s / 2.0
    d = twice_s + 1
    mvals = s - np.arange(d)
    sz = np.diag(mvals).astype(complex)
    sp = np.zeros((d, d), dtype=complex)
    # S+ |s,m> = sqrt(s(s+1) - m(m+1)) |s,m+1>; row index of m is s - m
    for i in range(1, d):
        m = mvals[i]
        sp[i - 1, i] = math.sqrt(s * (s + 1) - m * (m + 1))
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return Operator(sx), Operator(sy), Operator(sz)


def spin_component(twice_s: int, direction: Iterable[float]) -> Operator:
    """S . n for a unit 3-vector n."""
    nvec = np.asarray(tuple(direction), dtype=float)
    if nvec.shape != (3,):
        raise InvalidSpecError("spin direction must be a 3-vector")
    if abs(np.linalg.norm(nvec) - 1.0) > 1e-12:
        raise InvalidSpecError(f"spin direction must be unit length, |n| = {np.linalg.norm(nvec)}")
    sx, sy, sz = spin_matrices(twice_s)
    return Operator(nvec[0] * sx.mat + nvec[1] * sy.mat + nvec[2] * sz.mat)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> Operator:
    try:
        return Operator(_PAULI[axis])
    except KeyError:
        raise InvalidSpecError(f"pauli axis must be x, y, or z, got {axis!r}") from None


# ---------------------------------------------------------------------------
# spec-driven construction

_SCALAR_KINDS = frozenset(
    {"annihilation", "number", "parity", "lowering_e_minus", "raising_e_plus", "identity"}
)


@dataclasses.dataclass(frozen=True)
class OperatorSpec:
    """Declarative recipe for a built-in operator."""

    kind: str
    dim: int
    alpha: complex = 0j
    zeta: complex = 0j
    psi: float = 0.0
    twice_s: int = 0
    direction: Optional[Tuple[float, float, float]] = None
    axis: str = "z"
    row: int = 0
    col: int = 0


def build_operator(spec: OperatorSpec) -> Operator:
    """Realize an OperatorSpec as a concrete truncated matrix."""
    if spec.dim < 1:
        raise InvalidSpecError(f"dim must be >= 1, got {spec.dim}")
    kind = spec.kind
    d = spec.dim
    if kind in _SCALAR_KINDS:
        return {
            "annihilation": annihilation,
            "number": number,
            "parity": parity,
            "lowering_e_minus": lowering_e_minus,
            "raising_e_plus": raising_e_plus,
            "identity": identity,
        }[kind](d)
    if kind == "displacement":
        return displacement(spec.alpha, d)
    if kind == "squeeze":
        return squeeze(spec.zeta, d)
    if kind == "kerr_shift":
        return kerr_shift(spec.psi, d)
    if kind == "fock_matrix_unit":
        return fock_matrix_unit(spec.row, spec.col, d)
    if kind == "spin_component":
        if spec.twice_s + 1 != d:
            raise InvalidSpecError(f"spin kind needs dim = 2s+1, got dim={d} for 2s={spec.twice_s}")
        if spec.direction is None:
            raise InvalidSpecError("spin_component requires a direction")
        return spin_component(spec.twice_s, spec.direction)
    if kind == "pauli":
        if d != 2:
            raise InvalidSpecError(f"pauli operators require dim=2, got {d}")
        return pauli(spec.axis)
    raise InvalidSpecError(f"unknown operator kind {kind!r}")


def hermitian_evolution(h: Operator, t: float) -> Operator:
    """exp(i t H) for Hermitian H, via eigendecomposition."""
    dev = float(np.max(np.abs(h.mat - h.mat.conj().T)))
    if dev > 1e-10:
        raise InvalidSpecError(f"generator is not Hermitian (max deviation {dev:.3e})")
    hm = 0.5 * (h.mat + h.mat.conj().T)
    w, v = np.linalg.eigh(hm)
    return Operator((v * np.exp(1j * t * w)) @ v.conj().T)
