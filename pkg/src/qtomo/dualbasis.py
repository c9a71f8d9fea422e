"""Constructive dual sets: Gram-Schmidt recursion and a frame-operator oracle.

Both constructors return duals in the weighted normalization of DualSet
(sum_x w_x |C_x><B_x| = identity). On a basis the dual is unique, so the
two routes must agree to roundoff; that cross-check is the main defense
against index bugs in either one.
"""

from __future__ import annotations

import dataclasses
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidSpecError, RankDeficientError
from .frames import DualSet, FrameElement, SettingLabel, SpanningSet, irreducibility_rank
from .operators import Operator

__all__ = [
    "GramSchmidtTrace",
    "gram_schmidt_dual",
    "pseudoinverse_dual",
    "weigert_spin_quorum",
    "spiral_directions",
]

# element rejected as dependent when its orthogonal remainder shrinks below this
_INDEPENDENCE_RTOL = 1e-10
# second orthogonalization pass when residual overlap exceeds this
_REORTH_RTOL = 1e-8


@dataclasses.dataclass(frozen=True)
class GramSchmidtTrace:
    """Intermediate products of the orthogonalization, kept for diagnostics."""

    normalizers: Tuple[float, ...]
    orthonormal: Tuple[Operator, ...]


def gram_schmidt_dual(s: SpanningSet) -> Tuple[DualSet, GramSchmidtTrace]:
    """Dual of an operator basis via orthogonalization.

    Requires exactly dim^2 independent elements. The recursion is realized
    as a triangular solve against the orthonormalized stack, which gives
    the same dual as the literal series at O(d^4) cost.
    """
    d2 = s.dim**2
    if len(s) != d2:
        raise InvalidSpecError(f"need exactly {d2} elements for a basis, got {len(s)}")

    c_stack = s.stack()  # K x d^2
    k = len(s)
    y = np.zeros((k, d2), dtype=complex)
    r = np.zeros((k, k), dtype=complex)
    norms = []
    for i in range(k):
        v = c_stack[i].copy()
        c_norm = np.linalg.norm(v)
        if c_norm == 0.0:
            raise RankDeficientError(f"element {i} is the zero operator")
        if i > 0:
            proj = y[:i].conj() @ v
            r[:i, i] = proj
            v -= proj @ y[:i]
            # classical-GS cancellation guard: one corrective pass
            resid = y[:i].conj() @ v
            if np.max(np.abs(resid)) > _REORTH_RTOL * c_norm:
                r[:i, i] += resid
                v -= resid @ y[:i]
        nk = np.linalg.norm(v)
        if nk < _INDEPENDENCE_RTOL * c_norm:
            raise RankDeficientError(
                f"element {i} ({s.elements[i].label}) is dependent on its predecessors"
            )
        r[i, i] = nk
        y[i] = v / nk
        norms.append(float(nk))

    # plain dual: columns of Y inv(R)^dag satisfy <B_m, C_n> = delta_mn
    rinv = solve_triangular(r, np.eye(k, dtype=complex), lower=False)
    b_plain = (y.T @ rinv.conj().T).T  # K x d^2, row m = vec(plain B_m)
    w = s.weights
    b_elements = [
        FrameElement(el.label, el.weight, Operator((b_plain[i] / w[i]).reshape(s.dim, s.dim)))
        for i, el in enumerate(s.elements)
    ]
    trace = GramSchmidtTrace(
        normalizers=tuple(norms),
        orthonormal=tuple(Operator(y[i].reshape(s.dim, s.dim)) for i in range(k)),
    )
    return DualSet(s.dim, b_elements), trace


def pseudoinverse_dual(s: SpanningSet) -> DualSet:
    """Canonical dual from inverting the frame operator; allows overcompleteness."""
    rank = irreducibility_rank(s)
    if not rank.irreducible:
        raise RankDeficientError(
            f"set spans rank {rank.rank} < {s.dim ** 2}; no dual exists"
        )
    c_stack = s.stack()
    w = s.weights
    frame_op = (w[:, None] * c_stack).T @ c_stack.conj()
    b_stack = np.linalg.solve(frame_op, c_stack.T).T
    b_elements = [
        FrameElement(el.label, el.weight, Operator(b_stack[i].reshape(s.dim, s.dim)))
        for i, el in enumerate(s.elements)
    ]
    return DualSet(s.dim, b_elements)


def weigert_spin_quorum(twice_s: int, directions: Sequence[Sequence[float]]) -> SpanningSet:
    """Projectors onto the top S.n eigenstate along (2s+1)^2 directions, unit weights."""
    from .operators import spin_component  # local import keeps module load light

    d = twice_s + 1
    need = d * d
    dirs = [tuple(float(x) for x in v) for v in directions]
    if len(dirs) != need:
        raise InvalidSpecError(f"spin s={twice_s/2} needs {need} directions, got {len(dirs)}")
    elements = []
    for j, nvec in enumerate(dirs):
        sn = spin_component(twice_s, nvec)
        _, v = np.linalg.eigh(sn.mat)
        top = v[:, -1]
        elements.append(
            FrameElement(
                SettingLabel("weigert", nvec),
                1.0,
                Operator(np.outer(top, top.conj())),
            )
        )
    return SpanningSet(d, elements)


def spiral_directions(count: int) -> List[Tuple[float, float, float]]:
    """Generic well-spread unit vectors from a golden-angle spiral."""
    if count < 1:
        raise InvalidSpecError("direction count must be >= 1")
    golden = math.pi * (3.0 - math.sqrt(5.0))
    out = []
    for i in range(count):
        z = 1.0 - 2.0 * (i + 0.5) / count
        rho = math.sqrt(max(0.0, 1.0 - z * z))
        th = golden * i
        out.append((rho * math.cos(th), rho * math.sin(th), z))
    return out
