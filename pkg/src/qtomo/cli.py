"""Command-line surface: seeded, file-based estimation workflows.

Every command is a pure function of its flags, input files, and seed;
repeated invocations produce byte-identical outputs. Exit codes: 0 on
success, 2 for usage errors (bad flags, malformed files, mismatched
inputs), 3 for numeric-precondition failures (truncation, rank
deficiency, grid limits). With --json-errors the failure is also written
to stderr as a one-line JSON object. File formats are frozen in
docs/formats.md; QTOMO_THREADS caps internal parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional, Tuple

import numpy as np

from . import __version__
from .errors import NumericPreconditionError, UsageError
from .frames import check_biorthogonality, irreducibility_rank
from .dualbasis import gram_schmidt_dual, pseudoinverse_dual
from .operators import Operator, fock_matrix_unit, identity, number, quadrature
from .states import DensityMatrix, StateSpec, make_state
from .estimators import EstimatorConfig, SqueezeParams
from .estimators.homodyne import (
    homodyne_estimate,
    homodyne_kernel_matrix,
    squeezed_homodyne_estimate,
)
from .estimators.kerr import kerr_estimate, kerr_kernel, kerr_kernel_regularized
from .estimators.nonunitary import nonunitary_reconstruct, phase_shift_ladder
from .estimators.parity import displaced_parity_kernel, parity_estimate
from .estimators.spin import pauli_estimate, spin_estimate, spin_kernel
from .sampler import (
    RngStream,
    sample_displaced_parity,
    sample_homodyne,
    sample_kerr_phase,
    sample_pauli,
    sample_spin,
)
from .recon import EstimationResult, ReconstructedMatrix, estimate, reconstruct_matrix
from .serialize import (
    load_quorum,
    load_state,
    records_from_csv,
    records_to_csv,
    save_estimation,
    save_quorum,
    save_reconstruction,
    save_state,
)

__all__ = ["main", "build_parser"]

_SAMPLED_METHODS = ("homodyne", "spin", "pauli", "parity", "kerr")


# flag parsing helpers -------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _fmt_c(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}j"


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a complex number") from None


def _parse_direction(text: str) -> Tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"direction must be three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise UsageError(f"cannot parse direction {text!r}") from None


def _twice_s(s: Optional[float]) -> int:
    if s is None:
        raise UsageError("--s (spin magnitude) is required here")
    t = round(2 * s)
    if abs(2 * s - t) > 1e-9 or t < 1:
        raise UsageError(f"spin s must be a positive half-integer, got {s}")
    return int(t)


def _parse_observable(text: str, dim: int) -> Tuple[str, Operator]:
    """Named built-ins: identity, number, quadrature:PHI, matrix_unit:K,N.

    matrix_unit:K,N estimates the element <K|rho|N>, i.e. the observable
    is |N><K|.
    """
    if text == "identity":
        return text, identity(dim)
    if text == "number":
        return text, number(dim)
    if text.startswith("quadrature:"):
        try:
            phi = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"cannot parse quadrature phase in {text!r}") from None
        return text, quadrature(phi, dim)
    if text.startswith("matrix_unit:"):
        try:
            k_s, n_s = text.split(":", 1)[1].split(",")
            k, n = int(k_s), int(n_s)
        except ValueError:
            raise UsageError(f"matrix_unit needs two integer indices, got {text!r}") from None
        if not (0 <= k < dim and 0 <= n < dim):
            raise UsageError(f"matrix_unit indices must lie in [0,{dim}), got {k},{n}")
        return text, fock_matrix_unit(n, k, dim)
    raise UsageError(
        f"unknown observable {text!r}; use identity, number, quadrature:PHI "
        "or matrix_unit:K,N"
    )


def _make_cfg(args, dim: int) -> EstimatorConfig:
    kwargs = {"dim": dim}
    for flag, field in (
        ("k_max", "k_max"),
        ("reg_eps", "reg_eps"),
        ("phi_grid", "phi_grid_points"),
        ("psi_grid", "psi_grid_points"),
        ("alpha_grid", "alpha_grid_points"),
        ("alpha_max", "alpha_max"),
        ("proposal_radius", "proposal_radius"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            kwargs[field] = value
    return EstimatorConfig(**kwargs)


def _maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def _squeeze_params(args) -> Optional[SqueezeParams]:
    text = getattr(args, "squeeze", None)
    if text is None:
        return None
    return SqueezeParams(_parse_complex(text))


# subcommands ----------------------------------------------------------------

def cmd_state(args) -> None:
    kind = args.kind
    if kind == "spin_pure":
        twice_s = _twice_s(args.s)
        dim = args.dim if args.dim else twice_s + 1
        if args.direction is None:
            raise UsageError("spin_pure needs --direction x,y,z")
        spec = StateSpec(kind=kind, dim=dim, twice_s=twice_s,
                         direction=_parse_direction(args.direction))
    else:
        if args.dim is None:
            raise UsageError("--dim is required")
        dim = args.dim
        param = args.param
        if kind == "fock":
            try:
                n = int(param) if param is not None else 0
            except ValueError:
                raise UsageError(f"fock level must be an integer, got {param!r}") from None
            spec = StateSpec(kind=kind, dim=dim, n=n)
        elif kind == "coherent":
            spec = StateSpec(kind=kind, dim=dim,
                             beta=_parse_complex(param) if param else 0j)
        elif kind == "squeezed_vacuum":
            spec = StateSpec(kind=kind, dim=dim,
                             zeta=_parse_complex(param) if param else 0j)
        elif kind == "thermal":
            try:
                mean_n = float(param) if param is not None else 0.0
            except ValueError:
                raise UsageError(f"thermal mean occupation must be a number, got {param!r}") from None
            spec = StateSpec(kind=kind, dim=dim, mean_n=mean_n)
        elif kind == "random_mixed":
            spec = StateSpec(kind=kind, dim=dim, seed=args.seed)
        else:  # pragma: no cover - argparse choices guard this
            raise UsageError(f"unknown state kind {kind!r}")

    rho = make_state(spec)
    save_state(args.out, rho)
    print(f"wrote {args.out}")
    print(f"dim = {rho.dim}")
    print(f"trace = {_fmt(np.trace(rho.mat).real)}")
    print(f"purity = {_fmt(np.trace(rho.mat @ rho.mat).real)}")
    print(f"rho_00 = {_fmt(rho.mat[0, 0].real)}")


def _sample_input_state(args, method: str) -> Tuple[DensityMatrix, Optional[int]]:
    """Without --state: maximally mixed for finite spins, vacuum otherwise."""
    twice_s = _twice_s(args.s) if method == "spin" else None
    if args.state:
        rho = load_state(args.state)
    elif method == "spin":
        rho = _maximally_mixed(twice_s + 1)
    elif method == "pauli":
        rho = _maximally_mixed(2)
    else:
        dim = args.dim if args.dim else 8
        rho = make_state(StateSpec(kind="fock", dim=dim, n=0))
    return rho, twice_s


def cmd_sample(args) -> None:
    method = args.method
    rho, twice_s = _sample_input_state(args, method)
    squeeze = _squeeze_params(args)
    if squeeze is not None and method != "homodyne":
        raise UsageError("--squeeze applies to homodyne sampling only")
    rng = RngStream(seed=args.seed, substream=args.substream)

    if method == "homodyne":
        cfg = _make_cfg(args, rho.dim)
        records = sample_homodyne(rho, args.shots, rng, cfg, squeeze=squeeze)
    elif method == "spin":
        records = sample_spin(rho, twice_s, args.shots, rng)
    elif method == "pauli":
        records = sample_pauli(rho, args.shots, rng)
    elif method == "parity":
        cfg = _make_cfg(args, rho.dim)
        records = sample_displaced_parity(rho, args.shots, rng, cfg)
    else:
        cfg = _make_cfg(args, rho.dim)
        records = sample_kerr_phase(rho, args.shots, rng, cfg)

    records_to_csv(args.out, records)
    print(f"method = {method}")
    print(f"shots = {args.shots}")
    print(f"wrote {args.out} ({len(records)} records)")


def _check_record_quorum(records, method: str) -> None:
    ids = {r.quorum for r in records}
    if ids != {method}:
        raise UsageError(
            f"records carry quorum {sorted(ids)} but the method is '{method}'"
        )


def _reconstruct_nonunitary(args) -> None:
    if args.records:
        raise UsageError("method nonunitary is an exact route from a state file; "
                         "it takes --state, not --records")
    if not args.state:
        raise UsageError("method nonunitary needs --state")
    rho = load_state(args.state)
    grid = args.grid if args.grid else 0

    if args.observable:
        name, a = _parse_observable(args.observable, rho.dim)
        value = nonunitary_reconstruct(a, rho, grid)
        result = EstimationResult(mean=value, std_error=0.0, n_samples=0)
        save_estimation(args.out, name, result, extra={"method": "nonunitary", "exact": True})
        print(f"observable = {name}")
        print(f"mean = {_fmt_c(result.mean)}")
        print(f"wrote {args.out}")
        return

    if args.n_max is None:
        raise UsageError("--n-max is required for a full matrix")
    dim = args.n_max + 1
    results = {}
    for k in range(dim):
        for n in range(dim):
            a = fock_matrix_unit(n, k, rho.dim)
            value = nonunitary_reconstruct(a, rho, grid)
            results[(k, n)] = EstimationResult(mean=value, std_error=0.0, n_samples=0)
    raw = np.zeros((dim, dim), dtype=complex)
    for (k, n), res in results.items():
        raw[k, n] = res.mean
    herm = 0.5 * (raw + raw.conj().T)
    diagnostics = {
        "method": "nonunitary", "n_records": 0, "exact": True,
        "trace": float(np.trace(raw).real), "trace_std_error": 0.0,
    }
    rec = ReconstructedMatrix(
        dim=dim, method="nonunitary",
        elements=tuple(tuple(results[(k, n)] for n in range(dim)) for k in range(dim)),
        hermitized=herm, diagnostics=diagnostics,
    )
    save_reconstruction(args.out, rec)
    print(f"method = nonunitary (exact), dim = {dim}")
    print(f"trace = {_fmt(diagnostics['trace'])}")
    print(f"wrote {args.out}")


def cmd_reconstruct(args) -> None:
    method = args.method
    if method == "nonunitary":
        _reconstruct_nonunitary(args)
        return

    if not args.records:
        raise UsageError("--records is required for sampled methods")
    records = records_from_csv(args.records)
    if not records:
        raise UsageError(f"{args.records} holds no records")
    _check_record_quorum(records, method)

    squeeze = _squeeze_params(args)
    if squeeze is not None and method != "homodyne":
        raise UsageError("--squeeze applies to homodyne reconstruction only")

    twice_s = None
    if method == "spin":
        twice_s = _twice_s(args.s)
        n_max = twice_s
        if args.n_max is not None and args.n_max != twice_s:
            raise UsageError(f"--n-max {args.n_max} conflicts with 2s = {twice_s}")
    elif method == "pauli":
        n_max = 1
    else:
        if args.n_max is None:
            raise UsageError("--n-max is required for this method")
        n_max = args.n_max
    dim = n_max + 1
    cfg = _make_cfg(args, dim) if method in ("homodyne", "parity", "kerr") else None
    reference = load_state(args.reference) if args.reference else None

    if args.observable:
        name, a = _parse_observable(args.observable, dim)
        if method == "homodyne":
            if squeeze is not None:
                result = squeezed_homodyne_estimate(a, records, squeeze, cfg)
            else:
                result = homodyne_estimate(a, records, cfg)
        elif method == "spin":
            result = spin_estimate(a, records, twice_s)
        elif method == "pauli":
            result = pauli_estimate(a, records)
        elif method == "parity":
            result = parity_estimate(a, records, cfg)
        else:
            if name == "identity":
                # normalization of the phase distribution: constant unit kernel
                result = estimate(records, lambda setting, outcome: 1.0)
            else:
                result = kerr_estimate(a, records, cfg)
        save_estimation(args.out, name, result, extra={"method": method})
        print(f"observable = {name}")
        print(f"mean = {_fmt_c(result.mean)}")
        print(f"std_error = {_fmt(result.std_error)}")
        print(f"n_samples = {result.n_samples}")
        print(f"wrote {args.out}")
        return

    rec = reconstruct_matrix(
        records, method, n_max, cfg=cfg, twice_s=twice_s, squeeze=squeeze,
        reference=reference, nearest_physical=args.nearest_physical,
    )
    save_reconstruction(args.out, rec)
    print(f"method = {method}, dim = {rec.dim}, records = {len(records)}")
    if "trace" in rec.diagnostics:
        print(f"trace = {_fmt(rec.diagnostics['trace'])} "
              f"(se {_fmt(rec.diagnostics['trace_std_error'])})")
    if "diagonal" in rec.diagnostics:
        print(f"diagonal: {rec.diagnostics['diagonal']}")
    comparison = rec.diagnostics.get("comparison")
    if comparison:
        print(f"fidelity = {_fmt(comparison['fidelity'])}")
        print(f"trace_distance = {_fmt(comparison['trace_distance'])}")
    if "nearest_physical_distance" in rec.diagnostics:
        print(f"nearest_physical_distance = "
              f"{_fmt(rec.diagnostics['nearest_physical_distance'])}")
    print(f"wrote {args.out}")


def cmd_quorum(args) -> None:
    frame = load_quorum(args.quorum)
    rank = irreducibility_rank(frame)
    d2 = frame.dim ** 2
    print(f"elements = {len(frame)}, dim = {frame.dim}")
    print(f"rank = {rank.rank} / {d2}: "
          f"{'irreducible' if rank.irreducible else 'reducible'}")

    if args.action == "verify":
        if not rank.irreducible:
            print("verdict = reducible")
            return
        dual = (gram_schmidt_dual(frame)[0] if len(frame) == d2
                else pseudoinverse_dual(frame))
        report = check_biorthogonality(frame, dual)
        print(f"bi-orthogonality max violation = {report.max_violation:.3e}")
        print(f"verdict = {'pass' if report.passed else 'fail'}")
        return

    # action == "dual"
    if args.strategy == "gs":
        dual, _ = gram_schmidt_dual(frame)
    else:
        dual = pseudoinverse_dual(frame)
    report = check_biorthogonality(frame, dual)
    print(f"bi-orthogonality max violation = {report.max_violation:.3e}")
    save_quorum(args.out, dual)
    print(f"wrote {args.out}")


def _write_kernel_csv(path, column: str, grid, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([column, "re", "im"])
        for x, v in zip(grid, values):
            v = complex(v)
            writer.writerow([format(float(x), ".17g"),
                             format(v.real, ".17g"), format(v.imag, ".17g")])


def cmd_kernels(args) -> None:
    family = args.family
    points = args.points

    if family == "homodyne":
        if args.observable is None or args.dim is None:
            raise UsageError("homodyne kernel needs --observable and --dim")
        cfg = _make_cfg(args, args.dim)
        _, a = _parse_observable(args.observable, args.dim)
        q_max = args.grid_max if args.grid_max else float(np.sqrt(args.dim) + 4.0)
        qs = np.linspace(-q_max, q_max, points)
        phi = args.phi if args.phi else 0.0
        vals = [np.trace(a.mat @ homodyne_kernel_matrix(q, phi, cfg).mat) for q in qs]
        _write_kernel_csv(args.out, "q", qs, vals)
    elif family == "parity":
        n = args.n if args.n is not None else 0
        d = args.d if args.d is not None else 0
        a_max = args.grid_max if args.grid_max else 2.0
        alphas = np.linspace(0.0, a_max, points)
        vals = displaced_parity_kernel(n, d, alphas)
        _write_kernel_csv(args.out, "alpha", alphas, vals)
    elif family == "kerr":
        n = args.n if args.n is not None else 0
        d = args.d if args.d is not None else 1
        psi = args.psi if args.psi else 0.0
        phis = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
        if d == 0:
            if not args.eps:
                raise UsageError("the diagonal kernel needs --eps > 0")
            vals = kerr_kernel_regularized(n, args.eps, phis, psi)
        else:
            vals = kerr_kernel(n, d, phis, psi)
        _write_kernel_csv(args.out, "phi", phis, vals)
    elif family == "spin":
        twice_s = _twice_s(args.s)
        if args.observable is None:
            raise UsageError("spin kernel needs --observable")
        _, a = _parse_observable(args.observable, twice_s + 1)
        direction = _parse_direction(args.direction if args.direction else "0,0,1")
        ms = [j - twice_s / 2.0 for j in range(twice_s + 1)]
        vals = [spin_kernel(a, m, direction, twice_s) for m in ms]
        _write_kernel_csv(args.out, "m", ms, vals)
    else:  # nonunitary
        if args.observable is None or args.dim is None:
            raise UsageError("nonunitary kernel needs --observable and --dim")
        n = args.n if args.n is not None else 0
        _, a = _parse_observable(args.observable, args.dim)
        phis = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
        vals = [np.trace(a.mat @ phase_shift_ladder(n, phi, args.dim).mat.conj().T)
                for phi in phis]
        _write_kernel_csv(args.out, "phi", phis, vals)

    print(f"family = {family}")
    print(f"wrote {args.out}")


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-errors", action="store_true",
                        help="write failures to stderr as one-line JSON")

    cfgp = argparse.ArgumentParser(add_help=False)
    cfgp.add_argument("--k-max", type=float, help="frequency cutoff of the quadrature kernel")
    cfgp.add_argument("--reg-eps", type=float, help="kernel regularization strength")
    cfgp.add_argument("--phi-grid", type=int, help="phase grid points")
    cfgp.add_argument("--psi-grid", type=int, help="nonlinear-shift grid points")
    cfgp.add_argument("--alpha-grid", type=int, help="displacement grid points per axis")
    cfgp.add_argument("--alpha-max", type=float, help="displacement grid half-width")
    cfgp.add_argument("--proposal-radius", type=float, help="displacement proposal disk radius")

    parser = argparse.ArgumentParser(
        prog="qtomo",
        description="Measurement-driven state and observable estimation.",
        epilog="QTOMO_THREADS caps internal parallelism. Formats: docs/formats.md.",
    )
    parser.add_argument("--version", action="version", version=f"qtomo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_state = sub.add_parser("state", parents=[common],
                             help="build a state file from a named recipe")
    p_state.add_argument("--kind", required=True,
                         choices=["fock", "coherent", "squeezed_vacuum", "thermal",
                                  "random_mixed", "spin_pure"])
    p_state.add_argument("--dim", type=int)
    p_state.add_argument("--param", help="kind-specific parameter (level, amplitude, ...)")
    p_state.add_argument("--seed", type=int, default=0, help="seed for random_mixed")
    p_state.add_argument("--s", type=float, help="spin magnitude for spin_pure")
    p_state.add_argument("--direction", help="x,y,z axis for spin_pure")
    p_state.add_argument("--out", default="state.json")
    p_state.set_defaults(func=cmd_state)

    p_sample = sub.add_parser("sample", parents=[common, cfgp],
                              help="draw synthetic measurement records")
    p_sample.add_argument("--method", required=True, choices=list(_SAMPLED_METHODS))
    p_sample.add_argument("--state", help="state file; default is maximally mixed")
    p_sample.add_argument("--dim", type=int, help="dimension when no state file is given")
    p_sample.add_argument("--s", type=float, help="spin magnitude (method spin)")
    p_sample.add_argument("--shots", type=int, required=True)
    p_sample.add_argument("--seed", type=int, required=True)
    p_sample.add_argument("--substream", type=int, default=0)
    p_sample.add_argument("--squeeze", help="squeeze parameter (homodyne)")
    p_sample.add_argument("--out", default="records.csv")
    p_sample.set_defaults(func=cmd_sample)

    p_rec = sub.add_parser("reconstruct", parents=[common, cfgp],
                           help="estimate a matrix or a single observable from records")
    p_rec.add_argument("--method", required=True,
                       choices=list(_SAMPLED_METHODS) + ["nonunitary"])
    p_rec.add_argument("--records", help="record CSV (sampled methods)")
    p_rec.add_argument("--state", help="state file (method nonunitary)")
    p_rec.add_argument("--n-max", type=int, help="largest level index to estimate")
    p_rec.add_argument("--s", type=float, help="spin magnitude (method spin)")
    p_rec.add_argument("--observable",
                       help="identity | number | quadrature:PHI | matrix_unit:K,N")
    p_rec.add_argument("--squeeze", help="squeeze parameter (homodyne)")
    p_rec.add_argument("--grid", type=int, help="phase grid (method nonunitary)")
    p_rec.add_argument("--reference", help="state file to compare against")
    p_rec.add_argument("--nearest-physical", action="store_true",
                       help="report the distance to the nearest physical state")
    p_rec.add_argument("--out", default="result.json")
    p_rec.set_defaults(func=cmd_reconstruct)

    p_q = sub.add_parser("quorum", parents=[common],
                         help="verify a spanning set or write its dual")
    p_q.add_argument("action", choices=["verify", "dual"])
    p_q.add_argument("--quorum", required=True, help="quorum JSON file")
    p_q.add_argument("--strategy", choices=["gs", "pinv"], default="gs")
    p_q.add_argument("--out", default="dual.json")
    p_q.set_defaults(func=cmd_quorum)

    p_k = sub.add_parser("kernels", parents=[common, cfgp],
                         help="tabulate an estimation kernel to CSV")
    p_k.add_argument("action", choices=["eval"])
    p_k.add_argument("--family", required=True,
                     choices=["homodyne", "parity", "spin", "kerr", "nonunitary"])
    p_k.add_argument("--observable")
    p_k.add_argument("--dim", type=int)
    p_k.add_argument("--n", type=int, help="level index")
    p_k.add_argument("--d", type=int, help="level offset")
    p_k.add_argument("--phi", type=float, help="fixed phase")
    p_k.add_argument("--psi", type=float, help="fixed nonlinear shift")
    p_k.add_argument("--eps", type=float, help="diagonal regularization")
    p_k.add_argument("--s", type=float, help="spin magnitude")
    p_k.add_argument("--direction", help="x,y,z axis (spin)")
    p_k.add_argument("--grid-max", type=float, help="grid upper edge (q or alpha)")
    p_k.add_argument("--points", type=int, default=101)
    p_k.add_argument("--out", default="kernel.csv")
    p_k.set_defaults(func=cmd_kernels)

    return parser


def _report_failure(args, exc: Exception, code: int) -> int:
    if getattr(args, "json_errors", False):
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        return _report_failure(args, exc, 2)
    except NumericPreconditionError as exc:
        return _report_failure(args, exc, 3)
    except FileNotFoundError as exc:
        return _report_failure(args, UsageError(f"file not found: {exc.filename}"), 2)
    except json.JSONDecodeError as exc:
        return _report_failure(args, UsageError(f"malformed JSON input: {exc}"), 2)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
