"""Command-line entry point: ``qmetro <command> [options]``.

Commands
--------
measure   resource measures of one state (Bell, family angles or a JSON file)
scan      tangle vs IP of Hilbert-Schmidt random rank-2 states (CSV)
curves    lower and upper extremal curves (CSV)
channels  channel audit and monotonicity fuzzing
nmr       pulse-error Monte Carlo for a reference point or custom angles
verify    full acceptance suite
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import verify as V
from .channels import (
    IsotropicParams,
    TRangeError,
    build_isotropic,
    choi_matrix,
    isotropic_range,
)
from .entanglement import tangle_wootters
from .metrology import PhaseHamiltonian, Spectrum, ip_closed, ip_oracle, ip_oracle_qudit, qfi
from .nmrsim import ErrorModel, monte_carlo
from .qmat import DensityMatrix, ValidationError
from .states import (
    FamilyParams,
    bell,
    curves_csv,
    family_state,
    format_float,
    region_scan,
    scan_csv,
    reference_angles,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


def _split_tolerances(argv: Sequence[str]) -> tuple[list[str], dict[str, float]]:
    """Pull ``--tol.<name>=<value>`` / ``--tol.<name> <value>`` out of ``argv``."""
    argv = list(argv)
    rest, tols = [], {}
    i = 0
    while i < len(argv):
        a = argv[i]
        i += 1
        if not a.startswith("--tol."):
            rest.append(a)
            continue
        name, eq, value = a[len("--tol."):].partition("=")
        if not eq:
            if i >= len(argv):
                raise CliError(f"--tol.{name} needs a value")
            value = argv[i]
            i += 1
        try:
            v = float(value)
        except ValueError:
            raise CliError(f"--tol.{name}: {value!r} is not a number") from None
        if not (v > 0 and math.isfinite(v)):
            raise CliError(f"--tol.{name} must be > 0, got {value}")
        if name not in V.DEFAULT_TOLS:
            raise CliError(f"unknown tolerance {name!r}; known: {', '.join(sorted(V.DEFAULT_TOLS))}")
        tols[name] = v
    return rest, tols


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(42), help="master RNG seed (default 42)")
    p.add_argument("--samples", type=int, default=d(None), help="sample count (command-specific default)")
    p.add_argument("--out", type=Path, default=d(None), help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d(None), help="output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmetro",
        description="Interferometric power, tangle and NMR preparation toolkit.",
        parents=[_common(False)],
        epilog="Tolerance overrides: --tol.<name>=<value>, names: " + ", ".join(sorted(V.DEFAULT_TOLS)),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    m = sub.add_parser("measure", parents=[common], help="measures of a single state")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--bell", choices=("phi+", "phi-", "psi+", "psi-"))
    src.add_argument("--family", nargs=2, type=float, metavar=("THETA1", "THETA2"))
    src.add_argument("--state", type=Path, help="JSON density matrix {dim_a, dim_b, re, im}")
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--beta", type=float, default=0.0)

    sub.add_parser("scan", parents=[common], help="tangle vs IP region scan (default 10^4 samples)")

    c = sub.add_parser("curves", parents=[common], help="extremal curves (--samples points, default 101)")
    c.add_argument("--kind", choices=("lower", "upper", "both"), default="both")

    ch = sub.add_parser("channels", parents=[common], help="channel audit and monotonicity fuzz")
    ch.add_argument("--family", choices=("default", "unital", "bside", "isotropic", "antiunitary", "all"), default="default")
    ch.add_argument("--iso-samples", type=int, default=50, help="isotropic pairs (qudit oracle)")
    ch.add_argument("--d", type=int, help="audit one isotropic channel of this dimension")
    ch.add_argument("--t", type=float, help="isotropic parameter for --d")
    ch.add_argument("--anti", action="store_true", help="antiunitary isotropic map for --d")

    n = sub.add_parser("nmr", parents=[common], help="NMR preparation Monte Carlo")
    n.add_argument("--table", choices=("1a", "1b", "all"))
    n.add_argument("--index", type=int)
    n.add_argument("--theta1", type=float)
    n.add_argument("--theta2", type=float)
    n.add_argument("--err", type=float, default=0.03, help="relative pulse-angle error bound")
    n.add_argument("--runs", type=int, default=None, help="Monte Carlo runs (default 100)")
    n.add_argument("--dist", choices=("uniform", "gaussian"), default="uniform")

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--only", type=lambda s: [int(x) for x in s.split(",")], default=None, help="e.g. 1,3,9")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}") from None


def _sibling(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}_{tag}{out.suffix}")


def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


ANGLE_SNAP = 1e-4


def _family(theta1: float, theta2: float) -> FamilyParams:
    """Angles typed as rounded decimals (1.5708) snap onto the nearest range edge."""

    def snap(x: float) -> float:
        for edge in (0.0, math.pi / 2):
            if abs(x - edge) <= ANGLE_SNAP:
                return edge
        return x

    return FamilyParams(snap(theta1), snap(theta2))


def _load_state(args) -> DensityMatrix:
    if args.bell:
        return bell(args.bell).density()
    if args.family:
        return family_state(_family(*args.family))
    try:
        text = args.state.read_text()
    except OSError as exc:
        raise CliError(f"cannot read {args.state}: {exc}") from None
    try:
        return DensityMatrix.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid state file {args.state}: {exc}") from None


def cmd_measure(args) -> int:
    rho = _load_state(args)
    spec = Spectrum(args.alpha, args.beta)
    report: dict = {"dim_a": rho.dim_a, "dim_b": rho.dim_b, "alpha": spec.alpha, "beta": spec.beta}
    ok = True
    if rho.dim_a == 2:
        closed, oracle = ip_closed(rho, spec), ip_oracle(rho, spec)
        f = {ax: qfi(rho, PhaseHamiltonian.along(n, spec)) for ax, n in zip("xyz", np.eye(3))}
        report.update(
            ip_closed=closed.value,
            ip_oracle=oracle.value,
            worst_direction=[float(x) for x in closed.worst_direction],
            qfi={k: float(v) for k, v in f.items()},
        )
        ip = closed.value
        ok = all(v / 4 >= ip - args.tols["hierarchy"] for v in f.values())
    else:
        res = ip_oracle_qudit(rho, np.linspace(spec.beta - spec.alpha, spec.beta + spec.alpha, rho.dim_a))
        report.update(ip_oracle=res.value)
        ip = res.value
    if (rho.dim_a, rho.dim_b) == (2, 2):
        t = tangle_wootters(rho).value
        report["tangle"] = t
        ok = ok and ip >= spec.alpha**2 * t - args.tols["hierarchy"]
    report["hierarchy"] = "ok" if ok else "VIOLATED"

    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        lines = []
        for k in sorted(report):
            v = report[k]
            if isinstance(v, float):
                v = format_float(v)
            elif isinstance(v, dict):
                v = " ".join(f"{kk}={format_float(vv)}" for kk, vv in v.items())
            elif isinstance(v, list):
                v = " ".join(format_float(x) for x in v)
            lines.append(f"{k}: {v}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scan(args) -> int:
    samples = args.samples or 10_000
    if samples < 1:
        raise CliError("--samples must be >= 1")
    recs = region_scan(samples, args.seed, V.threads_from_env())
    lower = sum(not r.lower_ok for r in recs)
    upper = sum(not r.upper_ok for r in recs)
    if args.format == "json":
        text = json.dumps(
            [{"index": r.index, "tangle": r.tangle, "ip": r.ip, "lower_ok": r.lower_ok, "upper_ok": r.upper_ok} for r in recs]
        ) + "\n"
    else:
        text = scan_csv(recs)
    _emit(text, args.out)
    print(f"scan: {samples} samples, lower-bound violations {lower}, upper-curve violations {upper} (report only)", file=sys.stderr)
    return EXIT_OK if lower == 0 else EXIT_FAIL


def cmd_curves(args) -> int:
    n = args.samples or 101
    if n < 2:
        raise CliError("--samples must be >= 2 for curves")
    kinds = ("lower", "upper") if args.kind == "both" else (args.kind,)
    for kind in kinds:
        text = curves_csv(n, kind)
        if args.out is None:
            if len(kinds) > 1:
                sys.stdout.write(f"# {kind}\n")
            sys.stdout.write(text)
        else:
            _emit(text, _sibling(args.out, kind) if len(kinds) > 1 else args.out)
    return EXIT_OK


def _choi_audit(dims=(2, 3, 4, 5)) -> list[list]:
    rows = []
    for d in dims:
        for anti in (False, True):
            lo, hi = isotropic_range(d, anti)
            for t in (lo, hi):
                ch = build_isotropic(IsotropicParams(d, t, anti=anti))
                ev = np.linalg.eigvalsh(choi_matrix(ch).matrix)
                rows.append(
                    [d, "antiunitary" if anti else "unitary", format_float(t), len(ch.kraus),
                     format_float(ch.completeness_defect()), format_float(abs(float(ev[0])))]
                )
    return rows


def cmd_channels(args) -> int:
    if args.d is not None:
        if args.t is None:
            raise CliError("--d needs --t")
        try:
            ch = build_isotropic(IsotropicParams(args.d, args.t, anti=args.anti))
        except TRangeError as exc:
            print(f"rejected: {exc}", file=sys.stderr)
            return EXIT_USAGE
        ev = np.linalg.eigvalsh(choi_matrix(ch).matrix)
        report = {"d": args.d, "t": args.t, "anti": args.anti, "kraus": len(ch.kraus),
                  "completeness_defect": ch.completeness_defect(), "choi_spectrum": [float(x) for x in ev]}
        _emit(json.dumps(report, indent=2) + "\n", args.out)
        return EXIT_OK

    n = args.samples or 1000
    fam = args.family
    hard = {"unital", "bside", "isotropic"} if fam in ("default", "all") else ({fam} - {"antiunitary"})
    tol = args.tols["monotone"]
    tol_o = args.tols["monotone_oracle"]
    rows: list[list] = []
    failed = False
    if "unital" in hard:
        v = V.unital_monotonicity(args.seed, n, tol)
        rows.append(["unital-A", n, v, "hard"])
        failed |= v > 0
    if "bside" in hard:
        v = V.b_side_monotonicity(args.seed + 1, n, tol)
        rows.append(["B-side", n, v, "hard"])
        failed |= v > 0
    if "isotropic" in hard:
        v, _ = V.isotropic_monotonicity(args.seed + 2, args.iso_samples, (3, 4), tol_o)
        rows.append(["isotropic-unitary t in [0,1]", args.iso_samples, v, "hard"])
        failed |= v > 0
    if fam in ("antiunitary", "all"):
        v, _ = V.isotropic_monotonicity(args.seed + 3, args.iso_samples, (3, 4), tol_o, anti=True)
        rows.append(["isotropic-antiunitary", args.iso_samples, v, "report"])

    audit = _choi_audit()
    if args.format == "json":
        text = json.dumps(
            {
                "monotonicity": [dict(zip(("family", "pairs", "violations", "status"), r)) for r in rows],
                "choi_audit": [dict(zip(("d", "family", "t", "kraus", "completeness_defect", "choi_min_abs"), r)) for r in audit],
            },
            indent=2,
        ) + "\n"
    else:
        text = _csv(rows, ["family", "pairs", "violations", "status"])
        text += "\r\n" + _csv(audit, ["d", "family", "t", "kraus", "completeness_defect", "choi_min_abs"])
    _emit(text, args.out)
    return EXIT_FAIL if failed else EXIT_OK


def _nmr_points(args) -> list[FamilyParams]:
    if args.table:
        lower, upper = reference_angles()
        pts = {"1a": lower, "1b": upper, "all": lower + upper}[args.table]
        if args.index is not None:
            if not (0 <= args.index < len(pts)):
                raise CliError(f"--index must lie in [0, {len(pts) - 1}]")
            pts = [pts[args.index]]
        return pts
    if args.theta1 is None or args.theta2 is None:
        raise CliError("give --table [--index] or both --theta1 and --theta2")
    return [_family(args.theta1, args.theta2)]


def cmd_nmr(args) -> int:
    runs = args.runs or args.samples or 100
    em = ErrorModel(args.err, runs, args.dist, args.seed)
    reports = [monte_carlo(p, em) for p in _nmr_points(args)]
    payload = [r.to_dict() for r in reports]
    text = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2) + "\n"
    _emit(text, args.out)
    if args.out is not None:
        rows = [[k, r, format_float(f)] for k, rep in enumerate(reports) for r, f in enumerate(rep.run_fidelities)]
        _emit(_csv(rows, ["point", "run", "fidelity"]), _sibling(args.out, "runs").with_suffix(".csv"))
    return EXIT_OK


def cmd_verify(args, tols) -> int:
    results = V.run_all(tols, args.only)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, tols = _split_tolerances(argv)
        args = build_parser().parse_args(argv)
        if args.samples is not None and args.samples < 1:
            raise CliError("--samples must be >= 1")
        args.tols = {**V.DEFAULT_TOLS, **tols}
        if args.command == "verify":
            return cmd_verify(args, tols)
        return {
            "measure": cmd_measure,
            "scan": cmd_scan,
            "curves": cmd_curves,
            "channels": cmd_channels,
            "nmr": cmd_nmr,
        }[args.command](args)
    except (CliError, ValidationError) as exc:
        print(f"qmetro: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
