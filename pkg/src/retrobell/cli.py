"""Command-line entry point.

Exit codes: 0 success, 1 a verification check failed, 2 usage error
(unknown model, malformed manifest, bad flags).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .manifest import (
    SEED_ENV,
    ExperimentManifest,
    ManifestError,
    ModelSpec,
    default_seed,
)
from .models import BUILTIN_MODELS, MODEL_FACTORIES
from .tasks import execute, table_csv

MODEL_CHOICES = sorted(MODEL_FACTORIES)


def _g(x: float) -> str:
    return format(x, ".17g")


def _common(p: argparse.ArgumentParser, model: bool = True) -> None:
    if model:
        p.add_argument("--model", choices=MODEL_CHOICES, default="qm")
    p.add_argument("--deg", action="store_true", help="angles are given in degrees")
    p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or built-in")
    p.add_argument("-o", "--output", help="write the JSON result record here")
    p.add_argument("--json", action="store_true", help="print the JSON result record")
    p.add_argument("--save-manifest", metavar="PATH", help="write the equivalent manifest here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retrobell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("joint", help="joint outcome distribution at settings (a, b)")
    _common(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, default=0, help="also simulate this many trials")

    p = sub.add_parser("chsh", help="CHSH value at four settings")
    _common(p)
    for name in ("a", "ap", "b", "bp"):
        p.add_argument(f"--{name}", type=float, required=True)

    p = sub.add_parser("scan", help="maximise |S| over all settings")
    _common(p)
    p.add_argument("--grid-n", type=int, default=16)
    p.add_argument("--refine-iters", type=int, default=200)

    p = sub.add_parser("mi", help="information lambda carries about the settings, in bits")
    _common(p)
    p.add_argument("--ensemble", choices=("chsh", "grid"), default="chsh")
    p.add_argument("--grid-n", type=int, default=16)

    p = sub.add_parser("nosignal", help="largest marginal change under remote setting changes")
    _common(p)
    p.add_argument("--probes", type=int, default=16)

    p = sub.add_parser("sample", help="Monte Carlo trials at settings (a, b)")
    _common(p)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log", help="write one a,b,lambda,A,B line per trial")

    p = sub.add_parser("curve", help="CSV of E versus a - b for several models")
    _common(p, model=False)
    p.add_argument("--models", nargs="+", choices=MODEL_CHOICES, default=["qm", "baseline"])
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=None, help="default pi/2 (90 with --deg)")
    p.add_argument("--count", type=int, default=64)

    p = sub.add_parser("verify", help="run the full verification battery")
    _common(p, model=False)
    p.add_argument("--manifest", help="manifest with overrides (task must be 'verify')")
    p.add_argument("--models", nargs="+", choices=MODEL_CHOICES, default=None)
    p.add_argument("--inject-signaling", action="store_true",
                   help="add the deliberately signaling model to the battery")
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("run", help="execute a manifest file")
    p.add_argument("manifest")
    p.add_argument("-o", "--output")
    p.add_argument("--json", action="store_true")
    return parser


def manifest_from_args(args) -> ExperimentManifest:
    seed = args.seed if args.seed is not None else default_seed()
    common = dict(degrees=args.deg, seed=seed, output={"path": args.output, "format": "json"})
    cmd = args.command
    if cmd == "joint":
        return ExperimentManifest("joint", [ModelSpec(args.model)], {"pairs": [[args.a, args.b]]},
                                  trials=args.n, **common)
    if cmd == "chsh":
        opts = {"a": args.a, "a_prime": args.ap, "b": args.b, "b_prime": args.bp}
        return ExperimentManifest("chsh", [ModelSpec(args.model)], options=opts, **common)
    if cmd == "scan":
        return ExperimentManifest("scan", [ModelSpec(args.model)],
                                  options={"scan_grid": args.grid_n, "refine_iters": args.refine_iters}, **common)
    if cmd == "mi":
        return ExperimentManifest("mi", [ModelSpec(args.model)],
                                  options={"ensemble": args.ensemble, "mi_grid": args.grid_n}, **common)
    if cmd == "nosignal":
        return ExperimentManifest("nosignal", [ModelSpec(args.model)], options={"probes": args.probes}, **common)
    if cmd == "sample":
        opts = {"workers": args.workers}
        if args.log:
            opts["log"] = args.log
        return ExperimentManifest("sample", [ModelSpec(args.model)], {"pairs": [[args.a, args.b]]},
                                  trials=args.n, options=opts, **common)
    if cmd == "curve":
        stop = args.stop if args.stop is not None else (90.0 if args.deg else math.pi / 2)
        grid = {"start": args.start, "stop": stop, "count": args.count, "endpoint": True}
        common["output"]["format"] = "csv"
        return ExperimentManifest("curve", [ModelSpec(n) for n in args.models], {"grid": grid}, **common)
    if cmd == "verify":
        if args.manifest:
            m = ExperimentManifest.load(args.manifest)
            if m.task != "verify":
                raise ManifestError("manifest task must be 'verify'")
        else:
            names = list(args.models or BUILTIN_MODELS)
            m = ExperimentManifest("verify", [ModelSpec(n) for n in names], **common)
        if args.seed is not None:
            m.seed = args.seed
        if args.trials is not None:
            m.trials = args.trials
        if args.inject_signaling and "signaling" not in [s.name for s in m.models]:
            m.models.append(ModelSpec("signaling"))
        if args.output:
            m.output["path"] = args.output
        m.validate()
        return m
    raise ManifestError(f"unknown command {cmd!r}")


def _summary(record) -> str:
    v = record.values
    lines = []
    if record.task == "joint":
        for row in v["results"]:
            j = row["joint"]
            flag = "" if row["qm_equivalent"] else "  [differs from QM]"
            lines.append(f"a={_g(row['a'])} b={_g(row['b'])}")
            lines.append("  p(++)={} p(+-)={} p(-+)={} p(--)={}".format(*map(_g, j.values())))
            lines.append(f"  E={_g(row['correlator'])} tv_to_qm={_g(row['tv_to_qm'])}{flag}")
            if "empirical" in row:
                lines.append("  empirical: " + " ".join(map(_g, row["empirical"]["frequencies"])))
                lines.append("  z-scores:  " + " ".join(f"{z:+.3f}" for z in row["empirical"]["z_scores"]))
    elif record.task == "chsh":
        lines += [f"{k}: S={_g(s)}" for k, s in v["S"].items()]
    elif record.task == "scan":
        lines += [f"{k}: max|S|={_g(r['max_abs_S'])} at {', '.join(map(_g, r['argmax']))}" for k, r in v.items()]
    elif record.task == "mi":
        lines += [f"{k}: I(lambda;a,b)={_g(r['joint'])} bits  I(lambda;a)={_g(r['a'])}  I(lambda;b)={_g(r['b'])}"
                  for k, r in v["bits"].items()]
    elif record.task == "nosignal":
        lines += [f"{k}: deviation={_g(d)}" for k, d in v["deviation"].items()]
    elif record.task == "sample":
        lines.append("counts: " + " ".join(map(str, v["counts"])))
        lines.append("z-scores: " + " ".join(f"{z:+.3f}" for z in v["z_scores"]))
    elif record.task == "curve":
        return table_csv(v["header"], v["table"]).rstrip("\n")
    elif record.task == "verify":
        for c in sorted(record.checks, key=lambda c: c.name):
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value} ({c.comparison}, tol={c.tolerance})")
        lines.append("all checks passed" if record.passed else "FAILED: " + ", ".join(record.failures))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            m = ExperimentManifest.load(args.manifest)
            if args.output:
                m.output["path"] = args.output
        else:
            m = manifest_from_args(args)
        if getattr(args, "save_manifest", None):
            m.save(args.save_manifest)
        record = execute(m)
    except ManifestError as exc:
        print(f"retrobell: error: {exc}", file=sys.stderr)
        return 2

    out = m.output.get("path")
    if out:
        if m.output.get("format") == "csv" and record.task == "curve":
            Path(out).write_text(table_csv(record.values["header"], record.values["table"]))
        else:
            Path(out).write_text(record.to_json())
    if args.json:
        print(record.to_json(), end="")
    else:
        print(_summary(record))
    return 0 if record.passed else 1


if __name__ == "__main__":
    sys.exit(main())
