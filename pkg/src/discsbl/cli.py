"""Command-line entry point: ``discsbl gen | solve | sweep``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .alphabet import PROB_MODES, unit_circle_alphabet
from .baselines import standard_sbl_run
from .errors import InvalidArgument, NumericalFailure
from .experiments import PRESETS, SOLVERS, SweepConfig, run_sweep
from .gamp import GampConfig, gamp_run
from .measurement import ProblemInstance, make_instance
from .vbi import VbiConfig, vbi_run

log = logging.getLogger("discsbl")

MATRIX_ALIASES = {"iid": "iid-gaussian", "iid-gaussian": "iid-gaussian", "correlated": "correlated"}

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="discsbl", description="Finite-alphabet signal recovery from linear measurements.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress the config log on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a problem instance bundle")
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--delta", type=float, default=0.7)
    g.add_argument("--l", type=int, default=4)
    g.add_argument("--matrix", choices=sorted(MATRIX_ALIASES), default="iid")
    noise = g.add_mutually_exclusive_group()
    noise.add_argument("--snr", type=float, default=None, help="SNR in dB")
    noise.add_argument("--noise-free", action="store_true")
    g.add_argument("--prob-mode", choices=PROB_MODES, default="random-simplex")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--json", action="store_true", help="machine-readable summary on stdout")

    s = sub.add_parser("solve", help="solve a stored instance")
    s.add_argument("bundle")
    s.add_argument("--solver", default="vbi", help=f"one of {', '.join(SOLVERS)}")
    s.add_argument("--vbi-prior", choices=("non-informative", "true"), default="non-informative")
    s.add_argument("--max-iters", type=int, default=100)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--damping", type=float, default=1.0, help="GAMP damping in (0, 1]")
    s.add_argument("--trace", help="write a per-iteration CSV trace here")
    s.add_argument("--json", action="store_true")

    w = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    w.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    w.add_argument("--config", help="YAML file with sweep settings")
    w.add_argument("-o", "--output", default=".", help="output directory")
    w.add_argument("--name", help="output file stem (defaults to the preset name)")
    w.add_argument("--trials", type=int)
    w.add_argument("--jobs", type=int)
    w.add_argument("--seed", type=int, dest="master_seed")
    w.add_argument("--n", type=int, dest="N")
    w.add_argument("--solvers", help="comma-separated subset of solvers")
    w.add_argument("--vbi-prior", choices=("non-informative", "true"))
    w.add_argument("--json", action="store_true")
    return p


def _cmd_gen(args) -> int:
    snr = None if args.noise_free or args.snr is None else args.snr
    rng = np.random.default_rng(args.seed)
    alphabet = unit_circle_alphabet(args.l, args.prob_mode, rng)
    inst = make_instance(alphabet, args.n, args.delta, MATRIX_ALIASES[args.matrix], snr, rng)
    text = inst.to_json()
    try:
        Path(args.output).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {args.output}: {exc}") from exc
    digest = inst.digest()
    if args.json:
        print(json.dumps({"path": args.output, "M": inst.M, "N": inst.N, "sha256": digest}))
    else:
        print(digest)
    return EXIT_OK


def _load_bundle(path) -> ProblemInstance:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read bundle {path}: {exc}") from exc
    return ProblemInstance.from_dict(data)


def _cmd_solve(args) -> int:
    if args.solver not in SOLVERS:
        raise UsageError(f"unknown solver {args.solver!r}; choose from {', '.join(SOLVERS)}")
    inst = _load_bundle(args.bundle)
    trace = args.trace is not None
    log.info("solve %s solver=%s max_iters=%d tol=%g", args.bundle, args.solver, args.max_iters, args.tol)
    if args.solver == "gamp":
        cfg = GampConfig(max_iters=args.max_iters, tol=args.tol, damping=args.damping, trace=trace)
        res = gamp_run(inst.A, inst.y, inst.alphabet, cfg, x_true=inst.x_true)
    else:
        cfg = VbiConfig(max_iters=args.max_iters, tol=args.tol, trace=trace)
        if args.solver == "vbi":
            alph = inst.alphabet.with_uniform_probs() if args.vbi_prior == "non-informative" else inst.alphabet
            res = vbi_run(inst.A, inst.y, alph, cfg, x_true=inst.x_true)
        else:
            res = standard_sbl_run(inst.A, inst.y, inst.alphabet, cfg, x_true=inst.x_true)
    errors = int(np.count_nonzero(res.x_hat.indices != inst.x_true.indices))
    ser = errors / inst.N
    if trace:
        cols = list(res.trace[0].keys()) if res.trace else ["iteration"]
        try:
            with open(args.trace, "w", newline="") as fh:
                wr = csv.DictWriter(fh, fieldnames=cols)
                wr.writeheader()
                wr.writerows(res.trace)
        except OSError as exc:
            raise UsageError(f"cannot write trace {args.trace}: {exc}") from exc
    summary = {
        "solver": args.solver,
        "x_hat": [int(i) for i in res.x_hat.indices],
        "ser": ser,
        "iterations": res.iterations_used,
        "converged": res.converged,
    }
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"solver: {args.solver}")
        print(f"iterations: {res.iterations_used} (converged: {res.converged})")
        print(f"ser: {ser:.6g} ({errors}/{inst.N} symbols wrong)")
        print("x_hat:", " ".join(str(i) for i in summary["x_hat"]))
    return EXIT_OK


def _resolve_sweep(args) -> tuple[str, SweepConfig]:
    settings: dict = {}
    name = args.name
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; available: {', '.join(PRESETS)}")
        settings.update(PRESETS[args.preset])
        name = name or args.preset
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a mapping")
        settings.update(loaded)
        name = name or Path(args.config).stem
    if not settings:
        raise UsageError(f"give --preset or --config; presets: {', '.join(PRESETS)}")
    for key in ("trials", "jobs", "master_seed", "N", "vbi_prior"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    if args.solvers:
        settings["solvers"] = [s.strip() for s in args.solvers.split(",") if s.strip()]
    return name or "sweep", SweepConfig.from_dict(settings)


def _cmd_sweep(args) -> int:
    name, cfg = _resolve_sweep(args)
    log.info("resolved sweep config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
    outdir = Path(args.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {outdir}: {exc}") from exc
    result = run_sweep(cfg)
    csv_path, json_path = outdir / f"{name}.csv", outdir / f"{name}.json"
    result.write_csv(csv_path)
    result.write_json(json_path)
    if args.json:
        print(json.dumps({"csv": str(csv_path), "json": str(json_path), "rows": len(result.rows), "wall_time_s": result.wall_time}))
        return EXIT_OK
    metric = "mse" if cfg.axis == "iteration" else ("success_rate" if cfg.axis == "delta" else "ser")
    print(f"{cfg.axis:>10}  " + "  ".join(f"{s:>12}" for s in cfg.solvers) + f"   ({metric})")
    values = sorted({r.value for r in result.rows if r.metric == metric}, key=float)
    for v in values:
        cells = [next(r.metric_value for r in result.rows if r.value == v and r.solver == s and r.metric == metric) for s in cfg.solvers]
        print(f"{v:>10g}  " + "  ".join(f"{c:>12.4g}" for c in cells))
    print(f"wrote {csv_path} and {json_path} in {result.wall_time:.1f}s")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    log.info("arguments: %s", vars(args))
    handler = {"gen": _cmd_gen, "solve": _cmd_solve, "sweep": _cmd_sweep}[args.command]
    try:
        return handler(args)
    except (UsageError, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
