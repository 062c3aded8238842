"""Command-line interface: generate, edit, detect, calibrate, experiment.

All randomness flows from --seed through named substreams; no ambient
entropy. Every run writes a manifest JSON recording the command, full
configuration, seed, tool version, output paths, and wall-clock time. CSV
output uses '.' decimals, '\\n' line endings, a header row, and UTF-8.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
breach.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .calibrate import CalibrationResult, mc_critical
from .detectors import (
    ARS,
    LOG,
    Detector,
    HigherCriticism,
    ScoreKind,
    SumScore,
    TrGoF,
    ind,
    opt,
)
from .edits import apply_adversarial_edit, apply_random_edit, EditSpec, tolerance_limit
from .efficiency import rate_curve, write_rate_csv
from .experiments import (
    SUM_CRIT_GRIDS,
    BoundarySpec,
    ExperimentGrid,
    MixtureConfig,
    boundary_grid,
    entropy_gap_check,
    grid_points,
    histogram_study,
    resolve_c_plus,
    write_boundary_csv,
)
from .pivotal import pivot_series
from .prf import Key
from .streams import child_seed, substream
from .tokensource import ToySource, make_m2
from .watermark import GenConfig, TokenSeq, generate, generate_null

KEY_ENV_VAR = "GUMBELMARK_KEY"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


def _write_manifest(command: str, config: dict, seed, outputs: list[str], started: float) -> str:
    path = outputs[0] + ".manifest.json" if len(outputs) == 1 else os.path.join(
        os.path.dirname(outputs[0]) or ".", "manifest.json"
    )
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
        "wall_clock_s": round(time.time() - started, 6),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _resolve_key(args) -> Key:
    hexkey = getattr(args, "key", None) or os.environ.get(KEY_ENV_VAR)
    if not hexkey:
        raise UsageError(f"no key: pass --key or set {KEY_ENV_VAR}")
    try:
        return Key.from_hex(hexkey)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_seq(path: str) -> TokenSeq:
    try:
        with open(path) as fh:
            return TokenSeq.from_json(fh.read())
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ValueError(f"bad token sequence file {path}: {exc}") from exc


def _make_source(args, seed: int) -> ToySource:
    lo = args.delta_min if args.delta_min is not None else args.delta
    hi = args.delta_max if args.delta_max is not None else args.delta
    return ToySource(vocab_size=args.vocab_size, delta_range=(lo, hi), seed=seed)


def _build_detector(args, n: int) -> Detector:
    c_plus = resolve_c_plus(args.c_plus, n)
    if args.detector == "trgof":
        return TrGoF(s=args.s, c_plus=c_plus, critical_value=args.critical_value)
    if args.detector == "hc":
        return HigherCriticism(c_plus=c_plus, critical_value=args.critical_value)
    kind = _score_kind(args.score, args.delta0)
    return SumScore(kind=kind, critical_value=args.critical_value)


def _score_kind(name: str, delta0: float) -> ScoreKind:
    if name == "ars":
        return ARS
    if name == "log":
        return LOG
    if name == "ind":
        return ind(delta0)
    if name == "opt":
        return opt(delta0)
    raise UsageError(f"unknown score {name!r}")


def _c_plus_arg(text: str):
    if text in ("0", "1/n", "1/n2"):
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad c-plus value {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.time()
    source = _make_source(args, seed=child_seed(args.seed, 0))
    cfg = GenConfig(n=args.n, m=args.m, masking=args.masking, seed=child_seed(args.seed, 1))
    prompt = substream(args.seed, 2).integers(0, args.vocab_size, size=args.m).tolist()
    if args.null:
        seq = generate_null(source, prompt, cfg)
    else:
        key = _resolve_key(args)
        seq = generate(source, key, prompt, cfg)
    with open(args.out, "w") as fh:
        fh.write(seq.to_json())
        fh.write("\n")
    config = {k: getattr(args, k) for k in ("n", "m", "vocab_size", "delta", "delta_min", "delta_max", "masking", "null")}
    _write_manifest("generate", config, args.seed, [args.out], started)
    return EXIT_OK


def cmd_edit(args) -> int:
    started = time.time()
    seq = _load_seq(args.infile)
    if args.edit == "adv":
        key = _resolve_key(args)
        out = apply_adversarial_edit(seq, args.fraction, key, args.vocab_size, args.seed)
    else:
        spec = EditSpec(kind=args.edit, fraction=args.fraction, seed=args.seed, vocab_size=args.vocab_size)
        out = apply_random_edit(seq, spec)
    with open(args.out, "w") as fh:
        fh.write(out.to_json())
        fh.write("\n")
    config = {"edit": args.edit, "fraction": args.fraction, "vocab_size": args.vocab_size, "in": args.infile}
    _write_manifest("edit", config, args.seed, [args.out], started)
    return EXIT_OK


def cmd_detect(args) -> int:
    started = time.time()
    if args.critical_value is None and not args.calibrate:
        raise UsageError("need --critical-value or --calibrate")
    seq = _load_seq(args.infile)
    key = _resolve_key(args)
    vocab = args.vocab_size if args.vocab_size is not None else max(seq.tokens) + 1
    piv = pivot_series(seq, key, vocab)
    detector = _build_detector(args, piv.n)
    if args.calibrate:
        detector.fit(piv.n, alpha=args.alpha, reps=args.reps, outer=args.outer, seed=args.seed)
    verdict = {
        "statistic": detector.statistic(piv),
        "n_scored": piv.n,
        "critical_value": detector.threshold,
        "reject": detector.predict(piv),
        "detector": detector.to_config(),
    }
    with open(args.out, "w") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    config = {"detector": detector.to_config(), "alpha": args.alpha, "in": args.infile}
    _write_manifest("detect", config, args.seed, [args.out], started)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    started = time.time()
    detector = _build_detector(args, args.n)
    if isinstance(detector, SumScore):
        detector.fit(args.n, alpha=args.alpha)
        result = CalibrationResult(
            detector=detector.to_config(), n=args.n, alpha=args.alpha,
            critical_value=detector.critical_value_, reps=0, outer=0, seed=args.seed,
        )
    else:
        result = mc_critical(detector, args.n, args.alpha, reps=args.reps, outer=args.outer, seed=args.seed)
    if args.cache_dir:
        os.makedirs(args.cache_dir, exist_ok=True)
        cache_path = os.path.join(args.cache_dir, result.cache_key() + ".json")
        with open(cache_path, "w") as fh:
            fh.write(result.to_json())
            fh.write("\n")
    with open(args.out, "w") as fh:
        fh.write(result.to_json())
        fh.write("\n")
    _write_manifest("calibrate", {"detector": result.detector, "n": args.n, "alpha": args.alpha,
                                  "reps": args.reps, "outer": args.outer}, args.seed, [args.out], started)
    return EXIT_OK


def _suite_hist(args, outputs: list[str]) -> None:
    cfg = MixtureConfig(n=args.n, p=args.p, q=args.q, vocab_size=args.vocab_size,
                        ntp_mode=args.mode, trials=args.trials, seed=args.seed)
    s_values = [float(s) for s in args.s_list.split(",")]
    study = histogram_study(cfg, s_values, resolve_c_plus(args.c_plus, args.n), alpha=args.alpha)
    path = os.path.join(args.out_dir, "hist_samples.csv")
    study.write_csv(path)
    outputs.append(path)
    ppath = os.path.join(args.out_dir, "hist_power.json")
    with open(ppath, "w") as fh:
        json.dump({str(s): p for s, p in study.power.items()}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(ppath)


def _suite_boundary(args, outputs: list[str]) -> None:
    q_min = math.log(args.vocab_size / (args.vocab_size - 1)) / math.log(args.n)
    grid = ExperimentGrid(
        p_values=tuple(grid_points(0.01, 1.0, args.grid)),
        q_values=tuple(grid_points(max(q_min, 0.01), 1.0, args.grid)),
        n=args.n, trials=args.trials, seed=args.seed,
    )
    spec = BoundarySpec(name=f"trgof_s{args.s:g}", kind="trgof", s=args.s, c_plus_rule=args.c_plus)
    rows = boundary_grid(grid, [spec], vocab_size=args.vocab_size, ntp_mode=args.mode)
    path = os.path.join(args.out_dir, "boundary.csv")
    write_boundary_csv(rows, path)
    outputs.append(path)


def _suite_sumboundary(args, outputs: list[str]) -> None:
    q_min = math.log(args.vocab_size / (args.vocab_size - 1)) / math.log(args.n)
    grid = ExperimentGrid(
        p_values=tuple(grid_points(0.01, 1.0, args.grid)),
        q_values=tuple(grid_points(max(q_min, 0.01), 1.0, args.grid)),
        n=args.n, trials=args.trials, seed=args.seed,
    )
    specs = []
    for token in args.scores.split(","):
        name, _, param = token.partition(":")
        kind = _score_kind(name, float(param) if param else None)
        specs.append(
            BoundarySpec(name=kind.label(), kind="sum", score_kind=kind,
                         crit_grid=SUM_CRIT_GRIDS[kind.name])
        )
    rows = boundary_grid(grid, specs, vocab_size=args.vocab_size, ntp_mode=args.mode)
    path = os.path.join(args.out_dir, "sumboundary.csv")
    write_boundary_csv(rows, path)
    outputs.append(path)


def _suite_efficiency(args, outputs: list[str]) -> None:
    deltas = np.arange(args.delta_min, args.delta_max + 1e-12, args.step)
    rows = rate_curve(deltas, args.eps)
    if not np.all(np.diff(rows[:, 2]) >= -1e-9):
        raise AssertionError("efficiency rate curve is not monotone")
    path = os.path.join(args.out_dir, "efficiency.csv")
    write_rate_csv(rows, path)
    outputs.append(path)


def _suite_gapcheck(args, outputs: list[str]) -> None:
    kinds = [ARS, LOG, ind(0.5), opt(0.1)]
    path = os.path.join(args.out_dir, "gapcheck.csv")
    with open(path, "w", newline="") as fh:
        import csv as _csv

        w = _csv.writer(fh)
        w.writerow(["dist", "score", "gap_mc", "se", "lower", "upper", "passed"])
        dists = {
            "half_half": np.array([0.5, 0.5]),
            "m2_0.4_5": make_m2(0.4, 5),
        }
        for label, probs in dists.items():
            for row in entropy_gap_check(probs, kinds, trials=args.trials, seed=args.seed):
                w.writerow([label, row.score, repr(row.gap_mc), repr(row.se),
                            repr(row.lower), repr(row.upper), row.passed])
    outputs.append(path)


def _suite_tolerance(args, outputs: list[str]) -> None:
    key = _resolve_key(args)
    detector = TrGoF(s=args.s, c_plus=resolve_c_plus(args.c_plus, args.n_test - args.m))
    detector.fit(args.n_test - args.m, alpha=args.alpha, reps=args.reps, outer=args.outer,
                 seed=child_seed(args.seed, 0))

    def decide(ts: TokenSeq) -> bool:
        return detector.predict(pivot_series(ts, key, args.vocab_size))

    path = os.path.join(args.out_dir, "tolerance.csv")
    with open(path, "w", newline="") as fh:
        import csv as _csv

        w = _csv.writer(fh)
        w.writerow(["sequence", "edit", "tolerance_fraction", "rejected_unedited"])
        for i in range(args.trials):
            source = ToySource(args.vocab_size, (args.delta, args.delta), child_seed(args.seed, 1, i))
            prompt = substream(args.seed, 2, i).integers(0, args.vocab_size, size=args.m).tolist()
            seq = generate(source, key, prompt, GenConfig(n=args.n0, m=args.m, masking=True,
                                                          seed=child_seed(args.seed, 3, i)))
            for kind in ("sub", "ins", "del"):
                res = tolerance_limit(seq, kind, decide, args.n_test, child_seed(args.seed, 4, i),
                                      args.vocab_size)
                w.writerow([i, kind, repr(res.fraction), res.rejected_unedited])
    outputs.append(path)


_SUITES = {
    "hist": _suite_hist,
    "boundary": _suite_boundary,
    "sumboundary": _suite_sumboundary,
    "efficiency": _suite_efficiency,
    "gapcheck": _suite_gapcheck,
    "tolerance": _suite_tolerance,
}


def cmd_experiment(args) -> int:
    started = time.time()
    os.makedirs(args.out_dir, exist_ok=True)
    outputs: list[str] = []
    _SUITES[args.suite](args, outputs)
    manifest = os.path.join(args.out_dir, "manifest.json")
    config = {k: v for k, v in vars(args).items() if k not in ("func", "suite") and v is not None}
    with open(manifest, "w") as fh:
        json.dump({"command": f"experiment {args.suite}", "config": config, "seed": args.seed,
                   "version": __version__, "outputs": outputs,
                   "wall_clock_s": round(time.time() - started, 6)}, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--detector", choices=("trgof", "hc", "sum"), default="trgof")
    p.add_argument("--s", type=float, default=2.0, help="goodness-of-fit shape parameter in [-1, 2]")
    p.add_argument("--c-plus", type=_c_plus_arg, default="1/n", dest="c_plus",
                   help="stability parameter: 0, 1/n, 1/n2, or a float")
    p.add_argument("--score", choices=("ars", "log", "ind", "opt"), default="ars")
    p.add_argument("--delta0", type=float, default=0.1)
    p.add_argument("--critical-value", type=float, default=None, dest="critical_value")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--outer", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gumbelmark",
                                 description="Gumbel-max watermarking with truncated goodness-of-fit detection")
    ap.add_argument("--version", action="version", version=f"gumbelmark {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a (un)watermarked token sequence")
    g.add_argument("--key", default=None, help=f"hex key (or env {KEY_ENV_VAR})")
    g.add_argument("--vocab-size", type=int, default=20, dest="vocab_size")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--delta", type=float, default=0.3)
    g.add_argument("--delta-min", type=float, default=None, dest="delta_min")
    g.add_argument("--delta-max", type=float, default=None, dest="delta_max")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--null", action="store_true", help="unwatermarked control sequence")
    g.add_argument("--masking", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("edit", help="apply simulated human edits")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--edit", choices=("sub", "ins", "del", "adv"), required=True)
    e.add_argument("--fraction", type=float, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--vocab-size", type=int, required=True, dest="vocab_size")
    e.add_argument("--key", default=None)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_edit)

    d = sub.add_parser("detect", help="score a sequence and decide")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--key", default=None)
    d.add_argument("--vocab-size", type=int, default=None, dest="vocab_size")
    d.add_argument("--calibrate", action="store_true",
                   help="Monte Carlo-calibrate the critical value first")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    _add_detector_args(d)
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("calibrate", help="compute a critical value")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--cache-dir", default=None, dest="cache_dir")
    c.add_argument("--out", required=True)
    _add_detector_args(c)
    c.set_defaults(func=cmd_calibrate)

    x = sub.add_parser("experiment", help="run an experiment suite")
    x.add_argument("suite", choices=sorted(_SUITES))
    x.add_argument("--n", type=int, default=1000)
    x.add_argument("--p", type=float, default=0.2)
    x.add_argument("--q", type=float, default=0.5)
    x.add_argument("--grid", type=int, default=20, help="points per (p, q) axis")
    x.add_argument("--trials", type=int, default=200)
    x.add_argument("--vocab-size", type=int, default=1000, dest="vocab_size")
    x.add_argument("--mode", choices=("m1", "m2"), default="m2")
    x.add_argument("--s", type=float, default=2.0)
    x.add_argument("--s-list", default="2,1.5,1,0.5,0", dest="s_list")
    x.add_argument("--scores", default="ars,log,ind:0.5,opt:0.1",
                   help="sum rules for the sumboundary suite, e.g. ars,log,ind:0.5,opt:0.1")
    x.add_argument("--c-plus", type=_c_plus_arg, default="1/n", dest="c_plus")
    x.add_argument("--alpha", type=float, default=0.05)
    x.add_argument("--eps", type=float, default=1.0)
    x.add_argument("--delta-min", type=float, default=0.01, dest="delta_min")
    x.add_argument("--delta-max", type=float, default=0.9, dest="delta_max")
    x.add_argument("--step", type=float, default=0.005)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--key", default=None)
    x.add_argument("--m", type=int, default=5)
    x.add_argument("--n0", type=int, default=200, help="tolerance suite: initial length")
    x.add_argument("--n-test", type=int, default=105, dest="n_test")
    x.add_argument("--delta", type=float, default=0.3)
    x.add_argument("--reps", type=int, default=2000)
    x.add_argument("--outer", type=int, default=5)
    x.add_argument("--out-dir", required=True, dest="out_dir")
    x.set_defaults(func=cmd_experiment)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AssertionError as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
