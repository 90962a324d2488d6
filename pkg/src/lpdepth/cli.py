"""Command-line front end: ``lpdepth {fit,classify,simulate,benchmark,contour}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numeric or degenerate-geometry error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from . import model_io
from .classify import train_d2, train_max_depth
from .errors import ConfigError, DataError, LpDepthError
from .fit import DEFAULT_GRID, OrientationSearch, PGrid, TrimSpec, fit_class
from .harness import (
    SimConfig,
    SimProblem,
    SplitSpec,
    default_pipelines,
    ingest_csv,
    run_benchmark,
    run_fixed_split,
    run_table1_experiment,
    table1_problems,
)
from .synth import LpSymmetricSpec, TwoClassProblem, contour_grid, rotation, sample_lp, write_contour_csv

log = logging.getLogger("lpdepth")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# -- flag parsing helpers ---------------------------------------------------------


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected a comma separated list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{what}: empty list")
    return vals


def _grid(args) -> PGrid:
    if args.grid is None:
        return DEFAULT_GRID
    try:
        return PGrid.parse(args.grid)
    except ValueError as err:
        raise ConfigError(f"--grid: {err}") from None


def _trim(args) -> TrimSpec:
    if args.trim is None:
        return TrimSpec()
    try:
        return TrimSpec.parse(args.trim)
    except ValueError as err:
        raise ConfigError(f"--trim: {err}") from None


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _priors(text: str):
    if text in ("sample", "equal"):
        return text
    vals = _floats(text, "--priors")
    if min(vals) <= 0 or abs(sum(vals) - 1.0) > 1e-9:
        raise ConfigError("--priors must be positive and sum to 1")
    return [v / sum(vals) for v in vals]


def _angle(text: str) -> float:
    """Degrees by default; a ``rad`` suffix switches to radians."""
    t = text.strip().lower()
    try:
        if t.endswith("rad"):
            return float(t[:-3])
        return math.radians(float(t[:-3] if t.endswith("deg") else t))
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def _cols(text: str | None) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()] if text else []


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# -- subcommands ----------------------------------------------------------------------


def cmd_fit(args) -> int:
    grid, trim, priors = _grid(args), _trim(args), _priors(args.priors)
    ds = ingest_csv(args.train, args.label, _cols(args.drop_cols))
    if isinstance(priors, list) and len(priors) != len(ds.classes):
        raise ConfigError(f"--priors has {len(priors)} values for {len(ds.classes)} classes")
    rng = np.random.default_rng(_seed(args))
    trainer = train_max_depth if args.max_depth else train_d2
    clf = trainer(ds.split_by_class(), ds.classes, grid, trim, rng, priors)
    model_io.save(clf, args.out, ds.feature_names)
    print(f"classifier: {clf.kind}  classes: {len(clf.classes)}  d: {clf.dim}")
    for c in clf.classes:
        print(f"class {c.label}: n={c.nj} prior={c.prior:.6g} p_hat={c.model.p:.6g} "
              f"tr_ratio={c.tr_ratio:.6f} h={c.kde.h:.6g}")
    for (i, j), k in sorted(getattr(clf, "thresholds", {}).items()):
        print(f"k[{clf.classes[i].label},{clf.classes[j].label}]={k:.6g}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    doc = model_io.load_document(args.model)
    clf = model_io.from_document(doc)
    with open(args.data, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{args.data}: empty file")
    header = [h.strip() for h in rows[0]]
    names = model_io.feature_names(doc)
    if names is None:
        names = [h for h in header if h != args.label]
    missing = [n for n in names if n not in header]
    if missing or len(names) != clf.dim:
        raise ConfigError(f"{args.data}: model expects {clf.dim} features {names}; missing {missing}")
    idx = [header.index(n) for n in names]
    body = [r for r in rows[1:] if r]
    x = np.empty((len(body), len(idx)))
    for rno, row in enumerate(body, start=2):
        for c, i in enumerate(idx):
            try:
                x[rno - 2, c] = float(row[i])
            except (ValueError, IndexError):
                raise DataError(f"{args.data}: bad value at row {rno}, column {names[c]!r}") from None
    pred = clf.predict(x) if len(body) else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rows[0] + ["predicted"])
    for row, p in zip(body, pred):
        w.writerow(row + [p])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _spec_from_json(d: dict) -> LpSymmetricSpec:
    return LpSymmetricSpec(float(d["p"]), np.asarray(d["b"], float), np.asarray(d["A"], float),
                           float(d.get("sigma", 1.0)))


def _load_sim_config(path: str) -> tuple[SimConfig, dict]:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON: {err}") from err
    try:
        problems = tuple(
            SimProblem(p["name"], p.get("kind", "shape"),
                       TwoClassProblem(_spec_from_json(p["a"]), _spec_from_json(p["b"])))
            for p in raw.get("problems", [])
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{path}: malformed problem definition: {err}") from err
    return SimConfig(problems=problems), raw


def _select_problems(text: str | None):
    allp = table1_problems()
    if not text:
        return allp
    out = []
    for tok in _cols(text):
        if tok.isdigit() and 1 <= int(tok) <= len(allp):
            out.append(allp[int(tok) - 1])
            continue
        match = [p for p in allp if p.name == tok]
        if not match:
            raise ConfigError(f"unknown problem {tok!r}; choose from {[p.name for p in allp]} or 1..{len(allp)}")
        out.append(match[0])
    return out


def cmd_simulate(args) -> int:
    cfg, raw = _load_sim_config(args.config) if args.config else (SimConfig(), {})
    if not cfg.problems:
        cfg = cfg.with_problems(_select_problems(args.problems))
    reps = args.reps or raw.get("reps") or (SimConfig.FULL_REPS if args.full_defaults else SimConfig.QUICK_REPS)
    grid = _grid(args) if args.grid or "grid" not in raw else PGrid(tuple(float(v) for v in raw["grid"]))
    trim = _trim(args) if args.trim or "trim" not in raw else TrimSpec(*raw["trim"])
    cfg = replace(
        cfg,
        n_train=args.n_train or raw.get("n_train", cfg.n_train),
        n_test=args.n_test or raw.get("n_test", cfg.n_test),
        n_reps=int(reps),
        seed=args.seed if args.seed is not None else raw.get("seed", 0),
        n_mc=args.n_mc or raw.get("n_mc", cfg.n_mc),
        grid=grid,
        trim=trim,
    )
    report = run_table1_experiment(cfg)
    _emit(report.to_csv(), args.out)
    if args.out and args.out != "-":
        sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_benchmark(args) -> int:
    drop = _cols(args.drop_cols)
    pipes = default_pipelines(_grid(args), _trim(args), args.max_depth)
    priors = _priors(args.priors)
    ds = ingest_csv(args.data, args.label, drop)
    if args.test:
        test = ingest_csv(args.test, args.label, drop)
        report = run_fixed_split(ds, test, pipes, priors, _seed(args))
    else:
        spec = SplitSpec(args.train_size, args.reps, _seed(args))
        report = run_benchmark(ds, spec, pipes, priors)
    _emit(report.to_csv(), args.out)
    if args.out and args.out != "-":
        sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_contour(args) -> int:
    scales = _floats(args.scales, "--scales")
    center = _floats(args.center, "--center")
    bounds = _floats(args.bounds, "--bounds")
    if len(scales) != 2 or len(center) != 2 or len(bounds) != 4:
        raise ConfigError("--scales and --center take 2 values, --bounds takes 4")
    if min(scales) <= 0:
        raise ConfigError("--scales must be positive")
    # z = diag(1/s) R(rot)^T (x - b): the unit ball is rotated anticlockwise by rot
    A = np.diag(1.0 / np.asarray(scales)) @ rotation(_angle(args.rot)).T
    spec = LpSymmetricSpec(args.p, np.asarray(center), A)
    target = spec
    if args.estimate:
        if args.value != "depth":
            raise ConfigError("--estimate emits estimated depth only")
        rng = np.random.default_rng(_seed(args))
        x = sample_lp(spec, args.estimate, rng)
        fit = fit_class(x, rng, _grid(args), _trim(args), OrientationSearch())
        target = fit.model
        print(f"estimated p_hat={fit.model.p:.6g} from n={args.estimate}", file=sys.stderr)
    xs, ys, vals = contour_grid(target, bounds, args.res, args.value)
    if args.out is None or args.out == "-":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for i, y in enumerate(ys):
            for j, xv in enumerate(xs):
                w.writerow([f"{xv:.17g}", f"{y:.17g}", f"{vals[i, j]:.17g}"])
        sys.stdout.write(buf.getvalue())
    else:
        write_contour_csv(args.out, xs, ys, vals)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def _common(p, *, label=False, out_required=False):
    p.add_argument("--grid", help="comma separated p values (default: 2^((i-1)/2), i=1..10)")
    p.add_argument("--trim", help="lower,upper depth quantiles (default 0.02,0.98)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=out_required, help="output path ('-' for stdout)")
    if label:
        p.add_argument("--label", required=True, help="name of the class label column")
        p.add_argument("--drop-cols", help="comma separated columns to ignore")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lpdepth", description="L_p depth classifiers with a data driven p.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="train a classifier from a CSV file")
    p.add_argument("train")
    _common(p, label=True, out_required=True)
    p.add_argument("--priors", default="sample", help="sample, equal, or comma list")
    p.add_argument("--max-depth", action="store_true", help="maximum depth rule with a common p")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("classify", help="append a 'predicted' column to a CSV file")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--label", help="label column to ignore when the model has no feature names")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="simulated two-class problems with regret ratios")
    _common(p)
    p.add_argument("--problems", help="problem names or row numbers 1..9 (default: all)")
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--reps", type=int)
    p.add_argument("--full-defaults", action="store_true", help="200 replications")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--n-mc", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="repeated stratified splits of a labelled CSV")
    _common(p, label=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test", help="fixed test set; disables repeated splitting")
    p.add_argument("--train-size", type=float, default=0.5, help="fraction in (0,1) or row count")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--priors", default="sample")
    p.add_argument("--max-depth", action="store_true")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("contour", help="depth or density values on a 2-d grid")
    _common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--rot", default="0", help="rotation angle, e.g. 135deg or 2.356rad")
    p.add_argument("--scales", default="1,1", help="per-axis scales before rotation")
    p.add_argument("--center", default="0,0")
    p.add_argument("--bounds", default="-3,3,-3,3", help="xmin,xmax,ymin,ymax")
    p.add_argument("--res", type=int, default=101)
    p.add_argument("--value", choices=("depth", "density"), default="depth")
    p.add_argument("--estimate", type=int, default=0, metavar="N",
                   help="fit from N simulated points and emit estimated depth")
    p.set_defaults(func=cmd_contour)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "reps", 1) is not None and getattr(args, "reps", 1) < 1:
            raise ConfigError("--reps must be >= 1")
        return args.func(args)
    except LpDepthError as err:
        print(f"lpdepth: error: {err}", file=sys.stderr)
        return err.exit_code
    except FileNotFoundError as err:
        print(f"lpdepth: error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        print(f"lpdepth: error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
