"""Experiment orchestration: data ingestion, splits, metrics and reports."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .classify import train_d2, train_max_depth
from .errors import ConfigError, DataError, LpDepthError, UndefinedRegretError
from .fit import DEFAULT_GRID, MD_GRID, OrientationSearch, PGrid, TrimSpec
from .synth import LpSymmetricSpec, TwoClassProblem, bayes_risk_mc, sample_lp

log = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "SplitSpec",
    "Pipeline",
    "ReportRow",
    "EvalReport",
    "SimProblem",
    "SimConfig",
    "ingest_csv",
    "stratified_splits",
    "compute_metrics",
    "replicate_se",
    "regret_ratio",
    "efficiency",
    "table1_problems",
    "run_table1_experiment",
    "run_benchmark",
    "run_fixed_split",
    "default_pipelines",
]


# -- data ---------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "data"
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.classes) < 2:
            raise DataError("a dataset needs at least two classes")

    @property
    def classes(self) -> list[str]:
        # order of first appearance
        return list(dict.fromkeys(self.labels.tolist()))

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[str, int]:
        return {c: int(np.sum(self.labels == c)) for c in self.classes}

    def split_by_class(self, idx=None):
        idx = np.arange(len(self.labels)) if idx is None else np.asarray(idx)
        lab = self.labels[idx]
        return [self.features[idx[lab == c]] for c in self.classes]


def ingest_csv(path, label_column: str, drop_columns: Sequence[str] = (), name: str | None = None) -> Dataset:
    """Read a headed CSV; every column other than the label must be numeric."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise DataError(f"{path}: duplicated header names {dupes}")
    if label_column not in header:
        raise ConfigError(f"{path}: label column {label_column!r} not found in header {header}")
    unknown = [c for c in drop_columns if c not in header]
    if unknown:
        raise ConfigError(f"{path}: cannot drop unknown columns {unknown}")
    li = header.index(label_column)
    keep = [i for i, h in enumerate(header) if i != li and h not in drop_columns]
    feats, labels = [], []
    for rno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {rno} has {len(row)} cells, header has {len(header)}")
        for i in [li, *keep]:
            if row[i].strip() == "":
                raise DataError(f"{path}: missing value at row {rno}, column {header[i]!r}")
        vals = []
        for i in keep:
            try:
                vals.append(float(row[i]))
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {row[i]!r} at row {rno}, column {header[i]!r}"
                ) from None
        feats.append(vals)
        labels.append(row[li].strip())
    x = np.array(feats, dtype=float).reshape(len(feats), len(keep))
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path}: non-finite feature values")
    return Dataset(x, np.array(labels, dtype=object), name or os.path.basename(str(path)),
                   tuple(header[i] for i in keep))


@dataclass(frozen=True)
class SplitSpec:
    """``train`` is a fraction in (0, 1) or an absolute row count."""

    train: float = 0.5
    n_reps: int = 20
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.n_reps < 1:
            raise ConfigError("n_reps must be >= 1")
        if self.train <= 0:
            raise ConfigError("train size must be positive")

    def train_total(self, n: int) -> int:
        t = round(self.train * n) if self.train < 1 else int(self.train)
        if not 0 < t < n:
            raise ConfigError(f"train size {t} must lie strictly between 0 and n={n}")
        return t


def _allocate(counts: list[int], total: int) -> list[int]:
    """Largest-remainder allocation of ``total`` in proportion to ``counts``."""
    n = sum(counts)
    raw = [c * total / n for c in counts]
    out = [math.floor(r) for r in raw]
    order = sorted(range(len(counts)), key=lambda i: (-(raw[i] - out[i]), i))
    for i in order[: total - sum(out)]:
        out[i] += 1
    return [min(o, c) for o, c in zip(out, counts)]


def rep_rng(seed: int, rep: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep), int(stream)]))


_FIT_STREAM = 1


def stratified_splits(ds: Dataset, spec: SplitSpec):
    """Per replication, a class-proportion-preserving (train, test) partition."""
    n = len(ds.labels)
    total = spec.train_total(n)
    members = [np.flatnonzero(ds.labels == c) for c in ds.classes]
    alloc = _allocate([len(m) for m in members], total)
    out = []
    for rep in range(spec.n_reps):
        rng = rep_rng(spec.seed, rep)
        train, test = [], []
        for m, k in zip(members, alloc):
            perm = rng.permutation(m)
            train.append(perm[:k])
            test.append(perm[k:])
        out.append((np.sort(np.concatenate(train)), np.sort(np.concatenate(test))))
    return out


# -- metrics ------------------------------------------------------------------


def compute_metrics(predictions, truth) -> tuple[float, float]:
    """Error rate and its binomial standard error ``sqrt(r(1-r)/n_test)``."""
    pred = np.asarray(predictions)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError("predictions and truth differ in length")
    rate = float(np.mean(pred != truth))
    return rate, math.sqrt(rate * (1.0 - rate) / truth.size)


def replicate_se(rates) -> float:
    """Standard error of a mean over replications: sd / sqrt(reps)."""
    r = np.asarray(rates, dtype=float)
    return float(np.std(r, ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0


def regret_ratio(rate_t: float, rate_lp: float, bayes: float) -> float:
    if not rate_lp > bayes:
        raise UndefinedRegretError(f"reference rate {rate_lp} does not exceed Bayes risk {bayes}")
    return (rate_t - bayes) / (rate_lp - bayes)


def efficiency(rates: dict) -> dict:
    """``best_rate / rate`` per classifier; a zero best rate gives 1 to the
    zero-rate classifiers and 0 to the rest."""
    if not rates:
        raise ConfigError("efficiency needs at least one rate")
    best = min(rates.values())
    if best == 0:
        return {k: 1.0 if v == 0 else 0.0 for k, v in rates.items()}
    return {k: 1.0 if v == best else best / v for k, v in rates.items()}


# -- reports ------------------------------------------------------------------


@dataclass
class ReportRow:
    dataset: str
    classifier: str
    rate: float
    se: float
    se_kind: str
    n_reps: int
    n_skipped: int = 0
    bayes_risk: float | None = None
    bayes_se: float | None = None
    regret_ratio: float | None = None
    efficiency: float | None = None
    rates: list = field(default_factory=list, repr=False)


_CSV_FIELDS = ["dataset", "classifier", "rate", "se", "se_kind", "n_reps", "n_skipped",
               "bayes_risk", "bayes_se", "regret_ratio", "efficiency"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


@dataclass
class EvalReport:
    rows: list
    meta: dict = field(default_factory=dict)

    def row(self, dataset: str, classifier: str) -> ReportRow:
        for r in self.rows:
            if r.dataset == dataset and r.classifier == classifier:
                return r
        raise KeyError((dataset, classifier))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_CSV_FIELDS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, f)) for f in _CSV_FIELDS])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.meta.items()]
        head = f"{'dataset':<22}{'classifier':<12}{'rate%':>8}{'se%':>8}{'bayes%':>9}{'regret':>9}{'eff':>7}{'skip':>6}"
        lines += [head, "-" * len(head)]
        for r in self.rows:
            bay = "" if r.bayes_risk is None else f"{100 * r.bayes_risk:.2f}"
            reg = "" if r.regret_ratio is None else f"{r.regret_ratio:.3f}"
            eff = "" if r.efficiency is None else f"{r.efficiency:.3f}"
            lines.append(f"{r.dataset:<22}{r.classifier:<12}{100 * r.rate:>8.2f}{100 * r.se:>8.2f}"
                         f"{bay:>9}{reg:>9}{eff:>7}{r.n_skipped:>6}")
        return "\n".join(lines) + "\n"


def _finish_rows(rows: list[ReportRow], reference: str = "LpD") -> None:
    eff = efficiency({r.classifier: r.rate for r in rows})
    ref = next((r for r in rows if r.classifier == reference), None)
    for r in rows:
        r.efficiency = eff[r.classifier]
        if r.bayes_risk is not None and ref is not None:
            try:
                r.regret_ratio = regret_ratio(r.rate, ref.rate, r.bayes_risk)
            except UndefinedRegretError:
                r.regret_ratio = None


# -- pipelines ----------------------------------------------------------------


@dataclass(frozen=True)
class Pipeline:
    """A named classifier recipe: exponent grid plus classifier type."""

    name: str
    grid: PGrid = DEFAULT_GRID
    max_depth: bool = False
    trim: TrimSpec = TrimSpec()
    search: OrientationSearch = OrientationSearch()

    def train(self, class_data, labels, rng, priors):
        fn = train_max_depth if self.max_depth else train_d2
        return fn(class_data, labels, self.grid, self.trim, rng, priors, self.search)


def default_pipelines(grid: PGrid = DEFAULT_GRID, trim: TrimSpec = TrimSpec(),
                      max_depth: bool = False, search: OrientationSearch = OrientationSearch()):
    return [Pipeline("LpD", grid, max_depth, trim, search),
            Pipeline("MD", MD_GRID, max_depth, trim, search)]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LPDEPTH_THREADS", "1")))
    except ValueError:
        raise ConfigError("LPDEPTH_THREADS must be an integer") from None


def _map(fn: Callable, items: list) -> list:
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# -- simulations ----------------------------------------------------------------


@dataclass(frozen=True)
class SimProblem:
    name: str
    kind: str  # "location" uses maximum depth, everything else the ratio rule
    problem: TwoClassProblem


def _spec(p, b, a_scale, sigma=1.0):
    return LpSymmetricSpec(p, np.asarray(b, float), a_scale * np.eye(2), sigma)


def table1_problems(sigma: float = 1.0) -> list[SimProblem]:
    """The nine two-class settings of the simulation table (d = 2)."""
    zero, one = (0.0, 0.0), (1.0, 1.0)
    out = []
    for i, p in enumerate((1.0, 2.0, 8.0), start=1):
        out.append(SimProblem(f"location-{i}", "location",
                              TwoClassProblem(_spec(p, zero, 1, sigma), _spec(p, one, 1, sigma))))
    for i, p in enumerate((1.0, 2.0, 8.0), start=1):
        out.append(SimProblem(f"scale-{i}", "scale",
                              TwoClassProblem(_spec(p, zero, 1, sigma), _spec(p, zero, 1 / 9, sigma))))
    for i, (p1, p2) in enumerate(((1.0, 2.0), (2.0, 4.0), (8.0, 1.0)), start=1):
        out.append(SimProblem(f"shape-{i}", "shape",
                              TwoClassProblem(_spec(p1, zero, 1, sigma), _spec(p2, zero, 1, sigma))))
    return out


@dataclass(frozen=True)
class SimConfig:
    problems: tuple = ()
    n_train: int = 400
    n_test: int = 1000
    n_reps: int = 20
    seed: int = 0
    grid: PGrid = DEFAULT_GRID
    trim: TrimSpec = TrimSpec()
    n_mc: int = 100_000
    search: OrientationSearch = OrientationSearch()

    FULL_REPS = 200
    QUICK_REPS = 20

    def with_problems(self, problems) -> "SimConfig":
        return replace(self, problems=tuple(problems))


def _draw(problem: TwoClassProblem, n: int, rng):
    na = n // 2
    xa = sample_lp(problem.spec_a, na, rng)
    xb = sample_lp(problem.spec_b, n - na, rng)
    return xa, xb


def _sim_rep(args):
    sp, cfg, rep, pipes = args
    rng = rep_rng(cfg.seed, rep)
    tr_a, tr_b = _draw(sp.problem, cfg.n_train, rng)
    te_a, te_b = _draw(sp.problem, cfg.n_test, rng)
    test = np.vstack([te_a, te_b])
    truth = np.array(["1"] * len(te_a) + ["2"] * len(te_b), dtype=object)
    rates = {}
    for pipe in pipes:
        try:
            # every pipeline sees the same fitting stream (common random numbers)
            clf = pipe.train([tr_a, tr_b], ["1", "2"], rep_rng(cfg.seed, rep, _FIT_STREAM), "equal")
            rates[pipe.name] = compute_metrics(np.array(clf.predict(test), dtype=object), truth)[0]
        except LpDepthError as err:
            log.warning("%s rep %d %s skipped: %s", sp.name, rep, pipe.name, err)
            rates[pipe.name] = None
    return rates


def run_table1_experiment(config: SimConfig) -> EvalReport:
    """Simulated two-class problems: LpD vs the MD baseline, with regret ratios."""
    problems = config.problems or tuple(table1_problems())
    rows = []
    for pi, sp in enumerate(problems):
        pipes = default_pipelines(config.grid, config.trim, sp.kind == "location", config.search)
        risk, risk_se = bayes_risk_mc(sp.problem, config.n_mc, rep_rng(config.seed, 10_000_000 + pi))
        per_rep = _map(_sim_rep, [(sp, config, rep, pipes) for rep in range(config.n_reps)])
        prob_rows = []
        for pipe in pipes:
            rates = [r[pipe.name] for r in per_rep]
            ok = [v for v in rates if v is not None]
            if not ok:
                raise DataError(f"{sp.name}: every replication failed for {pipe.name}")
            prob_rows.append(ReportRow(sp.name, pipe.name, float(np.mean(ok)), replicate_se(ok),
                                       "replication", len(ok), len(rates) - len(ok), risk, risk_se,
                                       rates=ok))
        _finish_rows(prob_rows)
        rows += prob_rows
    meta = {"protocol": "simulation", "n_train": config.n_train, "n_test": config.n_test,
            "n_reps": config.n_reps, "full_reps": SimConfig.FULL_REPS, "seed": config.seed,
            "n_mc": config.n_mc, "grid": ",".join(f"{p:.6g}" for p in config.grid),
            "trim": f"{config.trim.lo},{config.trim.hi}"}
    return EvalReport(rows, meta)


# -- benchmarks -------------------------------------------------------------------


def _bench_rep(args):
    ds, train_idx, test_idx, pipes, seed, rep, priors = args
    counts = [int(np.sum(ds.labels[train_idx] == c)) for c in ds.classes]
    if min(counts) < ds.dim + 2:
        return None, f"a class has {min(counts)} training rows (< d+2)"
    class_data = ds.split_by_class(train_idx)
    truth = ds.labels[test_idx]
    rates = {}
    for pipe in pipes:
        try:
            clf = pipe.train(class_data, ds.classes, rep_rng(seed, rep, _FIT_STREAM), priors)
        except LpDepthError as err:
            return None, f"{pipe.name}: {err}"
        rates[pipe.name] = compute_metrics(np.array(clf.predict(ds.features[test_idx]), dtype=object), truth)[0]
    return rates, None


def run_benchmark(ds: Dataset, spec: SplitSpec, pipelines=None, priors="sample") -> EvalReport:
    """Repeated stratified splits; SE is the replication SD over sqrt(reps)."""
    pipes = pipelines or default_pipelines()
    splits = stratified_splits(ds, spec)
    results = _map(_bench_rep, [(ds, tr, te, pipes, spec.seed, rep, priors)
                                for rep, (tr, te) in enumerate(splits)])
    skipped = [msg for r, msg in results if r is None]
    for msg in skipped:
        log.warning("%s: replication skipped: %s", ds.name, msg)
    good = [r for r, _ in results if r is not None]
    if not good:
        raise DataError(f"{ds.name}: every replication was skipped ({skipped[0]})")
    rows = []
    for pipe in pipes:
        rates = [r[pipe.name] for r in good]
        rows.append(ReportRow(ds.name, pipe.name, float(np.mean(rates)), replicate_se(rates),
                              "replication", len(rates), len(skipped), rates=rates))
    _finish_rows(rows)
    meta = {"protocol": "repeated-split", "dataset": ds.name, "n": len(ds.labels), "d": ds.dim,
            "train": spec.train, "n_reps": spec.n_reps, "full_reps": 500, "seed": spec.seed,
            "priors": priors}
    return EvalReport(rows, meta)


def run_fixed_split(train: Dataset, test: Dataset, pipelines=None, priors="sample", seed: int = 0) -> EvalReport:
    """Given train and test sets; SE is binomial in the test-set size."""
    pipes = pipelines or default_pipelines()
    if train.dim != test.dim:
        raise DataError("train and test sets differ in dimension")
    rows = []
    for pipe in pipes:
        clf = pipe.train(train.split_by_class(), train.classes, rep_rng(seed, 0, _FIT_STREAM), priors)
        rate, se = compute_metrics(np.array(clf.predict(test.features), dtype=object), test.labels)
        rows.append(ReportRow(test.name, pipe.name, rate, se, "binomial", 1, rates=[rate]))
    _finish_rows(rows)
    meta = {"protocol": "fixed-split", "dataset": test.name, "n_train": len(train.labels),
            "n_test": len(test.labels), "seed": seed, "priors": priors}
    return EvalReport(rows, meta)
