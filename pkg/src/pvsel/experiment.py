"""Monte Carlo experiments, the parametric bootstrap and result files.

File schemas (comma separated, one header row):

summary
    label, criterion, n, M, family, reps, p_correct, se_correct,
    p_ordering, mean_pred_error, mean_pred_error_per_n
replications
    label, criterion, n, rep, selected, correct, ordering_correct, pred_error

``selected`` joins 1-based indices with ``;`` (empty for the empty model);
booleans are written as 0/1 and floats with ``repr`` so files round-trip
exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .criteria import CriterionSpec, Kind, criterion_from_table, parse_criterion
from .datagen import DesignKind, DesignSpec, TrueModel, gen_response, stream
from .errors import ConfigError, NumericalError
from .regcore import Dataset, FitResult, Subset, fit_ols, full_model_t_stats, load_dataset
from .search import FamilyKind, ModelFamily, greedy_order, select_many

DEFAULT_CRITERIA = ("mpvc", "mpvccal", "mpvc-max-cal", "aic", "bic")
DEFAULT_N = (75, 100, 200, 300, 500, 1000)

SUMMARY_COLUMNS = (
    "label", "criterion", "n", "M", "family", "reps", "p_correct", "se_correct",
    "p_ordering", "mean_pred_error", "mean_pred_error_per_n",
)
REPLICATION_COLUMNS = (
    "label", "criterion", "n", "rep", "selected", "correct", "ordering_correct", "pred_error",
)


class ReplicationError(NumericalError):
    """A fit inside one replication failed."""


@dataclass(frozen=True)
class ExperimentConfig:
    label: str
    design: DesignSpec
    true_model: TrueModel
    n_list: tuple[int, ...]
    reps: int
    criteria: tuple[CriterionSpec, ...]
    family: ModelFamily = ModelFamily(FamilyKind.GREEDY_NESTED)
    seed: int = 0

    def __post_init__(self):
        M = self.design.M
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if not self.n_list:
            raise ConfigError("n_list is empty")
        for n in self.n_list:
            if n <= M + 1:
                raise ConfigError(f"sample size n={n} must exceed M + 1 = {M + 1}")
        if self.true_model.t and self.true_model.t[-1] > M:
            raise ConfigError(f"true model {self.true_model.t} exceeds M={M}")
        if not self.criteria:
            raise ConfigError("no criteria configured")


@dataclass(frozen=True)
class ReplicationRecord:
    label: str
    criterion: str
    n: int
    rep: int
    selected: Subset
    correct: bool
    ordering_correct: bool
    pred_error: float


@dataclass(frozen=True)
class SummaryRow:
    label: str
    criterion: str
    n: int
    M: int
    family: str
    reps: int
    p_correct: float
    se_correct: float
    p_ordering: float
    mean_pred_error: float
    mean_pred_error_per_n: float


@dataclass
class ExperimentResult:
    records: list[ReplicationRecord]
    summary: list[SummaryRow]


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


def correct_ordering(order: Sequence[int], t: Iterable[int]) -> bool:
    """True iff every index of ``t`` comes before every index outside it."""
    t = set(t)
    ranks = {i: r for r, i in enumerate(order)}
    if len(ranks) != len(order):
        raise ConfigError(f"order {tuple(order)} has repeated entries")
    inside = [ranks[i] for i in t]
    outside = [r for i, r in ranks.items() if i not in t]
    if not inside or not outside:
        return True
    return max(inside) < min(outside)


def prediction_error(design: np.ndarray, beta_true: np.ndarray, fit: FitResult) -> float:
    """``||X beta - X beta_hat||^2`` with the post-selection OLS estimate."""
    X = np.asarray(design, dtype=float)
    diff = X @ (np.asarray(beta_true, dtype=float) - fit.embedded(X.shape[1]))
    return float(diff @ diff)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------

_PRESET_MODELS = {
    "M1": ((10,), (0.2,), 30),
    "M2": ((1, 2, 5, 6), (0.9, -0.8, -0.4, 0.2), 6),
    "M3": ((2, 4, 5), (1.0, 1.0, 1.0), 5),
    "M4": (tuple(2 * k + 7 for k in range(3, 13)), (1.0,) * 10, 60),
}
PRESETS = ("M1", "M2", "M3", "M4", "L1")


def preset_configs(
    name: str,
    seed: int = 0,
    reps: int = 500,
    n_list: Sequence[int] | None = None,
    criteria: Sequence[CriterionSpec] | None = None,
    family: ModelFamily | None = None,
) -> list[ExperimentConfig]:
    """Configurations for a built-in scenario.

    ``M1``..``M4`` use an AR(0.5) Gaussian design with unit variances and unit
    noise.  ``L1`` runs the Legendre design at n = 300 for M = 5, 10, ..., 25,
    one configuration per M.
    """
    key = name.upper()
    crit = tuple(criteria) if criteria else tuple(parse_criterion(c) for c in DEFAULT_CRITERIA)
    fam = family or ModelFamily(FamilyKind.GREEDY_NESTED)
    if key in _PRESET_MODELS:
        t, beta, M = _PRESET_MODELS[key]
        return [
            ExperimentConfig(
                label=key,
                design=DesignSpec(DesignKind.GAUSS_AR, M, rho=0.5, marginal_variance=1.0),
                true_model=TrueModel(t, beta, 1.0),
                n_list=tuple(n_list or DEFAULT_N),
                reps=reps,
                criteria=crit,
                family=fam,
                seed=seed,
            )
        ]
    if key == "L1":
        return [
            ExperimentConfig(
                label=f"L1-M{M}",
                design=DesignSpec(DesignKind.LEGENDRE, M),
                true_model=TrueModel((1, 2, 4), (1.0, 1.0, 1.0), 1.0),
                n_list=tuple(n_list or (300,)),
                reps=reps,
                criteria=crit,
                family=fam,
                seed=seed,
            )
            for M in range(5, 30, 5)
        ]
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _criterion_from_json(item) -> CriterionSpec:
    if isinstance(item, str):
        return parse_criterion(item)
    if isinstance(item, dict) and "table" in item:
        try:
            kind = Kind(item["kind"])
        except (KeyError, ValueError):
            raise ConfigError(f"criterion table entry needs kind in {[k.value for k in Kind]}") from None
        return criterion_from_table(item.get("name", kind.value), kind, item["table"])
    raise ConfigError(f"cannot read criterion entry {item!r}")


def load_config(path: str | Path) -> list[ExperimentConfig]:
    """Read an experiment configuration file (JSON).

    Keys: ``label``, ``design`` (``kind`` gauss_ar|legendre|fixed, ``M``,
    ``rho``, ``marginal_variance``, or ``file`` for fixed designs),
    ``true_model`` (``t``, ``beta``, ``sigma2``), ``n_list``, ``reps``,
    ``criteria`` (names or ``{"name", "kind", "table"}`` objects),
    ``family`` (all|nested|greedy), ``order`` and ``seed``.  A ``"preset"``
    key instead expands a built-in scenario, with the other keys overriding it.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    crit = [_criterion_from_json(c) for c in raw["criteria"]] if "criteria" in raw else None
    family = ModelFamily.parse(raw["family"], raw.get("order")) if "family" in raw else None
    if "preset" in raw:
        return preset_configs(
            raw["preset"], seed=raw.get("seed", 0), reps=raw.get("reps", 500),
            n_list=raw.get("n_list"), criteria=crit, family=family,
        )
    try:
        dz = raw["design"]
        kind = DesignKind(dz["kind"])
        if kind is DesignKind.FIXED:
            matrix = load_matrix(path.parent / dz["file"])
            design = DesignSpec(kind, matrix.shape[1], fixed_matrix=matrix)
        else:
            design = DesignSpec(
                kind, int(dz["M"]), rho=float(dz.get("rho", 0.5)),
                marginal_variance=float(dz.get("marginal_variance", 1.0)),
            )
        tm = raw["true_model"]
        true_model = TrueModel(tuple(tm["t"]), tuple(tm["beta"]), float(tm.get("sigma2", 1.0)))
        return [
            ExperimentConfig(
                label=str(raw.get("label", path.stem)),
                design=design,
                true_model=true_model,
                n_list=tuple(int(n) for n in raw["n_list"]),
                reps=int(raw.get("reps", 500)),
                criteria=tuple(crit or (parse_criterion(c) for c in DEFAULT_CRITERIA)),
                family=family or ModelFamily(FamilyKind.GREEDY_NESTED),
                seed=int(raw.get("seed", 0)),
            )
        ]
    except KeyError as exc:
        raise ConfigError(f"config {path} is missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config {path}: {exc}") from None


def load_matrix(path: str | Path) -> np.ndarray:
    """A fixed design: every column of a regcore-format file is a regressor."""
    d = load_dataset(path, response=1)
    return np.column_stack([d.response, d.design])


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------


def _evaluate(
    label: str,
    d: Dataset,
    beta_full: np.ndarray,
    t: Subset,
    family: ModelFamily,
    criteria: Sequence[CriterionSpec],
    n: int,
    rep: int,
) -> list[ReplicationRecord]:
    try:
        order = greedy_order(d)
        if family.kind is FamilyKind.GREEDY_NESTED:
            family = replace(family, order=order)
        ordering_ok = correct_ordering(order, t)
        results = select_many(d, family, criteria)
        out = []
        for res in results:
            fit = fit_ols(d, res.chosen)
            out.append(
                ReplicationRecord(
                    label, res.criterion.name, n, rep, res.chosen, res.chosen == t,
                    ordering_ok, prediction_error(d.design, beta_full, fit),
                )
            )
        return out
    except NumericalError as exc:
        raise ReplicationError(f"{label}: replication n={n}, rep={rep} failed: {exc}") from exc


def run_replication(cfg: ExperimentConfig, n: int, rep: int) -> list[ReplicationRecord]:
    rng = stream(cfg.seed, n, rep)
    X = cfg.design.generate(n, rng)
    y = gen_response(X, cfg.true_model, rng)
    beta = cfg.true_model.full_beta(cfg.design.M)
    return _evaluate(cfg.label, Dataset(X, y), beta, cfg.true_model.t, cfg.family, cfg.criteria, n, rep)


def _run_chunk(cfg: ExperimentConfig, tasks: list[tuple[int, int]]) -> list[ReplicationRecord]:
    out = []
    for n, rep in tasks:
        out.extend(run_replication(cfg, n, rep))
    return out


def _chunks(tasks: list, jobs: int) -> list[list]:
    size = max(1, math.ceil(len(tasks) / (4 * jobs)))
    return [tasks[i : i + size] for i in range(0, len(tasks), size)]


def _dispatch(fn, cfg, tasks: list, jobs: int) -> list[ReplicationRecord]:
    if jobs <= 1 or len(tasks) <= 1:
        return fn(cfg, tasks)
    records: list[ReplicationRecord] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(fn, [cfg] * len(_chunks(tasks, jobs)), _chunks(tasks, jobs)):
            records.extend(part)
    return records


def _canonical(records: list[ReplicationRecord], criteria: Sequence[CriterionSpec]) -> list[ReplicationRecord]:
    rank = {c.name: i for i, c in enumerate(criteria)}
    return sorted(records, key=lambda r: (r.label, r.n, r.rep, rank[r.criterion]))


def summarize(
    records: Sequence[ReplicationRecord], M_of: dict[str, int], family: str
) -> list[SummaryRow]:
    groups: dict[tuple[str, str, int], list[ReplicationRecord]] = {}
    for r in records:
        groups.setdefault((r.label, r.criterion, r.n), []).append(r)
    rows = []
    for (label, crit, n), rs in groups.items():
        N = len(rs)
        p = sum(r.correct for r in rs) / N
        pe = [r.pred_error for r in rs]
        rows.append(
            SummaryRow(
                label, crit, n, M_of[label], family, N, p, math.sqrt(p * (1 - p) / N),
                sum(r.ordering_correct for r in rs) / N,
                math.fsum(pe) / N, math.fsum(e / n for e in pe) / N,
            )
        )
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every (n, replication) of ``cfg`` and summarize per (n, criterion).

    Results are identical for any ``jobs``: each replication has its own
    random stream and records are put in canonical order before summarizing.
    """
    tasks = [(n, rep) for n in cfg.n_list for rep in range(cfg.reps)]
    records = _canonical(_dispatch(_run_chunk, cfg, tasks, jobs), cfg.criteria)
    summary = summarize(records, {cfg.label: cfg.design.M}, cfg.family.kind.value)
    return ExperimentResult(records, summary)


def run_experiments(cfgs: Sequence[ExperimentConfig], jobs: int = 1) -> ExperimentResult:
    out = ExperimentResult([], [])
    for cfg in cfgs:
        res = run_experiment(cfg, jobs)
        out.records.extend(res.records)
        out.summary.extend(res.summary)
    return out


# --------------------------------------------------------------------------
# Parametric bootstrap
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapConfig:
    data: str
    response: str | int
    reps: int = 500
    added_vars: tuple[int, ...] = (8, 18, 28, 38, 48, 58)
    seed: int = 0
    criteria: tuple[CriterionSpec, ...] = field(
        default_factory=lambda: tuple(parse_criterion(c) for c in DEFAULT_CRITERIA)
    )
    family: ModelFamily = ModelFamily(FamilyKind.GREEDY_NESTED)
    label: str = "bootstrap"

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        for k in self.added_vars:
            if k < 0 or k % 2:
                raise ConfigError(f"added variables come in pairs; got k={k}")


@dataclass(frozen=True)
class BaseTruth:
    """The two-regressor model the bootstrap samples from."""

    columns: tuple[int, int]
    predictors: np.ndarray
    beta: tuple[float, float]
    sigma2: float
    names: tuple[str, str] | None = None


def fit_base_truth(d: Dataset) -> BaseTruth:
    """Refit on the two columns with the largest full-model |t| (smallest p-values).

    The noise variance is RSS / (n - 2).
    """
    if d.M < 2:
        raise ConfigError("bootstrap needs at least two regressors in the dataset")
    ts = full_model_t_stats(d)
    if ts.degenerate:
        raise ConfigError("full model fits the response exactly; p-values are undefined")
    top = sorted(range(1, d.M + 1), key=lambda i: (-ts.t[i - 1] ** 2, i))[:2]
    cols = tuple(sorted(top))
    fit = fit_ols(d, cols)
    if fit.rss <= 0:
        raise ConfigError("degenerate base fit: the two predictors fit the response exactly")
    names = tuple(d.names[i - 1] for i in cols) if d.names else None
    return BaseTruth(cols, d.columns(cols), tuple(fit.coefficients), fit.rss / (d.n - 2), names)


def bootstrap_sample(base: BaseTruth, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One bootstrap design (true columns first, then ``k`` spurious) and response."""
    X0 = base.predictors
    n = X0.shape[0]
    mean = X0.mean(axis=0)
    sd = X0.std(axis=0, ddof=1)
    spurious = rng.standard_normal((n, k)) * np.tile(sd, k // 2) + np.tile(mean, k // 2)
    X = np.column_stack([X0, spurious])
    y = X0 @ np.asarray(base.beta) + math.sqrt(base.sigma2) * rng.standard_normal(n)
    return X, y


def _bootstrap_chunk(args, tasks: list[tuple[int, int]]) -> list[ReplicationRecord]:
    cfg, base = args
    out = []
    for k, rep in tasks:
        rng = stream(cfg.seed, k, rep)
        X, y = bootstrap_sample(base, k, rng)
        beta = np.zeros(X.shape[1])
        beta[:2] = base.beta
        label = f"{cfg.label}-M{k + 2}"
        out.extend(_evaluate(label, Dataset(X, y), beta, (1, 2), cfg.family, cfg.criteria, X.shape[0], rep))
    return out


def run_bootstrap(cfg: BootstrapConfig, base: BaseTruth | None = None, jobs: int = 1) -> ExperimentResult:
    """Parametric bootstrap around the two strongest predictors of a dataset.

    For each ``k`` in ``cfg.added_vars`` the design is the two original
    predictors followed by ``k`` spurious columns drawn in pairs from
    independent normals matching the originals' means and variances; the
    response is redrawn from the base fit.  Labels carry the horizon M = k + 2.
    """
    if base is None:
        base = fit_base_truth(load_dataset(cfg.data, cfg.response))
    n = base.predictors.shape[0]
    for k in cfg.added_vars:
        if n <= k + 3:
            raise ConfigError(f"n={n} too small for {k} added variables")
    tasks = [(k, rep) for k in cfg.added_vars for rep in range(cfg.reps)]
    records = _dispatch(_bootstrap_chunk, (cfg, base), tasks, jobs)
    rank = {c.name: i for i, c in enumerate(cfg.criteria)}
    records.sort(key=lambda r: (r.label.rsplit("-M", 1)[0], int(r.label.rsplit("-M", 1)[1]), r.rep, rank[r.criterion]))
    M_of = {f"{cfg.label}-M{k + 2}": k + 2 for k in cfg.added_vars}
    return ExperimentResult(records, summarize(records, M_of, cfg.family.kind.value))


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(str(i) for i in value)
    return str(value)


def _write(path: Path, columns: Sequence[str], rows: Iterable) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(getattr(r, c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_results(result: ExperimentResult, outdir: str | Path, stem: str = "results") -> tuple[Path, Path]:
    """Write ``<stem>_summary.csv`` and ``<stem>_replications.csv``; overwrites."""
    outdir = Path(outdir)
    summary = outdir / f"{stem}_summary.csv"
    reps = outdir / f"{stem}_replications.csv"
    _write(summary, SUMMARY_COLUMNS, result.summary)
    _write(reps, REPLICATION_COLUMNS, result.records)
    return summary, reps


def read_summary(path: str | Path) -> list[SummaryRow]:
    types = {f.name: f.type for f in fields(SummaryRow)}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                SummaryRow(**{
                    k: int(v) if types[k] == "int" else float(v) if types[k] == "float" else v
                    for k, v in row.items()
                })
            )
    return out


def read_replications(path: str | Path) -> list[ReplicationRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            sel = tuple(int(i) for i in row["selected"].split(";") if i)
            out.append(
                ReplicationRecord(
                    row["label"], row["criterion"], int(row["n"]), int(row["rep"]), sel,
                    row["correct"] == "1", row["ordering_correct"] == "1", float(row["pred_error"]),
                )
            )
    return out


def format_summary(rows: Sequence[SummaryRow]) -> str:
    """Fixed-width text table of summary rows."""
    head = f"{'label':<12} {'criterion':<14} {'n':>6} {'M':>4} {'reps':>5} {'P(t^=t)':>8} {'se':>7} {'P(order)':>9} {'pred.err':>10} {'/n':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.label:<12} {r.criterion:<14} {r.n:>6} {r.M:>4} {r.reps:>5} {r.p_correct:>8.3f} "
            f"{r.se_correct:>7.4f} {r.p_ordering:>9.3f} {r.mean_pred_error:>10.4f} {r.mean_pred_error_per_n:>9.5f}"
        )
    return "\n".join(lines)


def default_output_dir() -> Path:
    return Path(os.environ.get("PVSEL_OUTPUT_DIR", "pvsel-results"))
