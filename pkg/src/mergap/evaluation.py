"""Model evaluation: R2 scores, cross-dataset grids, combined-training runs.

The central artifact is the cross-dataset grid: one regressor per training
corpus, scored on its own held-out test split (diagonal) and on every other
corpus in full (off-diagonal). R2 can go arbitrarily negative there, which
is exactly the point: it quantifies how badly a model transfers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datasets import SplitAssignment
from .regressor import TrainConfig, TrainingDivergedError, predict, train

AXES = ("valence", "arousal")


def r2(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot (unbounded below).

    Undefined when y_true is constant; that raises instead of returning
    an arbitrary value.
    """
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred length mismatch")
    if y_true.size == 0:
        raise ValueError("r2 of empty arrays")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r2 undefined: ground truth is constant")
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class EvalResult:
    """Per-axis R2 for one (model, evaluation set) pair."""

    valence_r2: float
    arousal_r2: float

    @property
    def avg(self) -> float:
        return (self.valence_r2 + self.arousal_r2) / 2.0


def evaluate(y_true: np.ndarray, y_pred: np.ndarray) -> EvalResult:
    """Column-wise R2 over (n, 2) arrays laid out (valence, arousal)."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim != 2 or y_true.shape[1] != 2 or y_true.shape != y_pred.shape:
        raise ValueError("evaluate() expects matching (n, 2) arrays")
    return EvalResult(
        valence_r2=r2(y_true[:, 0], y_pred[:, 0]),
        arousal_r2=r2(y_true[:, 1], y_pred[:, 1]),
    )


@dataclass(frozen=True)
class EvalDataset:
    """Feature matrix, normalized labels, and split for one corpus.

    Rows of x and y are aligned with clip_ids; the split must cover exactly
    those ids.
    """

    dataset_id: str
    clip_ids: tuple
    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n, 2), already in [-1, 1]
    split: SplitAssignment

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.ndim != 2 or self.y.shape[1] != 2:
            raise ValueError("EvalDataset needs x (n, d) and y (n, 2)")
        n = len(self.clip_ids)
        if self.x.shape[0] != n or self.y.shape[0] != n:
            raise ValueError("clip_ids, x and y row counts differ")
        if set(self.split.assignment) != set(self.clip_ids):
            raise ValueError(
                f"split ids do not match dataset {self.dataset_id!r} clip ids"
            )

    @property
    def n(self) -> int:
        return len(self.clip_ids)


def split_xy(ds: EvalDataset, *names: str):
    """Rows of (x, y) whose clips fall in the named split(s), in dataset order."""
    wanted = set(names)
    idx = [i for i, cid in enumerate(ds.clip_ids) if ds.split.assignment[cid] in wanted]
    if not idx:
        raise ValueError(f"dataset {ds.dataset_id!r} has no clips in splits {sorted(wanted)}")
    return ds.x[idx], ds.y[idx]


def full_xy(ds: EvalDataset):
    return ds.x, ds.y


def train_on(ds: EvalDataset, config: Optional[TrainConfig] = None):
    """Fit a regressor on the train split, early-stopping on the val split."""
    x_train, y_train = split_xy(ds, "train")
    x_val, y_val = split_xy(ds, "val")
    return train(x_train, y_train, x_val, y_val, config)


@dataclass(frozen=True)
class GridResult:
    train_ids: tuple
    eval_ids: tuple
    cells: dict  # (train_id, eval_id) -> EvalResult
    errors: dict  # (train_id, eval_id) -> str; eval_id "*" means training failed
    reports: dict = field(default_factory=dict)  # train_id -> TrainReport


def cross_grid(datasets, config: Optional[TrainConfig] = None) -> GridResult:
    """Train one model per dataset; score diagonal on the test split only and
    every off-diagonal cell on the full other corpus.

    A failure is confined to its cell (or to its row when training itself
    fails); the rest of the grid still gets computed.
    """
    datasets = list(datasets)
    ids = tuple(ds.dataset_id for ds in datasets)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate dataset ids in grid")
    cells: dict = {}
    errors: dict = {}
    reports: dict = {}
    for train_ds in datasets:
        try:
            params, report = train_on(train_ds, config)
        except (ValueError, TrainingDivergedError, FloatingPointError) as exc:
            errors[(train_ds.dataset_id, "*")] = f"{type(exc).__name__}: {exc}"
            continue
        reports[train_ds.dataset_id] = report
        for eval_ds in datasets:
            key = (train_ds.dataset_id, eval_ds.dataset_id)
            try:
                if eval_ds.dataset_id == train_ds.dataset_id:
                    x, y = split_xy(eval_ds, "test")
                else:
                    x, y = full_xy(eval_ds)
                cells[key] = evaluate(y, predict(params, x))
            except (ValueError, FloatingPointError) as exc:
                errors[key] = f"{type(exc).__name__}: {exc}"
    return GridResult(train_ids=ids, eval_ids=ids, cells=cells, errors=errors, reports=reports)


@dataclass(frozen=True)
class FinalRun:
    """One row of the combined-training comparison."""

    name: str
    train_ds: EvalDataset
    extra_targets: dict  # target name -> (x, y); in-domain test is implicit


@dataclass(frozen=True)
class FinalResult:
    run_names: tuple
    target_names: dict  # run name -> tuple of target names, "in_domain" first
    cells: dict  # (run_name, target_name) -> EvalResult
    errors: dict
    reports: dict


def final_experiment(runs, config: Optional[TrainConfig] = None) -> FinalResult:
    """Train each run's model once and score it on the in-domain test split
    plus the run's extra targets (typically full held-out corpora)."""
    runs = list(runs)
    names = tuple(run.name for run in runs)
    if len(set(names)) != len(names):
        raise ValueError("duplicate run names")
    cells: dict = {}
    errors: dict = {}
    reports: dict = {}
    target_names: dict = {}
    for run in runs:
        target_names[run.name] = ("in_domain",) + tuple(run.extra_targets)
        try:
            params, report = train_on(run.train_ds, config)
        except (ValueError, TrainingDivergedError, FloatingPointError) as exc:
            errors[(run.name, "*")] = f"{type(exc).__name__}: {exc}"
            continue
        reports[run.name] = report
        targets = {"in_domain": split_xy(run.train_ds, "test")}
        targets.update(run.extra_targets)
        for tname, (x, y) in targets.items():
            try:
                cells[(run.name, tname)] = evaluate(y, predict(params, x))
            except (ValueError, FloatingPointError) as exc:
                errors[(run.name, tname)] = f"{type(exc).__name__}: {exc}"
    return FinalResult(
        run_names=names,
        target_names=target_names,
        cells=cells,
        errors=errors,
        reports=reports,
    )


def grid_to_rows(result: GridResult) -> list:
    """Flatten a grid for CSV output; failed cells carry an error string."""
    rows = []
    for tid in result.train_ids:
        for eid in result.eval_ids:
            cell = result.cells.get((tid, eid))
            if cell is not None:
                rows.append([tid, eid, cell.avg, cell.valence_r2, cell.arousal_r2])
            else:
                err = result.errors.get((tid, eid)) or result.errors.get((tid, "*"), "missing")
                rows.append([tid, eid, "", "", "", err])
    return rows


def render_grid_csv(result: GridResult) -> str:
    lines = ["train_dataset,eval_dataset,r2_avg,r2_valence,r2_arousal,error"]
    for row in grid_to_rows(result):
        tid, eid = row[0], row[1]
        if len(row) == 5:
            _, _, avg, val, aro = row
            lines.append(f"{tid},{eid},{avg!r},{val!r},{aro!r},")
        else:
            err = row[5].replace('"', "'").replace("\n", " ").replace(",", ";")
            lines.append(f"{tid},{eid},,,,{err}")
    return "\n".join(lines) + "\n"


def _fmt_cell(cell: Optional[EvalResult]) -> str:
    if cell is None:
        return "    --"
    return f"{cell.avg:6.2f}"


def render_grid_table(result: GridResult) -> str:
    """Fixed-width text table of avg R2; rows train, columns eval."""
    width = max([5] + [len(i) for i in result.eval_ids])
    header = "train\\eval " + " ".join(f"{i:>{max(6, width)}}" for i in result.eval_ids)
    lines = [header]
    for tid in result.train_ids:
        cells = " ".join(
            f"{_fmt_cell(result.cells.get((tid, eid))):>{max(6, width)}}"
            for eid in result.eval_ids
        )
        lines.append(f"{tid:<10} {cells}")
    return "\n".join(lines) + "\n"


def render_final_csv(result: FinalResult) -> str:
    lines = ["run,target,r2_avg,r2_valence,r2_arousal,error"]
    for rname in result.run_names:
        for tname in result.target_names[rname]:
            cell = result.cells.get((rname, tname))
            if cell is not None:
                lines.append(
                    f"{rname},{tname},{cell.avg!r},{cell.valence_r2!r},{cell.arousal_r2!r},"
                )
            else:
                err = result.errors.get((rname, tname)) or result.errors.get((rname, "*"), "missing")
                err = err.replace('"', "'").replace("\n", " ").replace(",", ";")
                lines.append(f"{rname},{tname},,,,{err}")
    return "\n".join(lines) + "\n"
