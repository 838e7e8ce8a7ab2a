"""Monte Carlo sweeps over the subsampling parameters.

Every trial draws its own sources and outer-attempt seed from
``SeedSequence([seed, sweep_index, trial_index])``, so results do not depend
on trial order or on how trials are spread across worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .dictionary import Dictionary, build_dictionary, build_grid
from .localize import (
    DEFAULT_INNER_ITER,
    SubsamplingScheme,
    check_mic_placement,
    localize,
    noise_tolerance,
    synthesize_measurement,
)
from .modal import Point3, RoomSpec, enumerate_modes_below, enumerate_modes_in_index_cube

SWEEP_AXES = ("col_factor", "row_keep")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    room: tuple[float, float, float] = (4.0, 7.0, 3.0)
    rt60: float = 0.5
    c: float = 343.0
    rho0: float = 1.2
    mic: tuple[float, float, float] = (0.9, 2.2, 0.65)
    grid: tuple[int, int, int] = (10, 15, 10)
    margin: float = 0.0
    n_max: int | None = 3
    f_max: float | None = None
    k: int = 2
    sweep_axis: str = "col_factor"
    sweep_values: list = field(default_factory=lambda: [1, 2, 3, 15])
    col_factor: float = 2.0
    row_keep: int | None = None
    trials: int = 100
    max_outer: int = 300
    inner_max_iter: int = DEFAULT_INNER_ITER
    tol: float | None = None
    seed: int = 0
    snr_db: float | None = None
    allow_symmetric_mic: bool = False

    def __post_init__(self):
        self.room = tuple(float(v) for v in self.room)
        self.mic = tuple(float(v) for v in self.mic)
        self.grid = tuple(int(v) for v in self.grid)
        self.sweep_values = list(self.sweep_values)

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        if not self.sweep_values:
            raise ConfigError("sweep_values must be non-empty")
        if (self.n_max is None) == (self.f_max is None):
            raise ConfigError("give exactly one of n_max and f_max")
        if self.k < 1 or self.max_outer < 1:
            raise ConfigError("k and max_outer must be >= 1")
        try:
            room = self.room_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if len(self.mic) != 3 or not room.contains(Point3.of(self.mic)):
            raise ConfigError(f"mic {self.mic} is outside the room")
        if not self.allow_symmetric_mic:
            try:
                check_mic_placement(self.mic, room)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.k >= int(np.prod(self.grid)):
            raise ConfigError("k must be smaller than the number of grid cells")

    def room_spec(self) -> RoomSpec:
        return RoomSpec(*self.room, rt60=self.rt60, c=self.c, rho0=self.rho0)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["room"], d["mic"], d["grid"] = list(self.room), list(self.mic), list(self.grid)
        return d


@dataclass
class TrialRecord:
    trial: int
    seed: int
    true_indices: list[int]
    recovered_indices: list[int]
    converged: bool
    success: bool
    outer_iterations: int
    inner_iterations: int
    elapsed: float
    error: str | None = None


@dataclass
class SweepPoint:
    value: float
    trials: list[TrialRecord]

    @property
    def successes(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.success]

    @property
    def success_rate(self) -> float:
        return len(self.successes) / len(self.trials)

    @property
    def converged_rate(self) -> float:
        return sum(t.converged for t in self.trials) / len(self.trials)

    def _mean(self, attr) -> float:
        ok = self.successes
        return float(np.mean([getattr(t, attr) for t in ok])) if ok else math.nan

    @property
    def avg_outer_iterations(self) -> float:
        return self._mean("outer_iterations")

    @property
    def avg_inner_iterations(self) -> float:
        return self._mean("inner_iterations")

    @property
    def avg_time(self) -> float:
        return self._mean("elapsed")


@dataclass
class MonteCarloReport:
    config: ExperimentConfig
    points: list[SweepPoint]

    def summary(self) -> list[dict]:
        return [
            {
                "sweep_value": p.value,
                "success_rate": p.success_rate,
                "avg_iterations": p.avg_outer_iterations,
                "avg_time": p.avg_time,
                "converged_rate": p.converged_rate,
                "avg_inner_iterations": p.avg_inner_iterations,
            }
            for p in self.points
        ]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "summary": self.summary(),
            "points": [
                {"value": p.value, "trials": [asdict(t) for t in p.trials]} for p in self.points
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MonteCarloReport":
        cfg = ExperimentConfig(**data["config"])
        points = [
            SweepPoint(p["value"], [TrialRecord(**t) for t in p["trials"]]) for p in data["points"]
        ]
        return cls(cfg, points)


def _null_nan(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _null_nan(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_null_nan(v) for v in obj]
    return obj


def emit_report(report: MonteCarloReport, fmt: str = "json", timing: bool = True) -> str:
    """Serialize a report as JSON (all trials) or CSV (one row per sweep point).

    ``timing=False`` zeroes the wall-clock fields so two runs can be
    compared byte for byte.
    """
    if fmt == "json":
        data = report.to_dict()
        if not timing:
            for p in data["points"]:
                for t in p["trials"]:
                    t["elapsed"] = 0.0
            for row in data["summary"]:
                row["avg_time"] = 0.0 if not math.isnan(row["avg_time"]) else row["avg_time"]
        return json.dumps(_null_nan(data), indent=1, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        rows = report.summary()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("nan" if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> MonteCarloReport:
    data = json.loads(text)
    for row in data.get("summary", []):
        for key, v in row.items():
            if v is None:
                row[key] = math.nan
    return MonteCarloReport.from_dict(data)


def write_report(report: MonteCarloReport, path, fmt: str = "json") -> None:
    text = emit_report(report, fmt)
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def build_experiment_dictionary(cfg: ExperimentConfig) -> Dictionary:
    room = cfg.room_spec()
    if cfg.n_max is not None:
        modes = enumerate_modes_in_index_cube(cfg.n_max, room)
    else:
        modes = enumerate_modes_below(cfg.f_max, room)
    grid = build_grid(room, cfg.grid, cfg.margin)
    return build_dictionary(modes, grid, Point3.of(cfg.mic), room)


def trial_seed_sequence(seed: int, sweep_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, sweep_index, trial])


def draw_sources(rng: np.random.Generator, d: Dictionary, k: int) -> list[int]:
    """K distinct grid cells, never the cell nearest the mic."""
    excluded = d.grid.nearest(d.mic)
    pool = np.delete(np.arange(d.grid.size), excluded)
    return sorted(int(i) for i in rng.choice(pool, k, replace=False))


def scheme_for(cfg: ExperimentConfig, value, n_rows: int, seed: int) -> SubsamplingScheme:
    row_keep = cfg.row_keep if cfg.row_keep is not None else n_rows
    col_factor = cfg.col_factor
    if cfg.sweep_axis == "col_factor":
        col_factor = float(value)
    else:
        row_keep = int(value)
    return SubsamplingScheme(row_keep=row_keep, col_factor=col_factor, seed=seed)


def run_trial(cfg: ExperimentConfig, d: Dictionary, sweep_index: int, trial: int) -> TrialRecord:
    ss = trial_seed_sequence(cfg.seed, sweep_index, trial)
    rng = np.random.default_rng(ss)
    true = draw_sources(rng, d, cfg.k)
    attempt_seed = int(rng.integers(2**63))
    noise_seed = int(rng.integers(2**63))
    value = cfg.sweep_values[sweep_index]
    try:
        sources = [(d.grid.point(i), 1.0) for i in true]
        meas = synthesize_measurement(sources, d.modes, d.mic, d.room, cfg.snr_db, seed=noise_seed)
        scheme = scheme_for(cfg, value, d.shape[0], attempt_seed)
        tol = cfg.tol if cfg.tol is not None else noise_tolerance(cfg.snr_db)
        res = localize(
            d, meas, cfg.k, scheme, cfg.max_outer, tol, cfg.inner_max_iter,
            allow_symmetric_mic=cfg.allow_symmetric_mic,
        )
    except Exception as exc:  # recorded, never aborts the sweep
        return TrialRecord(trial, attempt_seed, true, [], False, False, 0, 0, 0.0, repr(exc))
    recovered = sorted(res.grid_indices)
    return TrialRecord(
        trial=trial,
        seed=attempt_seed,
        true_indices=true,
        recovered_indices=recovered,
        converged=res.converged,
        success=res.converged and recovered == true,
        outer_iterations=res.outer_iterations,
        inner_iterations=res.inner_iterations,
        elapsed=res.elapsed,
    )


_WORKER: dict = {}


def _init_worker(cfg_dict):
    cfg = ExperimentConfig(**cfg_dict)
    _WORKER["cfg"] = cfg
    _WORKER["dict"] = build_experiment_dictionary(cfg)


def _work(job):
    return run_trial(_WORKER["cfg"], _WORKER["dict"], *job)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1, progress=None) -> MonteCarloReport:
    """Run every (sweep value, trial) pair and aggregate per sweep value.

    Success means converged with exactly the true set of grid cells.
    Dictionary construction is not part of the recorded reconstruction time.
    """
    cfg.validate()
    todo = [(s, t) for s in range(len(cfg.sweep_values)) for t in range(cfg.trials)]
    if jobs == 1:
        d = build_experiment_dictionary(cfg)
        records = []
        for job in todo:
            records.append(run_trial(cfg, d, *job))
            if progress:
                progress(len(records), len(todo))
    else:
        jobs = jobs if jobs > 0 else os.cpu_count() or 1
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(cfg.to_dict(),)) as ex:
            records = list(ex.map(_work, todo, chunksize=max(1, len(todo) // (4 * jobs))))
    points = []
    for s, value in enumerate(cfg.sweep_values):
        trials = [r for (si, _), r in zip(todo, records) if si == s]
        points.append(SweepPoint(value, trials))
    return MonteCarloReport(cfg, points)

