"""Experiment sweeps, result files and the log-log slope fit."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DegenerateInput, InvalidSpec
from .graph import Topology
from .simulator import Algorithm, ReplicatedSummary, SimConfig, run_replicated

log = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "seed", "rep", "sweep_value", "checkpoint_t", "cum_regret")


class ExperimentKind(str, Enum):
    REGRET_CURVE = "regret_curve"
    P_SWEEP = "p_sweep"
    TOPOLOGY_SWEEP = "topology_sweep"
    D_REGULAR_SWEEP = "d_regular_sweep"
    BASELINE_COMPARE = "baseline_compare"
    LOG_LOG_SLOPE = "log_log_slope"

    @classmethod
    def parse(cls, name: str) -> "ExperimentKind":
        """Accept ``p_sweep``, ``PSweep``, ``p-sweep`` and similar spellings."""
        key = name.replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.replace("_", "") == key:
                return kind
        raise InvalidSpec(f"unknown experiment {name!r}; choose from {[k.value for k in cls]}")


DEFAULT_SWEEPS: dict[ExperimentKind, tuple] = {
    ExperimentKind.REGRET_CURVE: (),
    ExperimentKind.P_SWEEP: (0.3, 0.6, 0.9),
    ExperimentKind.TOPOLOGY_SWEEP: ("complete", "grid2d", "petersen"),
    ExperimentKind.D_REGULAR_SWEEP: (2, 4, 6, 8, 10, 12, 14),
    ExperimentKind.BASELINE_COMPARE: ("gse", "independent_ucb"),
    ExperimentKind.LOG_LOG_SLOPE: tuple(float(v) for v in np.round(np.linspace(0.04, 0.18, 8), 10)),
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    template: SimConfig = field(default_factory=SimConfig)
    sweep: tuple = ()
    reps: int = 20
    out_dir: Optional[Path] = None
    n_jobs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        if not self.sweep:
            object.__setattr__(self, "sweep", DEFAULT_SWEEPS[self.kind])
        if self.reps < 1:
            raise InvalidSpec(f"reps must be >= 1, got {self.reps}")
        for v in self.sweep:
            self.point_config(v)  # validates every sweep point up front

    def point_config(self, value: Any) -> SimConfig:
        """The template specialised to one sweep point."""
        t = self.template
        try:
            if self.kind in (ExperimentKind.P_SWEEP, ExperimentKind.LOG_LOG_SLOPE):
                return replace(t, link_probability=float(value))
            if self.kind is ExperimentKind.TOPOLOGY_SWEEP:
                topo = Topology(value)
                n = 10 if topo is Topology.PETERSEN else t.num_agents
                return replace(t, topology=topo, num_agents=n)
            if self.kind is ExperimentKind.D_REGULAR_SWEEP:
                cfg = replace(t, topology=Topology.CIRCULANT, degree=int(value))
                cfg.build_graph()
                return cfg
            if self.kind is ExperimentKind.BASELINE_COMPARE:
                return replace(t, algorithm=Algorithm(value))
        except ValueError as exc:
            raise InvalidSpec(f"sweep value {value!r} invalid for {self.kind.value}: {exc}") from exc
        return t

    def points(self) -> list[tuple[Any, SimConfig]]:
        if self.kind is ExperimentKind.REGRET_CURVE:
            return [(self.template.link_probability, self.template)]
        return [(v, self.point_config(v)) for v in self.sweep]


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> LogLogFit:
    """Ordinary least squares of ``ln(regret)`` on ``ln(p)``.

    ``r_squared`` is NaN when every regret value is equal (no variance to explain).
    """
    if len(points) < 2:
        raise DegenerateInput("need at least two points")
    xy = np.asarray(points, dtype=float)
    if np.any(xy <= 0):
        raise DegenerateInput("log-log fit needs strictly positive values")
    x, y = np.log(xy[:, 0]), np.log(xy[:, 1])
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateInput("all x values are equal")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan
    return LogLogFit(slope, intercept, r2)


def checkpoints(horizon: int) -> list[int]:
    return sorted({max(1, j * horizon // 10) for j in range(1, 11)})


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    if isinstance(v, Enum):
        return str(v.value)
    return str(v)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    summaries: list[tuple[Any, ReplicatedSummary]]
    fit: Optional[LogLogFit] = None
    csv_path: Optional[Path] = None
    summary_path: Optional[Path] = None

    def mean_final(self) -> list[float]:
        return [s.mean_final for _, s in self.summaries]


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every sweep point and, if ``spec.out_dir`` is set, write CSV and JSONL results.

    Files are ``<kind>.csv`` (one row per sweep point, replication and
    checkpoint) and ``<kind>_summary.jsonl`` (one line per sweep point, plus a
    ``fit`` line for the log-log experiment).
    """
    summaries = []
    for value, cfg in spec.points():
        log.info("%s: sweep value %s, %d reps", spec.kind.value, value, spec.reps)
        summaries.append((value, run_replicated(cfg, spec.reps, spec.n_jobs)))
    result = ExperimentResult(spec, summaries)
    if spec.kind is ExperimentKind.LOG_LOG_SLOPE:
        result.fit = fit_loglog_slope([(float(v), s.mean_final) for v, s in summaries])
    if spec.out_dir is not None:
        write_results(result, Path(spec.out_dir))
    return result


def write_results(result: ExperimentResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.spec.kind.value
    csv_path = out_dir / f"{name}.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for value, summ in result.summaries:
            cps = checkpoints(len(summ.mean_curve))
            for rep, (seed, tr) in enumerate(zip(summ.seeds, summ.traces)):
                for t in cps:
                    w.writerow([name, seed, rep, _fmt(value), t, _fmt(float(tr.cum_regret[t - 1]))])

    summary_path = out_dir / f"{name}_summary.jsonl"
    with summary_path.open("w") as fh:
        for value, summ in result.summaries:
            cps = checkpoints(len(summ.mean_curve))
            finals = summ.final_regrets
            row = {
                "experiment": name,
                "sweep_value": value.value if isinstance(value, Enum) else value,
                "reps": len(summ.traces),
                "mean_final_regret": float(finals.mean()),
                "std_final_regret": float(finals.std(ddof=1)) if len(finals) > 1 else 0.0,
                "checkpoints": cps,
                "mean_cum_regret": [float(summ.mean_curve[t - 1]) for t in cps],
                "std_cum_regret": [float(summ.std_curve[t - 1]) for t in cps],
            }
            fh.write(json.dumps(row) + "\n")
        if result.fit is not None:
            fit = {"slope": result.fit.slope, "intercept": result.fit.intercept,
                   "r_squared": None if math.isnan(result.fit.r_squared) else result.fit.r_squared}
            fh.write(json.dumps({"experiment": name, "fit": fit}) + "\n")
    result.csv_path, result.summary_path = csv_path, summary_path


# ---------------------------------------------------------------------------
# config files

_SIM_FIELDS = {f.name for f in fields(SimConfig)}
_SPEC_KEYS = {"sweep", "reps", "n_jobs", "experiment"}


def _parse_scalar(raw: str) -> Any:
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", "auto", ""):
        return None
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw.strip("\"'")


def parse_config(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines (``#`` comments); comma-separated values become tuples."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SIM_FIELDS | _SPEC_KEYS:
            raise InvalidSpec(f"line {lineno}: unknown key {key!r}")
        if "," in raw:
            out[key] = tuple(_parse_scalar(v.strip()) for v in raw.split(",") if v.strip())
        else:
            out[key] = _parse_scalar(raw)
    return out


def spec_from_config(
    kind: ExperimentKind | str | None,
    config: dict[str, Any],
    *,
    seed: Optional[int] = None,
    reps: Optional[int] = None,
    out_dir: Optional[Path] = None,
    n_jobs: Optional[int] = None,
) -> ExperimentSpec:
    """Build a spec from parsed config values; explicit keyword arguments win."""
    cfg = dict(config)
    kind = kind if kind is not None else cfg.pop("experiment", None)
    cfg.pop("experiment", None)
    if kind is None:
        raise InvalidSpec("no experiment kind given")
    kind = ExperimentKind.parse(kind) if isinstance(kind, str) else ExperimentKind(kind)
    sweep = cfg.pop("sweep", ())
    if not isinstance(sweep, tuple):
        sweep = (sweep,)
    file_reps = cfg.pop("reps", 20)
    file_jobs = cfg.pop("n_jobs", 1)
    if seed is not None:
        cfg["master_seed"] = seed
    try:
        template = SimConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"invalid simulation config: {exc}") from exc
    return ExperimentSpec(
        kind,
        template,
        sweep,
        reps if reps is not None else int(file_reps),
        out_dir,
        n_jobs if n_jobs is not None else int(file_jobs),
    )
