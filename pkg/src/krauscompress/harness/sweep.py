"""Parameter sweeps over (n, sampler, seed) for one channel, written as CSV."""
from __future__ import annotations

import csv
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

from .. import metrics
from ..channel import kraus_rank
from ..compressor import SAMPLERS, CoarseCompressionWarning, CompressionPlan, compress
from .specs import SpecError, build_channel, parse_spec

CSV_HEADER = ("channel", "n", "sampler", "seed", "metric", "value", "ms")
METRICS = ("one_to_p", "max_output_infnorm", "tp_defect", "kraus_rank",
           "ordering_margin", "ordering_parameter")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    channel: str
    n: int
    sampler: str
    seed: int
    metric: str
    value: float
    ms: float

    def as_csv(self) -> list:
        return [self.channel, self.n, self.sampler, self.seed, self.metric,
                repr(float(self.value)), f"{self.ms:.3f}"]


@dataclass
class ScenarioConfig:
    """One sweep: a channel spec, a plan grid, metrics and where to write.

    Metric names: ``one_to_p:p=<p>`` (``p`` may be ``inf``), ``max_output_infnorm``
    (of the reference channel), ``tp_defect``, ``kraus_rank``,
    ``ordering_margin:eps=<eps>`` and ``ordering_parameter``.  Distances use the
    raw sliced map unless the metric carries ``map=corrected``.
    """

    channel: str
    n: List[int]
    samplers: List[str] = field(default_factory=lambda: ["haar"])
    seeds: List[int] = field(default_factory=lambda: [0])
    metrics: List[str] = field(default_factory=lambda: ["one_to_p:p=1"])
    budget: str = "quick"
    out_dir: str = "out"
    csv_name: str = "sweep.csv"
    record_timing: bool = True
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("n", "samplers", "seeds", "metrics"):
            if not getattr(self, name):
                raise ConfigError(f"{name} grid is empty")
        try:
            parse_spec(self.channel)
        except SpecError as exc:
            raise ConfigError(str(exc)) from None
        for n in self.n:
            if int(n) < 1:
                raise ConfigError(f"slice count must be >= 1, got {n}")
        for s in self.samplers:
            if s not in SAMPLERS:
                raise ConfigError(f"unknown sampler {s!r}")
        for m in self.metrics:
            parse_metric(m)
        if self.budget not in ("quick", "full"):
            raise ConfigError(f"unknown budget {self.budget!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def csv_path(self) -> str:
        return os.path.join(self.out_dir, self.csv_name)


def parse_metric(text: str):
    name, _, rest = text.partition(":")
    if name not in METRICS:
        raise ConfigError(f"unknown metric {name!r}")
    opts = {}
    for token in filter(None, rest.split(",")):
        key, eq, value = token.partition("=")
        if not eq:
            raise ConfigError(f"expected key=value in metric {text!r}, got {token!r}")
        opts[key] = value
    allowed = {"one_to_p": {"p", "map"}, "ordering_margin": {"eps", "map"},
               "ordering_parameter": {"map"}}.get(name, set())
    bad = set(opts) - allowed
    if bad:
        raise ConfigError(f"metric {name!r} does not take {sorted(bad)}")
    if opts.get("map", "sliced") not in ("sliced", "corrected"):
        raise ConfigError(f"map must be sliced or corrected in {text!r}")
    try:
        if "p" in opts:
            opts["p"] = float(opts["p"])
        if "eps" in opts:
            opts["eps"] = float(opts["eps"])
    except ValueError:
        raise ConfigError(f"non-numeric option in metric {text!r}") from None
    if name == "ordering_margin" and "eps" not in opts:
        raise ConfigError("ordering_margin needs eps=<value>")
    return name, opts


def _evaluate(ref, result, metric: str, budget: metrics.OptBudget) -> float:
    name, opts = parse_metric(metric)
    approx = result.sliced
    if opts.get("map") == "corrected":
        if result.corrected is None:
            return float("nan")
        approx = result.corrected
    if name == "one_to_p":
        return metrics.one_to_p_distance(approx, ref, opts.get("p", 1.0), budget).value
    if name == "max_output_infnorm":
        return metrics.max_output_infnorm(ref, budget).value
    if name == "tp_defect":
        return result.tp_defect
    if name == "kraus_rank":
        return float(kraus_rank(result.sliced))
    if name == "ordering_margin":
        return metrics.ordering_margin(ref, approx, opts["eps"], budget).value
    return metrics.ordering_parameter(ref, approx, budget).value


def _run_point(args) -> List[SweepRow]:
    config, n, sampler, seed = args
    ref = build_channel(config.channel)
    budget = metrics.OptBudget.named(config.budget, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseCompressionWarning)
        result = compress(ref, CompressionPlan(n, sampler, seed))
    rows = []
    for metric in config.metrics:
        start = time.perf_counter()
        value = _evaluate(ref, result, metric, budget)
        ms = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
        rows.append(SweepRow(config.channel, n, sampler, seed, metric, value, ms))
    return rows


def grid(config: ScenarioConfig) -> list:
    return [(config, int(n), s, int(seed))
            for n in config.n for s in config.samplers for seed in config.seeds]


def run_sweep(config: ScenarioConfig, write: bool = True) -> List[SweepRow]:
    """Evaluate every grid point; rows come back in grid order whatever ``workers`` is."""
    points = grid(config)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(_run_point, points))
    else:
        chunks = [_run_point(p) for p in points]
    rows = [row for chunk in chunks for row in chunk]
    if write:
        os.makedirs(config.out_dir, exist_ok=True)
        write_csv(rows, config.csv_path)
        write_config(config.to_dict(), config.out_dir)
    return rows


def write_csv(rows: Sequence[SweepRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.as_csv())


def write_config(resolved: dict, out_dir: str, name: str = "config.json") -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
