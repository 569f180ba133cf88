"""Machine-readable verification suite: one named check per acceptance criterion.

Each check returns rows ``(check, quantity, value, threshold, passed)``.  The
rows carry no timings, so ``verify.csv`` is byte-identical across runs with
the same seed.  Wall times go to the JSON report only.
"""
from __future__ import annotations

import csv
import filecmp
import io
import json
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .. import linalg, metrics, zoo
from .. import rng as _rng
from ..channel import (
    Channel,
    apply,
    kraus_from_choi,
    kraus_rank,
    stinespring,
    to_choi,
)
from ..compressor import (
    CoarseCompressionWarning,
    CompressionPlan,
    compress,
    psi1_moment_oracle,
    slice_kraus,
)
from .correlations import correlations_demo
from .svg import emit_svg
from .sweep import ScenarioConfig, run_sweep

LEVELS = ("quick", "full")
VERIFY_CSV_HEADER = ("check", "quantity", "value", "threshold", "passed")

# wall-time limits per check, seconds
TIME_LIMITS = {1: 10, 2: 10, 3: 60, 4: 60, 5: 300, 6: 120, 7: 30, 8: 180, 9: 300, 10: 120, 11: 600}

CHECK_NAMES = {
    1: "representation_round_trips",
    2: "exact_identities",
    3: "slice_unbiasedness",
    4: "psi1_moment_bound",
    5: "scaling_law",
    6: "tp_correction",
    7: "qc_lower_bound",
    8: "entropy_fidelity_corollaries",
    9: "werner_compression",
    10: "correlation_destruction",
    11: "determinism",
}


@dataclass
class Row:
    quantity: str
    value: float
    threshold: str
    passed: bool


@dataclass
class CheckResult:
    check_id: int
    name: str
    rows: List[Row] = field(default_factory=list)
    seconds: float = 0.0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.rows) and all(r.passed for r in self.rows)

    @property
    def within_time(self) -> bool:
        return self.seconds < TIME_LIMITS[self.check_id]

    def to_dict(self) -> dict:
        return {
            "id": self.check_id,
            "name": self.name,
            "passed": self.passed,
            "seconds": round(self.seconds, 3),
            "time_limit_s": TIME_LIMITS[self.check_id],
            "within_time": self.within_time,
            "error": self.error,
            "rows": [
                {"quantity": r.quantity, "value": r.value, "threshold": r.threshold,
                 "passed": r.passed}
                for r in self.rows
            ],
        }


class Context:
    """Level, seed and an optional mutation applied to every zoo channel the checks build."""

    def __init__(self, level: str, seed: int, mutate: Optional[Callable[[Channel], Channel]] = None):
        if level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
        self.level = level
        self.seed = seed
        self.mutate = mutate
        self.budget = metrics.OptBudget.named(level, seed=seed)

    @property
    def full(self) -> bool:
        return self.level == "full"

    def make(self, factory, *args) -> Channel:
        ch = factory(*args)
        return self.mutate(ch) if self.mutate else ch


def _le(quantity: str, value: float, bound: float) -> Row:
    return Row(quantity, float(value), f"<= {bound!r}", bool(value <= bound))


def _ge(quantity: str, value: float, bound: float) -> Row:
    return Row(quantity, float(value), f">= {bound!r}", bool(value >= bound))


def _eq(quantity: str, value, expected) -> Row:
    return Row(quantity, float(value), f"== {expected!r}", bool(value == expected))


def _compress(ch: Channel, plan: CompressionPlan):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseCompressionWarning)
        return compress(ch, plan)


def _states(dim: int, count: int, seed: int) -> np.ndarray:
    gen = _rng.substream(seed, _rng.POOL_STREAM + 10 + dim)
    return np.stack([_rng.random_density(gen, dim, int(gen.integers(1, dim + 1)))
                     for _ in range(count)])


# -- 1 --------------------------------------------------------------------------------


def check_round_trips(ctx: Context) -> List[Row]:
    channels = [
        ctx.make(zoo.random_channel, 2, 3, 4, ctx.seed),
        ctx.make(zoo.random_channel, 8, 8, 8, ctx.seed + 1),
        ctx.make(zoo.random_channel, 5, 3, 7, ctx.seed + 2),
        ctx.make(zoo.randomizing_channel, 4),
        ctx.make(zoo.werner_channel, 3, 0.3),
        ctx.make(zoo.qc_channel, 4, 8),
        ctx.make(zoo.cq_channel, 8, 4),
    ]
    choi_err = stine_err = 0.0
    count = 0
    per_channel = -(-100 // len(channels))
    for i, ch in enumerate(channels):
        rebuilt = kraus_from_choi(to_choi(ch))
        iso = stinespring(ch)
        for rho in _states(ch.dim_in, per_channel, ctx.seed + i):
            direct = apply(ch, rho)
            choi_err = max(choi_err, np.abs(apply(rebuilt, rho) - direct).max())
            big = iso.matrix @ rho @ iso.matrix.conj().T
            via_v = linalg.partial_trace(big, (iso.dim_out, iso.dim_env), keep=0)
            stine_err = max(stine_err, np.abs(via_v - direct).max())
            count += 1
    return [
        _ge("states_checked", count, 100),
        _le("kraus_choi_kraus_max_error", choi_err, 1e-9),
        _le("stinespring_max_error", stine_err, 1e-9),
    ]


# -- 2 --------------------------------------------------------------------------------


def check_identities(ctx: Context) -> List[Row]:
    rows = []
    for d in (2, 3, 4):
        tau = to_choi(ctx.make(zoo.randomizing_channel, d)).matrix
        rows.append(_le(f"randomizing_choi_error_d{d}", np.abs(tau - np.eye(d * d) / d**2).max(), 1e-12))
    for d in (3, 4):
        for lam, expected in ((0.5, d * d), (1.0, d * (d + 1) // 2), (0.0, d * (d - 1) // 2)):
            rank = kraus_rank(ctx.make(zoo.werner_channel, d, lam))
            rows.append(_eq(f"werner_rank_d{d}_lambda{lam:g}", rank, expected))
    for count, d in ((4, 4), (16, 4), (37, 5)):
        frame = zoo.tight_frame(count, d)
        rows.append(_le(f"frame_identity_error_{count}_{d}",
                        np.abs(frame.frame_operator() - np.eye(d) / d).max(), 1e-12))
        rows.append(_le(f"frame_overlap_error_{count}_{d}",
                        np.abs(np.abs(frame.vectors) ** 2 - 1 / d).max(), 1e-12))
    qc = ctx.make(zoo.qc_channel, 16, 16)
    out = apply(qc, linalg.projector(linalg.ket(16, 0)))
    rows.append(_le("qc_16_16_basis_output_error", np.abs(out - np.eye(16) / 16).max(), 1e-12))
    # every zoo constructor is exactly trace preserving
    for label, ch in (
        ("randomizing_4", ctx.make(zoo.randomizing_channel, 4)),
        ("werner_4_0.75", ctx.make(zoo.werner_channel, 4, 0.75)),
        ("qc_4_8", ctx.make(zoo.qc_channel, 4, 8)),
        ("cq_8_4", ctx.make(zoo.cq_channel, 8, 4)),
        ("random_4_4_8", ctx.make(zoo.random_channel, 4, 4, 8, ctx.seed)),
    ):
        rows.append(_le(f"tp_defect_{label}", ch.tp_defect, 1e-10))
    return rows


# -- 3 --------------------------------------------------------------------------------


def unbiasedness_statistics(ch: Channel, rho: np.ndarray, slices: int, seed: int):
    """Entrywise ``|mean - target|`` and standard errors of ``N_phi(rho)`` over Haar slices."""
    iso = stinespring(ch)
    gen = _rng.substream(seed, _rng.TRIAL_STREAM)
    total = np.zeros((ch.dim_out, ch.dim_out), dtype=complex)
    total_sq_re = np.zeros((ch.dim_out, ch.dim_out))
    total_sq_im = np.zeros((ch.dim_out, ch.dim_out))
    done = 0
    while done < slices:
        k = min(2000, slices - done)
        kraus = slice_kraus(iso, _rng.haar_vectors(gen, k, iso.dim_env))
        outs = kraus @ rho @ kraus.conj().transpose(0, 2, 1)
        total += outs.sum(axis=0)
        total_sq_re += (outs.real**2).sum(axis=0)
        total_sq_im += (outs.imag**2).sum(axis=0)
        done += k
    mean = total / slices
    var_re = (total_sq_re - slices * mean.real**2) / (slices - 1)
    var_im = (total_sq_im - slices * mean.imag**2) / (slices - 1)
    se_re = np.sqrt(np.clip(var_re, 0, None) / slices)
    se_im = np.sqrt(np.clip(var_im, 0, None) / slices)
    dev = mean - apply(ch, rho)
    return np.abs(dev.real), se_re, np.abs(dev.imag), se_im


def check_unbiasedness(ctx: Context) -> List[Row]:
    channels = {
        "randomizing_8": ctx.make(zoo.randomizing_channel, 8),
        "werner_4_0.75": ctx.make(zoo.werner_channel, 4, 0.75),
        "random_8_8_64": ctx.make(zoo.random_channel, 8, 8, 64, ctx.seed),
    }
    rows = []
    for j, (label, ch) in enumerate(channels.items()):
        worst = 0.0
        for i, rho in enumerate(_states(ch.dim_in, 5, ctx.seed + 100 + j)):
            dre, sre, dim, sim = unbiasedness_statistics(ch, rho, 10_000, ctx.seed + 10 * j + i)
            # deviation measured in standard errors, with 1e-12 absolute slack
            z_re = np.max(np.maximum(dre - 1e-12, 0) / np.where(sre > 0, sre, np.inf))
            z_im = np.max(np.maximum(dim - 1e-12, 0) / np.where(sim > 0, sim, np.inf))
            worst = max(worst, z_re, z_im)
        rows.append(_le(f"max_entry_deviation_in_se_{label}", worst, 4.0))
    return rows


# -- 4 --------------------------------------------------------------------------------


def check_moments(ctx: Context) -> List[Row]:
    rows = []
    s, d = 8, 4
    gen = _rng.substream(ctx.seed, _rng.POOL_STREAM + 20)
    for k in range(5):
        sigma = _rng.random_density(gen, d * s, int(gen.integers(1, d * s + 1)))
        y = _rng.haar_vector(gen, d)
        worst = 0.0
        for p in (1, 2, 3, 4):
            est = psi1_moment_oracle(sigma, y, p, 100_000, ctx.seed + 100 * k + p, dim_env=s)
            worst = max(worst, est.normalized_moment / est.bound)
        rows.append(_le(f"moment_over_bound_case{k}", worst, 1.05))
    return rows


# -- 5 --------------------------------------------------------------------------------


def scaling_errors(ctx: Context, ns: Sequence[int] = (256, 1024, 4096), seeds: int = 5) -> Dict[int, float]:
    ref = ctx.make(zoo.randomizing_channel, 8)
    out = {}
    for n in ns:
        errs = []
        for s in range(seeds):
            sliced = _compress(ref, CompressionPlan(n, "haar", ctx.seed + s)).sliced
            errs.append(metrics.one_to_p_distance(sliced, ref, 1.0, ctx.budget).value)
        out[n] = float(np.mean(errs))
    return out


def check_scaling(ctx: Context) -> List[Row]:
    errs = scaling_errors(ctx)
    rows = []
    for n in (256, 1024):
        ratio = errs[4 * n] / errs[n]
        rows.append(_ge(f"error_ratio_{4 * n}_over_{n}_low", ratio, 0.4))
        rows.append(_le(f"error_ratio_{4 * n}_over_{n}_high", ratio, 0.65))
    return rows


# -- 6 --------------------------------------------------------------------------------


def check_tp_correction(ctx: Context) -> List[Row]:
    ref = ctx.make(zoo.randomizing_channel, 8)
    rows = []
    worst_corrected = 0.0
    worst_excess = -np.inf
    used = 0
    seed = ctx.seed
    while used < 10:
        result = _compress(ref, CompressionPlan(1024, "haar", seed))
        seed += 1
        if not result.tp_defect < 0.5:
            continue
        used += 1
        worst_corrected = max(worst_corrected, result.corrected.tp_defect)
        shift = metrics.one_to_p_distance(result.corrected, result.sliced, 1.0, ctx.budget).value
        worst_excess = max(worst_excess, shift - (1.5 * result.tp_defect + 1e-6))
    rows.append(_le("corrected_tp_defect_max", worst_corrected, 1e-10))
    rows.append(_le("shift_minus_bound_max", worst_excess, 0.0))
    return rows


# -- 7 --------------------------------------------------------------------------------


def check_lower_bound(ctx: Context) -> List[Row]:
    eps = 0.3
    ref = ctx.make(zoo.qc_channel, 16, 16)
    e0 = linalg.ket(16, 0)
    few = _compress(ref, CompressionPlan(8, "haar", ctx.seed)).sliced
    report = metrics.ordering_margin(ref, few, eps, ctx.budget, candidates=e0[None], use_pool=False)
    # the lower-side witness y lies in the null space of the compressed output
    y = report.details["y_lower"]
    null_weight = float(np.vdot(y, apply(few, linalg.projector(e0)) @ y).real)
    rows = [
        _le("margin_at_e0_minus_bound", report.value - (-(1 - 2 * eps) / 16 + 1e-9), 0.0),
        _le("lower_slack_at_e0_minus_bound",
            report.details["lower"] - (-(1 - 2 * eps) / 16 + 1e-9), 0.0),
        _le("witness_distance_from_e0", 1 - abs(np.vdot(e0, report.witness)), 1e-12),
        _le("witness_y_output_weight", null_weight, 1e-12),
    ]
    exact = _compress(ref, CompressionPlan(16, "exhaustive", ctx.seed)).sliced
    for e in (1e-3, 0.3):
        m = metrics.ordering_margin(ref, exact, e, ctx.budget)
        rows.append(_ge(f"exhaustive_margin_eps{e:g}", m.value, 0.0))
    return rows


# -- 8 --------------------------------------------------------------------------------


def check_corollaries(ctx: Context) -> List[Row]:
    ref = ctx.make(zoo.randomizing_channel, 8)
    approx = _compress(ref, CompressionPlan(4096, "haar", ctx.seed)).corrected
    rep = metrics.approximation_report(
        ref, approx, ctx.budget, pool_size=500, omega_pool_size=500 if ctx.full else 100
    )
    eps = rep.ordering_parameter
    rows = [_le("ordering_parameter", eps, 0.5)]
    for p, dev in rep.renyi_deviation.items():
        factor = 1.0 if np.isinf(p) else p / (p - 1)
        rows.append(_le(f"renyi_{p:g}_deviation_minus_bound", dev - (4 * eps * factor + 0.01), 0.0))
    rows.append(_le("fidelity_deviation_minus_bound",
                    rep.fidelity_deviation - (3 / np.sqrt(2) * np.sqrt(eps) + 0.02), 0.0))
    return rows


# -- 9 --------------------------------------------------------------------------------


def check_werner(ctx: Context) -> List[Row]:
    d, lam = 16, 0.75
    ref = ctx.make(zoo.werner_channel, d, lam)
    approx = _compress(ref, CompressionPlan(64 * d, "haar", ctx.seed)).sliced
    pool = metrics.pure_pool(d, 1000, ctx.seed)
    dev = float(metrics.output_difference_norms(approx, ref, pool, np.inf).max())
    peak = metrics.max_output_infnorm(ref, ctx.budget).value
    return [
        _le("max_output_infnorm_error_vs_formula", abs(peak - zoo.werner_max_output_norm(d, lam)), 1e-6),
        _le("infnorm_deviation_over_peak", dev / peak, 0.5),
    ]


# -- 10 -------------------------------------------------------------------------------


def check_correlations(ctx: Context) -> List[Row]:
    rep = correlations_demo(8, 4, "maxmixed", 2048, ctx.seed, 20)
    worst_dual = max(l - r for l, r in zip(rep.dual_lhs, rep.dual_rhs))
    return [
        _le("left_minus_per_term_bound", rep.left_side - rep.per_term_bound, 1e-10),
        _le("dual_lhs_minus_rhs_max", worst_dual, 1e-10),
        _eq("dual_elements_checked", len(rep.dual_lhs), 20),
    ]


# -- 11 -------------------------------------------------------------------------------


def check_determinism(ctx: Context) -> List[Row]:
    """A fixed-seed sweep and its plot, run twice, must match byte for byte."""
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for k in range(2):
            cfg = ScenarioConfig(
                channel="randomizing:d=4", n=[16, 64], samplers=["haar", "basis"],
                seeds=[ctx.seed], metrics=["one_to_p:p=1", "tp_defect", "kraus_rank"],
                budget="quick", out_dir=os.path.join(tmp, f"run{k}"), record_timing=False,
            )
            run_sweep(cfg)
            svg = emit_svg(cfg.csv_path, "n", "value", ["sampler"],
                           os.path.join(cfg.out_dir, "plot.svg"), where={"metric": "one_to_p:p=1"})
            paths.append((cfg.csv_path, svg))
        same_csv = filecmp.cmp(paths[0][0], paths[1][0], shallow=False)
        same_svg = filecmp.cmp(paths[0][1], paths[1][1], shallow=False)
    return [_eq("sweep_csv_identical", int(same_csv), 1), _eq("svg_identical", int(same_svg), 1)]


CHECKS: Dict[int, Callable[[Context], List[Row]]] = {
    1: check_round_trips,
    2: check_identities,
    3: check_unbiasedness,
    4: check_moments,
    5: check_scaling,
    6: check_tp_correction,
    7: check_lower_bound,
    8: check_corollaries,
    9: check_werner,
    10: check_correlations,
    11: check_determinism,
}


def run_check(check_id: int, ctx: Context) -> CheckResult:
    result = CheckResult(check_id, CHECK_NAMES[check_id])
    start = time.perf_counter()
    try:
        result.rows = CHECKS[check_id](ctx)
    except Exception as exc:  # reported as a failed check
        result.error = f"{type(exc).__name__}: {exc}"
    result.seconds = time.perf_counter() - start
    return result


@dataclass
class VerifyReport:
    level: str
    seed: int
    results: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.results],
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(VERIFY_CSV_HEADER)
        for res in self.results:
            if res.error is not None:
                w.writerow([res.check_id, "error", "nan", "", False])
            for row in res.rows:
                w.writerow([res.check_id, row.quantity, repr(row.value), row.threshold, row.passed])
        return buf.getvalue()

    def summary_lines(self) -> List[str]:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            extra = f" ({r.error})" if r.error else ""
            lines.append(f"[{status}] {r.check_id:>2} {r.name} {r.seconds:.1f}s{extra}")
        return lines


def verify_suite(
    level: str = "quick",
    seed: int = 0,
    only: Optional[Sequence[int]] = None,
    mutate: Optional[Callable[[Channel], Channel]] = None,
    out_dir: Optional[str] = None,
) -> VerifyReport:
    """Run the checks (all, or the ids in ``only``) and optionally write
    ``verify.csv`` and ``verify.json`` into ``out_dir``."""
    ctx = Context(level, seed, mutate)
    ids = sorted(CHECKS) if only is None else sorted(set(only))
    for i in ids:
        if i not in CHECKS:
            raise ValueError(f"unknown check id {i}")
    report = VerifyReport(level, seed, [run_check(i, ctx) for i in ids])
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "verify.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(report.csv_text())
        with open(os.path.join(out_dir, "verify.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return report


def broken_normalization(factor: float = 1.01) -> Callable[[Channel], Channel]:
    """Mutation fixture: scale every Kraus operator by ``factor``."""
    return lambda ch: Channel(ch.kraus * factor)
