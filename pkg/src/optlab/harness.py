"""Experiment orchestration: single drops, parameter sweeps, learner training
and online evaluation, CSV records and per-figure aggregates.

Every random draw is keyed by ``(drop seed, stream name)``, so two schemes
run on the same seed see the same placement, channels and noise, and a
record never depends on which other seeds were run alongside it.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng as rngs
from .channel import build_direct_channels, time_avg_rate
from .drl import env
from .drl.actions import best_flip, reduce_action_space
from .drop import drop_channels, prepare_drop
from .fp import FPConfig, joint_optimize, optimize_precoder
from .scenario import NetworkConfig

log = logging.getLogger(__name__)


class SchemeId(str, enum.Enum):
    PROPOSED_FP = "proposed_fp"
    FIXED_IR = "fixed_ir"
    DIRECT = "direct"
    QRDRL = "qrdrl"
    QLEARNING = "qlearning"
    NO_ADAPT = "no_adapt"


PERFECT_CSI_SCHEMES = (SchemeId.PROPOSED_FP, SchemeId.FIXED_IR, SchemeId.DIRECT)
ONLINE_SCHEMES = (SchemeId.QRDRL, SchemeId.QLEARNING, SchemeId.NO_ADAPT)

SWEEP_VARIABLES = {
    "P_max": "bs_power_max",
    "b": "bandwidth",
    "M": "num_bs_antennas",
    "N": "num_ir_elements",
}

TRAIN_SEED_OFFSET = 1_000_000
EVAL_SEED_OFFSET = 2_000_000


@dataclass
class ExperimentRecord:
    scheme: str
    variable: str
    value: float
    seed: int
    metric: float                      # bits/s; NaN for a failed row
    iterations: Optional[int] = None
    coverage: Optional[float] = None
    episode: Optional[int] = None
    status: str = "ok"


# ---------------------------------------------------------------------------
# single drops
# ---------------------------------------------------------------------------

def _scheme_rate(config, scheme, seed, fp_config, table):
    scheme = SchemeId(scheme)
    if scheme in ONLINE_SCHEMES:
        drop = prepare_drop(config, seed, fp_config)
        if scheme is not SchemeId.NO_ADAPT and table is None:
            # an untrained learner acts greedily on a zero table: always the identity
            table = env.new_table(scheme.value, config, [1])
        res = env.run_interval(drop, config, table if scheme is not SchemeId.NO_ADAPT else None,
                               seed=seed, episode=0)
        return res.rate, drop.solution.iterations

    geometry, channels = drop_channels(config, seed)
    if scheme is SchemeId.PROPOSED_FP:
        sol = joint_optimize(channels, config.p_max, config.sigma2, config.bandwidth, fp_config)
    elif scheme is SchemeId.FIXED_IR:
        sol = joint_optimize(channels, config.p_max, config.sigma2, config.bandwidth, fp_config,
                             optimize_reflection=False)
    else:
        rows, _ = build_direct_channels(geometry, config, rngs.stream(seed, "shadowing_direct"))
        sol = optimize_precoder(rows, config.p_max, config.sigma2, config.bandwidth, fp_config)
    return time_avg_rate(sol.rate, scheme.value, config), sol.iterations


def run_drop(config: NetworkConfig, scheme, seed, fp_config: FPConfig = None, table=None,
             variable="", value=math.nan) -> ExperimentRecord:
    """Run one scheme end to end on drop `seed` and return its time-averaged rate.

    `proposed_fp`, `fixed_ir` and `direct` optimise on the true channels and
    pay their pilot overhead through `time_avg_rate`.  `no_adapt`,
    `qrdrl` and `qlearning` estimate the cascaded channels, run the joint optimiser
    on the estimate and simulate one coherence interval with the given
    learner `table` (frozen, greedy).  Errors are caught and recorded as a
    failed row.
    """
    name = SchemeId(scheme).value
    try:
        metric, iterations = _scheme_rate(config, scheme, seed, fp_config, table)
        return ExperimentRecord(name, variable, float(value), int(seed), float(metric),
                                iterations=int(iterations))
    except Exception as exc:           # a failed drop must not abort a sweep
        log.warning("drop %s/%s failed: %s", name, seed, exc)
        return ExperimentRecord(name, variable, float(value), int(seed), math.nan,
                                status=f"failed: {type(exc).__name__}: {exc}")


def _run_job(job):
    config, scheme, seed, fp_config, variable, value = job
    return run_drop(config, scheme, seed, fp_config, variable=variable, value=value)


def sweep(config: NetworkConfig, schemes, variable, values, drops=100, seed=0,
          fp_config: FPConfig = None, workers=1):
    """Run every scheme on `drops` seeds at every value of `variable`.

    Parameters
    ----------
    variable : str
        One of ``P_max`` (dBm), ``b`` (Hz), ``M`` or ``N``.
    seed : int
        First drop seed; drops use ``seed, seed + 1, ...``.
    workers : int
        Worker processes; results do not depend on this.

    Returns
    -------
    list of ExperimentRecord
        Ordered by value, scheme, seed.
    """
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"unknown sweep variable {variable!r}; expected one of {sorted(SWEEP_VARIABLES)}")
    field_name = SWEEP_VARIABLES[variable]
    jobs = []
    for v in values:
        v = int(v) if field_name in ("num_bs_antennas", "num_ir_elements") else float(v)
        cfg = config.replace(**{field_name: v})
        for scheme in schemes:
            for s in range(seed, seed + int(drops)):
                jobs.append((cfg, SchemeId(scheme).value, s, fp_config, variable, v))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            return list(pool.map(_run_job, jobs, chunksize=4))
    return [_run_job(j) for j in jobs]


# ---------------------------------------------------------------------------
# learners
# ---------------------------------------------------------------------------

def reduction_sampler(config: NetworkConfig, seed_offset, fp_config=None):
    """Sampler for `reduce_action_space` over imperfect-CSI drops."""
    def sample(i):
        d = prepare_drop(config, seed_offset + i, fp_config)
        return d.phi, d.channels.true_G, d.W, config.sigma2
    return sample


def held_out_optimal_actions(config: NetworkConfig, seeds, fp_config=None):
    out = []
    for s in seeds:
        d = prepare_drop(config, s, fp_config)
        out.append(best_flip(d.phi, d.channels.true_G, d.W, config.sigma2))
    return out


@dataclass
class LearningOutcome:
    training: list      # ExperimentRecord per (learner, seed, episode)
    online: list        # ExperimentRecord per (scheme, seed, interval)
    tables: dict        # (learner, seed) -> table
    action_ids: list


def train_and_eval(config: NetworkConfig, episodes, eval_intervals, seeds=(0,),
                   action_ids=None, pool_size=100, reduction_samples=500,
                   fp_config: FPConfig = None, learners=("qrdrl", "qlearning")):
    """Train both learners per master seed, then evaluate them online.

    Training cycles through a pool of `pool_size` imperfect-CSI drops
    (precomputed once per seed).  Online evaluation uses `eval_intervals`
    held-out drops per seed with frozen tables and no exploration; the
    `no_adapt` rows keep the optimiser reflection.
    """
    if action_ids is None:
        log.warning("no action set given; running the action-space reduction (%d drops)",
                    reduction_samples)
        red = reduce_action_space(reduction_sampler(config, TRAIN_SEED_OFFSET, fp_config),
                                  reduction_samples, config.reduced_action_count)
        action_ids = red.actions
    action_ids = sorted(int(a) for a in action_ids)
    E_th = env.calibrate_threshold(config)
    training, online, tables = [], [], {}
    for seed in seeds:
        base = TRAIN_SEED_OFFSET + 10_000 * int(seed)
        pool = [prepare_drop(config, base + i, fp_config) for i in range(pool_size if episodes else 0)]
        eval_base = EVAL_SEED_OFFSET + 10_000 * int(seed)
        eval_drops = [prepare_drop(config, eval_base + j, fp_config) for j in range(eval_intervals)]
        for kind in learners:
            table = env.new_table(kind, config, action_ids)
            history = env.train(table, pool, config, episodes, seed=base, E_th=E_th)
            for e, (rate, eps) in enumerate(history):
                training.append(ExperimentRecord(kind, "epsilon", eps, int(seed), rate, episode=e))
            tables[(kind, int(seed))] = table
            for j, d in enumerate(eval_drops):
                res = env.run_interval(d, config, table, learn=False, epsilon=0.0,
                                       seed=eval_base, episode=j, E_th=E_th)
                online.append(ExperimentRecord(kind, "interval", j, int(seed), res.rate, episode=j))
        for j, d in enumerate(eval_drops):
            res = env.run_interval(d, config, None, seed=eval_base, episode=j, E_th=E_th)
            online.append(ExperimentRecord(SchemeId.NO_ADAPT.value, "interval", j, int(seed),
                                           res.rate, episode=j))
    return LearningOutcome(training, online, tables, action_ids)


def windowed_means(values, window=300):
    """Means of consecutive non-overlapping windows (the last may be shorter)."""
    values = np.asarray(values, dtype=float)
    return np.array([values[i:i + window].mean() for i in range(0, values.size, window)])


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

_FIELDS = [f.name for f in fields(ExperimentRecord)]
_CASTS = {"value": float, "seed": int, "metric": float, "iterations": int,
          "coverage": float, "episode": int}


def emit_csv(records, path):
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=_FIELDS)
        w.writeheader()
        for r in records:
            row = asdict(r)
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                        for k, v in row.items()})


def read_csv(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for k in _FIELDS:
                text = row.get(k, "")
                if k in _CASTS:
                    vals[k] = None if text == "" else _CASTS[k](float(text) if k in ("seed", "iterations", "episode") else text)
                else:
                    vals[k] = text
            out.append(ExperimentRecord(**vals))
    return out


def aggregate(records):
    """Mean and standard error of successful records per (scheme, variable, value).

    Returns a list of dicts with keys scheme, variable, value, mean, stderr, n.
    """
    groups = {}
    for r in records:
        if r.status != "ok" or not math.isfinite(r.metric):
            continue
        groups.setdefault((r.scheme, r.variable, r.value), []).append(r.metric)
    out = []
    for (scheme, variable, value), vals in groups.items():
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out.append({"scheme": scheme, "variable": variable, "value": value,
                    "mean": float(v.mean()), "stderr": se, "n": int(v.size)})
    out.sort(key=lambda d: (d["variable"], d["scheme"], d["value"]))
    return out


def series(records, scheme, variable=None):
    """(x, mean, stderr) arrays for one scheme."""
    rows = [a for a in aggregate(records)
            if a["scheme"] == scheme and (variable is None or a["variable"] == variable)]
    x = np.array([a["value"] for a in rows])
    return x, np.array([a["mean"] for a in rows]), np.array([a["stderr"] for a in rows])


def emit_plot_data(records, path):
    """Write the per-scheme aggregates as ``scheme, variable, x, mean, stderr, n`` rows."""
    rows = aggregate(records)
    if not rows:
        raise ValueError("no successful records to aggregate")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "variable", "x", "mean", "stderr", "n"])
        for a in rows:
            w.writerow([a["scheme"], a["variable"], repr(a["value"]), repr(a["mean"]),
                        repr(a["stderr"]), a["n"]])
