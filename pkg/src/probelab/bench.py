"""Seeded benchmark harness: configs in, CSV + fitted scaling slopes out.

Experiments fill a table to load 1 - 1/x and then measure probe costs under
the configured workload shape and rebuild policy, per x in x_list, over
independent seeded trials. Summary rows (trial = -1) average the non-failed
trials; the slope report is an OLS fit of log2(mean metric) against log2(x).

CLI: `bench run <config>`, `bench verify-combinatorics [--seed S]`,
`bench em-sweep <config>`, `bench print-schema`. Exit codes: 0 ok,
1 verification failure, 2 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import combinatorics as comb
from . import engine as eng
from . import metrics as met
from . import workloads as wl
from .extmem import BlockModel, transfers_for_spans
from .hashing import FamilyKind, mix64
from .table import (TableConfig, TableOverflowError, TableState,
                    min_extension_slots)

CSV_HEADER = "experiment,x,trial,n,R,metric,value,seed,failed"

EXPERIMENTS = ("classic_fill", "hovering", "pathological", "capped_random",
               "graveyard_fill", "graveyard_hover", "em_sweep",
               "combinatorics_verify")

_HASH_KINDS = {"random": FamilyKind.FULLY_RANDOM,
               "tabulation": FamilyKind.SIMPLE_TABULATION,
               "poly5": FamilyKind.POLY5}


class ConfigError(Exception):
    pass


@dataclass
class RRule:
    kind: str                 # half_nx | polylog | fixed | na
    c: float = 2.0            # polylog exponent
    fixed: int = 0

    def resolve(self, n: int, x: float) -> int:
        if self.kind == "half_nx":
            return max(1, int(round(n / (2.0 * x))))
        if self.kind == "polylog":
            return max(1, min(n, int(round(n / (math.log2(x) ** self.c)))))
        if self.kind == "fixed":
            return self.fixed
        return -1


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1 << 18
    x_list: tuple = (2.0, 4.0, 8.0, 16.0)
    r_rule: RRule = field(default_factory=lambda: RRule("na"))
    trials: int = 20
    seed: int = 1
    hash_kind: str = "random"
    hash_seed: int = 1
    layout: str = "wrap"
    # optional knobs
    windows_warmup: int = 1
    windows_measured: int = 3
    query_rate: int = 1
    query_batch: int = 2000
    distinct_keys: bool = True
    policy: str = "auto"          # auto | graveyard (pathological under graveyard)
    resize_on_rebuild: bool = False
    r_list: tuple = (2, 4, 8)     # em_sweep
    offsets: int = 8              # em_sweep
    jobs: int = 1

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.x_list or any(x <= 1.0 for x in self.x_list):
            raise ConfigError("x_list must be nonempty with every x > 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.hash_kind not in _HASH_KINDS:
            raise ConfigError(f"hash.kind must be one of {sorted(_HASH_KINDS)}")
        if self.layout not in ("wrap", "extended"):
            raise ConfigError("layout must be wrap or extended")
        if self.policy not in ("auto", "graveyard"):
            raise ConfigError("policy must be auto or graveyard")
        if self.experiment == "em_sweep" and self.layout != "extended":
            raise ConfigError("em_sweep needs layout = extended")


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def parse_config(text: str) -> ExperimentConfig:
    """Flat `key = value` lines, `#` comments; raises ConfigError with the
    offending line number and field."""
    values = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected `key = value`, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = (val.strip(), ln)

    def take(key, conv, default):
        if key not in values:
            return default
        val, ln = values.pop(key)
        try:
            return conv(val)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {ln}: field {key!r}: {exc}") from exc

    def floats(val):
        return tuple(float(v) for v in val.split(","))

    def ints(val):
        return tuple(int(v) for v in val.split(","))

    def rrule(val):
        if val in ("half_nx", "na"):
            return RRule(val)
        if val.startswith("polylog"):
            c = float(val.split(":", 1)[1]) if ":" in val else 2.0
            return RRule("polylog", c=c)
        if val.startswith("fixed:"):
            return RRule("fixed", fixed=int(val.split(":", 1)[1]))
        raise ValueError(f"unknown R_rule {val!r}")

    if "experiment" not in values:
        raise ConfigError("missing required field `experiment`")
    cfg = ExperimentConfig(
        experiment=take("experiment", str, None),
        n=take("n", int, 1 << 18),
        x_list=take("x_list", floats, (2.0, 4.0, 8.0, 16.0)),
        r_rule=take("R_rule", rrule, RRule("na")),
        trials=take("trials", int, 20),
        seed=take("seed", int, 1),
        hash_kind=take("hash.kind", str, "random"),
        hash_seed=take("hash.seed", int, 1),
        layout=take("layout", str, "wrap"),
        windows_warmup=take("windows_warmup", int, 1),
        windows_measured=take("windows_measured", int, 3),
        query_rate=take("query_rate", int, 1),
        query_batch=take("query_batch", int, 2000),
        distinct_keys=take("distinct_keys", lambda v: _BOOL[v.lower()], True),
        policy=take("policy", str, "auto"),
        resize_on_rebuild=take("resize_on_rebuild",
                               lambda v: _BOOL[v.lower()], False),
        r_list=take("r_list", ints, (2, 4, 8)),
        offsets=take("offsets", int, 8),
        jobs=take("jobs", int, 1),
    )
    if values:
        key = next(iter(values))
        raise ConfigError(f"line {values[key][1]}: unknown field {key!r}")
    cfg.validate()
    return cfg


def fit_slope(points) -> tuple[float, float]:
    """OLS slope of log2 y on log2 x, with its standard error."""
    if len(points) < 2:
        raise ValueError("need at least 2 points")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("points must be positive for a log-log fit")
    lx, ly = np.log2(xs), np.log2(ys)
    dx = lx - lx.mean()
    sxx = float((dx * dx).sum())
    if sxx == 0.0:
        raise ValueError("x values must not all coincide")
    slope = float((dx * (ly - ly.mean())).sum() / sxx)
    resid = ly - (ly.mean() + slope * dx)
    m = len(points)
    stderr = (math.sqrt(float((resid * resid).sum()) / (m - 2) / sxx)
              if m > 2 else 0.0)
    return slope, stderr


def trial_seed(master: int, x_index: int, trial: int) -> int:
    mixed = mix64(np.uint64(((x_index + 1) * 0x9E3779B97F4A7C15
                             ^ (trial + 1) * 0xC2B2AE3D27D4EB4F)
                            & 0xFFFFFFFFFFFFFFFF))
    return int(mix64(np.uint64(master) ^ mixed))


# ---------------------------------------------------------------------------
# trial runners
# ---------------------------------------------------------------------------

def _table_config(cfg: ExperimentConfig, x: float, policy: str,
                  rebuild_r: int = 0) -> TableConfig:
    ext = (min_extension_slots(cfg.n, max(x, cfg.x_list[-1]))
           if cfg.layout == "extended" else 0)
    return TableConfig(
        n=cfg.n, layout=cfg.layout, extension_slots=ext, x_param=x,
        rebuild_policy=policy, rebuild_r=rebuild_r,
        resize_on_rebuild=cfg.resize_on_rebuild,
        hash_kind=_HASH_KINDS[cfg.hash_kind], hash_seed=cfg.hash_seed)


def _fresh_query_keys(seed: int, count: int) -> np.ndarray:
    ctr = np.arange(1, count + 1, dtype=np.uint64) * np.uint64(0xA076_1D64_78BD_642F)
    return mix64(ctr ^ mix64(np.uint64(seed ^ 0x2545F4914F6CDD1D)))


def _query_batch_mean(table: TableState, seed: int, count: int) -> float:
    keys = _fresh_query_keys(seed, count)
    kinds = np.full(count, eng.OP_QUERY, dtype=np.int8)
    res = table.run(kinds, keys, track_windows=True, max_windows=4)
    ws = res.winstats.sum(axis=0)
    return float(ws[eng.W_Q_PROBES] / ws[eng.W_Q_COUNT])


def _window_metrics(winstats: np.ndarray, w_lo: int, w_hi: int,
                    include_partial=()) -> dict:
    """Pool stats over completed windows [w_lo, w_hi) (optionally plus
    explicit partial windows) into the standard metric dict."""
    rows = list(range(w_lo, w_hi)) + list(include_partial)
    sel = winstats[rows].sum(axis=0)
    out = {}
    if sel[eng.W_INS_COUNT] > 0:
        out["mean_insert_probes"] = sel[eng.W_INS_PROBES] / sel[eng.W_INS_COUNT]
        out["amortized_insert_probes"] = ((sel[eng.W_INS_PROBES]
                                           + sel[eng.W_REBUILD_SLOTS])
                                          / sel[eng.W_INS_COUNT])
        out["mean_displacement"] = sel[eng.W_INS_DISP] / sel[eng.W_INS_COUNT]
    if sel[eng.W_DEL_COUNT] > 0:
        out["mean_delete_probes"] = sel[eng.W_DEL_PROBES] / sel[eng.W_DEL_COUNT]
    if sel[eng.W_Q_COUNT] > 0:
        out["mean_query_probes"] = sel[eng.W_Q_PROBES] / sel[eng.W_Q_COUNT]
    return out


def run_classic_fill(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    """Insertion-only fill; negative-query mean at zero tombstones, then the
    probe count of one post-fill insertion."""
    table = TableState(_table_config(cfg, x, "never"))
    fill = wl.gen_fill(cfg.n, x, seed)
    table.run(fill.kinds, fill.keys)
    out = {}
    out["negative_query_probes"] = _query_batch_mean(table, seed, cfg.query_batch)
    extra_key = int(_fresh_query_keys(seed ^ 0x51BF_0211, 1)[0])
    rec = table.insert(extra_key)
    out["final_insert_probes"] = float(rec.probes)
    return out


def _run_windowed(cfg: ExperimentConfig, x: float, seed: int,
                  phase2: tuple, policy: str, rebuild_r: int,
                  record: bool = False):
    """Fill at policy `never`, reset windows at the boundary (graveyard
    additionally seeds tombstones at the boundary rebuild), then replay the
    measured ops under the experiment policy."""
    table = TableState(_table_config(cfg, x, "never"))
    fill = wl.gen_fill(cfg.n, x, seed)
    table.run(fill.kinds, fill.keys)
    table.config = replace(table.config, rebuild_policy=policy,
                           rebuild_r=rebuild_r)
    if policy == "graveyard":
        table.graveyard_rebuild()
    else:
        # a pure-insert fill leaves a canonical, tombstone-free layout, so the
        # boundary rebuild reduces to resetting the window counters
        table.state[eng.S_INS_SINCE] = 0
        table.state[eng.S_OPS_SINCE] = 0
    table.state[eng.S_WINDOW] = 0
    kinds, keys = phase2
    res = table.run(kinds, keys, record=record, track_windows=True)
    return table, res


def run_hovering(cfg: ExperimentConfig, x: float, seed: int,
                 policy: str = "every_r", record: bool = False):
    r = cfg.r_rule.resolve(cfg.n, x)
    if policy == "graveyard":
        budget = max(1, (cfg.n - wl.fill_count(cfg.n, x)) // 4)
        windows = cfg.windows_warmup + cfg.windows_measured
        pairs = (windows + 1) * ((budget + 1) // 2) + 64
    else:
        pairs = (cfg.windows_warmup + cfg.windows_measured) * r
    hov = wl.gen_hovering(cfg.n, x, pairs, seed,
                          distinct_keys=cfg.distinct_keys,
                          query_rate=cfg.query_rate)
    fc = wl.fill_count(cfg.n, x)
    phase2 = (hov.kinds[fc:], hov.keys[fc:])
    table, res = _run_windowed(cfg, x, seed, phase2, policy,
                               r if policy == "every_r" else 0, record)
    done = res.windows_completed
    w_hi = min(cfg.windows_warmup + cfg.windows_measured, done)
    out = _window_metrics(res.winstats, cfg.windows_warmup, w_hi)
    return (out, table, res) if record else out


def run_pathological(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    r = cfg.r_rule.resolve(cfg.n, x)
    policy = "graveyard" if cfg.policy == "graveyard" else "every_r"
    blocks = cfg.windows_warmup + cfg.windows_measured
    if policy == "graveyard":
        # enough blocks that warmup+measured graveyard windows close inside
        # the block phase (window budget is n/(4x)-ish, a block is 2R ops)
        budget = max(1, (cfg.n - wl.fill_count(cfg.n, x)) // 4)
        need_ops = (cfg.windows_warmup + cfg.windows_measured + 2) * budget
        blocks = max(1, -(-need_ops // (2 * r)))
    path = wl.gen_pathological(cfg.n, x, r, seed, blocks=blocks)
    fc = wl.fill_count(cfg.n, x)
    phase2 = (path.kinds[fc:], path.keys[fc:])
    table, res = _run_windowed(cfg, x, seed, phase2, policy,
                               r if policy == "every_r" else 0)
    done = res.windows_completed
    w_hi = min(cfg.windows_warmup + cfg.windows_measured, done)
    out = _window_metrics(res.winstats, cfg.windows_warmup, w_hi)
    out["negative_query_probes"] = _query_batch_mean(table, seed,
                                                     cfg.query_batch)
    return out


def run_capped_random(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    r = cfg.r_rule.resolve(cfg.n, x)
    length = 2 * (cfg.windows_warmup + cfg.windows_measured) * r
    w = wl.gen_capped_random(cfg.n, x, length, seed)
    table = TableState(_table_config(cfg, x, "every_r", r))
    res = table.run(w.kinds, w.keys, track_windows=True)
    done = res.windows_completed
    out = _window_metrics(res.winstats, min(cfg.windows_warmup, done), done)
    out["negative_query_probes"] = _query_batch_mean(table, seed,
                                                     cfg.query_batch)
    return out


def run_graveyard_fill(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    """Graveyard-managed table filled from empty, rebuilt at the target load
    1 - 1/x, then measured on a pure-insert batch of half a window's budget,
    so every measured op runs at the target load."""
    table = TableState(_table_config(cfg, x, "graveyard"))
    fill = wl.gen_fill(cfg.n, x, seed)
    table.run(fill.kinds, fill.keys)
    table.graveyard_rebuild()
    table.state[eng.S_WINDOW] = 0
    batch = max(1, table.window_budget // 2)
    keys = _fresh_query_keys(seed ^ 0x6A09E667, batch)
    kinds = np.full(batch, eng.OP_INSERT, dtype=np.int8)
    res = table.run(kinds, keys, track_windows=True)
    out = _window_metrics(res.winstats, 0, 1)
    out["negative_query_probes"] = _query_batch_mean(table, seed,
                                                     cfg.query_batch)
    return out


def run_graveyard_hover(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    return run_hovering(cfg, x, seed, policy="graveyard")


def run_em_sweep(cfg: ExperimentConfig, x: float, seed: int) -> dict:
    """Graveyard hovering, extended layout, spans recorded; per r in r_list,
    B = r*x, transfers averaged over `offsets` block alignments."""
    out, table, res = run_hovering(cfg, x, seed, policy="graveyard",
                                   record=True)
    recs = res.records
    done = res.windows_completed
    w_hi = min(cfg.windows_warmup + cfg.windows_measured, done)
    wcol = recs[:, eng.R_WINDOW]
    sel = recs[(wcol >= cfg.windows_warmup) & (wcol < w_hi)]
    spans = sel[:, (eng.R_SPAN_START, eng.R_SPAN_END)]
    nops = len(sel)
    rebuild_slots = res.winstats[cfg.windows_warmup:w_hi, eng.W_REBUILD_SLOTS]
    em = {}
    for r in cfg.r_list:
        b = int(round(r * x))
        vals = []
        amort = []
        for j in range(cfg.offsets):
            model = BlockModel(B=b, alignment_offset=(j * b) // cfg.offsets)
            vals.append(float(transfers_for_spans(spans, model).mean()))
            amort.append(float(np.ceil(rebuild_slots / b).sum()) / nops)
        em[f"em_mean_transfers_r{r}"] = float(np.mean(vals))
        em[f"em_rebuild_amortized_r{r}"] = float(np.mean(amort))
    return em


_RUNNERS = {
    "classic_fill": run_classic_fill,
    "hovering": run_hovering,
    "pathological": run_pathological,
    "capped_random": run_capped_random,
    "graveyard_fill": run_graveyard_fill,
    "graveyard_hover": run_graveyard_hover,
    "em_sweep": run_em_sweep,
}


# ---------------------------------------------------------------------------
# the runner
# ---------------------------------------------------------------------------

@dataclass
class SlopeReport:
    slopes: dict          # metric -> (slope, stderr) or "insufficient points"

    def lines(self):
        out = []
        for metric in sorted(self.slopes):
            v = self.slopes[metric]
            if isinstance(v, str):
                out.append(f"slope {metric}: {v}")
            else:
                out.append(f"slope {metric}: {v[0]:.4f} (stderr {v[1]:.4f})")
        return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run(cfg: ExperimentConfig):
    """Execute the experiment grid. Returns (csv_text, SlopeReport)."""
    cfg.validate()
    runner = _RUNNERS[cfg.experiment]
    results = {}

    def one(args):
        xi, t = args
        sd = trial_seed(cfg.seed, xi, t)
        x = cfg.x_list[xi]
        try:
            vals = runner(cfg, x, sd)
            return (xi, t, sd, vals, False)
        except TableOverflowError:
            return (xi, t, sd, {}, True)

    tasks = [(xi, t) for xi in range(len(cfg.x_list))
             for t in range(cfg.trials)]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            for res in pool.map(one, tasks):
                results[res[:2]] = res
    else:
        for task in tasks:
            res = one(task)
            results[res[:2]] = res

    lines = [CSV_HEADER]
    slope_points = {}
    for xi, x in enumerate(cfg.x_list):
        r = cfg.r_rule.resolve(cfg.n, x)
        metric_vals = {}
        for t in range(cfg.trials):
            _, _, sd, vals, failed = results[(xi, t)]
            if failed:
                lines.append(f"{cfg.experiment},{_fmt(float(x))},{t},{cfg.n},"
                             f"{r},failed,0,{sd},1")
                continue
            for metric in sorted(vals):
                lines.append(f"{cfg.experiment},{_fmt(float(x))},{t},{cfg.n},"
                             f"{r},{metric},{_fmt(float(vals[metric]))},{sd},0")
                metric_vals.setdefault(metric, []).append(float(vals[metric]))
        for metric in sorted(metric_vals):
            mean = float(np.mean(metric_vals[metric]))
            lines.append(f"{cfg.experiment},{_fmt(float(x))},-1,{cfg.n},"
                         f"{r},{metric},{_fmt(mean)},{cfg.seed},0")
            slope_points.setdefault(metric, []).append((float(x), mean))

    slopes = {}
    for metric, pts in sorted(slope_points.items()):
        if len(pts) < 2:
            slopes[metric] = "insufficient points"
        else:
            try:
                slopes[metric] = fit_slope(pts)
            except ValueError:
                slopes[metric] = "insufficient points"
    return "\n".join(lines) + "\n", SlopeReport(slopes)


def em_sweep_csv(csv_text: str, cfg: ExperimentConfig) -> str:
    """Condense em_sweep summary rows into the dedicated EM schema."""
    rows = ["B,r,mean_transfers,rebuild_amortized"]
    x = cfg.x_list[0]
    means = {}
    for line in csv_text.splitlines()[1:]:
        parts = line.split(",")
        if parts[2] != "-1":
            continue
        means[parts[5]] = float(parts[6])
    for r in cfg.r_list:
        b = int(round(r * x))
        mt = means.get(f"em_mean_transfers_r{r}")
        ra = means.get(f"em_rebuild_amortized_r{r}")
        if mt is not None:
            rows.append(f"{b},{r},{_fmt(mt)},{_fmt(ra)}")
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# verification battery (bench verify-combinatorics)
# ---------------------------------------------------------------------------

def _random_instrumented_run(rng, n_max=96):
    """Small random table + op mix replayed with records, extended layout."""
    n = int(rng.integers(12, n_max))
    x = 1.5
    cfg = TableConfig(n=n, layout="extended",
                      extension_slots=min_extension_slots(n, x),
                      x_param=x, rebuild_policy="never",
                      hash_kind=FamilyKind.FULLY_RANDOM,
                      hash_seed=int(rng.integers(1, 2**31)))
    table = TableState(cfg)
    fill = wl.gen_fill(n, 2.0, int(rng.integers(1, 2**31)))
    prefix = int(rng.integers(0, len(fill.kinds) + 1))
    table.run(fill.kinds[:prefix], fill.keys[:prefix])
    table.rebuild()
    free_mask = (table.tag == eng.EMPTY).astype(np.int64)
    live = [int(k) for k in fill.keys[:prefix]]
    nops = int(rng.integers(1, n + 1))
    kinds, keys = [], []
    counter = 0
    for _ in range(nops):
        if live and (len(live) >= int(0.7 * n) or rng.random() < 0.45):
            i = int(rng.integers(0, len(live)))
            keys.append(live[i])
            live[i] = live[-1]
            live.pop()
            kinds.append(wl.DELETE)
        else:
            counter += 1
            k = int(mix64(np.uint64(counter * 0x9E3779B97F4A7C15
                                    & 0xFFFFFFFFFFFFFFFF)
                          ^ np.uint64(rng.integers(1, 2**62))))
            keys.append(k)
            live.append(k)
            kinds.append(wl.INSERT)
    w = wl.Workload(np.array(kinds, dtype=np.int8),
                    np.array(keys, dtype=np.uint64))
    res = table.run(w.kinds, w.keys, record=True, track_windows=True)
    log = met.MetricsLog.from_replay(table, res)
    return table, w, res, log, free_mask


def crossing_identity_holds(table, w, log, free_mask) -> bool:
    """c_s == max interval insertion surplus ending at s-1, for every s."""
    c = met.crossing_numbers(log, 0)
    hashes = table.family.eval_batch(w.keys)
    signs = np.where(w.kinds == wl.INSERT, 1, -1).astype(np.int64)
    best = comb.interval_surplus_sweep(hashes.astype(np.int64), signs,
                                       free_mask, table.size)
    return bool((c == best[1:]).all())


def verify_combinatorics(seed: int = 1, verbose: bool = True) -> bool:
    """Pass/fail table over the exact combinatorial properties."""
    rng = np.random.default_rng(seed)
    checks = []

    ok = True
    for _ in range(300):
        h, wd = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        m = np.zeros((h, wd), dtype=np.int64)
        for t in range(h):
            roll = rng.random()
            if roll < 0.4:
                m[t, rng.integers(0, wd)] = 1
            elif roll < 0.8:
                m[t, rng.integers(0, wd)] = -1
        val, path = comb.max_blue_red(m)
        if val != comb.brute_force_max(m) or comb.path_value(m, path) != val:
            ok = False
            break
    checks.append(("dp equals path enumeration (300 grids)", ok))

    ok = True
    for _ in range(100):
        nops = int(rng.integers(1, 9))
        ops = [(int(rng.integers(1, 7)), int(rng.choice((1, -1))))
               for _ in range(nops)]
        m = np.zeros((nops, 6), dtype=np.int64)
        for t, (h, s) in enumerate(ops):
            m[t, h - 1] = s
        val, _ = comb.max_blue_red(m)
        if val != comb.downward_closed_max(ops):
            ok = False
            break
    checks.append(("paths match downward-closed subsets (<=8 ops)", ok))

    ok = True
    for _ in range(20):
        table, w, res, log, fm = _random_instrumented_run(rng)
        if not crossing_identity_holds(table, w, log, fm):
            ok = False
            break
        c = met.crossing_numbers(log, 0)
        if int(c.sum()) != met.displacement_sum(log, 0):
            ok = False
            break
    checks.append(("crossing identity + displacement duality (20 runs)", ok))

    ok = True
    for ell in (64, 256):
        for _ in range(20):
            ups = int(rng.integers(1, ell))
            steps = np.array(list("U" * ups + "R" * (ell - ups)))
            rng.shuffle(steps)
            path = "".join(steps)
            rects = comb.rect_decompose(path)
            wdt, hgt = ell - ups, ups
            mask, disjoint = comb.rects_cover_mask(rects, wdt, hgt)
            want = comb.cells_under_path(path)
            if not disjoint or not ((mask == 1) == want).all():
                ok = False
            if comb.rect_perimeter_sum(rects) > 2 * ell * (math.log2(ell) + 1):
                ok = False
    checks.append(("rectangle decomposition covers exactly, within the "
                   "perimeter bound", ok))

    ok = True
    for _ in range(10):
        base = wl.gen_capped_random(64, 2.0, 48, int(rng.integers(1, 2**31)))
        cap = wl.fill_count(64, 2.0)
        reworked = wl.rearrange(base, 0, cap)
        if not wl.replay_valid(reworked):
            ok = False
        if wl.shape_parts(reworked) is None:
            ok = False
        if int(wl.live_counts(reworked).max()) > cap:
            ok = False
    checks.append(("rearrangement: valid, shaped, cap-preserving (10 runs)", ok))

    all_ok = all(flag for _, flag in checks)
    if verbose:
        for name, flag in checks:
            print(f"{'PASS' if flag else 'FAIL'}  {name}")
        print("combinatorics verification:", "PASS" if all_ok else "FAIL")
    return all_ok


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

SCHEMA_TEXT = f"""CSV schema (comma-separated, `.` decimal point):
  {CSV_HEADER}
Rows: one per (x, trial, metric); summary rows use trial=-1 and average the
non-failed trials. Failed trials (table overflow) appear once with
metric=failed, failed=1, and never contribute to summaries. R is the resolved
rebuild window (-1 when not applicable).

em-sweep additionally writes `<out>.em.csv` with header
  B,r,mean_transfers,rebuild_amortized
one row per r, averaged over trials and alignment offsets.

Config file: flat `key = value` lines, `#` comments. Fields:
  experiment = {' | '.join(EXPERIMENTS)}
  n, trials, seed, hash.seed        integers
  x_list                            comma-separated reals > 1
  R_rule                            half_nx | polylog[:c] | fixed:R | na
  hash.kind                         random | tabulation | poly5
  layout                            wrap | extended
  windows_warmup, windows_measured, query_rate, query_batch, offsets, jobs
                                    integers (optional)
  r_list                            comma-separated ints (em_sweep)
  distinct_keys, resize_on_rebuild  booleans (optional)
  policy                            auto | graveyard (pathological variant)
"""


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="seeded probing-table benchmark harness")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config, write CSV")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="CSV output path (default <config>.csv)")
    p_ver = sub.add_parser("verify-combinatorics",
                           help="exact combinatorial property battery")
    p_ver.add_argument("--seed", type=int, default=1)
    p_em = sub.add_parser("em-sweep", help="run an em_sweep config")
    p_em.add_argument("config")
    p_em.add_argument("--out", help="CSV output path (default <config>.csv)")
    sub.add_parser("print-schema", help="print the CSV schema and config keys")
    args = parser.parse_args(argv)

    if args.cmd == "print-schema":
        print(SCHEMA_TEXT)
        return 0
    if args.cmd == "verify-combinatorics":
        return 0 if verify_combinatorics(args.seed) else 1

    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.cmd == "em-sweep" and cfg.experiment != "em_sweep":
        print("config error: em-sweep needs `experiment = em_sweep`",
              file=sys.stderr)
        return 2
    if cfg.experiment == "combinatorics_verify":
        return 0 if verify_combinatorics(cfg.seed) else 1

    csv_text, report = run(cfg)
    out = args.out or (args.config + ".csv")
    with open(out, "w") as fh:
        fh.write(csv_text)
    for line in report.lines():
        print(line)
    if cfg.experiment == "em_sweep":
        em_path = out[:-4] + ".em.csv" if out.endswith(".csv") else out + ".em.csv"
        with open(em_path, "w") as fh:
            fh.write(em_sweep_csv(csv_text, cfg))
        print(f"wrote {em_path}")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
