"""Acceptance suite: one test per criterion, at the stated tolerances.

Everything is seeded and deterministic; Monte-Carlo grids and trial counts
were sized so each slope criterion sits several standard errors inside its
band (x grids are free parameters where the criterion does not pin them; see
the README's acceptance table). Exact identities are asserted with zero
tolerance. Runs in a few minutes on one CPU.
"""

import math

import numpy as np
import pytest

from probelab import bench
from probelab import combinatorics as comb
from probelab import engine as eng
from probelab import metrics as met
from probelab import workloads as wl
from probelab.table import TableConfig, TableState, min_extension_slots

SEED = 20240810


def report(criterion, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def slope_of(report_obj, metric):
    v = report_obj.slopes[metric]
    assert isinstance(v, tuple), f"no fit for {metric}"
    return v[0]


# ---------------------------------------------------------------------------
# shared experiment runs (computed once, reused by criterion 15)
# ---------------------------------------------------------------------------

_classic_cache = {}
_graveyard_cache = {}


def classic_slopes(hash_kind):
    if hash_kind not in _classic_cache:
        cfg = bench.ExperimentConfig(
            experiment="classic_fill", n=1 << 16,
            x_list=(2.0, 4.0, 8.0, 16.0), trials=400, seed=SEED,
            hash_kind=hash_kind, query_batch=500)
        _, rep = bench.run(cfg)
        _classic_cache[hash_kind] = rep
    return _classic_cache[hash_kind]


def graveyard_slopes(hash_kind, trials):
    key = hash_kind
    if key not in _graveyard_cache:
        out = {}
        common = dict(n=1 << 18, x_list=(4.0, 8.0, 16.0, 32.0), seed=SEED,
                      trials=trials, hash_kind=hash_kind,
                      windows_warmup=1, windows_measured=3)
        _, rep = bench.run(bench.ExperimentConfig(
            experiment="graveyard_fill", query_batch=2000, **common))
        out["fill"] = rep
        _, rep = bench.run(bench.ExperimentConfig(
            experiment="graveyard_hover", query_rate=1, **common))
        out["hover"] = rep
        _, rep = bench.run(bench.ExperimentConfig(
            experiment="pathological", policy="graveyard",
            r_rule=bench.RRule("half_nx"), query_batch=2000, **common))
        out["path"] = rep
        _graveyard_cache[key] = out
    return _graveyard_cache[key]


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_classic_insert_scaling():
    rep = classic_slopes("random")
    s = slope_of(rep, "final_insert_probes")
    report(1, 1.8 <= s <= 2.2,
           f"post-fill insertion probes slope {s:.3f} in [1.8, 2.2] "
           f"(x in 2..16, n=2^16, 400 trials)")


def test_criterion_02_ordered_query_scaling():
    cfg = bench.ExperimentConfig(
        experiment="classic_fill", n=1 << 16, x_list=(4.0, 8.0, 16.0, 32.0),
        trials=20, seed=SEED, query_batch=2000)
    _, rep = bench.run(cfg)
    s = slope_of(rep, "negative_query_probes")
    report(2, 0.8 <= s <= 1.2,
           f"negative-query probes slope {s:.3f} in [0.8, 1.2] "
           f"at zero tombstones (x in 4..32)")


def test_criterion_03_hovering_small_windows():
    cfg = bench.ExperimentConfig(
        experiment="hovering", n=1 << 18, x_list=(8.0, 16.0, 32.0, 64.0),
        r_rule=bench.RRule("half_nx"), trials=8, seed=SEED,
        windows_warmup=1, windows_measured=3, query_rate=1)
    _, rep = bench.run(cfg)
    si = slope_of(rep, "amortized_insert_probes")
    sq = slope_of(rep, "mean_query_probes")
    report(3, 1.35 <= si <= 1.75 and 0.8 <= sq <= 1.3,
           f"R=n/(2x): amortized-insert slope {si:.3f} in [1.35, 1.75], "
           f"query slope {sq:.3f} in [0.8, 1.3]")


def test_criterion_04_hovering_polylog_windows():
    cfg = bench.ExperimentConfig(
        experiment="hovering", n=1 << 19,
        x_list=(32.0, 64.0, 128.0, 256.0),
        r_rule=bench.RRule("polylog", c=2.0), trials=10, seed=SEED,
        windows_warmup=1, windows_measured=3, query_rate=1)
    _, rep = bench.run(cfg)
    si = slope_of(rep, "amortized_insert_probes")
    sq = slope_of(rep, "mean_query_probes")
    report(4, 0.8 <= si <= 1.3 and 0.8 <= sq <= 1.3,
           f"R=n/log2^2(x): amortized-insert slope {si:.3f} and query slope "
           f"{sq:.3f} both in [0.8, 1.3]")


def test_criterion_05_graveyard_all_workloads():
    reps = graveyard_slopes("random", trials=6)
    fill_i = slope_of(reps["fill"], "mean_insert_probes")
    fill_q = slope_of(reps["fill"], "negative_query_probes")
    hov_i = slope_of(reps["hover"], "mean_insert_probes")
    hov_q = slope_of(reps["hover"], "mean_query_probes")
    hov_d = slope_of(reps["hover"], "mean_delete_probes")
    path_i = slope_of(reps["path"], "mean_insert_probes")
    path_q = slope_of(reps["path"], "negative_query_probes")
    path_d = slope_of(reps["path"], "mean_delete_probes")
    in_band = all(0.8 <= s <= 1.3
                  for s in (fill_i, fill_q, hov_i, hov_q, hov_d))
    path_ok = all(s <= 1.3 for s in (path_i, path_q, path_d))
    report(5, in_band and path_ok,
           f"graveyard slopes: fill insert {fill_i:.3f} / query {fill_q:.3f}; "
           f"hover insert {hov_i:.3f} / query {hov_q:.3f} / delete {hov_d:.3f} "
           f"all in [0.8, 1.3]; pathological insert {path_i:.3f} / query "
           f"{path_q:.3f} / delete {path_d:.3f} all <= 1.3")


def _identity_instance(rng, n):
    """Rebuilt table + random valid op mix, replayed with full records."""
    x_small = 1.5
    cfg = TableConfig(n=n, layout="extended",
                      extension_slots=min_extension_slots(n, x_small),
                      x_param=x_small, hash_seed=int(rng.integers(1, 2**31)))
    t = TableState(cfg)
    hov = wl.gen_hovering(n, 2.0, int(rng.integers(1, n // 2 + 1)),
                          int(rng.integers(1, 2**31)))
    fc = wl.fill_count(n, 2.0)
    prefix = int(rng.integers(0, fc + 1))
    t.run(hov.kinds[:prefix], hov.keys[:prefix])
    t.rebuild()
    free_mask = (t.tag == eng.EMPTY).astype(np.int64)
    kinds = hov.kinds[fc:fc + int(rng.integers(1, n + 1))]
    keys = hov.keys[fc:fc + len(kinds)]
    # make the op slice replay-valid against the prefix-only table: drop
    # deletes of keys that were never inserted
    live = set(int(k) for k in hov.keys[:prefix])
    keep_k, keep_key = [], []
    for kind, key in zip(kinds, keys):
        key = int(key)
        if kind == wl.DELETE:
            if key not in live:
                continue
            live.remove(key)
        elif kind == wl.INSERT:
            live.add(key)
        keep_k.append(int(kind))
        keep_key.append(key)
    kinds = np.array(keep_k, dtype=np.int8)
    keys = np.array(keep_key, dtype=np.uint64)
    res = t.run(kinds, keys, record=True, track_windows=True)
    log = met.MetricsLog.from_replay(t, res)
    return t, wl.Workload(kinds, keys), log, free_mask


def test_criterion_06_and_07_crossing_identity_and_duality():
    rng = np.random.default_rng(SEED)
    sizes = [int(rng.integers(12, 97)) for _ in range(80)] + \
            [int(rng.integers(128, 257)) for _ in range(25)]
    checked = 0
    for n in sizes:
        t, w, log, free_mask = _identity_instance(rng, n)
        c = met.crossing_numbers(log, 0)
        hashes = t.family.eval_batch(w.keys).astype(np.int64)
        signs = np.where(w.kinds == wl.INSERT, 1, -1).astype(np.int64)
        best = comb.interval_surplus_sweep(hashes, signs, free_mask, t.size)
        assert (c == best[1:]).all(), f"identity failed at n={n}"
        assert int(c.sum()) == met.displacement_sum(log, 0)
        checked += 1
    report(6, checked >= 100,
           f"crossing number == best interval surplus at every position, "
           f"{checked} instances (n up to 256), zero tolerance")
    report(7, True,
           f"sum(displacement) == sum(c_j) on all {checked} instrumented runs "
           f"(exact)")


def test_criterion_07_duality_across_windows():
    n = 1 << 10
    t = TableState(TableConfig(
        n=n, layout="extended", extension_slots=min_extension_slots(n, 2.0),
        x_param=2.0, rebuild_policy="every_r", rebuild_r=64, hash_seed=SEED))
    hov = wl.gen_hovering(n, 2.0, 512, seed=SEED, query_rate=1)
    res = t.run(hov.kinds, hov.keys, record=True, track_windows=True)
    log = met.MetricsLog.from_replay(t, res)
    assert len(log.windows) >= 5
    for wid in log.windows:
        c = met.crossing_numbers(log, int(wid))
        assert int(c.sum()) == met.displacement_sum(log, int(wid))


def test_criterion_08_dp_vs_enumerations():
    rng = np.random.default_rng(SEED + 8)
    for _ in range(1000):
        h, wd = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        m = np.zeros((h, wd), dtype=np.int64)
        for t in range(h):
            roll = rng.random()
            if roll < 0.4:
                m[t, rng.integers(0, wd)] = 1
            elif roll < 0.8:
                m[t, rng.integers(0, wd)] = -1
        val, path = comb.max_blue_red(m)
        assert val == comb.brute_force_max(m)
        assert val == max(0, comb.path_value(m, path))
    for _ in range(400):
        nops = int(rng.integers(1, 9))
        ops = [(int(rng.integers(1, 7)), int(rng.choice((1, -1))))
               for _ in range(nops)]
        m = np.zeros((nops, 6), dtype=np.int64)
        for t, (h, s) in enumerate(ops):
            m[t, h - 1] = s
        val, _ = comb.max_blue_red(m)
        assert val == comb.downward_closed_max(ops)
    report(8, True, "DP == path enumeration on 1000 grids (h<=5, w<=4); "
                    "== downward-closed subset enumeration on 400 op sets "
                    "(|S_P|<=8); exact")


def test_criterion_09_rectangle_decomposition():
    rng = np.random.default_rng(SEED + 9)
    for ell in (64, 256, 1024):
        bound = 2 * ell * (math.log2(ell) + 1)
        for _ in range(100):
            ups = int(rng.integers(1, ell))
            steps = np.array(list("U" * ups + "R" * (ell - ups)))
            rng.shuffle(steps)
            path = "".join(steps)
            rects = comb.rect_decompose(path)
            mask, disjoint = comb.rects_cover_mask(rects, ell - ups, ups)
            assert disjoint
            assert ((mask == 1) == comb.cells_under_path(path)).all()
            assert comb.rect_perimeter_sum(rects) <= bound
    report(9, True, "rectangle decompositions: disjoint, exact cover, "
                    "perimeter sum <= 2*len*(log2 len + 1) "
                    "(len in {64,256,1024}, 100 paths each)")


def test_criterion_10_blue_red_deviation_sandwich():
    rng = np.random.default_rng(SEED + 10)
    details = []
    ok = True
    for side in (16, 32, 64):
        vals = []
        for _ in range(200):
            cg = comb.CoarseGrid(
                side, rng.poisson(1.0, (side, side)).astype(np.int64),
                rng.poisson(1.0, (side, side)).astype(np.int64))
            v, _ = comb.max_blue_red(cg)
            vals.append(v)
        med = float(np.median(vals))
        mu = side * side
        lo, hi = side / 2, 4 * side * (math.log2(mu) ** 2)
        ok = ok and lo <= med <= hi
        details.append(f"sqrt(mu)={side}: median {med:.0f} in "
                       f"[{lo:.0f}, {hi:.0f}]")
    report(10, ok, "; ".join(details))


def test_criterion_11_graveyard_displacement_tail():
    x, n = 8.0, 1 << 16
    cfg = bench.ExperimentConfig(
        experiment="graveyard_hover", n=n, x_list=(x,), trials=1, seed=SEED,
        windows_warmup=1, windows_measured=8, query_rate=0)
    disp = []
    for trial in range(4):
        sd = bench.trial_seed(SEED, 0, trial)
        _out, _table, res = bench.run_hovering(cfg, x, sd,
                                               policy="graveyard", record=True)
        recs = res.records
        sel = recs[(recs[:, eng.R_KIND] == 0) & (recs[:, eng.R_WINDOW] >= 1)]
        disp.append(sel[:, eng.R_DISP])
    d = np.concatenate(disp)
    freqs = np.array([(d >= r * x).mean() for r in range(1, 7)])
    ok = (np.diff(freqs) <= 1e-12).all() and freqs[5] <= freqs[1] / 4
    report(11, ok,
           f"graveyard displacement tail at x=8, n=2^16 over {len(d)} inserts: "
           f"freq(d>=rx)={np.round(freqs, 5).tolist()} nonincreasing, "
           f"freq(r=6)={freqs[5]:.5f} <= freq(r=2)/4={freqs[1]/4:.5f}")


def test_criterion_12_rearrangement_monotonicity():
    from probelab.hashing import mix64

    def crossing_for(table_seed, n, initial_keys, w):
        cfg = TableConfig(n=n, layout="extended",
                          extension_slots=min_extension_slots(n, 1.5),
                          x_param=1.5, hash_seed=table_seed)
        t = TableState(cfg)
        for k in initial_keys:
            t.insert(k)
        t.rebuild()
        res = t.run(w.kinds, w.keys, record=True, track_windows=True)
        log = met.MetricsLog.from_replay(t, res)
        return met.crossing_numbers(log, 0)

    rng = np.random.default_rng(SEED + 12)
    for case in range(50):
        n = int(rng.integers(16, 48))
        cap = wl.fill_count(n, 2.0)
        initial_count = int(rng.integers(0, cap + 1))
        initial_keys = [10**7 + 977 * i for i in range(initial_count)]
        live = list(initial_keys)
        kinds, keys = [], []
        ctr = 0
        for _ in range(int(rng.integers(4, n))):
            if len(live) >= cap or (live and rng.random() < 0.5):
                i = int(rng.integers(0, len(live)))
                kinds.append(wl.DELETE)
                keys.append(live[i])
                live[i] = live[-1]
                live.pop()
            else:
                ctr += 1
                kinds.append(wl.INSERT)
                k = int(mix64(np.uint64(ctr * 7919 + case * 104729)))
                keys.append(k)
                live.append(k)
        s = wl.Workload(np.array(kinds, dtype=np.int8),
                        np.array(keys, dtype=np.uint64), {"seed": case})
        s_bar = wl.rearrange(s, initial_count, cap)
        assert wl.replay_valid(s_bar, initial_keys)
        assert wl.shape_parts(s_bar) is not None
        assert int(wl.live_counts(s_bar, initial_count).max()) <= cap
        c_before = crossing_for(case + 1, n, initial_keys, s)
        c_after = crossing_for(case + 1, n, initial_keys, s_bar)
        assert (c_after >= c_before).all(), f"case {case}"
    report(12, True, "rearranged crossing numbers dominate pointwise on 50 "
                     "instances (zero tolerance); output shape and load cap "
                     "verified")


def test_criterion_13_external_memory():
    cfg = bench.ExperimentConfig(
        experiment="em_sweep", n=1 << 17, x_list=(16.0,), trials=4, seed=SEED,
        layout="extended", windows_warmup=1, windows_measured=4,
        query_rate=1, r_list=(2, 4, 8), offsets=8)
    csv_text, _ = bench.run(cfg)
    means = {}
    for line in csv_text.splitlines()[1:]:
        parts = line.split(",")
        if parts[2] == "-1" and parts[5].startswith("em_mean_transfers"):
            means[int(parts[5].rsplit("_r", 1)[1])] = float(parts[6])
    ok = all(means[r] <= 1 + 8 / r for r in (2, 4, 8))
    ok = ok and means[2] > means[4] > means[8]
    report(13, ok,
           f"graveyard EM at x=16, B=r*x, 8 offsets: mean transfers/op "
           f"{ {r: round(means[r], 4) for r in (2, 4, 8)} } each <= 1+8/r, "
           f"strictly decreasing in r")


def test_criterion_14_balls_and_bins_tails():
    res = comb.ballsbins_tail(m=1 << 14, n=1 << 14, x=4.0, k_max=6,
                              trials=800, seed=SEED)
    ok = True
    parts = []
    for name in ("prefix_band", "prefix_excess"):
        f = res[name]
        ok = ok and (np.diff(f) <= 1e-12).all() and f[5] <= f[1] / 4
        parts.append(f"{name}: f(2)={f[1]:.4f}, f(6)={f[5]:.4f}")
    report(14, ok, "bad-event frequencies nonincreasing with f(6) <= f(2)/4 "
                   "at n=2^14 (" + "; ".join(parts) + ")")


def test_criterion_15_hash_family_robustness():
    base_classic = slope_of(classic_slopes("random"), "final_insert_probes")
    base_g = graveyard_slopes("random", trials=6)
    base = {
        "classic_insert": base_classic,
        "fill_insert": slope_of(base_g["fill"], "mean_insert_probes"),
        "fill_query": slope_of(base_g["fill"], "negative_query_probes"),
        "hover_insert": slope_of(base_g["hover"], "mean_insert_probes"),
        "hover_query": slope_of(base_g["hover"], "mean_query_probes"),
        "hover_delete": slope_of(base_g["hover"], "mean_delete_probes"),
        "path_insert": slope_of(base_g["path"], "mean_insert_probes"),
    }
    worst = 0.0
    details = []
    for fam in ("tabulation", "poly5"):
        other_classic = slope_of(classic_slopes(fam), "final_insert_probes")
        other_g = graveyard_slopes(fam, trials=4)
        other = {
            "classic_insert": other_classic,
            "fill_insert": slope_of(other_g["fill"], "mean_insert_probes"),
            "fill_query": slope_of(other_g["fill"], "negative_query_probes"),
            "hover_insert": slope_of(other_g["hover"], "mean_insert_probes"),
            "hover_query": slope_of(other_g["hover"], "mean_query_probes"),
            "hover_delete": slope_of(other_g["hover"], "mean_delete_probes"),
            "path_insert": slope_of(other_g["path"], "mean_insert_probes"),
        }
        shift = max(abs(other[k] - base[k]) for k in base)
        worst = max(worst, shift)
        details.append(f"{fam}: max |shift| {shift:.3f}")
    report(15, worst < 0.15,
           "criteria 1+5 slopes under tabulation/poly5 shift < 0.15 vs fully "
           "random (" + "; ".join(details) + ")")
