"""Grids built from operation sequences and the monotone-path machinery.

An op sequence restricted to a hash interval becomes a grid: one row per time
step, one column per interval position, a blue cell for an insertion hashing
there, red for a deletion. A monotone path walks the lattice from the bottom
left to the top right moving only right/up, and covers the cells below-right
of it. Covered sets are exactly the downward-closed op subsets, so the best
blue-red differential over paths equals the best insertion surplus over
downward-closed subsets; an O(H*W) dynamic program computes it, with a full
path enumeration and a subset enumeration as independent oracles.

Also here: the coarse side x side grid, the recursive rectangle decomposition
of the area under a path (perimeter sum <= 2*len*(log2 len + 1)), the
recursive high-deviation quadrant path construction, and prefix/interval
balls-in-bins tail estimators.

Coverage convention, fixed once and shared by the DP, both oracles, and the
decomposition: with x_t the path's column when crossing row t, cell (t, h) is
covered iff h > x_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from .workloads import DELETE, INSERT, Workload


@dataclass
class Grid:
    """Blue (insert) / red (delete) cells, one row per op time step."""
    height: int
    width: int
    blue: list = field(default_factory=list)   # (t, h), 1-based
    red: list = field(default_factory=list)

    def __post_init__(self):
        rows = {}
        for t, h in list(self.blue) + list(self.red):
            if not (1 <= t <= self.height and 1 <= h <= self.width):
                raise ValueError(f"cell ({t},{h}) out of bounds")
            if rows.get(t):
                raise ValueError(f"two colored cells in time step {t}")
            rows[t] = True

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.height, self.width), dtype=np.int64)
        for t, h in self.blue:
            m[t - 1, h - 1] += 1
        for t, h in self.red:
            m[t - 1, h - 1] -= 1
        return m


@dataclass
class CoarseGrid:
    """Dot counts per coarse cell; rows/cols are ceil-partitioned blocks."""
    side: int
    blue_counts: np.ndarray
    red_counts: np.ndarray

    def diff(self) -> np.ndarray:
        return (self.blue_counts - self.red_counts).astype(np.int64)


def build_grid(w: Workload, interval: tuple[int, int],
               hashes: np.ndarray) -> Grid:
    """One colored cell per insert/delete whose hash lies in the interval;
    t is the op index, h is hash - interval start + 1. `hashes` aligns with
    the workload's ops."""
    lo, hi = interval
    blue, red = [], []
    for t, (kind, h) in enumerate(zip(w.kinds, hashes), start=1):
        if lo <= h <= hi:
            if kind == INSERT:
                blue.append((t, int(h) - lo + 1))
            elif kind == DELETE:
                red.append((t, int(h) - lo + 1))
    return Grid(height=len(w.kinds), width=hi - lo + 1, blue=blue, red=red)


# ---------------------------------------------------------------------------
# monotone paths
# ---------------------------------------------------------------------------

def path_row_positions(path: str) -> np.ndarray:
    """x_t (columns walked before the t-th up-step) for each row."""
    xs = []
    x = 0
    for step in path:
        if step == "R":
            x += 1
        else:
            xs.append(x)
    return np.array(xs, dtype=np.int64)


def path_value(matrix: np.ndarray, path: str) -> int:
    """Blue-red differential of the cells the path covers (h > x_t)."""
    h_steps, w_steps = path.count("U"), path.count("R")
    if (h_steps, w_steps) != matrix.shape:
        raise ValueError("path does not fit the grid")
    xs = path_row_positions(path)
    total = 0
    for t in range(matrix.shape[0]):
        total += int(matrix[t, xs[t]:].sum())
    return total


def cells_under_path(path: str) -> np.ndarray:
    """Boolean (H, W) mask of covered cells."""
    h, w = path.count("U"), path.count("R")
    xs = path_row_positions(path)
    cols = np.arange(1, w + 1)
    return cols[None, :] > xs[:, None]


def _dp_max(matrix: np.ndarray) -> tuple[int, str]:
    """Max blue-red differential over all monotone paths, with a witness.

    f[x] after row t = best value of a partial path whose crossing of row t
    happens at column <= x; each row is one vectorized running-max update.
    """
    h, w = matrix.shape
    suf = np.zeros((h, w + 1), dtype=np.int64)
    if w:
        suf[:, :w] = matrix[:, ::-1].cumsum(axis=1)[:, ::-1]
    f = np.zeros(w + 1, dtype=np.int64)
    took = np.zeros((h, w + 1), dtype=bool)
    for t in range(h):
        g = f + suf[t]
        f = np.maximum.accumulate(g)
        took[t] = g >= f
    value = int(f[w]) if h else 0
    steps = []
    x, t = w, h
    while t > 0:
        if took[t - 1][x]:
            steps.append("U")
            t -= 1
        else:
            steps.append("R")
            x -= 1
    steps.extend("R" * x)
    return max(value, 0), "".join(reversed(steps))


def max_blue_red(grid: Grid | CoarseGrid | np.ndarray) -> tuple[int, str]:
    """Best blue-red differential (floored at 0) and an attaining path."""
    if isinstance(grid, Grid):
        return _dp_max(grid.to_matrix())
    if isinstance(grid, CoarseGrid):
        return _dp_max(grid.diff())
    return _dp_max(np.asarray(grid, dtype=np.int64))


def brute_force_max(grid: Grid | np.ndarray) -> int:
    """Enumerate every monotone path; refuse above 10^6 paths."""
    matrix = grid.to_matrix() if isinstance(grid, Grid) else np.asarray(grid)
    h, w = matrix.shape
    if math.comb(h + w, w) > 10**6:
        raise ValueError("grid too large for exhaustive path enumeration")
    suf = np.zeros((h, w + 1), dtype=np.int64)
    if w:
        suf[:, :w] = matrix[:, ::-1].cumsum(axis=1)[:, ::-1]
    best = 0
    for upos in combinations(range(h + w), h):
        x = 0
        val = 0
        t = 0
        prev = -1
        for u in upos:
            x += u - prev - 1    # R-steps since the previous U
            prev = u
            val += suf[t, x]
            t += 1
        best = max(best, val)
    return int(best)


def downward_closed_max(ops: list[tuple[int, int]]) -> int:
    """Oracle: best insertion surplus over downward-closed subsets.

    ops = (time-ordered) list of (hash, sign) with sign +1 insert / -1 delete.
    A subset is downward-closed when for each member, every earlier op with
    hash >= its hash is also a member. Exponential; keep |ops| small.
    """
    m = len(ops)
    if m > 20:
        raise ValueError("subset enumeration limited to 20 ops")
    best = 0
    for mask in range(1 << m):
        ok = True
        surplus = 0
        for i in range(m):
            if not (mask >> i) & 1:
                continue
            surplus += ops[i][1]
            for j in range(i):
                if ops[j][0] >= ops[i][0] and not (mask >> j) & 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            best = max(best, surplus)
    return best


def insertion_surplus(w: Workload, interval: tuple[int, int],
                      initial_free_slots: int, hashes: np.ndarray) -> int:
    """max(0, best path differential - free slots initially in the interval)."""
    value, _ = max_blue_red(build_grid(w, interval, hashes))
    return max(0, value - initial_free_slots)


@njit(cache=True, nogil=True)
def interval_surplus_sweep(op_h, op_sign, free_mask, size):
    """best[s] = max over r of (max path differential on columns [r, s-1]
    minus the initially free slots in [r, s-1]), floored at 0, for every s.

    One DP per s: f[x] starts at -(free slots in [x+1, s-1]) and each op row
    applies a +/-1 prefix bump followed by a running max. op_h/op_sign are the
    time-ordered ops; free_mask[p] = 1 when slot p started empty (1-based).
    """
    out = np.zeros(size + 1, dtype=np.int64)
    pf = np.zeros(size + 1, dtype=np.int64)
    for p in range(1, size + 1):
        pf[p] = pf[p - 1] + free_mask[p]
    nops = op_h.shape[0]
    f = np.zeros(size + 1, dtype=np.int64)
    for s in range(1, size + 1):
        wcols = s - 1
        for x in range(wcols + 1):
            f[x] = -(pf[s - 1] - pf[x])
        for t in range(nops):
            h = op_h[t]
            if h >= s:
                continue
            sign = op_sign[t]
            run = np.int64(-2**62)
            for x in range(wcols + 1):
                g = f[x] + (sign if x < h else 0)
                if g > run:
                    run = g
                f[x] = run
        best = f[wcols]
        out[s] = best if best > 0 else 0
    return out


# ---------------------------------------------------------------------------
# coarse grids
# ---------------------------------------------------------------------------

def _block_edges(total: int, side: int) -> np.ndarray:
    return np.array([math.ceil(b * total / side) for b in range(side + 1)],
                    dtype=np.int64)


def coarsen(grid: Grid, side: int) -> CoarseGrid:
    """Dot counts per coarse cell; boundaries at uniform (ceil) splits."""
    if side < 1:
        raise ValueError("side must be >= 1")
    re = _block_edges(grid.height, side)
    ce = _block_edges(grid.width, side)
    blue = np.zeros((side, side), dtype=np.int64)
    red = np.zeros((side, side), dtype=np.int64)
    for counts, cells in ((blue, grid.blue), (red, grid.red)):
        for t, h in cells:
            br = int(np.searchsorted(re[1:], t, side="left"))
            bc = int(np.searchsorted(ce[1:], h, side="left"))
            counts[br, bc] += 1
    return CoarseGrid(side=side, blue_counts=blue, red_counts=red)


def coarse_to_fine_path(coarse_path: str, grid: Grid, side: int) -> str:
    """Expand a coarse-lattice path into the equivalent fine-lattice path."""
    re = _block_edges(grid.height, side)
    ce = _block_edges(grid.width, side)
    out = []
    r = c = 0
    for step in coarse_path:
        if step == "U":
            out.append("U" * (re[r + 1] - re[r]))
            r += 1
        else:
            out.append("R" * (ce[c + 1] - ce[c]))
            c += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# rectangle decomposition
# ---------------------------------------------------------------------------

def rect_decompose(path: str) -> list[tuple[int, int, int, int]]:
    """Disjoint axis-aligned rectangles exactly covering the area under the
    path, by the recursive midpoint construction. Returns (col_lo, col_hi,
    row_lo, row_hi) with 1-based inclusive cell ranges. Path length must be a
    power of two."""
    ell = len(path)
    if ell == 0 or (ell & (ell - 1)) != 0:
        raise ValueError("path length must be a power of two")
    rects: list[tuple[int, int, int, int]] = []

    def rec(seg: str, x0: int, y0: int) -> None:
        ups = seg.count("U")
        rights = len(seg) - ups
        if ups == 0 or rights == 0:
            return
        half = len(seg) // 2
        s1, s2 = seg[:half], seg[half:]
        qx = x0 + s1.count("R")
        qy = y0 + (half - s1.count("R"))
        x1 = x0 + rights
        if qx < x1 and y0 < qy:
            rects.append((qx + 1, x1, y0 + 1, qy))
        rec(s1, x0, y0)
        rec(s2, qx, qy)

    rec(path, 0, 0)
    return rects


def rect_perimeter_sum(rects) -> int:
    return sum(2 * ((c1 - c0 + 1) + (r1 - r0 + 1)) for c0, c1, r0, r1 in rects)


def rects_cover_mask(rects, width: int, height: int) -> tuple[np.ndarray, bool]:
    """(coverage-count mask, disjoint?) over the grid's cells."""
    m = np.zeros((height, width), dtype=np.int64)
    for c0, c1, r0, r1 in rects:
        m[r0 - 1:r1, c0 - 1:c1] += 1
    return m, bool((m <= 1).all())


# ---------------------------------------------------------------------------
# recursive high-deviation path construction
# ---------------------------------------------------------------------------

def highvalue_path(coarse: CoarseGrid, dev_rate: float) -> tuple[str, int]:
    """Quadrant construction: if the top-left quadrant of the current k x k
    square has blue-red deviation >= k * dev_rate, take k ups then k rights
    (covering the whole square); otherwise recurse bottom-left then top-right.
    1 x 1 squares fall back to an up-step then a right-step."""
    side = coarse.side
    if side & (side - 1):
        raise ValueError("coarse side must be a power of two")
    diff = coarse.diff()

    def rec(r0: int, c0: int, k: int) -> str:
        if k == 1:
            return "UR"
        half = k // 2
        dev = int(diff[r0 + half:r0 + k, c0:c0 + half].sum())
        if dev >= k * dev_rate:
            return "U" * k + "R" * k
        return rec(r0, c0, half) + rec(r0 + half, c0 + half, half)

    path = rec(0, 0, side)
    return path, path_value(diff, path)


# ---------------------------------------------------------------------------
# balls and bins tails
# ---------------------------------------------------------------------------

def ballsbins_tail(m: int, n: int, x: float, k_max: int, trials: int,
                   seed: int) -> dict:
    """Empirical bad-event frequencies for k = 1..k_max.

    prefix_band   : some prefix of >= x^2 k bins is outside (1 +/- 1/x) i mu
    prefix_excess : some prefix holds >= (1 + 1/x) i mu + k x balls
    interval      : some interval containing bin n//2 holds
                    >= (1 + 1/x) |I| mu + x k balls
    Events are nested in k, so each frequency array is nonincreasing.
    """
    rng = np.random.default_rng(seed)
    mu = m / n
    i_arr = np.arange(1, n + 1, dtype=np.float64)
    upper = (1.0 + 1.0 / x) * i_arr * mu
    lower = (1.0 - 1.0 / x) * i_arr * mu
    j_anchor = n // 2
    sat_fail = np.zeros(k_max + 1, dtype=np.int64)
    bol_fail = np.zeros(k_max + 1, dtype=np.int64)
    int_fail = np.zeros(k_max + 1, dtype=np.int64)
    for _ in range(trials):
        counts = np.bincount(rng.integers(0, n, size=m), minlength=n)
        prefix = np.cumsum(counts)
        viol = (prefix > upper) | (prefix < lower)
        any_from = np.logical_or.accumulate(viol[::-1])[::-1]
        max_excess = float((prefix - upper).max())
        g = prefix - upper
        best_interval = float(np.max(g[j_anchor - 1:])
                              - min(0.0, np.min(g[:j_anchor - 1])
                                    if j_anchor > 1 else 0.0))
        for k in range(1, k_max + 1):
            thr = int(math.ceil(x * x * k))
            if thr <= n and any_from[thr - 1]:
                sat_fail[k] += 1
            if max_excess >= k * x:
                bol_fail[k] += 1
            if best_interval >= k * x:
                int_fail[k] += 1
    return {
        "prefix_band": sat_fail[1:] / trials,
        "prefix_excess": bol_fail[1:] / trials,
        "interval": int_fail[1:] / trials,
        "k": np.arange(1, k_max + 1),
        "trials": trials,
    }
