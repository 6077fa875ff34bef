"""Analysis quantities computed from operation logs and table snapshots.

Crossing number c_j of a rebuild window: how many insertions with hash below
j consumed a tombstone whose hash is >= j or a free slot at position >= j.
Positional offset o_i: length of the block starting at slot i filled with
entries whose hashes are all below i. Spillover s_i: largest k with at least
4k relevant hashes in [i, i+k).

Exact identities maintained here (asserted with zero tolerance by the test
suite): sum of insert displacements == sum of c_j per window, and
c_s == the best interval insertion surplus ending at s - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine as eng
from .table import ReplayResult, TableState


class UnsupportedLayoutError(ValueError):
    """Positional accounting needs the extended layout's total order."""


@dataclass
class MetricsLog:
    """Per-operation records plus the window structure of one replay."""
    records: np.ndarray                  # (N, REC_LEN) int64
    n: int
    extension: int
    layout: str
    rebuild_slots: Optional[np.ndarray] = None   # per window
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.n + self.extension

    @property
    def windows(self) -> np.ndarray:
        return np.unique(self.records[:, eng.R_WINDOW])

    def window_records(self, window: int) -> np.ndarray:
        return self.records[self.records[:, eng.R_WINDOW] == window]

    @classmethod
    def from_replay(cls, table: TableState, result: ReplayResult,
                    **meta) -> "MetricsLog":
        if result.records is None:
            raise ValueError("replay was not recorded")
        rebuild = None
        if result.winstats is not None:
            rebuild = result.winstats[:, eng.W_REBUILD_SLOTS].copy()
        return cls(records=result.records, n=table.n,
                   extension=table.size - table.n,
                   layout=table.config.layout,
                   rebuild_slots=rebuild, meta=dict(meta))


def crossing_numbers(log: MetricsLog, window: int) -> np.ndarray:
    """c_j for j = 1..n+extension (returned 0-indexed: out[j-1] == c_j).

    Each insert with hash h consuming a tombstone of hash t increments c_j on
    (h, t]; consuming a free slot at position p increments c_j on (h, p].
    """
    if log.layout != "extended":
        raise UnsupportedLayoutError(
            "crossing numbers need a total position order; use the extended layout")
    size = log.size
    recs = log.window_records(window)
    ins = recs[recs[:, eng.R_KIND] == 0]
    diff = np.zeros(size + 2, dtype=np.int64)
    if len(ins):
        h = ins[:, eng.R_HASH]
        peak = ins[:, eng.R_PEAK]
        np.add.at(diff, h + 1, 1)
        np.add.at(diff, peak + 1, -1)
    return np.cumsum(diff)[1:size + 1]


def displacement_sum(log: MetricsLog, window: int) -> int:
    recs = log.window_records(window)
    ins = recs[recs[:, eng.R_KIND] == 0]
    return int(ins[:, eng.R_DISP].sum())


def positional_offset(table: TableState, i: int) -> int:
    """Largest j - i such that slots [i, j-1] all hold entries with hashes
    smaller than i (extended layout only)."""
    if table.config.wrap:
        raise UnsupportedLayoutError("positional offset needs the extended layout")
    j = i
    size = table.size
    while j <= size and table.tag[j] != eng.EMPTY and table.hsh[j] < i:
        j += 1
    return j - i


def spillover(key_hashes, i: int) -> int:
    """Largest k >= 0 such that at least 4k of the hashes lie in [i, i+k)."""
    hs = np.asarray(key_hashes, dtype=np.int64)
    if hs.size == 0:
        return 0
    total = int((hs >= i).sum())
    kmax = total // 4
    if kmax == 0:
        return 0
    top = i + kmax
    counts = np.bincount(np.clip(hs, 0, top), minlength=top + 1)
    prefix = np.cumsum(counts)          # prefix[v] = #hashes <= v
    best = 0
    for k in range(1, kmax + 1):
        cnt = int(prefix[i + k - 1] - prefix[i - 1])
        if cnt >= 4 * k:
            best = k
    return best


def spillover_all(key_hashes, n: int) -> np.ndarray:
    """s_i for every i in [1, n], via the transform Q[j] = prefix[j] - 4j:
    s_i is the distance to the rightmost j >= i-1 with Q[j] >= Q[i-1].

    The range [i, i+k) may extend past n (its count saturates), so Q runs out
    to n + total/4, past which it can only decrease."""
    hs = np.asarray(key_hashes, dtype=np.int64)
    top = n + len(hs) // 4 + 1
    counts = np.bincount(np.clip(hs, 1, n), minlength=top + 1)
    prefix = np.cumsum(counts)                  # prefix[j] = #hashes <= j
    q = prefix - 4 * np.arange(top + 1)         # j = 0..top
    suffix_max = np.maximum.accumulate(q[::-1])[::-1]
    rev = -suffix_max                            # ascending
    out = np.empty(n, dtype=np.int64)
    for i in range(1, n + 1):
        # rightmost j with suffix_max[j] >= q[i-1]
        j = int(np.searchsorted(rev, -q[i - 1], side="right")) - 1
        out[i - 1] = max(j - (i - 1), 0)
    return out


@dataclass
class KindStats:
    count: int
    mean_probes: float
    median_probes: float
    p99_probes: float


@dataclass
class WindowStats:
    window: int
    insert_count: int
    amortized_insert_probes: Optional[float]
    mean_displacement: Optional[float]
    rebuild_slots: int


@dataclass
class AggregateSummary:
    per_kind: dict
    per_window: list

    def rows(self):
        """(metric, window, value) triples in a CSV-friendly flat order."""
        out = []
        for kind in sorted(self.per_kind):
            st = self.per_kind[kind]
            out.append((f"{kind}_count", -1, st.count))
            out.append((f"{kind}_mean_probes", -1, st.mean_probes))
            out.append((f"{kind}_median_probes", -1, st.median_probes))
            out.append((f"{kind}_p99_probes", -1, st.p99_probes))
        for ws in self.per_window:
            if ws.amortized_insert_probes is not None:
                out.append(("amortized_insert_probes", ws.window,
                            ws.amortized_insert_probes))
            if ws.mean_displacement is not None:
                out.append(("mean_displacement", ws.window, ws.mean_displacement))
        return out


def _nearest_rank_p99(sorted_vals: np.ndarray) -> float:
    idx = int(np.ceil(0.99 * len(sorted_vals))) - 1
    return float(sorted_vals[max(idx, 0)])


def aggregate(log: MetricsLog) -> AggregateSummary:
    """Per-kind probe statistics and per-window amortized insert cost
    (insert probes plus the window's rebuild slot-visits, per insert)."""
    recs = log.records
    kinds = {0: "insert", 1: "delete", 2: "query_hit", 3: "query_miss"}
    per_kind = {}
    for code, name in kinds.items():
        sel = recs[recs[:, eng.R_KIND] == code]
        if len(sel) == 0:
            continue
        probes = np.sort(sel[:, eng.R_PROBES])
        per_kind[name] = KindStats(
            count=len(sel),
            mean_probes=float(probes.mean()),
            median_probes=float(np.median(probes)),
            p99_probes=_nearest_rank_p99(probes))
    per_window = []
    for w in log.windows:
        sel = recs[recs[:, eng.R_WINDOW] == w]
        ins = sel[sel[:, eng.R_KIND] == 0]
        rebuild = 0
        if log.rebuild_slots is not None and w < len(log.rebuild_slots):
            rebuild = int(log.rebuild_slots[int(w)])
        if len(ins):
            amort = (float(ins[:, eng.R_PROBES].sum()) + rebuild) / len(ins)
            mdisp = float(ins[:, eng.R_DISP].mean())
        else:
            amort = None
            mdisp = None
        per_window.append(WindowStats(
            window=int(w), insert_count=len(ins),
            amortized_insert_probes=amort, mean_displacement=mdisp,
            rebuild_slots=rebuild))
    return AggregateSummary(per_kind=per_kind, per_window=per_window)
