"""Ordered linear probing table with tombstone deletions.

Runs are kept sorted by stored hash; queries terminate early at the first
entry whose hash exceeds the probed key's. Deletions leave a tombstone
carrying the deleted element's hash; insertions shift the displaced suffix
right until the first tombstone or free slot, which is consumed.

Rebuild policies: never, every R insertions (full tombstone purge), or
graveyard (purge + seed floor(n/(2x)) evenly spaced artificial tombstones and
give the next window a budget of floor(n/(4x)) insert/delete operations,
where x tracks the current load factor 1 - 1/x).

A TableState is owned by one logical thread; independent instances may be
replayed concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine as eng
from .hashing import FamilyKind, HashFamily, make_family


class TableError(Exception):
    pass


class DuplicateKeyError(TableError):
    pass


class KeyNotFoundError(TableError):
    pass


class TableOverflowError(TableError):
    """A shift ran past the extension boundary (fatal for the trial)."""


class TableFullError(TableError):
    pass


def min_extension_slots(n: int, x_param: float) -> int:
    """Extension floor ceil(8 x^2 ln n): overflow past it is a negligible-
    probability event at the scales this harness runs."""
    return int(math.ceil(8.0 * x_param * x_param * math.log(max(n, 2))))


@dataclass(frozen=True)
class TableConfig:
    n: int
    layout: str = "wrap"               # "wrap" | "extended"
    extension_slots: int = 0           # extended layout only
    x_param: float = 2.0               # table targets load 1 - 1/x
    rebuild_policy: str = "never"      # "never" | "every_r" | "graveyard"
    rebuild_r: int = 0                 # every_r only
    resize_on_rebuild: bool = False
    hash_kind: FamilyKind = FamilyKind.FULLY_RANDOM
    hash_seed: int = 1

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.layout not in ("wrap", "extended"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if not self.x_param > 1.0:
            raise ValueError("x_param must exceed 1")
        if self.layout == "extended":
            floor = min_extension_slots(self.n, self.x_param)
            if self.extension_slots < floor:
                raise ValueError(
                    f"extension_slots={self.extension_slots} below the floor "
                    f"{floor} for n={self.n}, x={self.x_param}")
        elif self.extension_slots:
            raise ValueError("extension_slots only apply to the extended layout")
        if self.rebuild_policy not in ("never", "every_r", "graveyard"):
            raise ValueError(f"unknown rebuild policy {self.rebuild_policy!r}")
        if self.rebuild_policy == "every_r" and self.rebuild_r < 1:
            raise ValueError("every_r policy needs rebuild_r >= 1")

    @property
    def size(self) -> int:
        return self.n + (self.extension_slots if self.layout == "extended" else 0)

    @property
    def wrap(self) -> bool:
        return self.layout == "wrap"

    @property
    def policy_code(self) -> int:
        return {"never": eng.POLICY_NEVER,
                "every_r": eng.POLICY_EVERY_R,
                "graveyard": eng.POLICY_GRAVEYARD}[self.rebuild_policy]


@dataclass
class OpRecord:
    """Per-operation instrumentation."""
    op_kind: str                     # insert | delete | query_hit | query_miss
    key_hash: int
    probes: int
    displacement: Optional[int]      # inserts only
    peak: Optional[int]              # inserts only
    consumed: Optional[tuple]        # ("free", pos) | ("tombstone", hash, pos)
    linear_pos_start: int
    linear_pos_end: int
    window: int

    @classmethod
    def from_row(cls, row) -> "OpRecord":
        kind = ("insert", "delete", "query_hit", "query_miss")[int(row[eng.R_KIND])]
        consumed = None
        if kind == "insert":
            if row[eng.R_CONSUMED_KIND] == 0:
                consumed = ("free", int(row[eng.R_CONSUMED_POS]))
            elif row[eng.R_CONSUMED_KIND] == 1:
                consumed = ("tombstone", int(row[eng.R_CONSUMED_HASH]),
                            int(row[eng.R_CONSUMED_POS]))
        return cls(
            op_kind=kind,
            key_hash=int(row[eng.R_HASH]),
            probes=int(row[eng.R_PROBES]),
            displacement=int(row[eng.R_DISP]) if kind == "insert" else None,
            peak=int(row[eng.R_PEAK]) if kind == "insert" else None,
            consumed=consumed,
            linear_pos_start=int(row[eng.R_SPAN_START]),
            linear_pos_end=int(row[eng.R_SPAN_END]),
            window=int(row[eng.R_WINDOW]),
        )


@dataclass
class RebuildSummary:
    slots_touched: int
    tombstones_seeded: int = 0
    window_budget: int = 0
    x_now: float = 0.0
    resized_to: Optional[int] = None


@dataclass
class ReplayResult:
    status: int
    records: Optional[np.ndarray]
    winstats: Optional[np.ndarray]   # completed + current windows, WSTAT_LEN cols
    windows_completed: int
    resizes: int = 0


class TableState:
    """The probing table plus counters and rebuild-window state."""

    def __init__(self, config: TableConfig):
        config.validate()
        self.config = config
        self.family = make_family(config.hash_kind, config.hash_seed, config.n)
        size = config.size
        self.tag = np.zeros(size + 1, dtype=np.int8)
        self.hsh = np.zeros(size + 1, dtype=np.int64)
        self.key = np.zeros(size + 1, dtype=np.uint64)
        self.state = np.zeros(eng.STATE_LEN, dtype=np.int64)
        self.fstate = np.zeros(eng.FSTATE_LEN, dtype=np.float64)
        self.fstate[eng.F_XPARAM] = config.x_param
        self.fstate[eng.F_XLAST] = config.x_param
        self.resize_log: list[tuple[int, float]] = []
        if config.rebuild_policy == "graveyard":
            # a fresh table behaves as if rebuilt at load 0: no seeding,
            # budget floor(n/(4 x_param))
            self.state[eng.S_BUDGET] = max(1, int(config.n / (4.0 * config.x_param)))

    # -- basic accessors ----------------------------------------------------
    @property
    def n(self) -> int:
        return self.config.n

    @property
    def size(self) -> int:
        return self.config.size

    @property
    def element_count(self) -> int:
        return int(self.state[eng.S_ELEMS])

    @property
    def tombstone_count(self) -> int:
        return int(self.state[eng.S_TOMBS])

    @property
    def load_factor(self) -> float:
        return self.element_count / self.n

    @property
    def inserts_since_rebuild(self) -> int:
        return int(self.state[eng.S_INS_SINCE])

    @property
    def ops_since_rebuild(self) -> int:
        return int(self.state[eng.S_OPS_SINCE])

    @property
    def window_budget(self) -> int:
        return int(self.state[eng.S_BUDGET])

    @property
    def window_id(self) -> int:
        return int(self.state[eng.S_WINDOW])

    @property
    def x_at_last_rebuild(self) -> float:
        return float(self.fstate[eng.F_XLAST])

    # -- single operations (drive the same kernels as bulk replay) ----------
    def _one(self, kind: int, key: int) -> tuple[int, OpRecord]:
        kinds = np.array([kind], dtype=np.int8)
        keys = np.array([key], dtype=np.uint64)
        hashes = np.array([self.family.eval(key)], dtype=np.int64)
        records = np.zeros((1, eng.REC_LEN), dtype=np.int64)
        dummy_w = np.zeros((1, eng.WSTAT_LEN), dtype=np.float64)
        status, _ = eng.run_ops(
            self.tag, self.hsh, self.key, self.n, self.size, self.config.wrap,
            kinds, hashes, keys, 0,
            self.config.policy_code, self.config.rebuild_r,
            self.config.resize_on_rebuild,
            self.state, self.fstate,
            True, records, False, dummy_w)
        if status == eng.RESIZE_REQUEST:
            self._resize_in_band()
            self.graveyard_rebuild()
            self.state[eng.S_WINDOW] += 1
            status = eng.OK
        return status, OpRecord.from_row(records[0])

    def insert(self, key: int) -> OpRecord:
        if self.element_count >= self.n:
            raise TableFullError("no element slot available")
        status, rec = self._one(eng.OP_INSERT, key)
        if status == eng.ERR_DUPLICATE:
            raise DuplicateKeyError(f"key {key} already present")
        if status == eng.ERR_OVERFLOW:
            raise TableOverflowError("shift ran past the extension boundary")
        if status == eng.ERR_FULL:
            raise TableFullError("probe exhausted the table")
        return rec

    def query(self, key: int) -> tuple[bool, OpRecord]:
        status, rec = self._one(eng.OP_QUERY, key)
        return rec.op_kind == "query_hit", rec

    def delete(self, key: int) -> OpRecord:
        status, rec = self._one(eng.OP_DELETE, key)
        if status == eng.ERR_NOT_FOUND:
            raise KeyNotFoundError(f"key {key} not present")
        return rec

    # -- rebuilds ------------------------------------------------------------
    def rebuild(self) -> RebuildSummary:
        eng.rebuild_kernel(self.tag, self.hsh, self.key, self.n, self.size,
                           self.config.wrap)
        self.state[eng.S_TOMBS] = 0
        self.state[eng.S_INS_SINCE] = 0
        self.state[eng.S_OPS_SINCE] = 0
        return RebuildSummary(slots_touched=self.size)

    def graveyard_rebuild(self) -> RebuildSummary:
        status = eng.graveyard_rebuild_kernel(
            self.tag, self.hsh, self.key, self.n, self.size, self.config.wrap,
            self.state, self.fstate)
        if status == eng.ERR_OVERFULL:
            raise TableFullError("graveyard rebuild at load factor 1")
        if status == eng.ERR_OVERFLOW:
            raise TableOverflowError("tombstone seeding overflowed the extension")
        return RebuildSummary(
            slots_touched=self.size,
            tombstones_seeded=self.tombstone_count,
            window_budget=self.window_budget,
            x_now=self.x_at_last_rebuild)

    def live_keys(self) -> np.ndarray:
        mask = self.tag[1:self.size + 1] == eng.ELEM
        return self.key[1:self.size + 1][mask]

    def resize(self, new_n: int) -> "TableState":
        """Move all elements into a clean table of new_n slots under a fresh
        family (same kind, seed XOR new_n); tombstones are not carried."""
        keys = self.live_keys()
        if new_n < len(keys) + 1:
            raise ValueError("new_n must exceed the element count")
        cfg = self.config
        ext = (min_extension_slots(new_n, cfg.x_param)
               if cfg.layout == "extended" else 0)
        new_cfg = TableConfig(
            n=new_n, layout=cfg.layout, extension_slots=ext,
            x_param=cfg.x_param, rebuild_policy=cfg.rebuild_policy,
            rebuild_r=cfg.rebuild_r, resize_on_rebuild=cfg.resize_on_rebuild,
            hash_kind=cfg.hash_kind, hash_seed=cfg.hash_seed)
        family = self.family.derive(new_n, seed_xor=new_n)
        size = new_cfg.size
        tag = np.zeros(size + 1, dtype=np.int8)
        hsh = np.zeros(size + 1, dtype=np.int64)
        key = np.zeros(size + 1, dtype=np.uint64)
        if len(keys):
            hashes = family.eval_batch(keys)
            order = np.lexsort((keys, hashes))
            for j in order:
                st, *_ = eng.insert_kernel(tag, hsh, key, new_n, size,
                                           new_cfg.wrap,
                                           int(hashes[j]), np.uint64(keys[j]))
                if st == eng.ERR_OVERFLOW:
                    raise TableOverflowError("resize overflowed the extension")
        old_state = self.state
        self.config = new_cfg
        self.family = family
        self.tag, self.hsh, self.key = tag, hsh, key
        self.state = np.zeros(eng.STATE_LEN, dtype=np.int64)
        self.state[eng.S_ELEMS] = len(keys)
        self.state[eng.S_WINDOW] = old_state[eng.S_WINDOW]
        self.state[eng.S_BUDGET] = max(1, int(new_n / (4.0 * cfg.x_param)))
        self.fstate = np.array([cfg.x_param, cfg.x_param], dtype=np.float64)
        return self

    def _resize_in_band(self) -> int:
        """Pick new_n so the post-resize load lies in
        [1 - 1/x_param, 1 - 1/(2 x_param)]."""
        e = self.element_count
        x = self.config.x_param
        lo = math.ceil(e / (1.0 - 1.0 / (2.0 * x)))
        hi = math.floor(e / (1.0 - 1.0 / x))
        mid = round(e / (1.0 - 3.0 / (4.0 * x)))
        new_n = min(max(mid, lo), hi) if lo <= hi else max(e + 1, mid)
        self.resize(new_n)
        self.resize_log.append((new_n, self.load_factor))
        return new_n

    # -- bulk replay ----------------------------------------------------------
    def run(self, kinds: np.ndarray, keys: np.ndarray,
            record: bool = False, track_windows: bool = False,
            max_windows: int = 0) -> ReplayResult:
        """Replay a pre-validated op sequence through the policy-aware driver.

        Raises on duplicate/missing keys and overflow; handles graveyard
        resize requests transparently (rehashing the remaining op stream).
        """
        kinds = np.ascontiguousarray(kinds, dtype=np.int8)
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        nops = len(kinds)
        records = (np.zeros((nops, eng.REC_LEN), dtype=np.int64)
                   if record else np.zeros((1, eng.REC_LEN), dtype=np.int64))
        if track_windows and max_windows <= 0:
            max_windows = self._estimate_windows(nops)
        winstats = (np.zeros((max_windows, eng.WSTAT_LEN), dtype=np.float64)
                    if track_windows else np.zeros((1, eng.WSTAT_LEN),
                                                   dtype=np.float64))
        hashes = self.family.eval_batch(keys)
        start = 0
        resizes = 0
        while True:
            status, nxt = eng.run_ops(
                self.tag, self.hsh, self.key, self.n, self.size,
                self.config.wrap,
                kinds, hashes, keys, start,
                self.config.policy_code, self.config.rebuild_r,
                self.config.resize_on_rebuild,
                self.state, self.fstate,
                record, records, track_windows, winstats)
            if status == eng.RESIZE_REQUEST:
                w = self.state[eng.S_WINDOW]
                self._resize_in_band()
                self.graveyard_rebuild()
                if track_windows and w < max_windows:
                    winstats[w, eng.W_REBUILD_SLOTS] += self.size
                self.state[eng.S_WINDOW] += 1
                resizes += 1
                if nxt < nops:
                    hashes = self.family.eval_batch(keys)
                start = nxt
                continue
            if status == eng.ERR_WINDOWS_FULL:
                grown = np.zeros((winstats.shape[0] * 2, eng.WSTAT_LEN),
                                 dtype=np.float64)
                grown[:winstats.shape[0]] = winstats
                winstats = grown
                max_windows = winstats.shape[0]
                start = nxt
                continue
            break
        if status == eng.ERR_DUPLICATE:
            raise DuplicateKeyError(f"duplicate insert at op {nxt}")
        if status == eng.ERR_NOT_FOUND:
            raise KeyNotFoundError(f"delete of absent key at op {nxt}")
        if status == eng.ERR_OVERFLOW:
            raise TableOverflowError(f"extension overflow at op {nxt}")
        if status in (eng.ERR_FULL, eng.ERR_OVERFULL):
            raise TableFullError(f"table full at op {nxt}")
        return ReplayResult(
            status=status,
            records=records if record else None,
            winstats=winstats if track_windows else None,
            windows_completed=int(self.state[eng.S_WINDOW]),
            resizes=resizes)

    def _estimate_windows(self, nops: int) -> int:
        cfg = self.config
        if cfg.rebuild_policy == "every_r":
            return nops // max(1, cfg.rebuild_r) + 4
        if cfg.rebuild_policy == "graveyard":
            min_budget = max(1, int(cfg.n / (16.0 * cfg.x_param)))
            return nops // min_budget + 8
        return 4

    # -- integrity and serialization ------------------------------------------
    def check_integrity(self) -> Optional[str]:
        """Verify run order, counters, and stored-hash consistency.

        Returns None when clean, else a description of the first violation.
        """
        size, n = self.size, self.n
        tags = self.tag[1:size + 1]
        elems = int((tags == eng.ELEM).sum())
        tombs = int((tags == eng.TOMB).sum())
        if elems != self.element_count:
            return f"element counter {self.element_count} != {elems} slots"
        if tombs != self.tombstone_count:
            return f"tombstone counter {self.tombstone_count} != {tombs} slots"
        pos = np.arange(1, size + 1, dtype=np.int64)
        occupied = tags != eng.EMPTY
        disp = pos - self.hsh[1:size + 1]
        if self.config.wrap:
            disp = np.where(disp < 0, disp + n, disp)
            prev_occ = np.roll(occupied, 1)
            prev_disp = np.roll(disp, 1)
        else:
            prev_occ = np.concatenate(([False], occupied[:-1]))
            prev_disp = np.concatenate(([0], disp[:-1]))
        if (disp[occupied] < 0).any():
            bad = pos[occupied][disp[occupied] < 0][0]
            return f"entry at slot {bad} resides before its hash"
        starts = occupied & ~prev_occ
        if (disp[starts] != 0).any():
            bad = pos[starts][disp[starts] != 0][0]
            return f"run-order violation: run start at slot {bad} has nonzero displacement"
        inside = occupied & prev_occ
        if (disp[inside] > prev_disp[inside] + 1).any():
            bad = pos[inside][disp[inside] > prev_disp[inside] + 1][0]
            return f"run-order violation at slot {bad}"
        emask = tags == eng.ELEM
        if emask.any():
            want = self.family.eval_batch(self.key[1:size + 1][emask])
            got = self.hsh[1:size + 1][emask]
            if (want != got).any():
                bad = pos[emask][want != got][0]
                return f"stored hash mismatch at slot {bad}"
        hmask = occupied
        stored = self.hsh[1:size + 1][hmask]
        if hmask.any() and ((stored < 1).any() or (stored > n).any()):
            return "stored hash outside [1, n]"
        return None

    def to_text(self) -> str:
        """One slot per line: `index TAB tag TAB hash TAB key`
        (E empty, K element, T tombstone)."""
        lines = []
        for p in range(1, self.size + 1):
            t = self.tag[p]
            if t == eng.EMPTY:
                lines.append(f"{p}\tE")
            elif t == eng.ELEM:
                lines.append(f"{p}\tK\t{self.hsh[p]}\t{self.key[p]}")
            else:
                lines.append(f"{p}\tT\t{self.hsh[p]}")
        return "\n".join(lines) + "\n"


def new_table(config: TableConfig) -> TableState:
    """Fresh table per config; raises ValueError on invalid config."""
    return TableState(config)


def parse_snapshot(text: str) -> list[tuple]:
    """Parse to_text() output into (index, tag, hash, key) tuples."""
    out = []
    for line in text.splitlines():
        if not line:
            continue
        parts = line.split("\t")
        idx = int(parts[0])
        if parts[1] == "E":
            out.append((idx, "E", None, None))
        elif parts[1] == "T":
            out.append((idx, "T", int(parts[2]), None))
        else:
            out.append((idx, "K", int(parts[2]), int(parts[3])))
    return out
