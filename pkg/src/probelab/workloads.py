"""Deterministic, seeded workload generators and the window rearrangement.

Every generator draws fresh keys as sequential counters pushed through a
seeded 64-bit bijection, so keys are distinct without bookkeeping, and every
delete targets a key that is live at that point (replay against a set oracle
never errors).

`rearrange` is the two-step window transform: move the first w novel
insertions to the front (w = capacity cap minus the initial live count,
padding with fresh inserts when S has too few), then repeatedly balance
(delete, delete, insert) triples by moving a deletion on a different key than
the insertion to the back of the triple, until none remain. The output never
exceeds the load cap and its interval insertion surpluses dominate the
input's pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine as eng
from .hashing import mix64

INSERT = eng.OP_INSERT
DELETE = eng.OP_DELETE
QUERY = eng.OP_QUERY

_KIND_CHAR = {INSERT: "I", DELETE: "D", QUERY: "Q"}
_CHAR_KIND = {v: k for k, v in _KIND_CHAR.items()}


@dataclass
class Workload:
    kinds: np.ndarray            # int8, one of INSERT/DELETE/QUERY
    keys: np.ndarray             # uint64
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.kinds)

    def ops(self):
        for k, key in zip(self.kinds, self.keys):
            yield int(k), int(key)

    def counts(self) -> dict:
        return {
            "insert": int((self.kinds == INSERT).sum()),
            "delete": int((self.kinds == DELETE).sum()),
            "query": int((self.kinds == QUERY).sum()),
        }


def fill_count(n: int, x: float) -> int:
    """floor((1 - 1/x) n), the element count at load factor 1 - 1/x."""
    return int(math.floor(n * (1.0 - 1.0 / x) + 1e-9))


def gen_fill(n: int, x: float, seed: int) -> Workload:
    """floor((1-1/x) n) inserts of distinct fresh keys."""
    if not x > 1.0:
        raise ValueError("x must exceed 1")
    count = fill_count(n, x)
    keys = eng.gen_fill_kernel(count, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    kinds = np.zeros(count, dtype=np.int8)
    return Workload(kinds, keys,
                    {"gen": "fill", "seed": seed, "n": n, "x": x})


def gen_hovering(n: int, x: float, pairs: int, seed: int,
                 distinct_keys: bool = True, query_rate: int = 0) -> Workload:
    """Fill prefix, then alternating (delete a uniform live key, insert) pairs;
    with distinct_keys every inserted key is fresh forever. query_rate fresh
    negative queries follow each pair."""
    if not x > 1.0:
        raise ValueError("x must exceed 1")
    count = fill_count(n, x)
    kinds, keys = eng.gen_hovering_kernel(count, pairs,
                                          np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                                          distinct_keys, query_rate)
    return Workload(kinds, keys,
                    {"gen": "hovering", "seed": seed, "n": n, "x": x,
                     "pairs": pairs, "distinct_keys": distinct_keys,
                     "query_rate": query_rate})


def gen_pathological(n: int, x: float, r: int, seed: int,
                     blocks: int = 1) -> Workload:
    """Fill prefix, then blocks of (r-1 inserts, r deletes, 1 insert): with a
    rebuild window of r insertions, the leading r-1 inserts of each block see
    a freshly purged, tombstone-free table."""
    if r < 2:
        raise ValueError("r must be >= 2")
    if not x > 1.0:
        raise ValueError("x must exceed 1")
    count = fill_count(n, x)
    if r > count:
        raise ValueError("r exceeds the filled element count")
    kinds, keys = eng.gen_pathological_kernel(count, r, blocks,
                                              np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return Workload(kinds, keys,
                    {"gen": "pathological", "seed": seed, "n": n, "x": x,
                     "R": r, "blocks": blocks})


def gen_capped_random(n: int, x: float, length: int, seed: int) -> Workload:
    """length ops; below cap floor((1-1/x)n) a fair coin picks insert/delete,
    at the cap always delete; the live count never exceeds the cap."""
    cap = fill_count(n, x)
    kinds, keys = eng.gen_capped_kernel(cap, length,
                                        np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return Workload(kinds, keys,
                    {"gen": "capped_random", "seed": seed, "n": n, "x": x,
                     "length": length})


# ---------------------------------------------------------------------------
# replay validation (set oracle)
# ---------------------------------------------------------------------------

def replay_valid(w: Workload, initial_live=()) -> bool:
    """Every insert targets a non-live key, every delete a live key."""
    live = set(int(k) for k in initial_live)
    for kind, key in w.ops():
        if kind == INSERT:
            if key in live:
                return False
            live.add(key)
        elif kind == DELETE:
            if key not in live:
                return False
            live.remove(key)
    return True


def live_counts(w: Workload, initial: int = 0) -> np.ndarray:
    """Live-set size after each op."""
    deltas = np.where(w.kinds == INSERT, 1, np.where(w.kinds == DELETE, -1, 0))
    return initial + np.cumsum(deltas)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def serialize(w: Workload) -> str:
    """Header `# gen=<name> seed=<seed> n=<n> x=<x>`, then one op per line:
    `I key` / `D key` / `Q key`."""
    m = w.meta
    lines = [f"# gen={m.get('gen', '?')} seed={m.get('seed', 0)} "
             f"n={m.get('n', 0)} x={m.get('x', 0)}"]
    for kind, key in w.ops():
        lines.append(f"{_KIND_CHAR[kind]} {key}")
    return "\n".join(lines) + "\n"


def parse_workload(text: str) -> Workload:
    lines = text.strip().splitlines()
    meta = {}
    start = 0
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            k, _, v = tok.partition("=")
            if k in ("seed", "n"):
                meta[k] = int(v)
            elif k == "x":
                meta[k] = float(v)
            else:
                meta[k] = v
        start = 1
    kinds = np.empty(len(lines) - start, dtype=np.int8)
    keys = np.empty(len(lines) - start, dtype=np.uint64)
    for i, line in enumerate(lines[start:]):
        c, _, key = line.partition(" ")
        kinds[i] = _CHAR_KIND[c]
        keys[i] = np.uint64(int(key))
    return Workload(kinds, keys, meta)


# ---------------------------------------------------------------------------
# the rearrangement transform
# ---------------------------------------------------------------------------

def _fresh_pad_keys(existing: set, count: int, seed: int) -> list:
    out = []
    c = 0
    while len(out) < count:
        k = int(mix64(np.uint64((c + 1) * 0x9E3779B97F4A7C15 & (2**64 - 1))
                      ^ mix64(np.uint64(seed ^ 0xBEEFCAFE))))
        c += 1
        if k not in existing:
            existing.add(k)
            out.append(k)
    return out


def rearrange(w: Workload, initial_count: int, capacity_cap: int) -> Workload:
    """The two-step transform; input must be inserts/deletes only and
    replay-valid from a state with initial_count live keys."""
    if (w.kinds == QUERY).any():
        raise ValueError("rearrange input must contain only inserts/deletes")
    ops = [(int(k), int(key)) for k, key in zip(w.kinds, w.keys)]
    want = capacity_cap - initial_count
    if want < 0:
        raise ValueError("initial count already exceeds the capacity cap")

    # novel insertion = first touch of its key is that insertion
    touched = set()
    novel_idx = []
    for i, (kind, key) in enumerate(ops):
        if key not in touched and kind == INSERT:
            novel_idx.append(i)
        touched.add(key)
    if len(novel_idx) < want:
        pad = _fresh_pad_keys(set(touched), want - len(novel_idx),
                              int(w.meta.get("seed", 0)))
        for k in pad:
            novel_idx.append(len(ops))
            ops.append((INSERT, k))

    front = set(novel_idx[:want])
    ops = ([ops[i] for i in sorted(front)]
           + [op for i, op in enumerate(ops) if i not in front])

    # balance (delete, delete, insert) triples; the summed insert positions
    # strictly decrease per balance, so the loop terminates
    limit = len(ops) * len(ops) + 16
    iters = 0
    measure_prev = sum(i for i, op in enumerate(ops) if op[0] == INSERT)
    i = 0
    while i + 2 < len(ops):
        a, b, c = ops[i], ops[i + 1], ops[i + 2]
        if a[0] == DELETE and b[0] == DELETE and c[0] == INSERT:
            if b[1] != c[1]:
                ops[i], ops[i + 1], ops[i + 2] = a, c, b
            else:
                ops[i], ops[i + 1], ops[i + 2] = b, c, a
            iters += 1
            measure = sum(j for j, op in enumerate(ops) if op[0] == INSERT)
            if measure >= measure_prev:
                raise RuntimeError("balancing measure failed to decrease")
            measure_prev = measure
            if iters > limit:
                raise RuntimeError("balancing loop exceeded its iteration cap")
            i = 0  # restart scan
            continue
        i += 1

    kinds = np.array([k for k, _ in ops], dtype=np.int8)
    keys = np.array([key for _, key in ops], dtype=np.uint64)
    meta = dict(w.meta)
    meta.update({"gen": f"rearranged[{meta.get('gen', '?')}]",
                 "initial_count": initial_count, "cap": capacity_cap})
    return Workload(kinds, keys, meta)


def shape_parts(w: Workload) -> tuple[int, int, int] | None:
    """Split into inserts-prefix, alternating (delete, insert) middle, and
    deletes-suffix; None when the workload does not have that shape."""
    kinds = list(w.kinds)
    i = 0
    while i < len(kinds) and kinds[i] == INSERT:
        i += 1
    prefix = i
    mid = 0
    while i + 1 < len(kinds) and kinds[i] == DELETE and kinds[i + 1] == INSERT:
        i += 2
        mid += 1
    suffix = 0
    while i < len(kinds) and kinds[i] == DELETE:
        i += 1
        suffix += 1
    if i != len(kinds):
        return None
    return prefix, mid, suffix
