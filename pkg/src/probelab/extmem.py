"""Two-level memory accounting: probe spans to block-transfer counts.

A block holds B consecutive slots; a span [a, b] of touched slots costs one
transfer per distinct block it intersects. Rebuilds are charged
ceil((n+extension)/B) transfers, amortized over the ops of the window they
close. Spans need the extended layout's total position order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine as eng
from .table import TableConfig, TableState
from .workloads import Workload


@dataclass(frozen=True)
class BlockModel:
    B: int                      # slots per block
    alignment_offset: int = 0   # where block boundaries sit relative to slot 1

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if not (0 <= self.alignment_offset < self.B):
            raise ValueError("alignment_offset must lie in [0, B)")


def block_transfers(span_start: int, span_end: int, model: BlockModel) -> int:
    """Distinct blocks intersecting [span_start, span_end]."""
    if span_start > span_end:
        raise ValueError("span_start must not exceed span_end")
    b, off = model.B, model.alignment_offset
    return (span_end + off - 1) // b - (span_start + off - 1) // b + 1


def transfers_for_spans(spans: np.ndarray, model: BlockModel) -> np.ndarray:
    """Vectorized block_transfers for an (N, 2) span array."""
    b, off = model.B, model.alignment_offset
    return ((spans[:, 1] + off - 1) // b - (spans[:, 0] + off - 1) // b + 1)


@dataclass
class EMSummary:
    mean_op_transfers: float
    rebuild_amortized: float     # rebuild transfers per op
    total_op_transfers: int
    total_rebuild_transfers: int
    op_count: int


def spans_from_records(records: np.ndarray) -> np.ndarray:
    return records[:, (eng.R_SPAN_START, eng.R_SPAN_END)]


def summarize_em(records: np.ndarray, winstats: np.ndarray,
                 model: BlockModel) -> EMSummary:
    """EM summary for a recorded replay: per-op transfers from spans, rebuild
    transfers ceil(slots/B) per completed window."""
    spans = spans_from_records(records)
    per_op = transfers_for_spans(spans, model)
    rebuild_slots = winstats[:, eng.W_REBUILD_SLOTS]
    rebuild_transfers = int(np.ceil(rebuild_slots[rebuild_slots > 0]
                                    / model.B).sum())
    nops = len(per_op)
    return EMSummary(
        mean_op_transfers=float(per_op.mean()) if nops else 0.0,
        rebuild_amortized=rebuild_transfers / nops if nops else 0.0,
        total_op_transfers=int(per_op.sum()),
        total_rebuild_transfers=rebuild_transfers,
        op_count=nops)


def simulate_em(w: Workload, config: TableConfig, model: BlockModel) -> EMSummary:
    """Replay the workload from a fresh table under config and account block
    transfers for every op plus amortized rebuild transfers."""
    if config.layout != "extended":
        raise ValueError("external-memory accounting needs the extended layout")
    table = TableState(config)
    result = table.run(w.kinds, w.keys, record=True, track_windows=True)
    return summarize_em(result.records, result.winstats, model)
