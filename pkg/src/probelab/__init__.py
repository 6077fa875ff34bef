"""Ordered linear probing with tombstones: library and benchmark harness.

Subpackages: hashing (hash families), table (the probing table), workloads
(seeded generators + the window rearrangement), metrics (crossing numbers,
offsets, spillover), combinatorics (monotone-path machinery, balls and bins),
extmem (block-transfer accounting), bench (experiment runner / CLI).
"""

from .hashing import FamilyKind, HashFamily, make_family
from .table import (OpRecord, RebuildSummary, TableConfig, TableState,
                    new_table)

__all__ = [
    "FamilyKind", "HashFamily", "make_family",
    "OpRecord", "RebuildSummary", "TableConfig", "TableState", "new_table",
]
