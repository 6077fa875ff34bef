#!/usr/bin/env python3
"""The lattice-path toolbox on its own: the max blue-red differential DP
against brute-force path enumeration and downward-closed subset enumeration,
a rectangle decomposition with its perimeter ledger, and the recursive
high-deviation path construction on a Poisson grid."""

import math

import numpy as np

from probelab import combinatorics as comb

rng = np.random.default_rng(2)

# 1. DP vs both oracles on a random small grid
h, w = 5, 4
m = np.zeros((h, w), dtype=np.int64)
ops = []
for t in range(h):
    col = int(rng.integers(0, w))
    sign = 1 if rng.random() < 0.5 else -1
    m[t, col] = sign
    ops.append((col + 1, sign))
val, path = comb.max_blue_red(m)
print("grid (rows are time, +1 blue / -1 red):")
print(m)
print(f"DP max differential = {val}, witness path = {path}")
print(f"brute-force over all {math.comb(h + w, w)} paths = "
      f"{comb.brute_force_max(m)}")
print(f"downward-closed subset enumeration    = {comb.downward_closed_max(ops)}")

# 2. rectangle decomposition of a random path
ell = 64
ups = 24
steps = np.array(list("U" * ups + "R" * (ell - ups)))
rng.shuffle(steps)
p = "".join(steps)
rects = comb.rect_decompose(p)
mask, disjoint = comb.rects_cover_mask(rects, ell - ups, ups)
covered = comb.cells_under_path(p)
print(f"\npath of length {ell}: {len(rects)} rectangles, disjoint={disjoint}, "
      f"exact cover={bool(((mask == 1) == covered).all())}")
print(f"perimeter sum {comb.rect_perimeter_sum(rects)} <= "
      f"{int(2 * ell * (math.log2(ell) + 1))} (the 2*len*(log2 len + 1) budget)")

# 3. high-deviation construction on a Poisson grid
side = 32
mu = side * side
dev_rate = math.sqrt(math.log2(math.log2(mu))) / 8.0
cg = comb.CoarseGrid(side, rng.poisson(1.0, (side, side)).astype(np.int64),
                     rng.poisson(1.0, (side, side)).astype(np.int64))
path, dev = comb.highvalue_path(cg, dev_rate)
best, _ = comb.max_blue_red(cg)
print(f"\nPoisson({1}) {side}x{side} grid: constructed path deviation {dev}, "
      f"DP maximum {best}, sqrt(mu) = {side}")
print("the recursive quadrant construction finds a large-deviation path "
      "without ever searching the exponential path space.")
