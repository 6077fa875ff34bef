#!/usr/bin/env python3
"""The classic asymmetry: fill a table to load 1 - 1/x and the *next insert*
costs about x^2/2 probes, while a negative query costs about x/2.

Runs a small grid of x values, prints the measured means next to the
second-order law (1 + x^2)/2, and fits both log-log slopes.
"""

import numpy as np

from probelab import bench

N = 1 << 16
XS = (2.0, 4.0, 8.0, 16.0)

print(f"filling n={N} to load 1-1/x, then one insert + 2000 negative queries")
print(f"{'x':>4} {'insert probes':>14} {'(1+x^2)/2':>10} {'query probes':>13}")

cfg = bench.ExperimentConfig(experiment="classic_fill", n=N, x_list=XS,
                             trials=60, seed=7, query_batch=2000)
csv_text, report = bench.run(cfg)

means = {}
for line in csv_text.splitlines()[1:]:
    parts = line.split(",")
    if parts[2] == "-1":
        means.setdefault(parts[5], {})[float(parts[1])] = float(parts[6])

for x in XS:
    print(f"{x:4.0f} {means['final_insert_probes'][x]:14.1f} "
          f"{(1 + x * x) / 2:10.1f} {means['negative_query_probes'][x]:13.2f}")

ins = report.slopes["final_insert_probes"][0]
qry = report.slopes["negative_query_probes"][0]
print(f"\nfitted insert slope {ins:.2f} (quadratic regime), "
      f"query slope {qry:.2f} (linear regime)")
print("same table, same load: insertions pay for clustering, queries don't.")
