"""A small link-count sweep with the benchmark harness.

The same sweep is available from the shell, e.g.
``bench --mode link --algos jsiia,cfa --links 8,16,32,64,128 --repeats 20``.
"""

import os
import tempfile

from artidyn.bench import BenchConfig, emit_csv, loglog_slope, read_csv, run_benchmark

config = BenchConfig(mode="link", algos=("jsiia", "abia", "cfa"),
                     link_counts=(8, 16, 32, 64, 128), repeats=10)
records = run_benchmark(config)
for r in records:
    print(f"{r.algo:>5} n={r.n_links:<4} {r.mean_time / 1e3:8.2f} ms")

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "sweep.csv")
    emit_csv(records, path)
    rows = read_csv(path)
for algo in config.algos:
    print(f"{algo}: log-log slope over n = 32..128 is {loglog_slope(rows, algo, 32, 128):.2f}")
