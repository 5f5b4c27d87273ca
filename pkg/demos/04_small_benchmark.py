"""Compare force-informed and spherical neighbourhoods on a short DW-R4 run.

This is a reduced version of ``fdit bench --config benchmarks/dw4.spec``.
"""

import sys

from fdit.bench import BenchmarkSpec, Case, run_benchmark, summarize

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 10
spec = BenchmarkSpec(cases=(Case("dw", 4, 0.3),), runs=runs, name="dw4-demo")
records = run_benchmark(spec, progress=lambda r: print(".", end="", flush=True))
print()
for stats in summarize(records):
    print(stats.table())
