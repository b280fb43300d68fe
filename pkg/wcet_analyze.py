#!/usr/bin/env python3
"""
Incremental WCET Analyzer (command line)

Anytime worst-case execution time bounds for programs written in the
line-oriented transition-system format (see API.md). Loops are unrolled
from their `loopbound` annotations before analysis.

Configuration via environment variables (or a .env file):
- WCET_CACHE_SETS: default number of direct-mapped cache sets (default: 128)
- WCET_HIT_COST / WCET_MISS_PENALTY: cache timings (default: 0 / 128)
- WCET_SPLIT_CAP: disequality case-split cap of the solver (default: 16)
- WCET_MAX_CONSTRAINTS / WCET_MAX_VARIABLES: solver caps (default: 512 / 64)
- WCET_MILP_TIME_LIMIT: seconds for the integral model search (default: 2.0)
- WCET_PROJECTION_CAP: Fourier-Motzkin constraint cap (default: 256)
- WCET_ORACLE_PATH_CAP: oracle path cap (default: 1048576)
- WCET_LOG_LEVEL: log level when --verbose is not given (default: WARNING)

=== QUICK REFERENCE ===

1. EXACT WCET WITH A CONVERGENCE TRACE:
   wcet_analyze.py analyze programs/increments.prog --log trace.csv
   -> lower=3 upper=3 exact=true iterations=2

2. STOP EARLY AT A 5% GAP OR AFTER 200 MS:
   wcet_analyze.py analyze prog.prog --epsilon 0.05 --budget-ms 200
   -> exit 2 when the budget ran out first; the printed bounds are still valid

3. GROUND TRUTH BY ENUMERATION (small programs only):
   wcet_analyze.py oracle programs/increments.prog
   -> wcet=3, path=..., paths=N (exit 3 beyond --path-cap)

4. HOW MUCH DID REFINEMENT GAIN OVER PLAIN AI:
   wcet_analyze.py compare programs/two_diamond.prog --cache-sets 4 --miss-penalty 10

5. RANDOM TEST PROGRAM:
   wcet_analyze.py generate --seed 7 --branches 5 > random.prog

=== EXIT CODES ===

0 converged, 1 input error, 2 budget exhausted, 3 path explosion,
4 incremental bounds do not bracket the oracle (compare)
"""
import sys

from wcet.cli import main

if __name__ == "__main__":
    sys.exit(main())
