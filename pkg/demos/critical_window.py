"""Tune the inverse temperature into the critical window and watch the variance grow like log N."""

import math

from polymerlab.dickman import intermittency_constant
from polymerlab.disorder import gaussian, rademacher, solve_beta
from polymerlab.lattice import overlap
from polymerlab.renewal import solve_renewal_time

limit = intermittency_constant(0.0)
print(f"limit of Var[Z_N] / log N at theta = 0: {limit:.6f}")
print(f"{'N':>7} {'beta (gauss)':>13} {'beta (rad)':>11} {'Var/log N':>10}")
for e in (8, 10, 12, 14):
    N = 2**e
    table = overlap(N)
    wg = solve_beta(gaussian(), N, 0.0)
    wr = solve_beta(rademacher(), N, 0.0)
    var = solve_renewal_time(wg, table, method="fft").variance()
    print(f"{N:>7} {wg.beta:>13.6f} {wr.beta:>11.6f} {var / math.log(N):>10.5f}")
