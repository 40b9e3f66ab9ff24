"""Compare the rescaled renewal sum tau_k / N with the Dickman law.

The exact law of tau_k comes from repeated convolution, so the distance shown
carries no Monte Carlo noise.  Its oscillation in N comes from the integer
number of steps k = floor(log N).
"""

import math

import numpy as np

from polymerlab.lattice import EULER_GAMMA, overlap
from polymerlab.renewal import renewal_sum_law

print(f"{'N':>8} {'k':>3} {'sup distance on [0,1]':>22}")
for e in (10, 12, 14, 16):
    N = 2**e
    k = int(math.floor(math.log(N)))
    cdf = np.cumsum(renewal_sum_law(overlap(N), N, k))
    target = math.exp(-EULER_GAMMA) * np.arange(N + 1) / N
    print(f"{N:>8} {k:>3} {np.max(np.abs(cdf - target)):>22.4f}")
