"""Freeze reference values for the steadiness t-test.

Computes, from textbook formulas only (no package imports):
  * the t-statistic of one fixed noisy ramp window,
  * the two-sided critical value at confidence 0.9 with n-2 dof,
  * the exact detection power for the acceptance ramp via the
    noncentral t distribution.
Printed values get pasted into tests/test_ssd.py as constants.
"""

import numpy as np
from scipy import stats

n = 40
t = np.arange(n, dtype=float)          # 1-s samples
rng = np.random.default_rng(1234)
noise = rng.normal(0.0, 0.1, n)

# fixed window: ramp of 1 L/min per 10 s starting from 5 L/min
y = 5.0 + 0.1 * t + noise

tbar = t.mean()
sxx = np.sum((t - tbar) ** 2)
slope = np.sum((t - tbar) * (y - y.mean())) / sxx
resid = y - (y.mean() + slope * (t - tbar))
s2 = np.sum(resid**2) / (n - 2)
se = np.sqrt(s2 / sxx)
t_stat = slope / se

print(f"sxx           = {sxx!r}")
print(f"slope         = {slope!r}")
print(f"se            = {se!r}")
print(f"t_stat        = {t_stat!r}")

# cross-check against scipy's independent implementation
lr = stats.linregress(t, y)
assert abs(lr.slope - slope) < 1e-12
assert abs(lr.stderr - se) < 1e-12

alpha = 0.9
t_crit = stats.t.ppf(0.5 + alpha / 2.0, n - 2)
print(f"t_crit(0.9,38) = {t_crit!r}")

# acceptance ramp: 1 L/min over the whole 40-s window, noise 0.1
b = 1.0 / 40.0
nc = b * np.sqrt(sxx) / 0.1
power = stats.nct.sf(t_crit, n - 2, nc) + stats.nct.cdf(-t_crit, n - 2, nc)
print(f"noncentrality  = {nc!r}")
print(f"ramp power     = {power!r}")
