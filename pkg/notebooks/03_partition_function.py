# %% [markdown]
# # Empirical partition function
#
# One realization of the receiver yields an energy level per resolution
# cell: the correct cell has energy about `E`, the others are noise maxima.
# `ln Z / T` approaches the analytic free energy as T grows, slowly, because
# corrections of order `ln(T)/T` remain.

# %%
import numpy as np

from threshold_rem import analytic
from threshold_rem.model import GridSpec, validate
from threshold_rem.simulate import (
    WienerPath,
    correlation_process,
    energy_levels_surrogate,
    levels_from_process,
    partition_empirical,
)

params = validate(P=2.0, N0=2.0, T=6.0, Delta0=1.0, R=0.5, M=0.3)
grid = GridSpec(16)
print("K =", params.K, " Delta =", params.Delta)

# %% [markdown]
# Exact mode samples a Wiener path, forms the correlation on a grid of `G`
# points per pulse width and takes per-cell maxima.

# %%
path = WienerPath.sample(params, grid, seed=1)
proc = correlation_process(path, params, grid)
levels = levels_from_process(proc)
print("correct-cell energy", levels.eps0, " E =", params.E)
print("largest anomalous energy", levels.eps.max())

# %% [markdown]
# Surrogate mode draws the anomalous levels i.i.d. from the maximum law.

# %%
surr = energy_levels_surrogate(params, seed=1)
for beta in (0.5, 1.0, 2.0):
    e = partition_empirical(levels, beta).psi_emp
    s = partition_empirical(surr, beta).psi_emp
    th = analytic.psi_single(beta, params.R, params)
    print(f"beta={beta}: exact {e:.3f}  surrogate {s:.3f}  limit {th.value:.3f} ({th.branch})")

# %% [markdown]
# The gap to the limit shrinks with T.

# %%
for T in (4.0, 6.0, 8.0, 10.0):
    p = params.replace(T=T)
    vals = [partition_empirical(energy_levels_surrogate(p, seed=s), 1.0).psi_emp for s in range(10)]
    print(T, p.K, round(float(np.mean(vals)) - analytic.psi_single(1.0, p.R, p).value, 3))
