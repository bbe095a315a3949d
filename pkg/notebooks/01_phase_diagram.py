# %% [markdown]
# # Phase diagram of the delay-only partition function
#
# The free energy `psi(beta, R) = lim ln Z / T` has three branches. This
# script evaluates them on a grid, labels each point and prints the boundary
# curves that separate the phases.

# %%
import numpy as np

from threshold_rem import analytic
from threshold_rem.model import validate

params = validate(P=2.0, N0=2.0, T=10.0, Delta0=1.0, R=0.5, M=0.4)
print("capacity C =", params.C)

# %% [markdown]
# A few points, one per phase. `boundary_distance` is the distance in the
# (beta, R) plane to the nearest boundary of the point's own phase.

# %%
for beta, R in [(1.0, 0.5), (0.5, 0.9), (2.0, 1.5), (1.0, 1.0)]:
    s = analytic.psi_single(beta, R, params)
    print(f"beta={beta:<4} R={R:<4} psi={s.value:.4f}  {s.branch}  d={s.boundary_distance:.3f}")

# %% [markdown]
# The three curves meet at the triple point `(R, beta) = (C, 2/N0)`.

# %%
diagram = analytic.phase_boundaries_single(params)
print("triple point (R, beta):", diagram.triple_point)
for curve in diagram.curves:
    pts = curve.polyline(beta_max=3.0, R_max=2.0, n=5)
    print(curve.name, np.round(pts, 3).tolist())

# %% [markdown]
# A coarse text map of the phases: O ordered, P paramagnetic, G glassy.
# Rows run from large R (top) to small R.

# %%
symbol = {"ordered": "O", "paramagnetic": "P", "glassy": "G"}
betas = np.linspace(0.05, 3.0, 60)
for R in np.linspace(2.0, 0.05, 20):
    row = ""
    for b in betas:
        lab = analytic.classify_phase_single(b, R, params)
        row += symbol.get(str(lab), "+")
    print(f"{R:5.2f} {row}")

# %% [markdown]
# A mismatched correlator with overlap `rho` moves the triple point to
# `(rho^2 C, 2 rho / N0)`.

# %%
for rho in (1.0, 0.8, 0.5):
    print(rho, analytic.mismatch_transform(rho, params).triple_point)
