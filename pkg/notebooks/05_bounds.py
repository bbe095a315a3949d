# %% [markdown]
# # Error exponents and the Weiss-Weinstein bound

# %%
import numpy as np

from threshold_rem.bounds import error_exponent, log_wwb, ml_mse_exponent, wwb_exponent
from threshold_rem.experiments import compare_bounds
from threshold_rem.model import validate

C = 1.0
for R in (0.05, C / 6, 0.2, C / 4, 0.5, C, 2.0):
    print(f"R={R:.3f}  E(R)={error_exponent(R, C):.4f}  ML={ml_mse_exponent(R, C):.4f}"
          f"  WWB={wwb_exponent(R, C):.4f}")

# %% [markdown]
# The numeric bound maximizes over the test offset `h`. At T = 20 the
# maximizer still sits on the large-offset branch (`h` well beyond the pulse
# width). From T = 40 on it moves below the pulse width, where the bound
# behaves like `(Delta0 / CT)^2 exp(-2RT)`; the polynomial factor adds about
# `2 ln(CT / Delta0) / T` to the rate, which decays only slowly toward `2R`.

# %%
for T in (20.0, 40.0, 80.0, 160.0):
    p = validate(P=2.0, N0=2.0, T=T, Delta0=1.0, R=0.1, M=0.4)
    lw, h = log_wwb(p)
    print(f"T={T:5.0f}  -ln(WWB)/T = {-lw / T:.4f}  h*/Delta = {h / p.Delta:.3g}")

# %%
rep = compare_bounds([(0.1, 1.0, 40.0), (0.2, 1.0, 40.0), (2.0, 1.0, 40.0)])
for c in rep.cells:
    print(c["R"], c["regime"], round(c["wwb_rate"], 4), c["wwb_exponent"], c["ml_mse_exponent"])
print(rep.verdicts)
