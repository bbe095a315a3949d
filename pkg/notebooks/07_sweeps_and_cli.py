# %% [markdown]
# # Sweeps, reports and the command line
#
# Sweeps are deterministic functions of their spec and master seed. Cells
# that exceed the `K` budget are reported as skipped, never dropped.

# %%
import json
import subprocess
import sys
import tempfile

from threshold_rem.experiments import SweepSpec, sweep_psi, write_report

spec = SweepSpec(base=dict(P=2.0, N0=2.0, Delta0=1.0, M=0.4), betas=(0.5, 2.0),
                 rates=(0.5, 1.5), durations=(6.0, 8.0), trials=10, master_seed=3,
                 k_max=2e4)
report = sweep_psi(spec)
for c in report.cells:
    print(c["beta"], c["R"], c["T"], c["status"], c.get("gap"), c.get("skip_reason"))
print(json.dumps(report.verdicts, indent=1))
assert report.to_json() == sweep_psi(spec).to_json()

# %%
out = tempfile.mkdtemp()
print(write_report(report, out, emit_plot_data=True))

# %% [markdown]
# The same machinery from the command line. Each invocation gets its own run
# directory with a `manifest.json` sidecar.

# %%
for argv in (["phase-diagram", "--beta-max", "3", "--R-max", "2", "--n", "50"],
             ["slepian", "--check"],
             ["sweep-threshold", "--R", "0.3", "0.9", "1.5", "--T", "10", "--trials", "100",
              "--seed", "7"]):
    proc = subprocess.run([sys.executable, "-m", "threshold_rem.cli", *argv, "--out", out],
                          capture_output=True, text=True)
    print(proc.returncode, proc.stdout.strip())
