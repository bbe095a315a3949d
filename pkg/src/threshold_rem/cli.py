"""
Command-line entry point.

Every invocation resolves its parameters (defaults, then config file, then
flags), creates a fresh run directory under ``--out`` and writes its outputs
there together with a ``manifest.json`` sidecar. Output bodies never contain
timestamps, so the same argv and config give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import analytic, bounds, experiments
from .model import DomainError, GridSpec, validate
from .simulate import EXACT, SURROGATE, GridError, TrialError, mc_run
from .slepian import SlepianTable, slepian_cdf, slepian_pdf

SUBCOMMANDS = ("phase-diagram", "phase-diagram-joint", "psi", "simulate", "sweep-psi",
               "sweep-threshold", "slepian", "bounds", "mismatch")

DEFAULTS = {
    "P": 2.0, "N0": 2.0, "T": 10.0, "Delta0": 1.0, "R": 0.5, "M": 0.4,
    "alpha_min": 1.0, "alpha_max": 1.0, "G": 16, "seed": 0, "trials": 100,
    "mode": SURROGATE, "threads": 1, "beta": [1.0], "beta_max": 3.0, "R_max": 2.0,
    "n": 200, "rho": 1.0, "k_max": None, "loose_alpha": False,
}
# config keys that may hold a list of values
LIST_KEYS = ("beta", "R", "T")
INT_KEYS = ("G", "seed", "trials", "threads", "n")


class UsageError(Exception):
    pass


def _version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        from . import __version__
        return __version__


# -- configuration ---------------------------------------------------------

def parse_config_text(text, json_format=False):
    """Flat ``key = value`` text (comma-separated lists allowed) or JSON."""
    if json_format:
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected 'name = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
    out = {}
    for k, v in raw.items():
        k = k.replace("-", "_")
        if k not in DEFAULTS and k not in ("P", "N0", "T", "Delta0", "R", "M"):
            raise UsageError(f"unknown config key {k!r}")
        out[k] = _coerce(k, v)
    return out


def _coerce(k, v):
    if k == "mode":
        return str(v)
    if k == "loose_alpha":
        return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")
    if k == "k_max":
        return float(v)
    if isinstance(v, str):
        parts = [s for s in v.replace(",", " ").split()]
        try:
            vals = [int(s) if k in INT_KEYS else float(s) for s in parts]
        except ValueError:
            raise UsageError(f"bad value for {k}: {v!r}") from None
    else:
        vals = list(v) if isinstance(v, (list, tuple)) else [v]
        vals = [int(x) if k in INT_KEYS else float(x) for x in vals]
    if k in LIST_KEYS:
        return vals
    if len(vals) != 1:
        raise UsageError(f"{k} takes a single value")
    return vals[0]


def _resolve(args):
    conf = dict(DEFAULTS)
    if args.config:
        path = args.config
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"--config: {exc}") from None
        conf.update(parse_config_text(text, json_format=path.endswith(".json")))
    for key in DEFAULTS.keys() | {"P", "N0", "T", "Delta0", "R", "M"}:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            conf[key] = val
    for k in LIST_KEYS:
        if not isinstance(conf[k], list):
            conf[k] = [conf[k]]
    if conf["mode"] not in (EXACT, SURROGATE):
        raise UsageError(f"--mode: invalid choice {conf['mode']!r}")
    conf["command"] = args.command
    return conf


def _scalar(conf, k):
    v = conf[k]
    if len(v) != 1:
        raise UsageError(f"--{k} takes a single value for {conf['command']}")
    return v[0]


def _params(conf, R=None, T=None):
    return validate(P=conf["P"], N0=conf["N0"],
                    T=_scalar(conf, "T") if T is None else T,
                    Delta0=conf["Delta0"],
                    R=_scalar(conf, "R") if R is None else R,
                    M=conf["M"], alpha_min=conf["alpha_min"], alpha_max=conf["alpha_max"],
                    strict_alpha=not conf["loose_alpha"])


# -- output helpers --------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _json(obj):
    return json.dumps(experiments._clean(obj), indent=2, sort_keys=True) + "\n"


def _config_hash(conf):
    blob = json.dumps(experiments._clean(conf), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _run_dir(out, name):
    path = os.path.join(out, name)
    i = 0
    while True:
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            i += 1
            path = os.path.join(out, f"{name}-{i}")


class _Run:
    def __init__(self, conf, out, label):
        self.dir = _run_dir(out, label or f"{conf['command']}-{_config_hash(conf)}")
        self.conf = conf
        self.files = []

    def put(self, name, text):
        path = os.path.join(self.dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.files.append(path)
        print(f"wrote {path}")

    def adopt(self, paths):
        for p in paths:
            self.files.append(p)
            print(f"wrote {p}")

    def finish(self):
        manifest = {
            "command": self.conf["command"],
            "resolved": experiments._clean(self.conf),
            "seed": self.conf["seed"],
            "version": _version(),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "files": [os.path.basename(f) for f in self.files],
        }
        path = os.path.join(self.dir, "manifest.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")


# -- subcommands -----------------------------------------------------------

def _diagram_rows(diagram, beta_max, R_max, n):
    rows = []
    for c in diagram.curves:
        for b, r in c.polyline(beta_max, R_max, n):
            rows.append((c.name, b, r))
    return rows


def _phase_grid(conf, run, joint):
    p = _params(conf)
    n = conf["n"]
    betas = np.linspace(conf["beta_max"] / n, conf["beta_max"], n)
    rates = np.linspace(0.0, conf["R_max"], n)
    values = analytic.psi_joint_values if joint else analytic.psi_single_values
    classify = analytic.classify_phase_joint if joint else analytic.classify_phase_single
    rows = []
    for b in betas:
        psi = np.atleast_1d(values(b, rates, p))
        for r, v in zip(rates, psi):
            rows.append((b, r, v, classify(b, r, p)))
    tag = "joint" if joint else "single"
    run.put(f"phase_{tag}.csv", _csv(["beta", "R", "psi", "branch"], rows))
    diagram = analytic.phase_boundaries_joint(p) if joint else analytic.phase_boundaries_single(p)
    run.put(f"boundaries_{tag}.csv",
            _csv(["curve", "beta", "R"], _diagram_rows(diagram, conf["beta_max"], conf["R_max"], n)))
    if joint:
        anom = analytic.phase_boundaries_joint(p, anomalous_only=True)
        run.put("boundaries_joint_anomalous.csv",
                _csv(["curve", "beta", "R"], _diagram_rows(anom, conf["beta_max"], conf["R_max"], n)))


def cmd_phase_diagram(conf, run):
    _phase_grid(conf, run, joint=False)


def cmd_phase_diagram_joint(conf, run):
    _phase_grid(conf, run, joint=True)


def cmd_psi(conf, run):
    p = _params(conf, R=conf["R"][0])
    rows = []
    for b in conf["beta"]:
        for R in conf["R"]:
            pr = _params(conf, R=R)
            s = analytic.psi_single(b, R, pr)
            row = [b, R, s.value, str(s.branch), s.boundary_distance]
            if p.joint:
                j = analytic.psi_joint(b, R, pr)
                row += [j.value, str(j.branch), j.alpha]
            rows.append(row)
    header = ["beta", "R", "psi", "branch", "boundary_distance"]
    if p.joint:
        header += ["psi_joint", "branch_joint", "alpha"]
    run.put("psi.csv", _csv(header, rows))


def cmd_simulate(conf, run):
    p = _params(conf)
    budget = conf["k_max"] or experiments.K_MAX[conf["mode"]]
    if conf["mode"] == EXACT and p.K > budget:
        raise experiments.BudgetError(f"K = {p.K:.6g} exceeds budget {budget:.6g}")
    betas = tuple(conf["beta"]) if conf.get("with_psi") else ()
    res = mc_run(p, GridSpec(conf["G"]), conf["trials"], conf["mode"], conf["seed"],
                 betas=betas, threads=conf["threads"])
    rows = [(t.trial_index, t.seed, t.m_hat, t.alpha_hat, t.sq_error, int(t.anomalous))
            for t in res.trials]
    run.put("trials.csv", _csv(["trial_index", "seed", "m_hat", "alpha_hat", "sq_error",
                                "anomalous"], rows))
    run.put("summary.json", _json(res.summary()))


def _spec(conf, kind):
    base = {k: conf[k] for k in ("P", "N0", "Delta0", "M", "alpha_min", "alpha_max")}
    return experiments.SweepSpec(
        base=base, betas=tuple(conf["beta"]) if kind == "psi" else (),
        rates=tuple(conf["R"]), durations=tuple(conf["T"]), trials=conf["trials"],
        mode=conf["mode"], master_seed=conf["seed"], grid=GridSpec(conf["G"]),
        k_max=conf["k_max"], strict_alpha=not conf["loose_alpha"], threads=conf["threads"])


def cmd_sweep_psi(conf, run):
    report = experiments.sweep_psi(_spec(conf, "psi"))
    run.adopt(experiments.write_report(report, run.dir, conf["emit_plot_data"]))


def cmd_sweep_threshold(conf, run):
    report = experiments.sweep_threshold(_spec(conf, "threshold"))
    run.adopt(experiments.write_report(report, run.dir, conf["emit_plot_data"]))


def slepian_residuals(h=1e-4):
    """Normalization and derivative-consistency residuals of the closed form."""
    from scipy.integrate import quad

    norm = quad(slepian_pdf, -np.inf, np.inf, epsabs=1e-13, limit=200)[0]
    a = np.linspace(-5, 8, 2601)
    fd = (slepian_cdf(a + h) - slepian_cdf(a - h)) / (2 * h)
    return {"normalization": abs(norm - 1.0), "derivative": float(np.max(np.abs(fd - slepian_pdf(a))))}


def cmd_slepian(conf, run):
    if conf["check"]:
        res = slepian_residuals()
        print(f"normalization residual {res['normalization']:.3e}")
        print(f"derivative residual {res['derivative']:.3e}")
        run.put("slepian_check.json", _json(res))
        return
    res = experiments.validate_slepian(conf["trials"], conf["G"], conf["seed"])
    if res["under_resolved"]:
        print(f"warning: G = {conf['G']} < 256 is under-resolved", file=sys.stderr)
    run.put("slepian_ks.json", _json(res))
    path = os.path.join(run.dir, "slepian_table.bin")
    SlepianTable().build().save(path)
    run.adopt([path])


def cmd_bounds(conf, run):
    C = conf["P"] / conf["N0"]
    points = [(R, C, T) for R in conf["R"] for T in conf["T"]]
    report = experiments.compare_bounds(
        points, base={"N0": conf["N0"], "Delta0": conf["Delta0"], "M": conf["M"]})
    run.adopt(experiments.write_report(report, run.dir, conf["emit_plot_data"]))


def cmd_mismatch(conf, run):
    p = _params(conf)
    d = analytic.mismatch_transform(conf["rho"], p)
    rows = _diagram_rows(d, conf["beta_max"], conf["R_max"], conf["n"])
    run.put("mismatch_boundaries.csv", _csv(["curve", "beta", "R"], rows))
    run.put("mismatch.json", _json({"rho": conf["rho"], "triple_point": {
        "R": d.triple_point[0], "beta": d.triple_point[1]}}))


COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "phase-diagram-joint": cmd_phase_diagram_joint,
    "psi": cmd_psi,
    "simulate": cmd_simulate,
    "sweep-psi": cmd_sweep_psi,
    "sweep-threshold": cmd_sweep_threshold,
    "slepian": cmd_slepian,
    "bounds": cmd_bounds,
    "mismatch": cmd_mismatch,
}


# -- argument parsing ------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    g = common.add_argument_group("parameters")
    for name in ("P", "N0", "Delta0", "M"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--T", type=float, nargs="+")
    g.add_argument("--R", type=float, nargs="+")
    g.add_argument("--beta", type=float, nargs="+")
    g.add_argument("--alpha-min", dest="alpha_min", type=float)
    g.add_argument("--alpha-max", dest="alpha_max", type=float)
    g.add_argument("--loose-alpha", dest="loose_alpha", action="store_true",
                   help="skip the amplitude normalization check")
    g.add_argument("--G", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--mode", choices=(EXACT, SURROGATE))
    g.add_argument("--threads", type=int)
    g.add_argument("--k-max", dest="k_max", type=float)
    g.add_argument("--beta-max", dest="beta_max", type=float)
    g.add_argument("--R-max", dest="R_max", type=float)
    g.add_argument("--n", type=int, help="grid points per axis of phase diagrams")
    g.add_argument("--rho", type=float)
    o = common.add_argument_group("output")
    o.add_argument("--config")
    o.add_argument("--out", default="runs")
    o.add_argument("--label")
    o.add_argument("--emit-plot-data", dest="emit_plot_data", action="store_true")

    parser = _Parser(prog="threshold-rem", description=__doc__.strip().splitlines()[0],
                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common], allow_abbrev=False)
        if name == "slepian":
            sp.add_argument("--check", action="store_true")
        if name == "simulate":
            sp.add_argument("--with-psi", dest="with_psi", action="store_true",
                            help="also record ln Z / T at every --beta")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        conf = _resolve(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    conf["emit_plot_data"] = args.emit_plot_data
    conf["check"] = getattr(args, "check", False)
    conf["with_psi"] = getattr(args, "with_psi", False)
    run = _Run(conf, args.out, args.label)
    try:
        COMMANDS[args.command](conf, run)
    except (UsageError, DomainError, GridError, TrialError, experiments.BudgetError,
            bounds.NumericalError) as exc:
        if not os.listdir(run.dir):
            os.rmdir(run.dir)
        if isinstance(exc, UsageError):
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
        print(f"error: {exc}", file=sys.stderr)
        return 1
    run.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
