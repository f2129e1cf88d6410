"""Command-line front end: ``kprocess <command> [flags]``.

Exit codes: 0 success, 1 bad parameters, 2 tail budget exceeded, 3 I/O error.
Flag values override ``--config`` file values, which override defaults.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytics, experiments
from .env import WeightEnv, parse_env_spec
from .errors import BudgetError, ParameterError
from .kproc import simulate_trajectory
from .parallel import stream
from .paths import label_str, parse_label
from .plot import plot_aging_csv, plot_convergence_csv

SEED_MAX = 2**64 - 1

# Defaults per command; a key absent here is not accepted from a config file.
COMMON = {"seed": None, "jobs": 1, "format": "text", "out": None, "manifest": None}
DEFAULTS = {
    "env": {"env": "geometric:0.5:10", "c": 0.0},
    "simulate": {"env": "geometric:0.5:10", "c": 0.0, "y": "inf", "T": 1.0, "tail_budget": float("inf")},
    "aging": {"alpha": 0.5, "theta": "log:0.01:100:50", "closed_form": False, "estimator": "lambda_t",
              "epsilon": 1e-4, "env": None, "t": 1e-3, "replicas": 10000, "plot": None},
    "green": {"env": "geometric:0.5:30", "c": 0.0, "lam": 1.0, "x": "1..5", "mc": False, "replicas": 100000},
    "correlation": {"env": "geometric:0.5:30", "c": 0.0, "lam": 1.0, "mu": 1.0, "mc": False,
                    "replicas": 100000},
    "entrance": {"env": "geometric:0.5:30", "c": 0.0, "set": "1..10", "lam": None, "replicas": 100000},
    "trap": {"n": 10000, "alpha": 0.5, "t": 0.01, "theta": "0.5,1,2", "phi": 1, "draws": 1,
             "replicas": 10000, "plot": None},
    "converge": {"env": "subordinator:0.5:1e-6", "c": 0.0, "n_list": "10,100,1000", "T": 1.0,
                 "grid_step": None, "replicas": 100, "plot": None},
    "oracle": {"alpha": 0.5, "theta": "0.5,1,2"},
}


@dataclass
class RunConfig:
    """Effective parameters of one invocation."""

    command: str
    seed: int
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"command": self.command, "seed": self.seed, "params": self.params},
                          sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        return cls(d["command"], int(d["seed"]), dict(d.get("params", {})))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(f"{self.prog}: {message}")


def _parse_seed(text) -> int:
    try:
        seed = int(text)
    except (TypeError, ValueError):
        raise ParameterError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed <= SEED_MAX:
        raise ParameterError("seed must be a 64-bit unsigned integer")
    return seed


def parse_grid(text) -> list:
    """``"a,b,c"``, a single number, or ``"log:lo:hi:count"``."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    s = str(text)
    try:
        if s.startswith("log:"):
            lo, hi, count = s[4:].split(":")
            return np.geomspace(float(lo), float(hi), int(count)).tolist()
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"malformed grid {text!r}") from None


def parse_states(text) -> list:
    """``"1..10"`` or ``"1,3,7"``."""
    if isinstance(text, list):
        return [int(v) for v in text]
    s = str(text)
    try:
        if ".." in s:
            lo, hi = s.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"malformed state set {text!r}") from None
    if not out or min(out) < 1:
        raise ParameterError(f"state set must be non-empty and >= 1: {text!r}")
    return out


def parse_int_list(text) -> list:
    if isinstance(text, list):
        return [int(v) for v in text]
    try:
        return [int(float(v)) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"malformed list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kprocess", description="K-processes and the REM-like trap model.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with parameter values")
    common.add_argument("--seed", help="master seed (default: $KPROC_SEED or 0)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--format", choices=("text", "csv", "json"))
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--manifest", help="write a JSON run manifest here")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, argument_default=None)

    env_flags = lambda q: (q.add_argument("--env"), q.add_argument("--c", type=float))  # noqa: E731

    q = add("env", "build an environment and print it as JSON")
    env_flags(q)

    q = add("simulate", "simulate one K-process path to a horizon")
    env_flags(q)
    q.add_argument("--y", help="start state (integer or inf)")
    q.add_argument("--T", type=float)
    q.add_argument("--tail-budget", dest="tail_budget", type=float)

    q = add("aging", "aging curve, closed form or Monte Carlo")
    q.add_argument("--alpha", type=float)
    q.add_argument("--theta")
    q.add_argument("--closed-form", dest="closed_form", action="store_true", default=None)
    q.add_argument("--estimator", choices=("lambda_t", "phi1", "phi2"))
    q.add_argument("--epsilon", type=float)
    q.add_argument("--env", help="environment spec (default: subordinator with --alpha, --epsilon)")
    q.add_argument("--t", type=float)
    q.add_argument("--replicas", type=int)
    q.add_argument("--plot")

    q = add("green", "Green kernel g_lambda(x)")
    env_flags(q)
    q.add_argument("--lam", type=float)
    q.add_argument("--x")
    q.add_argument("--mc", action="store_true", default=None)
    q.add_argument("--replicas", type=int)

    q = add("correlation", "double Laplace transform of the no-jump probability")
    env_flags(q)
    q.add_argument("--lam", type=float)
    q.add_argument("--mu", type=float)
    q.add_argument("--mc", action="store_true", default=None)
    q.add_argument("--replicas", type=int)

    q = add("entrance", "entrance law into a set: histogram and chi-square test")
    env_flags(q)
    q.add_argument("--set")
    q.add_argument("--lam", type=float, help="also estimate E exp(-lam tau_A)")
    q.add_argument("--replicas", type=int)

    q = add("trap", "two-time correlation of the trap model over disorder draws")
    for flag, kind in (("--n", int), ("--alpha", float), ("--t", float), ("--phi", int),
                       ("--draws", int), ("--replicas", int)):
        q.add_argument(flag, type=kind)
    q.add_argument("--theta")
    q.add_argument("--plot")

    q = add("converge", "shared-clock convergence of finite chains")
    env_flags(q)
    q.add_argument("--n-list", dest="n_list")
    q.add_argument("--T", type=float)
    q.add_argument("--grid-step", dest="grid_step", type=float)
    q.add_argument("--replicas", type=int)
    q.add_argument("--plot")

    q = add("oracle", "closed-form aging quantities")
    q.add_argument("--alpha", type=float)
    q.add_argument("--theta")
    return p


def resolve(ns: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Merge defaults, the config file and flags; returns the config and common options."""
    defaults = {**COMMON, **DEFAULTS[ns.command]}
    merged = dict(defaults)
    if ns.config:
        with open(ns.config) as fh:
            try:
                filed = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"config is not valid JSON: {exc}") from None
        filed = filed.get("params", filed) | ({"seed": filed["seed"]} if "seed" in filed else {})
        unknown = set(filed) - set(defaults) - {"command"}
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update({k: v for k, v in filed.items() if k != "command"})
    for k in defaults:
        v = getattr(ns, k, None)
        if v is not None:
            merged[k] = v
    seed = merged.pop("seed")
    if seed is None:
        seed = os.environ.get("KPROC_SEED", 0)
    opts = {k: merged.pop(k) for k in COMMON if k != "seed"}
    if opts["jobs"] < 1:
        raise ParameterError("--jobs must be >= 1")
    return RunConfig(ns.command, _parse_seed(seed), merged), opts


# -- output helpers ---------------------------------------------------------------


def _num(v):
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def render(header, rows, fmt, extra=None) -> str:
    """One table in the requested format; csv and json carry full precision."""
    if fmt == "json":
        doc = {"rows": [dict(zip(header, r)) for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, sort_keys=True, indent=1, default=float) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        out.write(",".join(header) + "\n")
        for r in rows:
            out.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in r) + "\n")
        return out.getvalue()
    if len(rows) == 1 and len(header) == 1:
        text = _num(rows[0][0]) + "\n"
    else:
        text = "\t".join(header) + "\n" + "".join("\t".join(_num(v) for v in r) + "\n" for r in rows)
    if extra:
        text += "".join(f"# {k}: {v}\n" for k, v in sorted(extra.items()))
    return text


def _env(cfg: RunConfig, rng_key: int) -> WeightEnv:
    p = cfg.params
    return parse_env_spec(p["env"], stream(cfg.seed, rng_key), p.get("c", 0.0))


# -- commands -----------------------------------------------------------------------


def cmd_env(cfg, fmt):
    env = _env(cfg, 0)
    if fmt == "text" or fmt == "json":
        return env.to_json() + "\n", {}
    rows = [(i + 1, float(w)) for i, w in enumerate(env.weights)]
    return render(("x", "gamma"), rows, "csv"), {}


def cmd_simulate(cfg, fmt):
    p = cfg.params
    env = _env(cfg, 0)
    y = parse_label(str(p["y"]))
    traj = simulate_trajectory(env, y, float(p["T"]), stream(cfg.seed, 1), float(p["tail_budget"]))
    tails = {"tail_time": traj.tail_time}
    if fmt == "json":
        rows = [(label_str(x), a, b) for x, a, b in traj.segments()]
        return render(("state", "start", "end"), rows, "json", tails), tails
    return traj.to_csv(), tails


def _aging_env(cfg):
    p = cfg.params
    spec = p["env"] or f"subordinator:{p['alpha']}:{p['epsilon']}"
    return parse_env_spec(spec, stream(cfg.seed, 0), 0.0)


def cmd_aging(cfg, fmt):
    p = cfg.params
    thetas = parse_grid(p["theta"])
    if p["closed_form"]:
        values = [analytics.aging_limit(p["alpha"], th) for th in thetas]
        curve = experiments.AgingCurve(thetas, values, "closed_form")
    else:
        env = _aging_env(cfg)
        t = float(p["t"])
        if p["estimator"] == "lambda_t":
            curve = experiments.estimate_lambda_t(env, t, thetas, p["replicas"], cfg.seed, cfg.params["_jobs"])
        else:
            curve = experiments.estimate_phi(env, int(p["estimator"][-1]), t, thetas, p["replicas"],
                                             cfg.seed, cfg.params["_jobs"])
    return _emit_curve(curve, fmt, p.get("plot"), p["alpha"])


def _emit_curve(curve, fmt, plot_path, alpha):
    text = curve.to_csv()
    if plot_path:
        grid = np.geomspace(max(curve.theta_grid.min(), 1e-3), max(curve.theta_grid.max(), 1e-2), 200)
        plot_aging_csv(text, plot_path, (grid, analytics.aging_curve(alpha, grid)))
    tails = {"tail_frequency": curve.info["tail_frequency"]} if "tail_frequency" in curve.info else {}
    if fmt == "csv":
        return text, tails
    header = ("theta", "value") if curve.kind == "closed_form" else ("theta", "estimate", "se", "replicas")
    rows = list(curve.rows())
    if fmt == "text" and len(rows) == 1 and curve.kind == "closed_form":
        return render(("value",), [(rows[0][1],)], "text"), tails
    return render(header, rows, fmt, {"kind": curve.kind, **curve.info} if fmt == "json" else None), tails


def cmd_green(cfg, fmt):
    p = cfg.params
    env = _env(cfg, 0)
    xs = parse_states(p["x"])
    lam = float(p["lam"])
    exact = [analytics.green(env, lam, x) for x in xs]
    if not p["mc"]:
        return render(("x", "green"), list(zip(xs, exact)), fmt), {}
    ests = experiments.estimate_green_mc(env, lam, xs, p["replicas"], cfg.seed, p["_jobs"])
    rows = [(x, e.value, e.std_error, g) for x, e, g in zip(xs, ests, exact)]
    return render(("x", "estimate", "se", "green"), rows, fmt), {}


def cmd_correlation(cfg, fmt):
    p = cfg.params
    env = _env(cfg, 0)
    exact = analytics.correlation_laplace(env, p["lam"], p["mu"])
    if not p["mc"]:
        return render(("value",), [(exact,)], fmt), {}
    e = experiments.estimate_correlation_mc(env, p["lam"], p["mu"], p["replicas"], cfg.seed, p["_jobs"])
    return render(("estimate", "se", "value"), [(e.value, e.std_error, exact)], fmt), {}


def cmd_entrance(cfg, fmt):
    p = cfg.params
    env = _env(cfg, 0)
    members, counts, when = experiments.entrance_counts(env, parse_states(p["set"]), p["replicas"],
                                                        cfg.seed, p["_jobs"])
    extra = {}
    if len(members) >= 2:
        from scipy import stats

        res = stats.chisquare(counts)
        extra = {"chi2": float(res.statistic), "p_value": float(res.pvalue)}
    if p["lam"] is not None:
        e = experiments.Estimate.from_samples(np.exp(-p["lam"] * when))
        extra.update({"laplace_estimate": e.value, "laplace_se": e.std_error,
                      "laplace_exact": len(members) * analytics.entrance_laplace(env, members, p["lam"])})
    rows = [(x, int(k)) for x, k in zip(members, counts)]
    return render(("state", "count"), rows, fmt, extra), {}


def cmd_trap(cfg, fmt):
    p = cfg.params
    thetas = parse_grid(p["theta"])
    curves = experiments.phi_over_trap_disorder(int(p["n"]), p["alpha"], p["t"], thetas, int(p["draws"]),
                                                int(p["replicas"]), cfg.seed, int(p["phi"]), p["_jobs"])
    if len(curves) == 1:
        return _emit_curve(curves[0], fmt, p.get("plot"), p["alpha"])
    vals = np.array([c.point_values() for c in curves])
    rows = [(th, float(m), float(s), int(vals.shape[0])) for th, m, s in
            zip(thetas, vals.mean(0), vals.std(0, ddof=1) / np.sqrt(vals.shape[0]))]
    curve = experiments.AgingCurve(thetas, [experiments.Estimate(m, s, r) for _, m, s, r in rows],
                                   f"mc_phi{int(p['phi'])}", p["t"], {"draws": int(p["draws"])})
    return _emit_curve(curve, fmt, p.get("plot"), p["alpha"])


def cmd_converge(cfg, fmt):
    p = cfg.params
    env = _env(cfg, 0)
    rows = experiments.convergence_study(env, p["c"], parse_int_list(p["n_list"]), p["T"], int(p["replicas"]),
                                         cfg.seed, p["grid_step"], p["_jobs"])
    text = experiments.convergence_csv(rows)
    if p.get("plot"):
        plot_convergence_csv(text, p["plot"])
    if fmt == "csv":
        return text, {}
    return render(("n", "median_disc"), rows, fmt, {"reference_n": env.n}), {}


def cmd_oracle(cfg, fmt):
    p = cfg.params
    a = p["alpha"]
    rows = []
    for th in parse_grid(p["theta"]):
        rows.append((th, analytics.aging_limit(a, th), analytics.aging_hat(a, th), analytics.aging_tilde(a, th),
                     analytics.aging_limit_derivative(a, th), analytics.z_laplace(a, th)))
    return render(("theta", "lambda", "lambda_hat", "lambda_tilde", "derivative", "z_laplace"), rows, fmt), {}


COMMANDS = {
    "env": cmd_env,
    "simulate": cmd_simulate,
    "aging": cmd_aging,
    "green": cmd_green,
    "correlation": cmd_correlation,
    "entrance": cmd_entrance,
    "trap": cmd_trap,
    "converge": cmd_converge,
    "oracle": cmd_oracle,
}


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def run(argv=None) -> int:
    """Entry point; returns the exit code instead of raising."""
    started = time.perf_counter()
    try:
        ns = build_parser().parse_args(argv)
        if ns.command is None:
            raise ParameterError("a command is required; see --help")
        cfg, opts = resolve(ns)
        cfg.params["_jobs"] = opts["jobs"]
        try:
            text, tails = COMMANDS[cfg.command](cfg, opts["format"])
        finally:
            cfg.params.pop("_jobs")
        _write(opts["out"], text)
        if opts["manifest"]:
            manifest = experiments.run_manifest(cfg.seed, json.loads(cfg.to_json()),
                                                time.perf_counter() - started, tails)
            _write(opts["manifest"], json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # ParameterError and malformed input
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
