"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides, writes its tables into ``--out`` and finishes with
``manifest.json`` listing each output file with its sha256.

Exit codes: 0 success, 2 config error, 3 budget error, 4 ``--check`` gate
failure, 5 output directory not writable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .chaos_index import MultiIndex
from .propagator import BudgetExceeded, positivity_certificate, solve_fundamental, solve_propagator
from .regularity import (
    RESIDUAL_GATE,
    ScalingRegimeError,
    additive_increment_curves,
    dyadic_lags,
    kolmogorov_exponent,
    space_increment_curve,
    time_increment_curve,
)
from .simplex_integrals import SimplexIntegralSpec, factorial_decay_bound, simplex_integral
from .spectral_basis import SpectralFunction, heat_kernel
from .stochastic_field import draw_batch, exact_second_moment, sample_field, standard_error

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_CHECK = 4
EXIT_OUTPUT = 5

SUBCOMMANDS = ("solve", "sample", "additive", "regularity", "fundamental", "integrals", "certify")


class ConfigError(ValueError):
    pass


class OutputError(OSError):
    pass


def fmt(v) -> str:
    return f"{float(v):.17g}"


@dataclass
class RunConfig:
    """Everything a run needs; round-trips through :meth:`to_json` / :meth:`from_json`."""

    subcommand: str = "solve"
    N: int = 2
    K: int = 16
    M: int = 4
    u0: str = "constant"
    times: list = field(default_factory=lambda: [0.5, 1.0])
    xs: list = field(default_factory=lambda: [0.5, 1.5707963267948966, 2.5])
    lags: list = field(default_factory=lambda: [4, 14])
    t: float = 1.0
    x: float = 1.5707963267948966
    model: str = "both"
    seed: int = 0
    stream: int = 0
    n_draws: int = 10_000
    n_paths: int = 8
    y: float = 1.0
    n: int = 1
    alpha: float = 0.5
    beta: float = 0.5
    n_potentials: int = 5
    budget: int = 2_000_000
    out: str = "wickheat-out"
    check: bool = False

    # ---- file form ----
    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: top level must be a JSON object")
        return cls.from_dict(raw, source)

    @classmethod
    def from_dict(cls, raw: dict, source: str = "<config>") -> "RunConfig":
        names = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, val in raw.items():
            if key not in names:
                raise ConfigError(f"{source}: unknown field '{key}'")
            default = names[key].default
            if isinstance(default, bool):
                ok = isinstance(val, bool)
            elif isinstance(default, int):
                ok = isinstance(val, int) and not isinstance(val, bool)
            elif isinstance(default, float):
                ok = isinstance(val, (int, float)) and not isinstance(val, bool)
                val = float(val) if ok else val
            elif isinstance(default, str):
                ok = isinstance(val, str)
            else:
                ok = isinstance(val, list)
            if not ok:
                raise ConfigError(f"{source}: field '{key}' has wrong type {type(val).__name__}")
            kw[key] = val
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def digest(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    # ---- validation ----
    def validate(self) -> None:
        def bad(name, why):
            raise ConfigError(f"field '{name}': {why}")

        if self.subcommand not in SUBCOMMANDS:
            bad("subcommand", f"must be one of {', '.join(SUBCOMMANDS)}")
        if self.N < 0:
            bad("N", "must be >= 0")
        for name in ("K", "M", "n_draws", "n_paths", "n", "n_potentials"):
            if getattr(self, name) < 1:
                bad(name, "must be >= 1")
        for name in ("times", "xs"):
            g = getattr(self, name)
            if not g:
                bad(name, "grid must be non-empty")
            if any(not isinstance(v, (int, float)) for v in g):
                bad(name, "grid entries must be numbers")
            if any(b <= a for a, b in zip(g[:-1], g[1:])):
                bad(name, "grid must be strictly increasing")
        if any(v <= 0 for v in self.times):
            bad("times", "times must be positive")
        if any(not 0.0 <= v <= math.pi for v in self.xs):
            bad("xs", "points must lie in [0, pi]")
        if len(self.lags) != 2 or not all(isinstance(v, int) for v in self.lags) \
                or not 0 <= self.lags[0] < self.lags[1]:
            bad("lags", "expected [coarse, fine] dyadic exponents with coarse < fine")
        if self.t <= 0:
            bad("t", "must be positive")
        if not 0.0 < self.x < math.pi:
            bad("x", "must lie in (0, pi)")
        if self.model not in ("additive", "multiplicative", "both"):
            bad("model", "must be additive, multiplicative or both")
        if not 0.0 <= self.y <= math.pi:
            bad("y", "must lie in [0, pi]")
        if not 0.0 < self.alpha < 1.0:
            bad("alpha", "must lie in (0, 1)")
        if not 0.0 <= self.beta < 1.0:
            bad("beta", "must lie in [0, 1)")
        if not 0 <= self.stream < 2 ** 16:
            bad("stream", "must lie in [0, 65536)")
        if self.budget < 1:
            bad("budget", "must be >= 1")
        self.initial_data()

    def initial_data(self) -> SpectralFunction:
        """Parse the ``u0`` preset: ``constant``, ``mode:k`` or ``random:n_modes:seed``."""
        parts = self.u0.split(":")
        try:
            if parts == ["constant"]:
                return SpectralFunction.constant(self.K)
            if parts[0] == "mode" and len(parts) == 2:
                return SpectralFunction.mode(int(parts[1]), self.K)
            if parts[0] == "random" and len(parts) == 3:
                n_modes = int(parts[1])
                if not 1 <= n_modes <= self.K:
                    raise ValueError(f"band {n_modes} outside 1..{self.K}")
                return SpectralFunction.random_band_limited(n_modes, self.K, int(parts[2]))
        except ValueError as e:
            raise ConfigError(f"field 'u0': {e}") from None
        raise ConfigError("field 'u0': expected constant, mode:k or random:n_modes:seed")

    def lag_grid(self, t: float) -> np.ndarray:
        return dyadic_lags(self.lags[0], self.lags[1], min(t, 1.0))


# ----------------------------------------------------------------------
# output bookkeeping


class Outputs:
    def __init__(self, root: str):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-probe"
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as e:
            raise OutputError(f"output directory {root!s} not writable: {e}") from None
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode()
        try:
            (self.root / name).write_bytes(data)
        except OSError as e:
            raise OutputError(f"cannot write {name}: {e}") from None
        self.files[name] = hashlib.sha256(data).hexdigest()

    def json(self, name: str, obj) -> None:
        self.write(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def manifest(self, cfg: RunConfig, status: int, gates: dict) -> dict:
        man = {
            "subcommand": cfg.subcommand,
            "config": dataclasses.asdict(cfg),
            "config_sha256": cfg.digest(),
            "seeds": {"seed": cfg.seed, "stream": cfg.stream},
            "versions": {"wickheat": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "files": [{"name": k, "sha256": v} for k, v in sorted(self.files.items())],
            "gates": gates,
            "exit_status": status,
        }
        text = json.dumps(man, indent=2, sort_keys=True, default=_json_default) + "\n"
        (self.root / "manifest.json").write_text(text)
        return man


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ----------------------------------------------------------------------
# subcommands; each returns a dict of named boolean gates


def run_solve(cfg: RunConfig, out: Outputs) -> dict:
    u0 = cfg.initial_data()
    f = solve_propagator(u0, cfg.N, cfg.K, cfg.M, budget=cfg.budget, description=cfg.u0)
    out.write("coefficients.csv", f.to_csv())
    out.json("field.json", f.metadata(tuple(cfg.times)))
    rows = []
    for t in cfg.times:
        v, ratios = f.order_variances(t), f.stirling_ratios(t)
        rows += [(t, n, v[n], f.stirling_bound(n, t), ratios[n]) for n in range(f.N + 1)]
    out.write("variance.csv", _csv(["t", "n", "order_variance", "stirling_bound", "ratio"], rows))
    return {"stirling_bound": all(r[4] <= 1.0 + 1e-12 for r in rows)}


def run_sample(cfg: RunConfig, out: Outputs) -> dict:
    f = solve_propagator(cfg.initial_data(), cfg.N, cfg.K, cfg.M, budget=cfg.budget)
    xgrid = np.linspace(0.0, math.pi, 65)
    paths = sample_field(f, draw_batch(cfg.seed, cfg.n_paths, cfg.M, stream=cfg.stream),
                         cfg.t, xgrid)
    out.write("paths.csv", _csv(["x"] + [f"r{i}" for i in range(cfg.n_paths)],
                                [(x, *paths[:, i]) for i, x in enumerate(xgrid)]))
    draws = draw_batch(cfg.seed, cfg.n_draws, cfg.M, stream=cfg.stream)
    rows, worst = [], 0.0
    for t in cfg.times:
        s = sample_field(f, draws, t, np.asarray(cfg.xs))
        sq = s ** 2
        exact = exact_second_moment(f, t, np.asarray(cfg.xs))
        se = standard_error(sq)
        for j, x in enumerate(cfg.xs):
            z = (sq[:, j].mean() - exact[j]) / se[j]
            worst = max(worst, abs(z))
            rows.append({"t": t, "x": x, "mc": float(sq[:, j].mean()), "se": float(se[j]),
                         "exact": float(exact[j]), "z": float(z)})
    out.json("moments.json", {"seed": cfg.seed, "stream": cfg.stream, "n_draws": cfg.n_draws,
                              "points": rows, "max_abs_z": worst})
    return {"mc_within_5se": worst <= 5.0}


def _curve_record(curve, q_mom=64.0):
    rec = curve.summary()
    try:
        h = kolmogorov_exponent(curve, q_mom)
        rec.update(exponent=h.exponent, window=list(h.window), differentiable=h.differentiable)
    except ScalingRegimeError as e:
        rec.update(exponent=None, window=None, differentiable=None, error=str(e))
    return rec


def _additive_block(cfg: RunConfig, out: Outputs, K=None, prefix="additive"):
    tc, sc = additive_increment_curves(K, cfg.t, cfg.x, cfg.lag_grid(cfg.t))
    out.write(f"{prefix}_time.csv", tc.to_csv())
    out.write(f"{prefix}_space.csv", sc.to_csv())
    return tc, sc, {"time": _curve_record(tc), "space_derivative": _curve_record(sc)}


def run_additive(cfg: RunConfig, out: Outputs) -> dict:
    tc, sc, summ = _additive_block(cfg, out)
    out.json("summary.json", {"model": "additive", **summ})
    return {"time_slope": 1.35 <= tc.slope <= 1.5 and tc.residual <= RESIDUAL_GATE,
            "space_slope": 0.85 <= sc.slope <= 1.0 and sc.residual <= RESIDUAL_GATE}


def run_regularity(cfg: RunConfig, out: Outputs) -> dict:
    summary, gates = {"model": cfg.model}, {}
    if cfg.model in ("additive", "both"):
        tc, sc, summary["additive"] = _additive_block(cfg, out)
        gates["additive_time_slope"] = 1.35 <= tc.slope <= 1.5 and tc.within_gate()
        gates["additive_space_slope"] = 0.85 <= sc.slope <= 1.0 and sc.within_gate()
    if cfg.model in ("multiplicative", "both"):
        f = solve_propagator(cfg.initial_data(), cfg.N, cfg.K, cfg.M, budget=cfg.budget)
        lags = cfg.lag_grid(cfg.t)
        mt = time_increment_curve(f, cfg.t, cfg.x, lags)
        ms = space_increment_curve(f, cfg.t, cfg.x, lags, derivative=True)
        out.write("multiplicative_time.csv", mt.to_csv())
        out.write("multiplicative_space.csv", ms.to_csv())
        # additive comparator resolved with the same noise modes
        at, asp, matched = _additive_block(cfg, out, K=cfg.M - 1, prefix="additive_matched")
        summary["multiplicative"] = {"time": _curve_record(mt),
                                     "space_derivative": _curve_record(ms)}
        summary["additive_matched_noise"] = matched
        gates["time_slopes_agree"] = abs(mt.slope - at.slope) < 0.15
        gates["space_slopes_agree"] = abs(ms.slope - asp.slope) < 0.15
    summary["gates"] = gates
    out.json("summary.json", summary)
    return gates


def run_fundamental(cfg: RunConfig, out: Outputs) -> dict:
    t = cfg.t
    pts = np.asarray(cfg.xs, float)
    fields = {float(y): solve_fundamental(float(y), cfg.N, cfg.K, cfg.M, budget=cfg.budget)
              for y in pts}
    main = solve_fundamental(cfg.y, cfg.N, cfg.K, cfg.M, budget=cfg.budget)
    out.write("coefficients.csv", main.to_csv())
    # P_alpha(t, x_i, y_j) for every alpha
    vals = np.stack([fields[float(y)].values(t, pts) for y in pts], axis=-1)  # (n_alpha, x, y)
    asym = float(np.max(np.abs(vals - np.swapaxes(vals, 1, 2))))
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    p0 = vals[0]
    kern = heat_kernel(t, X, Y, cfg.K)
    mean_err = float(np.max(np.abs(p0 - kern)))
    second = np.sum(vals ** 2, axis=0)
    rows = [(float(X[i, j]), float(Y[i, j]), float(p0[i, j]), float(second[i, j]))
            for i in range(pts.size) for j in range(pts.size)]
    out.write("grid.csv", _csv(["x", "y", "P0", "second_moment"], rows))
    report = {"t": t, "y": cfg.y, "max_asymmetry": asym, "mean_vs_heat_kernel": mean_err,
              "min_mean": float(p0.min()), "n_alpha": len(main.coeffs)}
    out.json("report.json", report)
    return {"symmetry": asym <= 1e-8, "mean_is_heat_kernel": mean_err <= 1e-10,
            "mean_non_negative": report["min_mean"] >= -1e-10}


def run_integrals(cfg: RunConfig, out: Outputs) -> dict:
    try:
        spec = SimplexIntegralSpec(cfg.n, cfg.alpha, cfg.beta, cfg.t)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    dec = factorial_decay_bound(cfg.n, cfg.alpha, cfg.beta, cfg.t)
    rows = []
    for m, sc in zip(dec.orders, dec.scaled):
        Im = simplex_integral(n=int(m), alpha=cfg.alpha, beta=cfg.beta, t=cfg.t)
        rows.append((int(m), Im, float(sc), float(dec.constant ** m * m ** (-m / 2.0))))
    out.write("integrals.csv", _csv(["n", "I_n", "n_factorial_I_n_sq", "envelope"], rows))
    value = simplex_integral(spec)
    out.json("summary.json", {"n": cfg.n, "alpha": cfg.alpha, "beta": cfg.beta, "t": cfg.t,
                              "I_n": value, "I_n_text": fmt(value),
                              "envelope_constant": dec.constant})
    return {"envelope": all(r[2] <= r[3] * (1 + 1e-12) for r in rows)}


def run_certify(cfg: RunConfig, out: Outputs) -> dict:
    u0 = cfg.initial_data()
    if np.min(u0(np.linspace(0, math.pi, 257))) < -1e-12:
        raise ConfigError("field 'u0': positivity certificate requires non-negative data")
    f = solve_propagator(u0, cfg.N, cfg.K, cfg.M, budget=cfg.budget)
    reports = []
    for i in range(cfg.n_potentials):
        h = SpectralFunction.random_band_limited(cfg.M, cfg.M, seed=cfg.seed + i, norm=1.0)
        r = positivity_certificate(u0, h, cfg.t, N=cfg.N, field=f)
        reports.append({"potential_seed": cfg.seed + i, "h": h.coeffs.tolist(),
                        "min_value": r.min_value, "min_value_fine": r.min_value_fine,
                        "gaps": r.gaps.tolist(), "monotone": r.monotone})
    out.json("certificate.json", {"T": cfg.t, "N": cfg.N, "K": cfg.K, "M": cfg.M,
                                  "potentials": reports})
    return {"non_negative": all(r["min_value"] >= -1e-6 for r in reports),
            "monotone": all(r["monotone"] for r in reports)}


RUNNERS = {"solve": run_solve, "sample": run_sample, "additive": run_additive,
           "regularity": run_regularity, "fundamental": run_fundamental,
           "integrals": run_integrals, "certify": run_certify}


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the exit status."""
    cfg.validate()
    out = Outputs(cfg.out)
    out.write("config.json", cfg.to_json() + "\n")
    gates = RUNNERS[cfg.subcommand](cfg, out)
    gates = {k: bool(v) for k, v in gates.items()}
    status = EXIT_CHECK if cfg.check and not all(gates.values()) else EXIT_OK
    out.manifest(cfg, status, gates)
    return status


# ----------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--check", action="store_true", default=None,
                        help="exit 4 if any acceptance gate fails")
    common.add_argument("--dump-config", action="store_true",
                        help="print the resolved config as JSON and exit")
    common.add_argument("--N", type=int)
    common.add_argument("--K", type=int)
    common.add_argument("--M", type=int)
    common.add_argument("--u0", help="constant | mode:k | random:n_modes:seed")
    common.add_argument("--times", type=_floats)
    common.add_argument("--xs", type=_floats)
    common.add_argument("--lags", type=_ints, help="coarse,fine dyadic exponents")
    common.add_argument("--t", type=float)
    common.add_argument("--x", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--stream", type=int)
    common.add_argument("--budget", type=int)

    p = argparse.ArgumentParser(prog="wickheat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("solve", parents=[common], help="propagator coefficients and variance table")
    s = sub.add_parser("sample", parents=[common], help="Monte Carlo paths and moment checks")
    s.add_argument("--n-draws", dest="n_draws", type=int)
    s.add_argument("--n-paths", dest="n_paths", type=int)
    sub.add_parser("additive", parents=[common], help="additive-noise increment curves")
    r = sub.add_parser("regularity", parents=[common], help="increment curves and exponent fits")
    r.add_argument("--model", choices=["additive", "multiplicative", "both"])
    f = sub.add_parser("fundamental", parents=[common], help="fundamental chaos solution")
    f.add_argument("--y", type=float)
    i = sub.add_parser("integrals", parents=[common], help="simplex integral tables")
    i.add_argument("--n", type=int)
    i.add_argument("--alpha", type=float)
    i.add_argument("--beta", type=float)
    c = sub.add_parser("certify", parents=[common], help="positivity certificate")
    c.add_argument("--n-potentials", dest="n_potentials", type=int)
    return p


_NON_FIELDS = ("config", "dump_config")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        base = dataclasses.asdict(RunConfig.from_json(text, args.config))
    for k, v in vars(args).items():
        if k in _NON_FIELDS or v is None:
            continue
        base[k] = v
    return RunConfig.from_dict(base, "<flags>")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            print(cfg.to_json())
            return EXIT_OK
        status = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OutputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    print(json.dumps({"status": status, "out": cfg.out}))
    return status


if __name__ == "__main__":
    sys.exit(main())
