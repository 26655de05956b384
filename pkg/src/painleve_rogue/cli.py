"""Command-line entry point.

Every option can also come from an INI file (``--config``, section
``[run]``); flags override the file, the file overrides built-in defaults.
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments, models, painleve
from .errors import DataIOError, RogueError, ValidationError
from .soliton import PrecisionPolicy, evaluate_field, oracle_evaluate
from .spectral import (Distribution, RandomEnsembleConfig, SpectralData, load_spectral,
                       one_soliton, sample_ensemble, spectral_to_dict)

WORKERS_ENV = "PAINLEVE_ROGUE_WORKERS"


# ------------------------------------------------------------ parsing

def parse_grid(spec: str, field: str) -> np.ndarray:
    """``lo:hi:n`` for n equispaced points, or a comma list of values."""
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("need at least one point")
            return np.linspace(float(lo), float(hi), n)
        return np.array([float(v) for v in spec.split(",")])
    except ValueError as exc:
        raise ValidationError(f"{field}: bad grid {spec!r} ({exc})") from exc


def parse_ints(spec: str, field: str) -> list:
    try:
        return [int(v) for v in str(spec).split(",")]
    except ValueError as exc:
        raise ValidationError(f"{field}: expected comma-separated integers, got {spec!r}") from exc


def parse_floats(spec: str, field: str) -> list:
    try:
        return [float(v) for v in str(spec).split(",")]
    except ValueError as exc:
        raise ValidationError(f"{field}: expected comma-separated numbers, got {spec!r}") from exc


def parse_precision(spec: str) -> PrecisionPolicy:
    """``53``/``128``/... for fixed bits, ``auto`` or ``auto:MAXBITS``."""
    spec = str(spec).strip().lower()
    try:
        if spec.startswith("auto"):
            parts = spec.split(":")
            return PrecisionPolicy.auto(int(parts[1]) if len(parts) > 1 else 512)
        return PrecisionPolicy("fixed", int(spec))
    except ValueError as exc:
        raise ValidationError(f"precision: bad value {spec!r}") from exc


def _dist(spec, field) -> Distribution:
    try:
        return Distribution.parse(spec)
    except ValidationError as exc:
        raise ValidationError(f"{field}: {exc}") from exc


# Options per command: name -> (type, default, help).  Types convert strings
# from the config file the same way argparse converts flags.
_COMMON = {
    "seed": (int, 0, "RNG seed"),
    "out": (str, ".", "output directory"),
    "format": (str, "csv", "csv or json"),
}
_OPTIONS = {
    "sample": {
        "case": (str, None, "piii or pv"), "zeta": (float, None, "PV drift in (0,1)"),
        "n": (int, None, "number of solitons"), "mu": (str, "chi2:4", "amplitude law"),
        "v": (str, "gauss:0:15", "velocity law"), "realizations": (int, 1, "realizations"),
        "phase": (float, 0.0, "Darboux phase eta, p_n = exp(i eta)"),
    },
    "soliton": {
        "data": (str, None, "spectral data JSON (default: one soliton)"),
        "eta": (float, 1.0, "one-soliton amplitude parameter"),
        "xi": (float, 0.0, "one-soliton velocity parameter"),
        "x": (str, "-5:5:101", "x grid lo:hi:n or list; write --x=-1:1:5 when it starts with -"), "t": (str, "0", "t grid"),
        "precision": (str, "53", "bits, auto or auto:MAXBITS"),
        "check_oracle": (bool, False, "report max |darboux - oracle| on the grid"),
    },
    "model": {
        "case": (str, None, "piii or pv"), "X": (str, "0", "X grid"), "T": (str, "0", "T grid"),
        "zeta": (float, None, "PV drift"), "mu": (float, None, "PV mean amplitude"),
        "modes": (int, 128, "truncation order M"),
        "adaptive": (bool, False, "double M until resolved instead of failing"),
    },
    "universality": {
        "case": (str, None, "piii or pv"), "zeta": (float, None, "PV drift"),
        "n": (str, "25,50,100", "comma list of N"), "mu": (str, "chi2:4", "amplitude law"),
        "v": (str, "gauss:0:15", "velocity law"), "realizations": (int, 10, "realizations"),
        "X": (str, "-3:3:121", "X grid"), "T": (float, 0.0, "T"),
        "modes": (int, 64, "initial truncation order M"),
    },
    "verify": {
        "suite": (str, "manufactured,nls,piii,pv,lax,zeta", "comma list of checks"),
        "modes": (int, 64, "truncation order M"),
    },
    "goodset": {
        "n": (str, "50,200,800", "comma list of N"), "delta": (float, experiments.DEFAULT_DELTA, "delta"),
        "zeta": (float, None, "PV drift (enables the circle set)"),
        "mu": (str, "chi2:4", "amplitude law"), "v": (str, "gauss:0:15", "velocity law"),
        "trials": (int, 2000, "Monte-Carlo trials"),
    },
}


def _to_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="painleve-rogue",
                                description="Extremal solitons, Painleve model problems and "
                                            "universality experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in _OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="INI file with a [run] section")
        for name, (typ, default, help_) in {**_COMMON, **opts}.items():
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=name, action="store_const", const=True, default=None,
                                help=help_)
            else:
                sp.add_argument(flag, dest=name, type=typ, default=None,
                                help=f"{help_} (default: {default})")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags and validate types field by field."""
    opts = {**_COMMON, **_OPTIONS[args.command]}
    cfg = {k: d for k, (_, d, _) in opts.items()}
    if args.config:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(args.config) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise DataIOError(f"cannot read config {args.config}: {exc}") from exc
        except configparser.Error as exc:
            raise ValidationError(f"config: {exc}") from exc
        if parser.has_section("run"):
            for key, raw in parser.items("run"):
                if key not in opts:
                    raise ValidationError(f"run.{key}: unknown option for {args.command}")
                typ = opts[key][0]
                try:
                    cfg[key] = _to_bool(raw) if typ is bool else typ(raw)
                except ValueError as exc:
                    raise ValidationError(f"run.{key}: {exc}") from exc
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["format"] not in ("csv", "json"):
        raise ValidationError(f"format: expected csv or json, got {cfg['format']!r}")
    if "case" in cfg and args.command != "soliton":
        if cfg["case"] is None:
            raise ValidationError("case: required (piii or pv)")
        cfg["case"] = str(cfg["case"]).upper()
        if cfg["case"] not in ("PIII", "PV"):
            raise ValidationError(f"case: expected piii or pv, got {cfg['case']!r}")
    cfg["command"] = args.command
    return cfg


# ------------------------------------------------------------- output

def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataIOError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def write_table(path: Path, header, rows, fmt: str) -> Path:
    """CSV with repr floats, or a JSON list of records."""
    def cell(v):
        return repr(float(v)) if isinstance(v, (float, np.floating)) else v

    if fmt == "json":
        path = path.with_suffix(".json")
        recs = [{h: (float(v) if isinstance(v, np.floating) else v) for h, v in zip(header, r)}
                for r in rows]
        _write(path, json.dumps(recs, indent=1) + "\n")
        return path
    path = path.with_suffix(".csv")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[cell(v) for v in r] for r in rows])
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc
    return path


# ----------------------------------------------------------- commands

def cmd_sample(cfg) -> list:
    if cfg["n"] is None:
        raise ValidationError("n: required")
    config = RandomEnsembleConfig(cfg["case"], cfg["n"], _dist(cfg["mu"], "mu"), _dist(cfg["v"], "v"),
                                  cfg["realizations"], cfg["seed"], cfg["zeta"])
    out = _outdir(cfg)
    files = []
    for r in range(config.realizations):
        data = sample_ensemble(config, r)
        if cfg["phase"]:
            data = SpectralData.from_eigenvalues(data.eigenvalues,
                                                 np.full(data.n, np.exp(1j * cfg["phase"])),
                                                 drift=data.drift, seed=data.seed,
                                                 meta={**data.meta, "phase": cfg["phase"]})
        path = out / f"spectral_{config.case.lower()}_n{config.N}_seed{config.seed}_r{r}.json"
        _write(path, json.dumps(spectral_to_dict(data), indent=1) + "\n")
        files.append(path)
    return files


def cmd_soliton(cfg) -> list:
    data = load_spectral(cfg["data"]) if cfg["data"] else one_soliton(cfg["eta"], cfg["xi"])
    x = parse_grid(cfg["x"], "x")
    t = parse_grid(cfg["t"], "t")
    policy = parse_precision(cfg["precision"])
    field = evaluate_field(data, x, t, policy)
    field.frame = {"kind": "raw", "n": data.n, "precision": cfg["precision"]}
    if cfg["check_oracle"]:
        dev = 0.0
        for i, tv in enumerate(t):
            for j, xv in enumerate(x):
                dev = max(dev, abs(field.values[i, j] - oracle_evaluate(data, xv, tv, policy)))
        field.frame["oracle_max_deviation"] = dev
        print(f"max |darboux - oracle| = {dev:.3e}")
    out = _outdir(cfg)
    if cfg["format"] == "json":
        path = out / "field.json"
        _write(path, json.dumps({"frame": field.frame, "x": x.tolist(), "t": t.tolist(),
                                 "re_psi": field.values.real.tolist(),
                                 "im_psi": field.values.imag.tolist()}) + "\n")
    else:
        path = out / "field.csv"
        field.to_csv(path)
    return [path]


def _model_params(cfg, X, T):
    return models.ModelParams(cfg["case"], float(X), float(T), cfg["zeta"], cfg["mu"])


def cmd_model(cfg) -> list:
    X = parse_grid(cfg["X"], "X")
    T = parse_grid(cfg["T"], "T")
    strict = not cfg["adaptive"]
    if cfg["case"] == "PIII" and (cfg["zeta"] is not None or cfg["mu"] is not None):
        raise ValidationError("zeta/mu: the PIII model has no parameters")
    rows = []
    for Tv in T:
        for Xv in X:
            psi, m, sol = models.solve_model(_model_params(cfg, Xv, Tv), cfg["modes"], strict)
            rows.append((float(Xv), float(Tv), psi.real, psi.imag, abs(psi), m, sol.M))
    psi00, _, sol00 = models.solve_model(_model_params(cfg, 0.0, 0.0), cfg["modes"], strict)
    print(f"|Psi(0,0)| = {abs(psi00):.12g}  (M = {sol00.M}, residual = {sol00.residual:.2e})")
    path = write_table(_outdir(cfg) / f"model_{cfg['case'].lower()}",
                       ("X", "T", "re_psi", "im_psi", "abs_psi", "m", "modes_M"), rows, cfg["format"])
    return [path]


def cmd_universality(cfg) -> list:
    Ns = parse_ints(cfg["n"], "n")
    config = RandomEnsembleConfig(cfg["case"], Ns[0], _dist(cfg["mu"], "mu"), _dist(cfg["v"], "v"),
                                  cfg["realizations"], cfg["seed"], cfg["zeta"])
    X = parse_grid(cfg["X"], "X")
    workers = _workers()
    rep = experiments.run_universality(config, X, cfg["T"], cfg["modes"], Ns, workers=workers)
    out = _outdir(cfg)
    base = out / f"universality_{config.case.lower()}"
    rows = [(r.case, r.N, r.realization, r.seed, r.l2_error) for r in rep.records]
    files = [write_table(Path(str(base) + "_report"), ("case", "N", "realization", "seed", "l2_error"),
                         rows, cfg["format"]),
             write_table(Path(str(base) + "_summary"), ("case", "N", "mean_error", "std_error"),
                         [(rep.case, N, m, s) for N, m, s in rep.summary()], cfg["format"])]
    for N in rep.profiles:
        prow = [(float(x), float(abs(m)), float(p)) for x, m, p in zip(X, rep.model, rep.profiles[N])]
        files.append(write_table(Path(f"{base}_profile_N{N}"),
                                 ("X", "abs_psi_model", "abs_psi_N_mean"), prow, cfg["format"]))
    for N, m, rate in experiments.convergence_table(rep):
        print(f"N = {N:5d}  mean L2 error = {m:.6g}  rate = {'' if rate is None else f'{rate:.3f}'}")
    if rep.failures:
        print(f"{len(rep.failures)} realization(s) failed and were excluded", file=sys.stderr)
    return files


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{WORKERS_ENV}: expected an integer, got {raw!r}") from exc
    return max(1, n)


def verification_rows(suite, M) -> list:
    """(check, grid_h, modes_M, residual) rows for the requested checks."""
    rows = []
    if "manufactured" in suite:
        x = np.linspace(0.5, 3.0, 251)
        u = painleve.extract_u_piii(painleve.SampledFunction(x, np.exp(x) / x ** 2, 4))
        rows.append(("manufactured_piii_u", x[1] - x[0], 0, float(np.max(np.abs(u.values - 2)))))
        c = 0.7 + 0.2j
        ref = 1 / (1 - 2j * 0.3 / c)
        u = painleve.extract_u_pv(painleve.SampledFunction(x, np.exp(c * x) / x, 4), 0.3)
        rows.append(("manufactured_pv_u", x[1] - x[0], 0, float(np.max(np.abs(u.values - ref)))))
    if "nls" in suite:
        ev = painleve.model_evaluator("PIII", M=M)
        g = np.linspace(-0.8, 0.8, 9)
        Xg, Tg = np.meshgrid(g, g)
        for h in (0.1, 0.05, 0.025):
            r = painleve.nls_residual_at(ev, Xg.ravel(), Tg.ravel(), h)
            rows.append(("nls_piii", h, M, float(r.max())))
    if "piii" in suite:
        for h in (0.02, 0.01, 0.005):
            rows.append(("piii_chain", h, M, painleve.piii_chain(h, M=M).residual))
    if "pv" in suite:
        for h in (0.01, 0.005, 0.0025):
            rows.append(("pv_chain", h, M, painleve.pv_chain(h, M=M).residual))
    if "lax" in suite:
        Zs = [3.0, 2j, -1.5 + 0.5j, 0.5j]
        for h in (0.04, 0.02, 0.01):
            rows.append(("lax_pv", h, M, painleve.lax_residual_pv(0.5, 0.3, 1.0, Zs, h=h, M=M)))
    if "zeta" in suite:
        X = np.linspace(-1, 1, 41)
        ref = models.model_profile("PIII", X, 0.0, M=M)
        for z in (1e-2, 3e-3, 1e-3):
            v = models.model_profile("PV", X, 0.0, z, 2.0, M)
            rows.append((f"zeta_limit_{z:g}", X[1] - X[0], M, experiments.l2_error(v, ref, X)))
    return rows


def cmd_verify(cfg) -> list:
    suite = [s.strip() for s in cfg["suite"].split(",") if s.strip()]
    known = {"manufactured", "nls", "piii", "pv", "lax", "zeta"}
    bad = [s for s in suite if s not in known]
    if bad:
        raise ValidationError(f"suite: unknown check(s) {bad}; choose from {sorted(known)}")
    rows = verification_rows(suite, cfg["modes"])
    for r in rows:
        print(f"{r[0]:24s} h = {r[1]:<8.4g} M = {r[2]:<4d} residual = {r[3]:.3e}")
    return [write_table(_outdir(cfg) / "residuals", ("check", "grid_h", "modes_M", "residual"),
                        rows, cfg["format"])]


def cmd_goodset(cfg) -> list:
    Ns = parse_ints(cfg["n"], "n")
    stats = [experiments.good_set_probe(N, cfg["delta"], cfg["zeta"], _dist(cfg["mu"], "mu"),
                                        cfg["trials"], cfg["seed"], _dist(cfg["v"], "v"))
             for N in Ns]
    rows = [(s.N, s.delta, s.trials, s.omega_frequency, s.v_frequency,
             "" if s.u_frequency is None else s.u_frequency) for s in stats]
    for r in rows:
        print(f"N = {r[0]:5d}  omega = {r[3]:.4f}  V = {r[4]:.4f}  U = {r[5]}")
    return [write_table(_outdir(cfg) / "goodset",
                        ("N", "delta", "trials", "omega_failure", "v_failure", "u_failure"),
                        rows, cfg["format"])]


COMMANDS = {"sample": cmd_sample, "soliton": cmd_soliton, "model": cmd_model,
            "universality": cmd_universality, "verify": cmd_verify, "goodset": cmd_goodset}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        files = COMMANDS[args.command](cfg)
    except RogueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    for f in files:
        print(f"wrote {f}")
    print(f"done in {time.perf_counter() - t0:.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
