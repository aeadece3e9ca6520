"""Command-line front end: ``lambscat analyze|simulate|scatter|lp --config FILE``.

One YAML file drives every command.  Outputs are CSV (header row, fixed
column order) and JSON (``"schema": 1``); floats are written with 17
significant digits so identical configs give byte-identical files.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 point
spectrum present where scattering needs it empty.  Errors go to stderr as
``lambscat: error[<Tag>]: <message>``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import presets
from .char_poly import build_p_closed_form, build_p_vandermonde, roots_of_model
from .dynamics import InitialData, energy, evolve, field_snapshot, fit_decay_rate
from .errors import LambscatError, ModelValidationError, NumericalError, PointSpectrumPresent
from .model_core import ChainSpec, ModelSpec, NormalizedModel, normalize
from .potentials import PolynomialPotential
from .profiles import FieldProfile
from .scattering import (dissipativity_margin, fourier_samples, lp_evolve_check,
                         lp_semigroup_of_model, parseval_residuals, scattering_relation_error,
                         transfer_function, translation_covariance_check, translation_reps)
from .spectral import eigen_residuals, essential_spectrum, point_spectrum, pp_empty_check

SCHEMA = 1
COMMANDS = ("analyze", "simulate", "scatter", "lp")
MODEL_KINDS = ("raw", "lamb_chain", "pauli_fierz", "acoustic_shell")

DEFAULTS = {
    "data": {"phi0": [], "phidot0": [], "mode": "compatible", "y0": None, "ydot0": None},
    "sim": {"T": 20.0, "dt": 1e-3, "snapshot_times": [], "snapshot_grid": [0.0, 20.0, 201],
            "fit_window": [10.0, 20.0], "stride": 1},
    "scatter": {"X": 60.0, "h": 0.01, "covariance_t": 1.0},
    "lp": {"t_max": 10.0, "samples": 101},
    "nonlinear": {"potential": None},
    "output": {"directory": "lambscat_out", "formats": ["csv", "json"]},
}


class ConfigError(ModelValidationError):
    tag = "ConfigError"


# --- config --------------------------------------------------------------------------

@dataclass
class RunConfig:
    model: dict
    data: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    scatter: dict = field(default_factory=dict)
    lp: dict = field(default_factory=dict)
    nonlinear: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        if not isinstance(raw, dict) or "model" not in raw:
            raise ConfigError("config needs a 'model' block")
        unknown = set(raw) - {"model", *DEFAULTS}
        if unknown:
            raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
        model = raw["model"]
        if not isinstance(model, dict) or len(model) != 1 or next(iter(model)) not in MODEL_KINDS:
            raise ConfigError(f"model block must hold exactly one of {list(MODEL_KINDS)}")
        blocks = {}
        for name, default in DEFAULTS.items():
            given = raw.get(name) or {}
            if not isinstance(given, dict):
                raise ConfigError(f"block '{name}' must be a mapping")
            extra = set(given) - set(default)
            if extra:
                raise ConfigError(f"unknown keys in '{name}': {sorted(extra)}")
            merged = copy.deepcopy(default)
            merged.update(copy.deepcopy(given))
            blocks[name] = merged
        cfg = cls(copy.deepcopy(model), **blocks)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {"model": copy.deepcopy(self.model), "data": copy.deepcopy(self.data),
                "sim": copy.deepcopy(self.sim), "scatter": copy.deepcopy(self.scatter),
                "lp": copy.deepcopy(self.lp), "nonlinear": copy.deepcopy(self.nonlinear),
                "output": copy.deepcopy(self.output)}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    def validate(self):
        """Build everything that can be built without computing; raises on bad input."""
        self.build_model()
        self.profiles()
        if self.data["mode"] not in ("compatible", "classD"):
            raise ConfigError("data.mode must be 'compatible' or 'classD'")
        for key in ("T", "dt"):
            if not float(self.sim[key]) > 0:
                raise ConfigError(f"sim.{key} must be positive")
        if not (float(self.scatter["X"]) > 0 and float(self.scatter["h"]) > 0):
            raise ConfigError("scatter.X and scatter.h must be positive")
        if self.nonlinear["potential"] is not None:
            self.potential()

    def kind(self) -> str:
        return next(iter(self.model))

    def build_model(self) -> NormalizedModel:
        kind = self.kind()
        p = self.model[kind] or {}
        try:
            if kind == "raw":
                spec = ModelSpec(tuple(p["eigenvalues"]), tuple(p["coupling"]),
                                 float(p.get("theta", 0.0)),
                                 tuple(p["metric"]) if p.get("metric") is not None else None)
                return normalize(spec)
            if kind == "lamb_chain":
                return presets.lamb_chain(p.get("masses", [1.0]), p.get("springs", [1.0]),
                                          p.get("tension", 1.0))
            if kind == "pauli_fierz":
                return presets.pauli_fierz(p.get("m", 1.0), p.get("omega", 1.0), p.get("e", 1.0))
            return presets.acoustic_shell(p.get("M", 1.0), p.get("K", 1.0), p.get("R0", 1.0))
        except KeyError as exc:
            raise ConfigError(f"model.{kind} is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, LambscatError):
                raise
            raise ConfigError(f"model.{kind}: {exc}") from exc

    def profiles(self):
        try:
            return (FieldProfile.from_list(self.data["phi0"]),
                    FieldProfile.from_list(self.data["phidot0"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad profile term: {exc}") from exc

    def initial_data(self, model: NormalizedModel) -> InitialData:
        phi0, phidot0 = self.profiles()
        if self.data["mode"] == "classD":
            return InitialData.class_d(model, phi0, phidot0)
        return InitialData.compatible(model, phi0, phidot0, self.data["y0"], self.data["ydot0"])

    def potential(self):
        expr = self.nonlinear["potential"]
        if expr is None:
            return None
        try:
            return PolynomialPotential.from_expression(str(expr), self.build_model().n)
        except Exception as exc:
            raise ConfigError(f"cannot parse potential {expr!r}: {exc}") from exc


# --- serialization -------------------------------------------------------------------

def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray, complex, np.complexfloating))
               for v in seq):
            return "[" + ", ".join(_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (complex, np.complexfloating)):
        return _json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else "null"
    return json.dumps(str(obj))


def write_json(path: Path, payload: dict):
    body = {"schema": SCHEMA}
    body.update(payload)
    path.write_text(_json(body) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# --- commands ------------------------------------------------------------------------

def _model_block(model: NormalizedModel) -> dict:
    return {"n": model.n, "lambda": model.lam, "c": model.c, "theta": model.theta,
            "moments": model.moments}


def cmd_analyze(cfg: RunConfig, out: Path) -> dict:
    model = cfg.build_model()
    p = build_p_closed_form(model)
    try:
        pv = build_p_vandermonde(model)
        size = max(p.coeffs.size, pv.coeffs.size)
        a = np.pad(p.coeffs, (0, size - p.coeffs.size))
        b = np.pad(pv.coeffs, (0, size - pv.coeffs.size))
        disc = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
        pv_coeffs = pv.coeffs
    except NumericalError as exc:
        disc, pv_coeffs = None, f"unavailable: {exc}"
    roots = roots_of_model(model)
    spec = point_spectrum(model)
    from_roots = sorted((z.real ** 2 for z, m in roots.eigen_roots for _ in range(m)))
    eigen = []
    for st in spec.bound_states:
        rg, rb, rv = eigen_residuals(model, st)
        match = min((abs(st.eigenvalue - v) for v in from_roots), default=math.inf)
        eigen.append({"eigenvalue": st.eigenvalue, "decay_rate": st.decay_rate, "y": st.y,
                      "norm": st.norm, "residual_gamma": rg, "residual_boundary": rb,
                      "residual_vector": rv, "distance_to_root_eigenvalue": match})
    report = {
        "command": "analyze",
        "model": _model_block(model),
        "polynomial": {"closed_form": p.coeffs, "vandermonde": pv_coeffs,
                       "max_relative_discrepancy": disc, "degree": p.degree},
        "roots": [{"z": z, "multiplicity": m,
                   "kind": "eigenvalue" if z.real < 0 else "resonance"} for z, m in roots.roots],
        "point_spectrum": eigen,
        "eigenvalues_from_roots": from_roots,
        "pp_empty": pp_empty_check(model),
        "essential_spectrum": list(essential_spectrum(model)),
    }
    if "json" in cfg.output["formats"]:
        write_json(out / "analysis.json", report)
    return report


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    model = cfg.build_model()
    data = cfg.initial_data(model)
    pot = cfg.potential()
    s = cfg.sim
    traj = evolve(model, data, float(s["T"]), float(s["dt"]), pot)
    n = model.n
    drift = traj.energy_drift()
    en = traj.energy
    stride = max(1, int(s["stride"]))
    if "csv" in cfg.output["formats"]:
        header = (["t"] + [f"y{i + 1}" for i in range(n)] + [f"ydot{i + 1}" for i in range(n)]
                  + ["b", "E", "E_drift"])
        rows = (np.concatenate([[traj.t[k]], traj.y[k], traj.ydot[k],
                                [traj.b[k], en[k], drift[k]]])
                for k in range(0, traj.t.size, stride))
        write_csv(out / "trajectory.csv", header, rows)
        lo, hi, num = s["snapshot_grid"]
        xs = np.linspace(float(lo), float(hi), int(num))
        snap_rows = []
        for t in s["snapshot_times"]:
            phi, phidot = field_snapshot(traj, float(t), xs)
            snap_rows.extend((float(t), x, a, b) for x, a, b in zip(xs, phi, phidot))
        write_csv(out / "snapshots.csv", ["t", "x", "phi", "phidot"], snap_rows)
    summary = {"command": "simulate", "model": _model_block(model), "state_dim": traj.state_dim,
               "steps": int(traj.t.size - 1), "dt": traj.dt,
               "energy_initial": float(en[0]), "energy_drift_max": float(drift.max()),
               "boundary_residual_max": float(traj.boundary_residuals().max())}
    t0, t1 = (float(v) for v in s["fit_window"])
    if pot is None and pp_empty_check(model) and t1 <= traj.T:
        rate_roots = min(z.real for z, _ in roots_of_model(model).resonances)
        try:
            fitted = fit_decay_rate(traj, t0, t1)
        except ValueError:
            fitted = None
        summary["decay_fit"] = {"window": [t0, t1], "fitted_rate": fitted,
                                "min_re_root": rate_roots,
                                "relative_error": None if fitted is None
                                else abs(fitted - rate_roots) / rate_roots}
    if pot is not None:
        summary["potential"] = {"expression": pot.expression,
                                "growth_condition": pot.growth_condition()}
    if "json" in cfg.output["formats"]:
        write_json(out / "summary.json", summary)
    return summary


def cmd_scatter(cfg: RunConfig, out: Path) -> dict:
    model = cfg.build_model()
    if not pp_empty_check(model):
        raise PointSpectrumPresent(point_spectrum(model).eigenvalues)
    data = cfg.initial_data(model)
    X, h = float(cfg.scatter["X"]), float(cfg.scatter["h"])
    rep = translation_reps(model, data, X, h)
    tf = transfer_function(model)
    kappa, _ = fourier_samples(rep, "minus")
    s = tf(kappa)
    par = parseval_residuals(rep)
    par_plain = parseval_residuals(rep, tail=False)
    t_cov = float(cfg.scatter["covariance_t"])
    checks = {
        "command": "scatter", "model": _model_block(model), "X": X, "h": h,
        "energy": rep.energy, "energy_norm_sq": rep.energy_norm_sq,
        "norm_sq_f_minus": rep.norm_sq("minus"), "norm_sq_f_plus": rep.norm_sq("plus"),
        "parseval_sum_residual": par[0], "parseval_double_residual": par[1],
        "parseval_sum_residual_window_only": par_plain[0],
        "parseval_double_residual_window_only": par_plain[1],
        "dft_relation_error": scattering_relation_error(rep, tf),
        "dft_relation_error_window_only": scattering_relation_error(rep, tf, tail=False),
        "truncation_mass": rep.truncation_mass,
        "unimodularity_max_deviation": float(np.max(np.abs(np.abs(s) - 1.0))),
        "covariance_t": t_cov,
        "covariance_sup_error": translation_covariance_check(model, data, t_cov, min(X, 30.0), h),
    }
    if "csv" in cfg.output["formats"]:
        write_csv(out / "reps.csv", ["x", "f_minus", "f_plus"],
                  zip(rep.grid, rep.f_minus, rep.f_plus))
        write_csv(out / "transfer.csv", ["kappa", "re_s", "im_s", "abs_s"],
                  zip(kappa, s.real, s.imag, np.abs(s)))
    if "json" in cfg.output["formats"]:
        write_json(out / "checks.json", checks)
    return checks


def cmd_lp(cfg: RunConfig, out: Path) -> dict:
    model = cfg.build_model()
    sg = lp_semigroup_of_model(model)
    ts = np.linspace(0.0, float(cfg.lp["t_max"]), int(cfg.lp["samples"]))
    devs, norms = zip(*(lp_evolve_check(sg, t) for t in ts))
    report = {"command": "lp", "model": _model_block(model), "dim": sg.dim,
              "deg_p": build_p_closed_form(model).degree,
              "roots": [{"z": z, "multiplicity": m} for z, m in sg.roots],
              "B": [list(r) for r in sg.B], "gram": [list(r) for r in sg.gram],
              "t": ts, "norm_G": list(norms), "max_deviation": float(max(devs)),
              "dissipativity_margin": dissipativity_margin(sg)}
    if "json" in cfg.output["formats"]:
        write_json(out / "lp.json", report)
    return report


HANDLERS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "scatter": cmd_scatter,
            "lp": cmd_lp}


# --- sweeps --------------------------------------------------------------------------

def parse_sweep(text: str):
    try:
        key, rng = text.split("=", 1)
        a, b, steps = rng.split(":")
        values = np.linspace(float(a), float(b), int(steps))
    except ValueError as exc:
        raise ConfigError(f"--sweep expects key=a:b:steps, got {text!r}") from exc
    if int(steps) < 1:
        raise ConfigError("--sweep needs at least one step")
    return key.split("."), values


def _set_path(d: dict, path, value):
    node = d
    for k in path[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"sweep key {'.'.join(path)} does not exist in the config")
        node = node[k]
    if path[-1] not in node:
        raise ConfigError(f"sweep key {'.'.join(path)} does not exist in the config")
    old = node[path[-1]]
    if isinstance(old, list):
        node[path[-1]] = [float(value)] * len(old)
    else:
        node[path[-1]] = float(value)


def run_sweep(command, cfg: RunConfig, out: Path, sweep: str):
    path, values = parse_sweep(sweep)
    jobs = []
    for i, v in enumerate(values):
        raw = cfg.to_dict()
        _set_path(raw, path, v)
        sub = RunConfig.from_dict(raw)
        d = out / f"sweep_{i:03d}"
        d.mkdir(parents=True, exist_ok=True)
        (d / "config.yaml").write_text(sub.dump(), encoding="utf-8")
        jobs.append((sub, d, v))
    workers = int(os.environ.get("LAMBSCAT_THREADS", "0")) or min(len(jobs), os.cpu_count() or 1)

    def one(job):
        sub, d, v = job
        try:
            HANDLERS[command](sub, d)
            return {"value": float(v), "directory": d.name, "status": "ok"}
        except LambscatError as exc:
            return {"value": float(v), "directory": d.name, "status": "error",
                    "tag": exc.tag, "message": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(one, jobs))
    write_json(out / "sweep.json", {"command": command, "key": ".".join(path),
                                    "runs": results})
    return results


# --- entry point ---------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="lambscat", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--sweep", help="vary one numeric config key: key=a:b:steps")
    ap.add_argument("--dump-config", action="store_true",
                    help="print the fully resolved config and exit")
    return ap


def _fail(exc, code):
    tag = getattr(exc, "tag", type(exc).__name__)
    print(f"lambscat: error[{tag}]: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.dump_config:
            sys.stdout.write(cfg.dump())
            return 0
        out = Path(args.out or cfg.output["directory"])
        out.mkdir(parents=True, exist_ok=True)
        model = cfg.build_model()
        print(f"normalized model: lambda={model.lam.tolist()} c={model.c.tolist()} "
              f"theta={model.theta!r}")
        if args.sweep:
            results = run_sweep(args.command, cfg, out, args.sweep)
            bad = [r for r in results if r["status"] != "ok"]
            print(f"sweep: {len(results) - len(bad)} ok, {len(bad)} failed -> {out}")
            return 3 if bad else 0
        HANDLERS[args.command](cfg, out)
        print(f"{args.command}: results written to {out}")
        return 0
    except PointSpectrumPresent as exc:
        return _fail(exc, 4)
    except (ModelValidationError, FileNotFoundError) as exc:
        return _fail(exc, 2)
    except NumericalError as exc:
        return _fail(exc, 3)
    except LambscatError as exc:
        return _fail(exc, 2)
    except ArithmeticError as exc:
        return _fail(exc, 3)
    except ValueError as exc:
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
