"""Declarative scenarios: JSON config, named presets, dispatch, artifact files.

Every run writes a machine-readable ``report.json`` and a ``manifest.json``
that holds the fully resolved config. Feeding ``manifest["config"]`` back
to :func:`run_scenario` reproduces the run byte for byte.
"""

from __future__ import annotations

import copy
import json
import math
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import scipy

from . import __version__
from .analytic import analytic_populations, auto_truncation, check_conditions
from .collision import BeamModel, CollisionConfig, beam_steady_state, lindblad_distance, simulate_beam
from .engineering import validate_selectivity
from .errors import SolverError, TruncationError
from .fock import DensityMatrix, HilbertSpec, fock_state, thermal_state
from .lindblad import TAIL_TOL, evolve, steady_state
from .observables import GridSpec, classify_nonclassical, state_metrics, wigner
from .reservoir import BeamParams, EngineeredRates, build_master_equation, rates_from_beam, selective_operating_point

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_TRUNCATION = 4

MODES = ["steady", "evolve", "analytic", "validate-selectivity", "collision", "figure-preset"]

_NONNEG = {"type": "number", "minimum": 0}
_INT = {"type": "integer", "minimum": 0}

CONFIG_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "mode"],
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "mode": {"enum": MODES},
        "preset": {"type": "string"},
        "description": {"type": "string"},
        "hilbert": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_max": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "auto"}]}},
        },
        "rates": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gamma_m", "gamma_l", "epsilon"],
            "properties": {"gamma_m": _NONNEG, "gamma_l": _NONNEG, "epsilon": _NONNEG, "nbar": _NONNEG},
        },
        "beam": {
            "type": "object",
            "additionalProperties": False,
            "required": ["slot_rate", "p_g", "p_e", "p_i", "tau", "zeta", "lambda_tilde"],
            "properties": {
                "slot_rate": _NONNEG, "p_g": _NONNEG, "p_e": _NONNEG, "p_i": _NONNEG,
                "tau": _NONNEG, "zeta": _NONNEG, "lambda_tilde": _NONNEG, "nbar": _NONNEG,
            },
        },
        "targets": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"m": _INT, "l": _INT, "k": _INT, "target": _INT, "n_probe": _INT},
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 1},
                "method": {"enum": ["rk", "expm"]},
                "initial": {"enum": ["vacuum", "thermal"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["auto", "null-space", "rate-equation"]},
                "tail_tol": {"oneOf": [_NONNEG, {"type": "null"}]},
            },
        },
        "wigner": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"extent": {"type": "number", "exclusiveMinimum": 0},
                                   "resolution": {"type": "integer", "minimum": 32}},
                },
            ]
        },
        "collision": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"arrival": {"enum": ["regular", "poisson"]},
                           "n_records": {"type": "integer", "minimum": 1}},
        },
        "selectivity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"scale": {"type": "number", "exclusiveMinimum": 0},
                           "n_samples": {"type": "integer", "minimum": 2}},
        },
        "interpretation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"ambiguous": {"type": "boolean"}, "note": {"type": "string"}},
        },
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
}


class ConfigError(ValueError):
    pass


def _preset(name, m, l, gamma_m, gamma_l, epsilon, target, description, n_max="auto",
            interpretation=None):
    cfg = {
        "name": name,
        "mode": "steady",
        "description": description,
        "hilbert": {"n_max": n_max},
        "rates": {"gamma_m": gamma_m, "gamma_l": gamma_l, "epsilon": epsilon, "nbar": 0.05},
        "targets": {"m": m, "l": l, "target": target},
        "wigner": {"extent": 6.0, "resolution": 201},
        "seed": 0,
    }
    if interpretation:
        cfg["interpretation"] = interpretation
    return cfg


PRESETS: dict[str, dict] = {
    "fig2": _preset("fig2", 5, 4, 1e3, 0.0, 0.8, 5,
                    "truncation above m = 5 of a thermal-like distribution"),
    "fig3": _preset("fig3", 5, 4, 0.0, 1e3, 0.8, 5,
                    "amplification above l = 4 with selective emission switched off",
                    interpretation={"ambiguous": False,
                                    "note": "gamma_m = 0, so m only bounds the cutoff check"}),
    "fig4": _preset("fig4", 62, 0, 0.0, 1e3, 0.5, 1,
                    "vacuum depletion by amplification above l = 0", n_max=64,
                    interpretation={"ambiguous": True,
                                    "note": "gamma_m taken as 0 and m = n_max - 2, so the middle "
                                            "branch spans 1..n_max-2; the source gives only l + 1 = 1"}),
    "fig5": _preset("fig5", 6, 3, 1e3, 1e3, 0.8, 5,
                    "slice of the distribution onto n = 4..6"),
    "fig6": _preset("fig6", 5, 4, 1e3, 1e3, 0.8, 5,
                    "steady Fock state |5>"),
    "fig7": _preset("fig7", 10, 9, 1e3, 1e3, 0.95, 10,
                    "steady Fock state |10> at stronger non-selective absorption",
                    interpretation={"ambiguous": True,
                                    "note": "read as the |5> parameters with m = 10, l = 9 and "
                                            "epsilon = 0.95; the rates and nbar are not restated "
                                            "for this case"}),
}


def list_presets() -> dict[str, dict]:
    return {name: copy.deepcopy(cfg) for name, cfg in PRESETS.items()}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])


def _semantic_checks(cfg: dict) -> None:
    mode = cfg["mode"]
    if mode == "figure-preset":
        if "preset" not in cfg:
            raise ConfigError("mode 'figure-preset' needs a 'preset' name")
        return
    has_rates, has_beam = "rates" in cfg, "beam" in cfg
    if mode in ("steady", "evolve", "analytic", "collision") and has_rates == has_beam:
        raise ConfigError("exactly one of 'rates' or 'beam' is required")
    if mode == "collision" and not has_beam:
        raise ConfigError("mode 'collision' needs 'beam'")
    targets = cfg.get("targets", {})
    if mode == "validate-selectivity":
        if "k" not in targets:
            raise ConfigError("mode 'validate-selectivity' needs targets.k")
        return
    if "m" not in targets or "l" not in targets:
        raise ConfigError(f"mode {mode!r} needs targets.m and targets.l")
    if not targets["l"] < targets["m"]:
        raise ConfigError(f"need l < m (l = m-1 for a Fock target), got l={targets['l']}, m={targets['m']}")
    rates = cfg.get("rates")
    if rates is not None and rates["epsilon"] >= 1:
        raise ConfigError(f"epsilon = {rates['epsilon']} >= 1: no steady state exists "
                          "(engineered absorption must stay below cavity damping, epsilon < 1)")
    if mode == "evolve" and "t_end" not in cfg.get("time", {}):
        raise ConfigError("mode 'evolve' needs time.t_end")


def resolve_config(raw: dict, seed: Optional[int] = None, n_max: Optional[int] = None) -> dict:
    """Validate ``raw`` and fill defaults; the result is what the manifest records."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None
    cfg = copy.deepcopy(raw)
    if cfg["mode"] == "figure-preset":
        _semantic_checks(cfg)
        resolved = preset_config(cfg["preset"])
        resolved["name"] = cfg["name"]
        for key in ("output", "seed"):
            if key in cfg:
                resolved[key] = cfg[key]
        cfg = resolved
    _semantic_checks(cfg)
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    if n_max is not None:
        cfg.setdefault("hilbert", {})["n_max"] = n_max
    cfg.setdefault("hilbert", {}).setdefault("n_max", "auto")
    cfg.setdefault("solver", {})
    cfg["solver"].setdefault("method", "auto")
    cfg["solver"].setdefault("tail_tol", TAIL_TOL)
    if cfg["mode"] != "validate-selectivity":
        cfg.setdefault("wigner", {"extent": 6.0, "resolution": 201})
        if cfg["wigner"] is not None:
            cfg["wigner"].setdefault("extent", 6.0)
            cfg["wigner"].setdefault("resolution", 201)
        cfg["targets"].setdefault("target", cfg["targets"]["m"])
    if cfg["mode"] == "evolve":
        cfg["time"].setdefault("n_steps", 100)
        cfg["time"].setdefault("method", "expm")
        cfg["time"].setdefault("initial", "vacuum")
    if cfg["mode"] == "collision":
        cfg.setdefault("time", {}).setdefault("n_steps", 100)
        cfg.setdefault("collision", {}).setdefault("arrival", "regular")
        cfg["collision"].setdefault("n_records", cfg["time"]["n_steps"])
        if "t_end" not in cfg["time"]:
            raise ConfigError("mode 'collision' needs time.t_end")
    if cfg["mode"] == "validate-selectivity":
        cfg.setdefault("selectivity", {}).setdefault("scale", 10.0)
        cfg["selectivity"].setdefault("n_samples", 401)
        cfg["targets"].setdefault("n_probe", cfg["targets"]["k"])
        if cfg["hilbert"]["n_max"] == "auto":
            cfg["hilbert"]["n_max"] = 15
    return cfg


# --- helpers -----------------------------------------------------------------


def _beam(cfg: dict) -> BeamParams:
    b = cfg["beam"]
    return BeamParams.from_slots(b["slot_rate"], b["p_g"], b["p_e"], b["p_i"], b["tau"],
                                 b["zeta"], b["lambda_tilde"])


def _engineered_rates(cfg: dict) -> EngineeredRates:
    t = cfg["targets"]
    if "rates" in cfg:
        r = cfg["rates"]
        return EngineeredRates(r["gamma_m"], r["gamma_l"], r["epsilon"], t["m"], t["l"], r.get("nbar", 0.0))
    return rates_from_beam(_beam(cfg), t["m"], t["l"], cfg["beam"].get("nbar", 0.0))


def _resolve_nmax(cfg: dict, rates: Optional[EngineeredRates]) -> int:
    n = cfg["hilbert"]["n_max"]
    if n != "auto":
        return int(n)
    tail = cfg["solver"]["tail_tol"] or TAIL_TOL
    if rates is None:
        raise ConfigError("n_max = 'auto' needs engineered rates")
    return auto_truncation(rates, tail)


def _clean(x: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _write_populations(path: Path, pops: np.ndarray, analytic: Optional[np.ndarray] = None) -> None:
    with open(path, "w") as fh:
        fh.write("n,population" + (",analytic" if analytic is not None else "") + "\n")
        for n, p in enumerate(pops):
            row = f"{n},{float(p)!r}"
            if analytic is not None:
                row += f",{float(analytic[n])!r}"
            fh.write(row + "\n")


def _state_outputs(out: Path, rho: DensityMatrix, cfg: dict, report: dict,
                   analytic: Optional[np.ndarray] = None) -> None:
    t = cfg["targets"]
    pops = rho.populations
    _write_populations(out / "populations.csv", pops, analytic)
    w = None
    if cfg.get("wigner") is not None:
        e = cfg["wigner"]["extent"]
        w = wigner(rho, GridSpec((-e, e), (-e, e), cfg["wigner"]["resolution"]))
        w.to_csv(out / "wigner.csv")
        w.to_matrix_file(out / "wigner_matrix.txt")
        cls = classify_nonclassical(w)
        report["wigner"] = {"min": w.min_value, "integral": w.integral,
                            "negativity_volume": w.negativity_volume,
                            "nonclassical": cls.nonclassical, "threshold": cls.threshold,
                            "classification": "nonclassical" if cls.nonclassical else "classical"}
    metrics = state_metrics(rho, t["target"], w)
    report["metrics"] = metrics.as_dict()
    m, l = t["m"], t["l"]
    report["population_windows"] = {
        "up_to_l": float(pops[: l + 1].sum()),
        "slice_l+1_to_m": float(pops[l + 1: m + 1].sum()),
        "above_m": float(pops[m + 1:].sum()),
    }


@dataclass(frozen=True)
class RunResult:
    status: int
    out_dir: Path
    report: dict
    message: str = ""


def _manifest(cfg: dict) -> dict:
    return {
        "config": cfg,
        "versions": {
            "steadyfock": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "seed": cfg["seed"],
    }


# --- mode runners ------------------------------------------------------------


def _run_field(cfg: dict, out: Path, report: dict) -> int:
    mode = cfg["mode"]
    rates = _engineered_rates(cfg)
    n_max = _resolve_nmax(cfg, rates)
    spec = HilbertSpec(n_max)
    sol = analytic_populations(rates)
    regime = check_conditions(rates, sol)
    analytic = sol.populations(np.arange(n_max + 1))
    report.update({"n_max": n_max, "regime": regime.regime, "conditions": regime.as_dict(),
                   "analytic": {"R": sol.R, "A_l": sol.A_l, "B_lm": sol.B_lm, "rho0": sol.rho0,
                                "tail_mass_above_n_max": sol.tail_mass(n_max)}})
    status = EXIT_OK
    tail_tol = cfg["solver"]["tail_tol"]
    if mode == "analytic":
        rho = DensityMatrix(np.diag(analytic / analytic.sum()).astype(complex))
        report["solver"] = {"method": "closed-form"}
        tail = float(analytic[-1])
        if tail_tol is not None and tail > tail_tol:
            status = EXIT_TRUNCATION
    else:
        me = build_master_equation(rates, spec)
        if mode == "steady":
            try:
                res = steady_state(me, method=cfg["solver"]["method"], tail_tol=tail_tol)
            except TruncationError as exc:
                res = exc.report
                status = EXIT_TRUNCATION
            rho = res.rho
            report["solver"] = {"method": res.method, "residual": res.residual,
                                "null_space_dim": res.null_space_dim, "tail_mass": res.tail_mass,
                                "spectral_gap": res.spectral_gap, "notes": list(res.notes)}
            report["analytic"]["max_population_error"] = float(np.max(np.abs(rho.populations - analytic)))
        else:
            tc = cfg["time"]
            t_grid = np.linspace(0.0, tc["t_end"], tc["n_steps"] + 1)
            rho0 = fock_state(0, spec) if tc["initial"] == "vacuum" else thermal_state(rates.nbar, spec)
            traj = evolve(me, rho0, t_grid, method=tc["method"])
            with open(out / "trajectory.csv", "w") as fh:
                fh.write("time," + ",".join(f"p{n}" for n in range(n_max + 1)) + "\n")
                for t, r in zip(t_grid, traj):
                    fh.write(repr(float(t)) + "," + ",".join(repr(float(x)) for x in r.populations) + "\n")
            rho = traj[-1]
            tail = float(rho.populations[-1])
            report["solver"] = {"method": f"evolve-{tc['method']}", "t_end": tc["t_end"], "tail_mass": tail}
            if tail_tol is not None and tail > tail_tol:
                status = EXIT_TRUNCATION
    _state_outputs(out, rho, cfg, report, analytic)
    return status


def _run_collision(cfg: dict, out: Path, report: dict) -> int:
    t = cfg["targets"]
    beam = _beam(cfg)
    nbar = cfg["beam"].get("nbar", 0.0)
    rates = rates_from_beam(beam, t["m"], t["l"], nbar)
    n_max = _resolve_nmax(cfg, rates)
    tc, cc = cfg["time"], cfg["collision"]
    ccfg = CollisionConfig(beam, t["m"], t["l"], n_max, arrival=cc["arrival"], nbar=nbar,
                           total_time=tc["t_end"], n_records=cc["n_records"], seed=cfg["seed"])
    model = BeamModel.build(ccfg)
    traj = simulate_beam(ccfg, fock_state(0, ccfg.spec), model=model)
    traj.to_csv(out / "trajectory.csv")
    rho = traj.states[-1]
    report.update({"n_max": n_max, "arrival": cc["arrival"], "seed": traj.seed,
                   "arrivals": int(traj.arrivals[-1]),
                   "coarse_grained_rates": {"gamma_m": rates.gamma_m, "gamma_l": rates.gamma_l,
                                            "epsilon": rates.epsilon},
                   "regime": check_conditions(rates).regime})
    if math.isfinite(ccfg.period):
        fixed = beam_steady_state(ccfg, model)
        report["fixed_point"] = {"lindblad_trace_distance": lindblad_distance(ccfg, model),
                                 "eigenvalue_gap": fixed.eigenvalue_gap}
    _state_outputs(out, rho, cfg, report)
    return EXIT_OK


def _run_selectivity(cfg: dict, out: Path, report: dict) -> int:
    t, sc = cfg["targets"], cfg["selectivity"]
    raman, tau = selective_operating_point(t["k"], 1.0, sc["scale"])
    sel = validate_selectivity(t["k"], raman, t["n_probe"], n_max=cfg["hilbert"]["n_max"],
                               n_samples=sc["n_samples"])
    with open(out / "selectivity.csv", "w") as fh:
        fh.write("time,transfer,fidelity\n")
        for row in zip(sel.times, sel.transfer, sel.fidelity):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    report.update({"selectivity": sel.summary(), "tau_unit_pulse_area": tau,
                   "raman": {"Delta": raman.Delta, "Delta1": raman.Delta1, "Delta2": raman.Delta2,
                             "Omega1_abs": abs(raman.Omega1), "Omega2_abs": abs(raman.Omega2)}})
    return EXIT_OK


def run_scenario(raw: dict, out_dir=None, seed: Optional[int] = None,
                 n_max: Optional[int] = None) -> RunResult:
    """Resolve, execute and write artifacts; never raises for expected failures.

    Exit status: 0 ok, 2 invalid config, 3 solver failure, 4 truncation too tight.
    """
    try:
        cfg = resolve_config(raw, seed=seed, n_max=n_max)
    except (ConfigError, ValueError) as exc:
        return RunResult(EXIT_CONFIG, Path(out_dir or "."), {"status": "config-invalid"}, str(exc))
    out = Path(out_dir or cfg.get("output") or f"runs/{cfg['name']}")
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"name": cfg["name"], "mode": cfg["mode"]}
    if "interpretation" in cfg:
        report["interpretation"] = cfg["interpretation"]
        report["parameter_ambiguity"] = cfg["interpretation"].get("ambiguous", False)
    runners = {"steady": _run_field, "analytic": _run_field, "evolve": _run_field,
               "collision": _run_collision, "validate-selectivity": _run_selectivity}
    message = ""
    try:
        status = runners[cfg["mode"]](cfg, out, report)
    except ValueError as exc:  # includes NoSteadyStateError and ConfigError
        status, message = EXIT_CONFIG, str(exc)
    except SolverError as exc:
        status, message = EXIT_SOLVER, str(exc)
    report["status"] = {EXIT_OK: "ok", EXIT_CONFIG: "config-invalid", EXIT_SOLVER: "solver-failure",
                        EXIT_TRUNCATION: "truncation-insufficient"}[status]
    if status == EXIT_TRUNCATION and not message:
        message = f"tail mass exceeds {cfg['solver']['tail_tol']:g}; raise n_max"
    if message:
        report["message"] = message
    _write_json(out / "report.json", report)
    _write_json(out / "manifest.json", _manifest(cfg))
    return RunResult(status, out, report, message)


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def config_from_manifest(path) -> dict:
    return json.loads(Path(path).read_text())["config"]


def _run_star(args):
    raw, out, seed, n_max = args
    res = run_scenario(raw, out, seed, n_max)
    return res.status, str(res.out_dir), res.message


def run_many(configs: list[dict], out_root, workers: int = 1, seed: Optional[int] = None,
             n_max: Optional[int] = None) -> list[tuple[int, str, str]]:
    """Run scenarios into ``out_root/<name>``, fanning out over worker processes."""
    out_root = Path(out_root)
    jobs = [(c, out_root / c.get("name", f"scenario{i}"), seed, n_max) for i, c in enumerate(configs)]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_star(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs))


__all__ = [
    "CONFIG_SCHEMA", "ConfigError", "PRESETS", "RunResult", "list_presets", "load_config",
    "preset_config", "resolve_config", "run_many", "run_scenario", "config_from_manifest",
]
