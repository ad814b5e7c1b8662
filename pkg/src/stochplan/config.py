"""Experiment configuration files.

One JSON file fully determines a run; there is no environment-variable
state. Unknown keys are rejected and validation errors carry the offending
field path.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import models, presets
from .costs import CostSpec, Obstacle, quadratic_cost
from .montecarlo import Scenario
from .policies import PolicyConfig
from .trajopt import SolverOptions

DEFAULT_EPS_GRID = tuple(round(0.1 * k, 1) for k in range(10))


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


_TOP_KEYS = {"experiment", "preset", "model", "horizon", "x0", "cost",
             "policies", "eps_grid", "seeds", "base_seed", "workers",
             "out_dir", "solver", "verify", "high_noise"}
_POLICY_KEYS = {"kind", "j_thresh", "control_horizon", "gain_source"}
_SOLVER_KEYS = {"tol_cost", "tol_step", "max_inner", "max_outer",
                "mu_init", "mu_growth", "reg_init", "reg_growth",
                "armijo", "backtrack", "max_backtracks", "feas_tol",
                "polish_iters"}
_COST_KEYS = {"wx", "wu", "wxf", "goal", "obstacles", "collision_scale",
              "r_thresh"}
_VERIFY_KEYS = {"eps_grid", "seeds"}
_HIGH_NOISE_KEYS = {"eps", "seeds", "hc_grid"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    policies: tuple
    eps_grid: tuple
    seeds: int
    preset: str | None = None
    model: str | None = None
    horizon: int | None = None
    x0: tuple | None = None
    cost_overrides: dict = field(default_factory=dict)
    base_seed: int = 0
    workers: int = 1
    out_dir: str = "results"
    solver: SolverOptions = field(default_factory=SolverOptions)
    verify_eps_grid: tuple = (0.05, 0.1, 0.2, 0.4)
    verify_seeds: int = 200
    high_noise_eps: float = 0.8
    high_noise_seeds: int = 20
    high_noise_hc_grid: tuple = (3, 7, 15)

    def scenario(self):
        if self.preset is not None:
            base = presets.load(self.preset)
            if self.cost_overrides:
                if base.is_multi:
                    raise ConfigError(
                        "cost", "overrides apply to single-agent presets only")
                return Scenario(name=self.experiment, horizon=base.horizon,
                                model=base.model,
                                cost=_apply_cost(base.cost, self.cost_overrides),
                                x0=base.x0)
            return base
        model = models.by_name(self.model)
        cost = _build_cost(self.cost_overrides, model.n_x, model.n_u)
        return Scenario(name=self.experiment, horizon=self.horizon,
                        model=model, cost=cost,
                        x0=np.asarray(self.x0, dtype=float))


def _require(cond, path, message):
    if not cond:
        raise ConfigError(path, message)


def _check_keys(mapping, allowed, path):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def _matrix(value, n, path):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.shape != (n,):
            raise ConfigError(path, f"expected {n} diagonal entries")
        return np.diag(arr)
    if arr.shape != (n, n):
        raise ConfigError(path, f"expected a {n}x{n} matrix or its diagonal")
    return arr


def _parse_obstacles(entries, path):
    out = []
    for i, entry in enumerate(entries):
        here = f"{path}[{i}]"
        _require(isinstance(entry, dict), here, "must be an object")
        _check_keys(entry, {"center", "shape"}, here)
        try:
            out.append(Obstacle(center=np.asarray(entry["center"], dtype=float),
                                shape=np.asarray(entry["shape"], dtype=float)))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(here, str(exc)) from None
    return tuple(out)


def _apply_cost(base, overrides):
    """Overlay config-file cost fields onto a preset's cost."""
    n = base.Wx.shape[0]
    kwargs = {}
    if "wx" in overrides:
        kwargs["Wx"] = _matrix(overrides["wx"], n, "cost.wx")
    if "wu" in overrides:
        kwargs["Wu"] = _matrix(overrides["wu"], base.Wu.shape[0], "cost.wu")
    if "wxf" in overrides:
        kwargs["Wxf"] = _matrix(overrides["wxf"], n, "cost.wxf")
    if "goal" in overrides:
        goal = np.asarray(overrides["goal"], dtype=float)
        if goal.shape != (n,):
            raise ConfigError("cost.goal", f"expected {n} entries")
        kwargs["goal"] = goal
    if "obstacles" in overrides:
        kwargs["obstacles"] = _parse_obstacles(overrides["obstacles"],
                                               "cost.obstacles")
    if "collision_scale" in overrides:
        kwargs["collision_scale"] = float(overrides["collision_scale"])
    if "r_thresh" in overrides:
        kwargs["r_thresh"] = float(overrides["r_thresh"])
    try:
        return replace(base, **kwargs)
    except ValueError as exc:
        raise ConfigError("cost", str(exc)) from None


def _build_cost(overrides, n_x, n_u):
    for key in ("wx", "wu", "wxf", "goal"):
        _require(key in overrides, f"cost.{key}",
                 "required when no preset is named")
    try:
        return quadratic_cost(
            _matrix(overrides["wx"], n_x, "cost.wx"),
            _matrix(overrides["wu"], n_u, "cost.wu"),
            _matrix(overrides["wxf"], n_x, "cost.wxf"),
            goal=np.asarray(overrides["goal"], dtype=float),
            obstacles=_parse_obstacles(overrides.get("obstacles", []),
                                       "cost.obstacles"),
            collision_scale=float(overrides.get("collision_scale", 100.0)),
            r_thresh=float(overrides.get("r_thresh", 0.5)),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError("cost", str(exc)) from None


def parse_config(data):
    """Validate a decoded JSON object into an ExperimentConfig."""
    _require(isinstance(data, dict), "<root>", "config must be an object")
    _check_keys(data, _TOP_KEYS, "")

    preset = data.get("preset")
    model_name = data.get("model")
    horizon = data.get("horizon")
    x0 = data.get("x0")
    cost_data = data.get("cost", {})
    _require(isinstance(cost_data, dict), "cost", "must be an object")
    _check_keys(cost_data, _COST_KEYS, "cost")

    if preset is not None:
        _require(isinstance(preset, str) and preset in presets.PRESETS,
                 "preset", f"unknown preset {preset!r}")
        _require(model_name is None and horizon is None and x0 is None,
                 "model", "give either a preset or an explicit model, not both")
    else:
        _require(isinstance(model_name, str), "model",
                 "a preset or a model name is required")
        try:
            mod = models.by_name(model_name)
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None
        _require(isinstance(horizon, int) and horizon >= 1,
                 "horizon", "must be an integer >= 1")
        _require(isinstance(x0, list) and len(x0) == mod.n_x,
                 "x0", f"must list {mod.n_x} state entries")

    experiment = data.get("experiment", preset or model_name)
    _require(isinstance(experiment, str) and experiment,
             "experiment", "must be a nonempty string")

    raw_policies = data.get("policies", [{"kind": "tlqr2"}])
    _require(isinstance(raw_policies, list) and raw_policies,
             "policies", "must be a nonempty list")
    policies = []
    for i, entry in enumerate(raw_policies):
        path = f"policies[{i}]"
        _require(isinstance(entry, dict), path, "must be an object")
        _check_keys(entry, _POLICY_KEYS, path)
        _require("kind" in entry, f"{path}.kind", "is required")
        kwargs = dict(entry)
        if kwargs.get("j_thresh") == "inf":
            kwargs["j_thresh"] = math.inf
        try:
            policies.append(PolicyConfig(**kwargs))
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from None

    eps_grid = data.get("eps_grid", list(DEFAULT_EPS_GRID))
    _require(isinstance(eps_grid, list) and eps_grid,
             "eps_grid", "must be a nonempty list")
    for i, eps in enumerate(eps_grid):
        _require(isinstance(eps, (int, float)) and eps >= 0,
                 f"eps_grid[{i}]", "noise levels must be >= 0")

    seeds = data.get("seeds", 100)
    _require(isinstance(seeds, int) and seeds >= 1,
             "seeds", "must be an integer >= 1")
    base_seed = data.get("base_seed", 0)
    _require(isinstance(base_seed, int) and base_seed >= 0,
             "base_seed", "must be a nonnegative integer")
    workers = data.get("workers", 1)
    _require(isinstance(workers, int) and workers >= 1,
             "workers", "must be an integer >= 1")
    out_dir = data.get("out_dir", "results")
    _require(isinstance(out_dir, str) and out_dir,
             "out_dir", "must be a nonempty string")

    solver_kwargs = data.get("solver", {})
    _require(isinstance(solver_kwargs, dict), "solver", "must be an object")
    _check_keys(solver_kwargs, _SOLVER_KEYS, "solver")
    try:
        solver = SolverOptions(**solver_kwargs)
    except TypeError as exc:
        raise ConfigError("solver", str(exc)) from None

    verify = data.get("verify", {})
    _require(isinstance(verify, dict), "verify", "must be an object")
    _check_keys(verify, _VERIFY_KEYS, "verify")
    high = data.get("high_noise", {})
    _require(isinstance(high, dict), "high_noise", "must be an object")
    _check_keys(high, _HIGH_NOISE_KEYS, "high_noise")

    cfg = ExperimentConfig(
        experiment=experiment,
        preset=preset,
        model=model_name,
        horizon=horizon,
        x0=tuple(x0) if x0 is not None else None,
        cost_overrides=cost_data,
        policies=tuple(policies),
        eps_grid=tuple(float(e) for e in eps_grid),
        seeds=seeds,
        base_seed=base_seed,
        workers=workers,
        out_dir=out_dir,
        solver=solver,
        verify_eps_grid=tuple(verify.get("eps_grid", (0.05, 0.1, 0.2, 0.4))),
        verify_seeds=int(verify.get("seeds", 200)),
        high_noise_eps=float(high.get("eps", 0.8)),
        high_noise_seeds=int(high.get("seeds", 20)),
        high_noise_hc_grid=tuple(high.get("hc_grid", (3, 7, 15))),
    )
    cfg.scenario()  # fail now, with a field path, rather than mid-run
    return cfg


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}", exc.msg) from None
    return parse_config(data)
