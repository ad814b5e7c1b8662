import json
import math
import os

import numpy as np
import pytest

from stochplan import cli, presets
from stochplan.config import ConfigError, load_config, parse_config
from stochplan.montecarlo import read_csv


class TestPresets:
    def test_car_single_values(self):
        sc = presets.load("car_single")
        assert sc.horizon == 35
        assert sc.model.dt == 0.1
        assert np.array_equal(sc.x0, [3.0, 1.0, 0.0, 0.0])
        assert np.allclose(sc.cost.goal, [3.5, 7.0, math.pi / 2, 0.0])
        assert np.array_equal(np.diag(sc.cost.Wx), [20, 20, 0, 0])
        assert np.array_equal(np.diag(sc.cost.Wu), [20, 200])
        assert np.array_equal(np.diag(sc.cost.Wxf),
                              [7e3, 7e3, 1e4, 1e3])
        assert np.allclose(sc.model.u_min, [-4, -math.pi / 12])
        assert np.allclose(sc.model.u_max, [4, math.pi / 12])

    def test_trailers_values(self):
        sc = presets.load("trailers_single")
        assert sc.horizon == 40
        assert np.allclose(sc.x0, [0, 0, math.pi / 3, 0, 0, 0])
        assert np.allclose(sc.cost.goal, [2, 2, 0, 0, 0, 0])
        assert np.array_equal(np.diag(sc.cost.Wx), [10, 10, 1, 1, 1, 1])
        assert np.array_equal(np.diag(sc.cost.Wu), [5, 5])
        assert np.array_equal(np.diag(sc.cost.Wxf),
                              [1e3, 1e3, 1e3, 100, 100, 100])
        assert np.allclose(sc.model.u_min, [-0.8, -math.pi / 6])

    def test_quad_values(self):
        sc = presets.load("quad_single")
        assert sc.horizon == 30
        assert np.array_equal(sc.x0, np.zeros(12))
        assert np.allclose(sc.cost.goal[:3], 2.0)
        assert np.array_equal(np.diag(sc.cost.Wx),
                              [10, 10, 10] + [1] * 9)
        assert np.array_equal(np.diag(sc.cost.Wu), [5, 10, 10, 10])
        assert np.array_equal(np.diag(sc.cost.Wxf), [1e3] * 12)

    def test_multi_agent_values(self):
        sc = presets.load("car_multi3")
        prob = sc.multi
        assert sc.horizon == 35
        assert np.allclose(prob.starts[0], [3, 1, math.pi / 2, 0])
        assert np.allclose(prob.starts[1], [5, 1, 0, 0])
        assert np.allclose(prob.starts[2], [6, 8, 0, 0])
        assert np.allclose(prob.agent_costs[0].goal, [3.5, 7, 0, 0])
        assert np.allclose(prob.agent_costs[1].goal, [2, 8, 0, 0])
        assert np.allclose(prob.agent_costs[2].goal, [8, 1.5, 0, 0])

    def test_obstacle_preset(self):
        sc = presets.load("car_obstacles")
        assert len(sc.cost.obstacles) == 2


class TestConfigParsing:
    def test_minimal(self):
        cfg = parse_config({"preset": "car_single"})
        sc = cfg.scenario()
        assert sc.horizon == 35
        assert cfg.eps_grid == tuple(round(0.1 * k, 1) for k in range(10))
        assert cfg.seeds == 100

    def test_policy_parsing(self):
        cfg = parse_config({
            "preset": "car_single",
            "policies": [{"kind": "mpc"},
                         {"kind": "tlqr2", "j_thresh": 0.05},
                         {"kind": "mpc_sh", "control_horizon": 7}],
        })
        assert [p.kind for p in cfg.policies] == ["mpc", "tlqr2", "mpc_sh"]
        assert cfg.policies[1].j_thresh == 0.05

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            parse_config({"preset": "car_single", "frobnicate": 1})
        with pytest.raises(ConfigError, match=r"policies\[0\]"):
            parse_config({"preset": "car_single",
                          "policies": [{"kind": "mpc", "gamma": 2}]})

    def test_negative_seed_count_rejected(self):
        with pytest.raises(ConfigError, match="seeds"):
            parse_config({"preset": "car_single", "seeds": -3})

    def test_negative_eps_rejected(self):
        with pytest.raises(ConfigError, match=r"eps_grid\[1\]"):
            parse_config({"preset": "car_single", "eps_grid": [0.0, -0.1]})

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError, match="preset"):
            parse_config({"preset": "hovercraft"})

    def test_solver_overrides(self):
        cfg = parse_config({"preset": "car_single",
                            "solver": {"max_inner": 50}})
        assert cfg.solver.max_inner == 50
        with pytest.raises(ConfigError, match="solver"):
            parse_config({"preset": "car_single", "solver": {"tol": 1}})

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n "preset": "car_single",\n oops\n}')
        with pytest.raises(ConfigError, match=":3"):
            load_config(str(path))

    def test_explicit_model_and_cost(self):
        cfg = parse_config({
            "model": "car4d",
            "horizon": 12,
            "x0": [0.0, 0.0, 0.0, 0.0],
            "cost": {
                "wx": [20, 20, 0, 0],
                "wu": [20, 200],
                "wxf": [7000, 7000, 10000, 1000],
                "goal": [1.0, 1.0, 0.0, 0.0],
                "obstacles": [{"center": [0.5, 0.5],
                               "shape": [[4.0, 0.0], [0.0, 4.0]]}],
                "r_thresh": 0.3,
            },
        })
        sc = cfg.scenario()
        assert sc.horizon == 12
        assert sc.model.name == "car4d"
        assert len(sc.cost.obstacles) == 1
        assert sc.cost.r_thresh == 0.3
        assert np.array_equal(np.diag(sc.cost.Wu), [20, 200])

    def test_explicit_model_requires_cost_fields(self):
        with pytest.raises(ConfigError, match="cost.goal"):
            parse_config({"model": "car4d", "horizon": 5,
                          "x0": [0, 0, 0, 0],
                          "cost": {"wx": [1, 1, 1, 1], "wu": [1, 1],
                                   "wxf": [1, 1, 1, 1]}})

    def test_preset_cost_override(self):
        cfg = parse_config({
            "preset": "car_single",
            "cost": {"goal": [4.0, 6.0, 0.0, 0.0], "wu": [10, 100]},
        })
        sc = cfg.scenario()
        assert np.allclose(sc.cost.goal, [4.0, 6.0, 0.0, 0.0])
        assert np.array_equal(np.diag(sc.cost.Wu), [10, 100])
        # untouched fields keep the preset values
        assert np.array_equal(np.diag(sc.cost.Wx), [20, 20, 0, 0])

    def test_preset_and_model_are_exclusive(self):
        with pytest.raises(ConfigError, match="model"):
            parse_config({"preset": "car_single", "model": "car4d",
                          "horizon": 5, "x0": [0, 0, 0, 0]})

    def test_bad_weight_shape_has_field_path(self):
        with pytest.raises(ConfigError, match="cost.wx"):
            parse_config({"preset": "car_single",
                          "cost": {"wx": [1.0, 2.0]}})

    def test_gain_source_selectable(self):
        cfg = parse_config({
            "preset": "car_single",
            "policies": [{"kind": "tlqr", "gain_source": "tpfc"}],
        })
        assert cfg.policies[0].gain_source == "tpfc"


def write_config(tmp_path, **overrides):
    data = {
        "experiment": "smoke",
        "preset": "car_single",
        "policies": [{"kind": "tlqr2", "j_thresh": 0.02},
                     {"kind": "tlqr"}],
        "eps_grid": [0.0, 0.4],
        "seeds": 2,
        "out_dir": str(tmp_path / "results"),
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


class TestCli:
    def test_run_writes_trajectory(self, tmp_path):
        cfg_path = write_config(tmp_path, eps_grid=[0.0])
        rc = cli.main(["run", "--config", cfg_path])
        assert rc == 0
        out = tmp_path / "results" / "smoke" / "rollout.json"
        payload = json.loads(out.read_text())
        assert payload["policy"].startswith("tlqr2")
        assert payload["ratio"] == pytest.approx(1.0, abs=1e-6)
        final = payload["states"][-1]
        assert abs(final[0] - 3.5) < 0.2 and abs(final[1] - 7.0) < 0.2
        assert len(payload["step_plan_ms"]) == 35
        assert (tmp_path / "results" / "smoke" / "config.json").exists()

    def test_run_policy_selection(self, tmp_path):
        cfg_path = write_config(tmp_path, eps_grid=[0.0])
        assert cli.main(["run", "--config", cfg_path,
                         "--policy", "tlqr"]) == 0
        payload = json.loads(
            (tmp_path / "results" / "smoke" / "rollout.json").read_text())
        assert payload["policy"] == "tlqr"
        assert cli.main(["run", "--config", cfg_path,
                         "--policy", "nope"]) == 2

    def test_sweep_writes_csv(self, tmp_path):
        cfg_path = write_config(tmp_path)
        rc = cli.main(["sweep", "--config", cfg_path])
        assert rc == 0
        out = tmp_path / "results" / "smoke"
        rows = read_csv(out / "rollouts.csv")
        assert len(rows) == 2 * 2 * 2  # policies x eps x seeds
        summary = read_csv(out / "summary.csv")
        assert len(summary) == 2 * 2
        assert set(rows[0]) == {"policy", "model", "eps", "seed", "cost",
                                "nominal_cost", "ratio", "replans",
                                "total_plan_ms", "failed"}

    def test_verify_writes_scaling_report(self, tmp_path):
        cfg_path = write_config(
            tmp_path, seeds=2,
            verify={"eps_grid": [0.1, 0.2, 0.4], "seeds": 30},
            high_noise={"eps": 0.8, "seeds": 2, "hc_grid": [7]})
        rc = cli.main(["verify", "--config", cfg_path])
        assert rc == 0
        payload = json.loads(
            (tmp_path / "results" / "smoke" / "scaling.json").read_text())
        assert "decoupling" in payload and "high_noise" in payload
        assert payload["decoupling"]["expected_cost_gap_slope"] > 1.0

    def test_report_joins_sweeps(self, tmp_path):
        cfg_path = write_config(tmp_path)
        cli.main(["sweep", "--config", cfg_path])
        rollouts = str(tmp_path / "results" / "smoke" / "rollouts.csv")
        out_file = str(tmp_path / "report.csv")
        rc = cli.main(["report", rollouts, "--out-file", out_file])
        assert rc == 0
        rows = read_csv(out_file)
        assert len(rows) == 4
        assert {r["policy"] for r in rows} == {"tlqr", "tlqr2_t0.02"}

    def test_missing_config_is_an_error(self, tmp_path):
        assert cli.main(["run", "--config",
                         str(tmp_path / "absent.json")]) == 2
