"""Scenario JSON schema: validation, error paths, canonical round-trip."""

from __future__ import annotations

import copy
import json
import math

import numpy as np
import pytest

from contourslam import ConfigError, pose_at
from contourslam.config import from_dict, load, save, to_dict
from contourslam.scenarios import builtin, builtin_names, sim1, sim2


def tiny_config() -> dict:
    return {
        "version": 1,
        "name": "tiny",
        "seed": 3,
        "n_basis": 16,
        "step_dt": 0.25,
        "noise": {
            "q_pose": np.diag([1e-4, 1e-4, 1e-5]).tolist(),
            "q_center": np.zeros((2, 2)).tolist(),
            "r_xy": (1e-6 * np.eye(2)).tolist(),
        },
        "sensor": {
            "angular_resolution_deg": 3.6,
            "max_range": 12.0,
            "range_noise_std": 0.0,
        },
        "world": {
            "objects": [
                {"center": [4.0, 0.0], "fourier": {"base": 1.0, "cos": [0.1]}},
                {"center": [0.0, 4.0], "regular_polygon": {"circumradius": 1.0, "n_sides": 5}},
            ]
        },
        "trajectory": {
            "start": {"x": 0.0, "y": 0.0, "heading_deg": 90.0},
            "segments": [{"type": "straight", "length": 2.0, "speed": 1.0}],
        },
    }


class TestFromDict:
    def test_builds_and_converts_degrees(self):
        cfg = from_dict(tiny_config())
        assert cfg.seed == 3
        assert cfg.n_basis == 16
        np.testing.assert_allclose(cfg.sensor.angular_resolution, math.radians(3.6), atol=1e-15)
        np.testing.assert_allclose(cfg.trajectory.start.heading, math.pi / 2.0, atol=1e-15)
        assert cfg.n_steps == 8

    def test_regular_polygon_is_materialized(self):
        cfg = from_dict(tiny_config())
        obj = cfg.world[1]
        assert obj.polygon is not None
        assert obj.polygon.shape == (5, 2)
        np.testing.assert_allclose(
            np.hypot(*(obj.polygon - obj.center).T), 1.0, atol=1e-12
        )

    def test_empty_world_allowed(self):
        raw = tiny_config()
        raw["world"]["objects"] = []
        assert from_dict(raw).world == []

    def test_missing_version(self):
        raw = tiny_config()
        del raw["version"]
        with pytest.raises(ConfigError, match="version"):
            from_dict(raw)

    def test_unsupported_version(self):
        raw = tiny_config()
        raw["version"] = 2
        with pytest.raises(ConfigError, match="version"):
            from_dict(raw)

    @pytest.mark.parametrize(
        "mutate,path_fragment",
        [
            (lambda d: d["world"]["objects"][1].update(center=[1.0]), "world.objects[1].center"),
            (
                lambda d: d["world"]["objects"][0]["fourier"].update(base=-1.0),
                "world.objects[0].fourier.base",
            ),
            (lambda d: d["noise"].update(q_pose=[[1.0]]), "noise.q_pose"),
            (lambda d: d["noise"].pop("r_xy"), "noise.r_xy"),
            (lambda d: d["sensor"].pop("max_range"), "sensor.max_range"),
            (lambda d: d["sensor"].update(angular_resolution_deg="fast"), "sensor.angular_resolution_deg"),
            (
                lambda d: d["trajectory"]["segments"][0].update(type="teleport"),
                "trajectory.segments[0].type",
            ),
            (lambda d: d["trajectory"]["segments"].clear(), "trajectory.segments"),
            (lambda d: d["trajectory"]["start"].pop("x"), "trajectory.start.x"),
            (lambda d: d.update(n_basis=2), "n_basis"),
            (lambda d: d.update(step_dt=0.0), "step_dt"),
            (lambda d: d.update(iekf={"max_iter": 0}), "iekf"),
            (lambda d: d.update(out_dir=7), "out_dir"),
            (lambda d: d.update(report={"snapshot_every": 0}), "report"),
            (lambda d: d.update(seed=1.5), "seed"),
        ],
    )
    def test_errors_name_field_paths(self, mutate, path_fragment):
        raw = tiny_config()
        mutate(raw)
        with pytest.raises(ConfigError) as exc:
            from_dict(raw)
        assert path_fragment in str(exc.value)

    def test_object_requires_one_shape(self):
        raw = tiny_config()
        raw["world"]["objects"][0]["polygon"] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
        with pytest.raises(ConfigError, match="world.objects\\[0\\]"):
            from_dict(raw)


class TestRoundTrip:
    @pytest.mark.parametrize("raw_builder", [tiny_config, sim1, sim2])
    def test_to_dict_is_canonical_fixed_point(self, raw_builder):
        d1 = to_dict(from_dict(raw_builder()))
        d2 = to_dict(from_dict(d1))
        assert d1 == d2
        assert json.loads(json.dumps(d1)) == d1

    def test_save_load(self, tmp_path):
        cfg = from_dict(tiny_config())
        path = tmp_path / "scenario.json"
        save(cfg, path)
        again = load(path)
        assert to_dict(again) == to_dict(cfg)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load(tmp_path / "nope.json")

    def test_load_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load(path)

    def test_mutation_does_not_leak_between_builds(self):
        raw = tiny_config()
        snapshot = copy.deepcopy(raw)
        from_dict(raw)
        assert raw == snapshot


class TestBuiltins:
    def test_names(self):
        assert builtin_names() == ["sim1", "sim2"]

    @pytest.mark.parametrize("name", ["sim1", "sim2"])
    def test_builtins_validate(self, name):
        cfg = from_dict(builtin(name))
        assert cfg.name == name
        assert cfg.n_basis == 50
        assert cfg.n_steps >= 100
        assert len(cfg.world) in (4, 8)

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError, match="unknown built-in"):
            builtin("sim3")

    def test_sim1_world_shape(self):
        cfg = from_dict(sim1())
        assert len(cfg.world) == 4
        assert all(obj.polygon is not None for obj in cfg.world)

    def test_sim2_revisits_start_at_twenty_seconds(self):
        cfg = from_dict(sim2())
        assert len(cfg.world) == 8
        assert all(obj.is_smooth for obj in cfg.world)
        start = cfg.trajectory.start
        p = pose_at(cfg.trajectory, 20.0)
        np.testing.assert_allclose([p.x, p.y], [start.x, start.y], atol=1e-9)
        assert abs(p.heading - start.heading) < 1e-9
