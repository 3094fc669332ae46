import json

import pytest

from semnetsim.config import (
    bundled_config_path,
    load_bundled_config,
    load_config,
    parse_config,
    scenario_from_dict,
    scenario_to_dict,
)
from semnetsim.errors import ConfigError

from conftest import make_scenario


def bundled_dict():
    return json.loads(bundled_config_path().read_text())


class TestBundledConfig:
    def test_loads(self):
        cfg = load_bundled_config()
        assert len(cfg.scenario.end_nodes) == 4
        assert cfg.scenario.optimizer == "gne"
        assert cfg.video is not None
        assert cfg.video.n_frames == 100

    def test_declared_ranges_match_grid_endpoints(self):
        cfg = load_bundled_config()
        for node in cfg.scenario.end_nodes:
            assert node.freq_range_hz == (0.96e9, 1.72e9)
        for link in cfg.scenario.links:
            assert link.power_range_dbm == (15.0, 24.0)


class TestStrictness:
    def test_unknown_key_rejected_with_path(self):
        data = bundled_dict()
        data["scenario"]["nodes"][0]["color"] = "blue"
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert "scenario.nodes[0]" in str(err.value)
        assert "color" in str(err.value)

    def test_unknown_top_level_key_rejected(self):
        data = bundled_dict()
        data["extras"] = {}
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_schema_version_checked(self):
        data = bundled_dict()
        data["schema_version"] = 99
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert "schema_version" in str(err.value)

    def test_missing_required_key_names_location(self):
        data = bundled_dict()
        del data["scenario"]["nodes"][1]["kappa"]
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert "scenario.nodes[1].kappa" in str(err.value)

    def test_type_errors_name_location(self):
        data = bundled_dict()
        data["scenario"]["links"][0]["bandwidth_hz"] = "fast"
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert "scenario.links[0].bandwidth_hz" in str(err.value)

    def test_domain_violations_surface_as_config_errors(self):
        data = bundled_dict()
        data["scenario"]["links"][0]["channel_gain"] = 2.0
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_scales_required_when_weights_nonzero(self):
        data = bundled_dict()
        del data["scenario"]["reference_scales"]
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert "reference_scales" in str(err.value)

    def test_syntax_error_is_line_anchored(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n "schema_version": 1,\n "scenario": {,}\n}\n')
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "line 3" in str(err.value)


class TestRoundTrip:
    def test_scenario_to_dict_round_trips(self):
        scenario = load_bundled_config().scenario
        rebuilt = scenario_from_dict(scenario_to_dict(scenario))
        assert rebuilt == scenario

    def test_programmatic_scenario_round_trips(self):
        scenario = make_scenario(n_devices=3, optimizer="marl", seed=5)
        rebuilt = scenario_from_dict(scenario_to_dict(scenario))
        assert rebuilt == scenario
