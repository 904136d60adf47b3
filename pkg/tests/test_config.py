"""Pipeline configuration document parsing and validation."""
import json

import pytest

from posepartition.config import (
    PipelineConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
)
from posepartition.errors import ConfigurationError
from posepartition.scene import mpii_joint_layout


def test_defaults_round_trip():
    cfg = PipelineConfig()
    back = config_from_dict(config_to_dict(cfg))
    assert back == cfg
    assert back.tau == 0.1
    assert back.sigma == 7.0
    assert back.radius == 7.0
    assert back.nms_radius == 3
    assert back.link_threshold is None
    assert back.joint_layout == mpii_joint_layout()


def test_non_default_round_trip():
    cfg = PipelineConfig(
        tau=0.25,
        sigma=5.0,
        radius=6.0,
        nms_radius=2,
        link_threshold=12.5,
        vote_weights=tuple(0.5 for _ in range(16)),
        loss_alpha=0.5,
        seed=42,
    )
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_dump_is_json_and_marks_auto_threshold():
    doc = json.loads(dump_config(PipelineConfig()))
    assert doc["cluster"]["link_threshold"] == "auto"
    assert doc["tau"] == 0.1


def test_empty_document_means_defaults():
    assert config_from_dict({}) == PipelineConfig()


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigurationError, match="sigma_px"):
        config_from_dict({"sigma_px": 7})


def test_bad_values_are_rejected():
    with pytest.raises(ConfigurationError):
        config_from_dict({"tau": "high"})
    with pytest.raises(ConfigurationError):
        config_from_dict({"forward": {"sigma": -1}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"forward": "nope"})
    with pytest.raises(ConfigurationError):
        config_from_dict({"cluster": {"link_threshold": -5}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"cluster": {"link_threshold": True}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"cluster": {"weights": "all"}})
    with pytest.raises(ConfigurationError):
        config_from_dict({"loss_alpha": -0.5})
    with pytest.raises(ConfigurationError, match="integer"):
        config_from_dict({"detector": {"nms_radius": 3.5}})
    with pytest.raises(ConfigurationError, match="integer"):
        config_from_dict({"seed": 1.5})
    with pytest.raises(ConfigurationError):
        config_from_dict([])


def test_weight_count_must_match_the_layout():
    with pytest.raises(ConfigurationError, match="weights"):
        config_from_dict({"cluster": {"weights": [1.0, 2.0]}})


def test_cluster_params_resolve_auto_threshold():
    auto = PipelineConfig()
    assert auto.cluster_params(100.0).link_threshold == 10.0
    fixed = PipelineConfig(link_threshold=4.0)
    assert fixed.cluster_params(100.0).link_threshold == 4.0


def test_stage_param_accessors_share_tau():
    cfg = PipelineConfig(tau=0.2)
    assert cfg.forward_params().tau == 0.2
    assert cfg.detector_params().tau == 0.2


def test_custom_joint_spec_round_trip():
    doc = config_to_dict(PipelineConfig())
    doc["joint_spec"] = [
        {"id": 0, "name": "neck", "group": "neck", "rank": 0, "mirror_id": 0},
        {"id": 1, "name": "torso", "group": "torso", "rank": 1, "mirror_id": 1},
    ]
    cfg = config_from_dict(doc)
    assert len(cfg.joint_layout) == 2
    assert cfg.joint_layout[1].name == "torso"
    with pytest.raises(ConfigurationError, match="joint_spec"):
        config_from_dict({"joint_spec": [{"id": 0}]})


def test_load_config_error_paths(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(dump_config(PipelineConfig(tau=0.3)))
    assert load_config(good).tau == 0.3

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigurationError, match="broken.json"):
        load_config(broken)

    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({"tau": -2}))
    with pytest.raises(ConfigurationError, match="invalid.json"):
        load_config(invalid)
