import json

import numpy as np
import pytest

from ristwoway.config import (
    ConfigError,
    SystemConfig,
    dbm_to_watt,
    from_mapping,
    load_config_file,
    parse_bits,
    profile,
)


def test_unit_conversions():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(-110.0) == pytest.approx(1e-14)


def test_defaults_broadcast():
    cfg = SystemConfig()
    assert cfg.P.shape == (3, 2)
    assert cfg.sigma2.shape == (3, 16)
    assert cfg.kappa.shape == (3,)
    np.testing.assert_allclose(cfg.P, dbm_to_watt(25.0))
    assert cfg.continuous
    with pytest.raises(ValueError):
        cfg.P[0, 0] = 1.0  # read-only


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(K=0),
        dict(K=9),  # V < 2K
        dict(R=-1),
        dict(bits=0),
        dict(alpha=1.0),
        dict(L_kk=0),
        dict(V=4, L_kk=4, L_kr=3, L_rk=3),  # cascade longer than V
        dict(P=-1.0),
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        SystemConfig(**kwargs)


def test_replace_revalidates():
    with pytest.raises(ConfigError):
        SystemConfig().replace(V=4)


@pytest.mark.parametrize("text,expected", [("inf", None), ("5", 5), (3, 3), (float("inf"), None), (None, None)])
def test_parse_bits(text, expected):
    assert parse_bits(text) == expected


@pytest.mark.parametrize("text", ["abc", 2.5])
def test_parse_bits_rejects(text):
    with pytest.raises(ConfigError):
        parse_bits(text)


def test_mapping_with_log_units():
    cfg = from_mapping({"P_dbm": 30, "sigma2_dbm": -100, "bits": "inf", "K": 2})
    np.testing.assert_allclose(cfg.P, 1.0)
    np.testing.assert_allclose(cfg.sigma2, 1e-13)
    assert cfg.P.shape == (2, 2)


def test_mapping_rejects_unknown_key():
    with pytest.raises(ConfigError):
        from_mapping({"nonsense": 1})


def test_json_and_yaml_files(tmp_path):
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"R": 12, "bits": 3}))
    y = tmp_path / "c.yaml"
    y.write_text("R: 12\nbits: 3\ncluster_radius: 2.5\n")
    assert load_config_file(j).R == 12
    cfg = load_config_file(y)
    assert cfg.bits == 3 and cfg.cluster_radius == 2.5


def test_bad_file(tmp_path):
    f = tmp_path / "c.json"
    f.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(f)
    f.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(f)


def test_profiles():
    cfg, Rs, Bs = profile("paper-fig2b")
    assert cfg.R == 45 and Bs == [1, 2, 3, 4, 5, None]
    assert profile("paper-fig2a")[1] == [15, 25, 35, 45]
    with pytest.raises(ConfigError):
        profile("missing")
