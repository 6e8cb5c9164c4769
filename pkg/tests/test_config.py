import pytest
import yaml

from hybrid_sindy.config import (ConfigError, bundled_config, load_pipeline_config, load_sweep_config,
                                 parse_pipeline, parse_sweep)


def raw_hopper():
    return yaml.safe_load(bundled_config("hopper").read_text())


def test_bundled_configs_parse():
    hop = load_pipeline_config(bundled_config("hopper"))
    assert hop.K == 30 and hop.max_order == 2 and len(hop.train_ics) == 3 and len(hop.validation_ics) == 6
    assert hop.noise == 1e-6 and len(hop.lambdas) == 30
    sir = load_pipeline_config(bundled_config("sir"))
    assert sir.max_order == 3 and sir.state_columns == [0, 1]
    sweep = load_sweep_config(bundled_config("sweep"))
    assert sweep.K_grid == [10, 30, 100, 300, 1000] and len(sweep.eps_grid) == 6 and sweep.realizations == 5


@pytest.mark.parametrize("section,key,field", [
    ("identify", "K", "identify.K"),
    ("data", "train_ics", "data.train_ics"),
    ("system", "name", "system.name"),
])
def test_missing_field_is_named(section, key, field):
    raw = raw_hopper()
    del raw[section][key]
    with pytest.raises(ConfigError) as exc:
        parse_pipeline(raw)
    assert exc.value.field == field
    assert field in str(exc.value)


@pytest.mark.parametrize("path,value,field", [
    (("identify", "K"), 0, "identify.K"),
    (("identify", "K"), "thirty", "identify.K"),
    (("identify", "q"), 0, "identify.q"),
    (("identify", "threshold"), 0, "identify.threshold"),
    (("identify", "coordinates"), [0, 7], "identify.coordinates"),
    (("system", "name"), "pendulum", "system.name"),
    (("system", "form"), "upside-down", "system.form"),
    (("data", "validation_ics"), [], "data.validation_ics"),
    (("data", "noise"), -1.0, "data.noise"),
])
def test_invalid_values(path, value, field):
    raw = raw_hopper()
    raw[path[0]][path[1]] = value
    with pytest.raises(ConfigError) as exc:
        parse_pipeline(raw)
    assert exc.value.field == field


def test_sir_population_checked():
    raw = yaml.safe_load(bundled_config("sir").read_text())
    raw["data"]["train_ics"] = [[12, 13, 900]]
    with pytest.raises(ConfigError) as exc:
        parse_pipeline(raw)
    assert exc.value.field == "data.train_ics[0]"


def test_sweep_requires_grids():
    raw = yaml.safe_load(bundled_config("sweep").read_text())
    del raw["sweep"]["K_grid"]
    with pytest.raises(ConfigError) as exc:
        parse_sweep(raw)
    assert exc.value.field == "sweep.K_grid"


def test_malformed_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("system: [unclosed\n")
    with pytest.raises(ConfigError) as exc:
        load_pipeline_config(p)
    assert "line" in exc.value.field


def test_digest_tracks_content():
    a = load_pipeline_config(bundled_config("hopper"))
    b = load_pipeline_config(bundled_config("hopper"))
    assert a.digest() == b.digest()
    b.K = 31
    assert a.digest() != b.digest()


def test_lambda_list_form():
    raw = raw_hopper()
    raw["identify"]["lambdas"] = [0.1, 1.0]
    assert parse_pipeline(raw).lambdas == [0.1, 1.0]
