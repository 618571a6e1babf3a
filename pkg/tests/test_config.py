import pytest

from lanechange import ConfigError, dump_config, load_config, parse_config


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = load_config(p)
    assert cfg.scenario.dt == 0.1 and cfg.train.gamma == 0.9
    assert cfg.train.alpha == 0.01 and cfg.train.total_gradient_steps == 40_000
    assert cfg == load_config(None)


def test_units_and_comments():
    cfg = parse_config("# a comment\nspeed_limit_max_kmh = 120   # top speed\n\nseed = 9\n")
    assert cfg.scenario.v_limit_range[1] == pytest.approx(33.333, abs=1e-3)
    assert cfg.scenario.seed == 9 and cfg.train.seed == 9


@pytest.mark.parametrize("text, fragment", [
    ("gamma = 1.5", "x.cfg:1: gamma out of range"),
    ("\nwarp = 3", "x.cfg:2: unknown key 'warp'"),
    ("\n\nalpha = fast", "x.cfg:3: cannot parse"),
    ("dt 0.1", "x.cfg:1: expected 'key = value'"),
    ("dt = nan", "x.cfg:1: dt must be finite"),
])
def test_errors_carry_line_numbers(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(")):
        parse_config(text, "x.cfg")


def test_cross_field_error():
    with pytest.raises(ConfigError, match="inconsistent"):
        parse_config("departure_interval_min = 12", "x.cfg")


def test_round_trip():
    cfg = parse_config("speed_limit_min_kmh = 90\ngamma = 0.95\nb_form = max\nseed = 4\n")
    assert parse_config(dump_config(cfg)) == cfg
