import pytest

from mvp_pclip.config import ConfigError, RunConfig, load_config, parse_config_text, parse_overrides


def test_defaults_match_module_defaults():
    cfg = RunConfig()
    assert cfg.views == 9 and cfg.n_union == 8 and cfg.n_specific == 4
    assert cfg.learning_rate == 0.0005 and cfg.epochs == 3
    assert cfg.encoder().key_layers == (2, 4, 6, 8)
    assert cfg.pipeline().tau == 0.07


def test_parse_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# a comment\nviews = 5   # trailing\nkey_layers = 2, 4\n\nn_layers = 4\n"
                    "tau = 0.1\nstate_words = flawless, broken\n")
    cfg = load_config(path, parse_overrides(["--views=3", "--learning-rate=0.01"]))
    assert cfg.views == 3 and cfg.key_layers == (2, 4) and cfg.tau == 0.1
    assert cfg.learning_rate == 0.01 and cfg.state_words == ("flawless", "broken")


def test_canonical_text_round_trips():
    cfg = RunConfig(views=7, displacement=(0.05, 0.1))
    again = load_config(None, parse_config_text(cfg.to_text()))
    assert again == cfg and again.digest() == cfg.digest()
    assert RunConfig(views=5).digest() != cfg.digest()


@pytest.mark.parametrize("text, key", [
    ("colour = red\n", "colour"),
    ("views = 3\nviews = 4\n", "views"),
    ("views = three\n", "views"),
    ("key_layers = 2, x\n", "key_layers"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key):
        load_config(None, parse_config_text(text))


def test_missing_equals_is_an_error():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("views 3\n")


def test_bad_override():
    with pytest.raises(ConfigError, match="nope"):
        parse_overrides(["--nope=1"])
    with pytest.raises(ConfigError):
        parse_overrides(["views=3"])


def test_invalid_module_values_surface_as_config_errors():
    with pytest.raises(ConfigError):
        RunConfig(image_size=60)
    with pytest.raises(ConfigError):
        RunConfig(learning_rate=-1.0)
