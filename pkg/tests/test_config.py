import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descentlab.config import SweepConfig, coerce, load_config, parse_config
from descentlab.errors import ConfigError

TEXT = """
# anchor sweep at desk scale
experiment = AnchorSweep
seed = 4
capacity_grid = 10:30:10, 45
r_grid = 0, 1.5, 20   # radii
center_rows = no
switch_off_h = 20
"""


def test_parse():
    cfg = parse_config(TEXT)
    assert cfg.experiment == "AnchorSweep" and cfg.seed == 4
    assert cfg.capacity_grid == (10, 20, 30, 45)
    assert cfg.r_grid == (0.0, 1.5, 20.0)
    assert cfg.center_rows is False
    assert cfg.switch_off() == 20


def test_overrides_apply_after_file():
    cfg = parse_config(TEXT, overrides={"seed": "9"})
    assert cfg.seed == 9


@pytest.mark.parametrize(
    "text",
    [
        "nonsense = 1",
        "seed = 1\nseed = 2",
        "seed = one",
        "lambda_grid = 1, 0.5",
        "capacity_grid = 1:5:0",
        "lambda_grid = ",
        "experiment = Mystery",
        "repeats = 0",
        "just words",
        "lambda_grid = nan",
        "early_stop = maybe",
        "switch_off_h = twenty",
    ],
)
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file_names_it(tmp_path):
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg")


def test_early_stop_auto():
    assert SweepConfig(experiment="NnScratchSweep").early_stopping()
    assert not SweepConfig(experiment="NnReuseSweep").early_stopping()
    assert SweepConfig(experiment="NnReuseSweep", early_stop="true").early_stopping()
    assert SweepConfig().switch_off() is None


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    lams=st.lists(st.floats(0, 1e6), min_size=1, max_size=4, unique=True),
    caps=st.lists(st.integers(0, 5000), min_size=1, max_size=6, unique=True),
    lr=st.floats(1e-6, 1.0),
)
def test_text_roundtrip(seed, lams, caps, lr):
    cfg = SweepConfig(seed=seed, lambda_grid=tuple(sorted(lams)), capacity_grid=tuple(sorted(caps)), learning_rate=lr)
    back = parse_config(cfg.to_text())
    assert back == cfg and back.digest() == cfg.digest()


def test_digest_changes_with_content():
    assert SweepConfig(seed=1).digest() != SweepConfig(seed=2).digest()
    assert coerce("capacity_grid", "auto") == ("auto",)
