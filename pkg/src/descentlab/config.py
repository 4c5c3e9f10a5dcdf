"""Sweep configuration and the flat ``key = value`` config file format.

Every key is a field of :class:`SweepConfig`.  Grids are comma-separated
lists; integer grids also accept ``start:stop:step`` (inclusive) and the
capacity grid accepts ``auto``.  ``#`` starts a comment.  Unknown keys,
duplicate keys and malformed values raise :class:`ConfigError`.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = ("FeatureSweep", "AnchorSweep", "LambdaSweep", "NnReuseSweep", "NnScratchSweep")
FEATURE_EXPERIMENTS = EXPERIMENTS[:3]
NN_EXPERIMENTS = EXPERIMENTS[3:]


def data_dir():
    """Dataset cache location; ``DESCENTLAB_DATA_DIR`` overrides the default."""
    env = os.environ.get("DESCENTLAB_DATA_DIR")
    return Path(env) if env else Path.home() / ".cache" / "descentlab"


@dataclass(frozen=True)
class SweepConfig:
    experiment: str = "FeatureSweep"
    seed: int = 0
    repeats: int = 1
    output_path: str = "."

    # dataset
    data_source: str = "synthetic"  # synthetic | mnist | cache
    data_seed: int = 0
    n_train: int = 300
    n_test: int = 300
    balanced: bool = False
    synth_classes: int = 10
    synth_inputs: int = 50
    synth_center_scale: float = 1.0
    synth_per_class: int = 0  # 0: just enough rows for the split
    mnist_images: str = ""
    mnist_labels: str = ""
    cache_path: str = ""

    # grids
    capacity_grid: tuple = ("auto",)
    lambda_grid: tuple = (1e-8,)
    r_grid: tuple = (0.0,)
    lambda_relative: bool = False
    r_relative: bool = False

    # feature model
    feature_scale: float = 1.0
    center_rows: bool = True
    include_bias: bool = True
    anchor_bias: bool = True
    anchor_per_column: bool = False

    # networks
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 20
    val_fraction: float = 0.1
    early_stop: str = "auto"  # auto: on for NnScratchSweep, off for NnReuseSweep
    init_scale: float = 1.0
    switch_off_h: str = "none"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}, not {self.experiment!r}")
        if self.data_source not in ("synthetic", "mnist", "cache"):
            raise ConfigError(f"data_source must be synthetic, mnist or cache, not {self.data_source!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        for name in ("capacity_grid", "lambda_grid", "r_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} must not be empty")
            if grid == ("auto",):
                continue
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing, got {list(grid)}")
        if self.capacity_grid != ("auto",) and min(self.capacity_grid) < 0:
            raise ConfigError("capacities must be >= 0")
        if min(self.lambda_grid) < 0 or min(self.r_grid) < 0:
            raise ConfigError("lambda and R grids must be >= 0")
        if self.early_stop not in ("auto", "true", "false"):
            raise ConfigError("early_stop must be auto, true or false")
        self.switch_off()

    def switch_off(self):
        v = str(self.switch_off_h).strip().lower()
        if v in ("none", "never", ""):
            return None
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"switch_off_h must be an integer or 'none', not {self.switch_off_h!r}") from None

    def early_stopping(self):
        if self.early_stop == "auto":
            return self.experiment == "NnScratchSweep"
        return self.early_stop == "true"

    def to_text(self):
        """Canonical ``key = value`` text; round-trips through :func:`parse_config`."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(_fmt(x) for x in v)
            else:
                v = _fmt(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:12]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_FIELDS = {f.name: f for f in fields(SweepConfig)}
_INT_GRIDS = {"capacity_grid"}


def _parse_bool(key, v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {v!r}")


def _parse_grid(key, v):
    v = v.strip()
    if key in _INT_GRIDS and v.lower() == "auto":
        return ("auto",)
    out = []
    for item in v.split(","):
        item = item.strip()
        if not item:
            raise ConfigError(f"{key}: empty grid entry in {v!r}")
        try:
            if key in _INT_GRIDS and ":" in item:
                parts = [int(t) for t in item.split(":")]
                if len(parts) != 3 or parts[2] <= 0:
                    raise ValueError(item)
                out.extend(range(parts[0], parts[1] + 1, parts[2]))
            elif key in _INT_GRIDS:
                out.append(int(item))
            else:
                x = float(item)
                if not math.isfinite(x):
                    raise ValueError(item)
                out.append(x)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse grid entry {item!r}") from None
    return tuple(out)


def coerce(key, value):
    """Convert a raw string value for ``key`` to the field's type."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    try:
        if isinstance(default, tuple):
            return _parse_grid(key, value)
        if isinstance(default, bool):
            return _parse_bool(key, value)
        if isinstance(default, int):
            return int(value.strip())
        if isinstance(default, float):
            return float(value.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {type(default).__name__}") from None
    return value.strip()


def parse_pairs(lines, source="<config>"):
    """``key = value`` lines to a dict of raw strings, rejecting duplicates."""
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_config(text, source="<config>", overrides=None):
    """Build a SweepConfig from config text plus already-parsed overrides."""
    values = parse_pairs(text.splitlines(), source)
    values.update(overrides or {})
    try:
        return SweepConfig(**{k: coerce(k, v) for k, v in values.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path), overrides)


def with_overrides(cfg, **changes):
    return replace(cfg, **changes)
