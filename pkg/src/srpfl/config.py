"""Flat key=value run configuration files.

One ``key = value`` pair per line, ``#`` comments, unknown keys
rejected.  Times are abstract time units, rates are per time unit.
``eta``, ``a`` and ``epsilon`` accept the literal ``auto`` to let the
engine derive them with oracle access to the ground truth.
"""

from .engine import RunConfig
from .errors import ConfigError

_AUTO = ("auto", "none", "")


def _as_int(key, text):
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: expected an integer, got {text!r}") from exc


def _as_float(key, text):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: expected a number, got {text!r}") from exc


def _as_optional_float(key, text):
    if text.lower() in _AUTO:
        return None
    return _as_float(key, text)


def _as_str(key, text):
    return text


# key -> (parser, required)
_SCHEMA = {
    "d": (_as_int, True),
    "k": (_as_int, True),
    "N": (_as_int, True),
    "n0": (_as_int, True),
    "m": (_as_int, True),
    "sigma": (_as_float, True),
    "M": (_as_int, False),
    "eta": (_as_optional_float, False),
    "a": (_as_optional_float, False),
    "epsilon": (_as_optional_float, False),
    "c_hat": (_as_float, False),
    "algorithm": (_as_str, False),
    "plan_mode": (_as_str, False),
    "fixed_rounds": (_as_int, False),
    "init_mode": (_as_str, False),
    "speed_kind": (_as_str, False),
    "lam": (_as_float, False),
    "comm_cost": (_as_float, False),
    "resample_scope": (_as_str, False),
    "seed": (_as_int, False),
    "sweep_seeds": (_as_int, False),
    "max_rounds": (_as_int, False),
}

# config-file key -> RunConfig field, where the names differ
_FIELD_NAME = {"N": "n_total", "M": "n_clients"}


def parse_pairs(lines, source="<config>"):
    """Raw key -> string-value mapping from config-file lines."""
    pairs = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown field {key!r}")
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate field {key!r}")
        pairs[key] = value.strip()
    return pairs


def build_config(pairs):
    """Typed, validated RunConfig from raw key -> string pairs."""
    missing = [k for k, (_, required) in _SCHEMA.items() if required and k not in pairs]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")
    kwargs = {}
    for key, text in pairs.items():
        parser, _ = _SCHEMA[key]
        kwargs[_FIELD_NAME.get(key, key)] = parser(key, text)
    config = RunConfig(**kwargs)
    config.validate()
    return config


def apply_overrides(pairs, overrides):
    """Merge --override key=value pairs (and validate the keys)."""
    merged = dict(pairs)
    for item in overrides:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        if key not in _SCHEMA:
            raise ConfigError(f"override names unknown field {key!r}")
        merged[key] = value.strip()
    return merged


def load_config(path, overrides=(), seed=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            pairs = parse_pairs(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    pairs = apply_overrides(pairs, overrides)
    if seed is not None:
        pairs["seed"] = str(seed)
    return build_config(pairs)
