"""Run configuration: a flat ``key = value`` text format plus flag overrides.

The schema is documented in ``docs/config.md``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .exceptions import HadamardError
from .manifolds import manifold_from_spec

__all__ = [
    "ConfigError",
    "RunConfig",
    "SUBCOMMANDS",
    "parse_config_text",
    "parse_config",
    "emit_config",
    "merge_config",
]

SUBCOMMANDS = ("karcher", "online", "minmax", "geomtest")
SUBSOLVERS = ("prgd", "crgd", "rgd")


class ConfigError(HadamardError, ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    manifold: str | None = None
    n: int = 10
    iters: int | None = None
    epsilon: float | None = None
    eta: float | None = None
    lam: float | None = None
    mu: float = 0.0
    rbar: float = 0.01
    seed: int = 0
    out: str = "out"
    gap_cadence: int = 10
    subsolver: str = "prgd"
    inner_steps: int | None = None
    paper_scale: bool = False
    timing: bool = False
    plot: bool = True


# file key -> field name, where they differ
_ALIASES = {"lambda": "lam"}
_KEYS = {f.name: f for f in fields(RunConfig)}
_FILE_NAMES = {v: k for k, v in _ALIASES.items()}


def _type_of(f):
    t = str(f.type)
    for name, conv in (("bool", bool), ("int", int), ("float", float), ("str", str)):
        if t.startswith(name):
            return conv
    raise TypeError(f"unsupported field type {t}")


def _convert(name, raw, where):
    f = _KEYS[name]
    conv = _type_of(f)
    text = raw.strip()
    if text.lower() in ("", "none", "null") and "None" in str(f.type):
        return None
    try:
        if conv is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if conv is int:
            return int(text)
        if conv is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}: field '{_FILE_NAMES.get(name, name)}' expects {conv.__name__}, got {raw.strip()!r}") from None


def _read_pairs(text, source):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, val = body.partition("=")
        where = f"{source}:{lineno}"
        if not sep:
            raise ConfigError(f"{where}: expected 'key = value', got {line.strip()!r}")
        key = key.strip().replace("-", "_")
        name = _ALIASES.get(key, key)
        if name not in _KEYS:
            known = ", ".join(sorted(_FILE_NAMES.get(k, k) for k in _KEYS))
            raise ConfigError(f"{where}: unknown key {key!r} (known keys: {known})")
        if name in out:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        out[name] = _convert(name, val, where)
    return out


def validate(cfg, source="config"):
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"{source}: field 'subcommand' must be one of {SUBCOMMANDS}, got {cfg.subcommand!r}")
    if cfg.subcommand != "geomtest":
        if not cfg.manifold:
            raise ConfigError(f"{source}: missing required field 'manifold' (e.g. spd:5)")
        if ":" not in cfg.manifold or not cfg.manifold.split(":", 1)[0].strip():
            raise ConfigError(f"{source}: field 'manifold' needs a kind, e.g. hyperbolic:50, got {cfg.manifold!r}")
        try:
            manifold_from_spec(cfg.manifold)
        except HadamardError as err:
            raise ConfigError(f"{source}: field 'manifold': {err}") from None
    for name in ("n", "iters", "gap_cadence", "inner_steps"):
        v = getattr(cfg, name)
        if v is not None and v < (0 if name == "gap_cadence" else 1):
            raise ConfigError(f"{source}: field '{name}' must be a positive count, got {v}")
    for name in ("epsilon", "eta", "lam", "rbar"):
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ConfigError(f"{source}: field '{_FILE_NAMES.get(name, name)}' must be positive, got {v}")
    if cfg.mu < 0:
        raise ConfigError(f"{source}: field 'mu' must be nonnegative")
    if cfg.seed < 0:
        raise ConfigError(f"{source}: field 'seed' must be nonnegative")
    if cfg.subsolver not in SUBSOLVERS:
        raise ConfigError(f"{source}: field 'subsolver' must be one of {SUBSOLVERS}, got {cfg.subsolver!r}")
    return cfg


def merge_config(file_values, flag_values, source="config"):
    """Flags (non-``None`` entries) override file values; the result is validated."""
    vals = dict(file_values)
    vals.update({k: v for k, v in flag_values.items() if v is not None})
    if "subcommand" not in vals:
        raise ConfigError(f"{source}: missing required field 'subcommand' (one of {SUBCOMMANDS})")
    return validate(RunConfig(**vals), source)


def parse_config_text(text, source="<string>"):
    return merge_config(_read_pairs(text, source), {}, source)


def read_config_values(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err.strerror}") from None
    return _read_pairs(text, path)


def parse_config(path):
    return merge_config(read_config_values(path), {}, path)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg):
    """Text form of ``cfg``; parsing it back gives an equal config."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{_FILE_NAMES.get(f.name, f.name)} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def replace(cfg, **changes):
    return validate(dataclasses.replace(cfg, **changes))
