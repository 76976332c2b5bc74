"""Plain-text experiment configs.

A config is an INI file with one ``[experiment]`` section::

    [experiment]
    kind = eq
    profile = 3,3
    exact = true

Keys allowed for each kind are listed in ``SCHEMA``; anything else is an
error.  ``seed`` and ``budget`` are accepted by every kind.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Profile


class ConfigError(ValueError):
    pass


def _int(v: str) -> int:
    return int(v)


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _ints(v: str) -> tuple:
    parts = [p.strip() for p in v.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(int(p) for p in parts)


def _fracs(v: str) -> tuple:
    parts = [p.strip() for p in v.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(Fraction(p) for p in parts)


def _profile(v: str) -> Profile:
    return Profile.parse(v)


def _choice(*options):
    def parse(v: str) -> str:
        v = v.strip()
        if v not in options:
            raise ValueError(f"{v!r} not one of {', '.join(options)}")
        return v
    return parse


def _str(v: str) -> str:
    return v.strip()


COMMON = {"seed": _int, "budget": _int}

SCHEMA = {
    "eq": {"profile": _profile, "exact": _bool, "bruteforce": _bool, "greedy": _bool, "bounds": _bool,
           "node_budget": _int, "workers": _int},
    "relabel": {"tree": _str, "family": _str, "depth": _int, "width": _int, "extra": _int},
    "witness": {"instance": _choice("lattice", "sym", "blocked", "torus", "banach"),
                "m": _int, "n": _int, "sizes": _ints, "blocks": _ints, "bits": _int,
                "grade": _int, "dims": _ints, "deltas": _fracs, "samples": _int,
                "corrupt": _choice("none", "enlarged", "literal", "noninjective"),
                "family": _choice("minimal", "even")},
    "homeo": {"window": _int, "depth": _int, "branch": _ints, "p0": _fracs},
    "compress": {"instance": _choice("shipped"), "sizes": _ints, "pieces": _str, "grade": _int},
    "rearrange": {"instance": _choice("halves", "quarters"), "sizes": _ints, "pieces": _str},
}

REQUIRED = {
    "eq": ("profile",),
    "witness": ("instance",),
    "homeo": ("window", "depth", "branch"),
}


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Profile):
        return ",".join(map(str, value.sizes))
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def build(cls, kind: str, raw: dict) -> "ExperimentConfig":
        """Validate string-valued ``raw`` and return a typed config."""
        if kind not in SCHEMA:
            raise ConfigError(f"unknown kind {kind!r}")
        allowed = {**SCHEMA[kind], **COMMON}
        unknown = sorted(set(raw) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown keys for {kind}: {', '.join(unknown)}")
        params = {}
        for key, text in raw.items():
            if text is None:
                continue
            try:
                params[key] = allowed[key](str(text))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        missing = [k for k in REQUIRED.get(kind, ()) if k not in params]
        if missing:
            raise ConfigError(f"{kind} needs {', '.join(missing)}")
        return cls(kind, params)

    def get(self, key, default=None):
        return self.params.get(key, default)

    def as_strings(self) -> dict:
        return {k: _render(v) for k, v in sorted(self.params.items())}

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["experiment"] = {"kind": self.kind, **self.as_strings()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        extra = [s for s in cp.sections() if s != "experiment"]
        if extra or "experiment" not in cp:
            raise ConfigError("config needs exactly one [experiment] section")
        raw = dict(cp["experiment"])
        kind = raw.pop("kind", None)
        if kind is None:
            raise ConfigError("config needs a kind")
        return cls.build(kind, raw)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.as_strings()}

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        return cls.build(data["kind"], dict(data.get("params", {})))

    def digest(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


MODEL_KEYS = {"kind", "sizes", "points", "bits", "depth", "grade"}


def load_model_config(text: str):
    """``[model]`` section: ``kind`` is cyclic (``sizes``), symmetric
    (``points``) or dyadic (``bits``); optional ``depth`` and ``grade``.
    Returns ``(GroupModel, grade)``; grade defaults to ``depth - 1``."""
    from .model import GroupModel

    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if "model" not in cp:
        raise ConfigError("missing [model] section")
    raw = dict(cp["model"])
    unknown = sorted(set(raw) - MODEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown model keys: {', '.join(unknown)}")
    try:
        depth = int(raw["depth"]) if "depth" in raw else None
        kind = raw.get("kind")
        if kind == "cyclic":
            model = GroupModel.cyclic_product(_ints(raw["sizes"]), depth)
        elif kind == "symmetric":
            model = GroupModel.symmetric(int(raw["points"]), depth)
        elif kind == "dyadic":
            model = GroupModel.dyadic(int(raw["bits"]), depth)
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
        grade = int(raw["grade"]) if "grade" in raw else max(model.depth - 1, 0)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad model config: {exc}") from None
    if model.depth and not 0 <= grade < model.depth:
        raise ConfigError(f"grade {grade} must lie below depth {model.depth}")
    return model, grade
