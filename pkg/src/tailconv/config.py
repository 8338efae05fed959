"""JSON configuration for tail models, summand sequences and counting laws.

Schema (all keys lower-case)::

    model     = {"family": <name>, "params": {<name>: <value>, ...}}
    value     = number | list | {"index": c, "offset": o[, "over": n]}
                (an index expression ``c*i + o`` or ``n / (c*i + o)``;
                only allowed inside sequence rules)
    predicate = {"type": "index_in_range", "lo": int, "hi": int | null}
              | {"type": "index_is_perfect_square", "offset": int, "min_root": int}
              | "otherwise"
    sequence  = {"rules": [{"predicate": predicate, "family": ..., "params": ...}, ...],
                 "otherwise": model}      # "otherwise" may instead be the last rule
    counting  = {"family": "Degenerate" | "UniformRange" | "Poisson" | "Geometric" | "Table",
                 "params": {...}}

A run configuration is an object with ``"model"`` or ``"sequence"`` (a bare
model means an iid sequence), optionally ``"counting"`` and the integers
``"kappa"``, ``"D"`` and ``"n"``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dist_core import (
    COUNTING_FAMILIES,
    FAMILIES,
    CountingDist,
    FamilyTemplate,
    IndexExpr,
    IndexInRange,
    IndexIsPerfectSquare,
    Otherwise,
    SequenceSpec,
    TailModel,
    make_model,
)

__all__ = ["ConfigError", "RunConfig", "parse_model", "parse_sequence", "parse_counting", "parse_config",
           "load_config", "config_hash", "canonical_json"]


class ConfigError(ValueError):
    """A configuration that does not match the schema; the message names the offending field."""


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj: Any) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def _need(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise ConfigError(f"{where}: missing field {key!r}")
    return obj[key]


def _family_params(obj: Any, where: str, registry: dict) -> tuple[str, dict]:
    family = _need(obj, "family", where)
    if family not in registry:
        raise ConfigError(f"{where}.family: unknown family {family!r}; expected one of {sorted(registry)}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params: expected an object")
    return family, params


def _is_index_expr(v: Any) -> bool:
    return isinstance(v, dict) and "index" in v


def parse_model(obj: Any, where: str = "model") -> TailModel:
    family, params = _family_params(obj, where, FAMILIES)
    for k, v in params.items():
        if _is_index_expr(v):
            raise ConfigError(f"{where}.params.{k}: index expressions are only allowed in sequence rules")
    try:
        return make_model(family, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_predicate(obj: Any, where: str):
    if obj == "otherwise":
        return Otherwise()
    kind = _need(obj, "type", where)
    try:
        if kind == "index_in_range":
            return IndexInRange(int(_need(obj, "lo", where)), None if obj.get("hi") is None else int(obj["hi"]))
        if kind == "index_is_perfect_square":
            return IndexIsPerfectSquare(int(obj.get("offset", 0)), int(obj.get("min_root", 2)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.type: unknown predicate {kind!r}")


def _parse_template(obj: Any, where: str):
    family, params = _family_params(obj, where, FAMILIES)
    if not any(_is_index_expr(v) for v in params.values()):
        return parse_model({"family": family, "params": params}, where)
    resolved = {}
    for k, v in params.items():
        if _is_index_expr(v):
            extra = set(v) - {"index", "offset", "over"}
            if extra:
                raise ConfigError(f"{where}.params.{k}: unknown key(s) {sorted(extra)}")
            try:
                resolved[k] = IndexExpr(float(v["index"]), float(v.get("offset", 0.0)),
                                        None if v.get("over") is None else float(v["over"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where}.params.{k}: {exc}") from None
        else:
            resolved[k] = v
    try:
        return FamilyTemplate(family, resolved)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_sequence(obj: Any, where: str = "sequence") -> SequenceSpec:
    rules_raw = _need(obj, "rules", where)
    if not isinstance(rules_raw, list):
        raise ConfigError(f"{where}.rules: expected a list")
    rules = []
    for i, r in enumerate(rules_raw):
        loc = f"{where}.rules[{i}]"
        rules.append((_parse_predicate(_need(r, "predicate", loc), loc + ".predicate"), _parse_template(r, loc)))
    if "otherwise" in obj:
        if rules and isinstance(rules[-1][0], Otherwise):
            raise ConfigError(f"{where}: both a final 'otherwise' rule and an 'otherwise' field")
        rules.append((Otherwise(), _parse_template(obj["otherwise"], where + ".otherwise")))
    try:
        spec = SequenceSpec(tuple(rules))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    # surface parameter errors now rather than at first use: resolve a prefix of indices
    for i in range(1, 257):
        try:
            spec.resolve(i)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: index {i}: {exc}") from None
    return spec


def parse_counting(obj: Any, where: str = "counting") -> CountingDist:
    family, params = _family_params(obj, where, COUNTING_FAMILIES)
    kw = dict(params)
    if family == "Table":
        if "pmf" not in kw:
            raise ConfigError(f"{where}.params: missing field 'pmf'")
        kw = {"pmf_values": tuple(float(p) for p in kw.pop("pmf")), **kw}
    try:
        return COUNTING_FAMILIES[family](**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    spec: SequenceSpec
    counting: CountingDist | None = None
    model: TailModel | None = None
    kappa: int | None = None
    D: int | None = None
    n: int | None = None
    raw: dict[str, Any] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def first_model(self) -> TailModel:
        return self.model if self.model is not None else self.spec.resolve(1)


def parse_config(obj: Any) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    known = {"model", "sequence", "counting", "kappa", "D", "n", "comment"}
    extra = set(obj) - known
    if extra:
        raise ConfigError(f"config: unknown field(s) {sorted(extra)}")
    model = parse_model(obj["model"]) if "model" in obj else None
    if "sequence" in obj:
        spec = parse_sequence(obj["sequence"])
    elif model is not None:
        spec = SequenceSpec.iid(model)
    else:
        raise ConfigError("config: needs a 'model' or a 'sequence' field")
    counting = parse_counting(obj["counting"]) if "counting" in obj else None
    ints = {}
    for key in ("kappa", "D", "n"):
        if key in obj:
            v = obj[key]
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"config.{key}: expected an integer")
            ints[key] = v
    return RunConfig(spec, counting, model, raw=obj, **ints)


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a JSON config; syntax errors report line and column."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(obj)
