"""JSON instance files.

Numbers may be JSON numbers or strings such as ``"3/4"``, ``"0.25"`` or
``"inf"`` (costs only).  Floats are read by their decimal representation;
a probability row (or the weight vector) containing floats may miss 1 by at
most ``1e-12`` and is then rescaled to sum to exactly 1.  Exact inputs must
sum to exactly 1.  Saving writes every number as an exact string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .errors import InstanceError
from .model import INF, AgentType, Contract, Rewards, TypeDistribution, as_rewards

FLOAT_TOL = Fraction(1, 10**12)


@dataclass(frozen=True)
class InstanceFile:
    rewards: Rewards
    types: tuple[AgentType, ...]
    weights: tuple[Fraction, ...] | None = None
    thresholds: tuple[Fraction, ...] | None = None
    contracts: tuple[Contract, ...] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def distribution(self) -> TypeDistribution:
        """The weighted types, or the uniform distribution when no weights are given."""
        if self.weights is None:
            return TypeDistribution.uniform(self.types)
        return TypeDistribution(self.types, self.weights)


def _number(x, where: str, allow_inf: bool = False) -> tuple[Fraction | float, bool]:
    """Parse one number; the flag reports whether it came from a float."""
    if isinstance(x, bool):
        raise InstanceError(f"{where}: booleans are not numbers")
    if isinstance(x, int):
        return Fraction(x), False
    if isinstance(x, float):
        if x == INF and allow_inf:
            return INF, True
        if x != x or x in (INF, -INF):
            raise InstanceError(f"{where}: {x} is not allowed")
        return Fraction(repr(x)), True
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            if not allow_inf:
                raise InstanceError(f"{where}: inf is only allowed for costs")
            return INF, False
        try:
            return Fraction(s), False
        except ValueError:
            raise InstanceError(f"{where}: cannot parse {x!r}") from None
    raise InstanceError(f"{where}: expected a number, got {type(x).__name__}")


def _numbers(xs, where: str) -> tuple[list[Fraction], bool]:
    if not isinstance(xs, list):
        raise InstanceError(f"{where}: expected a list")
    out, lossy = [], False
    for k, x in enumerate(xs):
        v, f = _number(x, f"{where}[{k}]")
        out.append(v)
        lossy |= f
    return out, lossy


def _stochastic(xs, where: str) -> tuple[Fraction, ...]:
    vals, lossy = _numbers(xs, where)
    total = sum(vals, Fraction(0))
    if lossy and total != 1:
        if abs(total - 1) > FLOAT_TOL or total <= 0:
            raise InstanceError(f"{where}: sums to {float(total)}, more than 1e-12 from 1")
        vals = [v / total for v in vals]
    return tuple(vals)


def from_dict(data: dict) -> InstanceFile:
    if not isinstance(data, dict):
        raise InstanceError("top level must be an object")
    for key in ("rewards", "types"):
        if key not in data:
            raise InstanceError(f"missing field {key!r}")
    try:
        rewards = Rewards(tuple(_numbers(data["rewards"], "rewards")[0]))
        if not isinstance(data["types"], list):
            raise InstanceError("types: expected a list")
        types = []
        for k, entry in enumerate(data["types"]):
            where = f"types[{k}]"
            if not isinstance(entry, dict) or "f" not in entry or "c" not in entry:
                raise InstanceError(f"{where}: expected an object with 'f' and 'c'")
            if not isinstance(entry["f"], list) or not isinstance(entry["c"], list):
                raise InstanceError(f"{where}: 'f' and 'c' must be lists")
            f = tuple(_stochastic(row, f"{where}.f[{i}]") for i, row in enumerate(entry["f"]))
            c = tuple(_number(x, f"{where}.c[{i}]", allow_inf=True)[0] for i, x in enumerate(entry["c"]))
            theta = AgentType(f, c)
            if theta.m != rewards.m:
                raise InstanceError(f"{where}: {theta.m} outcomes but {rewards.m} rewards")
            types.append(theta)
        weights = thresholds = contracts = None
        if data.get("weights") is not None:
            weights = _stochastic(data["weights"], "weights")
            TypeDistribution(tuple(types), weights)
        if data.get("thresholds") is not None:
            thresholds = tuple(_numbers(data["thresholds"], "thresholds")[0])
            if len(thresholds) != len(types):
                raise InstanceError("thresholds: one per type is required")
        if data.get("contracts") is not None:
            if not isinstance(data["contracts"], list):
                raise InstanceError("contracts: expected a list")
            contracts = tuple(
                Contract(_numbers(t, f"contracts[{k}]")[0]) for k, t in enumerate(data["contracts"])
            )
            if any(len(t) != rewards.m for t in contracts):
                raise InstanceError("contracts: every contract needs one payment per outcome")
        meta = data.get("meta", {})
        if not isinstance(meta, dict):
            raise InstanceError("meta: expected an object")
    except InstanceError:
        raise
    except (ValueError, TypeError) as exc:
        raise InstanceError(str(exc)) from exc
    return InstanceFile(rewards, tuple(types), weights, thresholds, contracts, dict(meta))


def _s(x) -> str:
    return "inf" if x == INF else str(x)


def to_dict(inst: InstanceFile) -> dict:
    out: dict[str, Any] = {
        "rewards": [_s(v) for v in inst.rewards.values],
        "types": [{"f": [[_s(p) for p in row] for row in th.f], "c": [_s(x) for x in th.c]} for th in inst.types],
    }
    if inst.weights is not None:
        out["weights"] = [_s(w) for w in inst.weights]
    if inst.thresholds is not None:
        out["thresholds"] = [_s(x) for x in inst.thresholds]
    if inst.contracts is not None:
        out["contracts"] = [[_s(p) for p in t] for t in inst.contracts]
    if inst.meta:
        out["meta"] = inst.meta
    return out


def loads(text: str) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from exc
    return from_dict(data)


def dumps(inst: InstanceFile) -> str:
    return json.dumps(to_dict(inst), indent=2) + "\n"


def load(path) -> InstanceFile:
    return loads(Path(path).read_text())


def save(inst: InstanceFile, path) -> None:
    Path(path).write_text(dumps(inst))


def from_distribution(D: TypeDistribution, r, meta: dict | None = None) -> InstanceFile:
    return InstanceFile(as_rewards(r), D.support, D.weights, meta=dict(meta or {}))


def from_types(types: Sequence[AgentType], r, meta: dict | None = None) -> InstanceFile:
    return InstanceFile(as_rewards(r), tuple(types), meta=dict(meta or {}))
