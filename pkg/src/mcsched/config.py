"""Scenario configuration: generator, weights, thresholds, gamma and policy options."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .assurance import GammaTable
from .model import Thresholds
from .objectives import AssuranceScope, Weights
from .scheduling import Policy, RebalanceTrigger, Scheduler, Shape
from .simulator import ConfigError, GeneratorConfig

DEFAULT_RAW_WEIGHTS = (52.5, 42.5, 5.0)


def parse_weights(text: str) -> Weights:
    """Parse ``"52.5,42.5,5"`` into normalized :class:`Weights`."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated weights, got {len(parts)}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"weights must be numbers, got {text!r}") from None
    return Weights.normalized(*values)


def _check_keys(section: str, data, allowed: set[str]) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {', '.join(sorted(unknown))}")
    return data


@dataclass(frozen=True)
class PolicyOptions:
    shape: Shape = field(default_factory=Shape)
    rebalance_on: RebalanceTrigger = RebalanceTrigger.NODE_ADD
    assurance_scope: AssuranceScope = AssuranceScope.RT_ONLY
    max_moves: int = 100


@dataclass(frozen=True)
class ScenarioConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    raw_weights: tuple[float, float, float] = DEFAULT_RAW_WEIGHTS
    thresholds: Thresholds = field(default_factory=Thresholds)
    gamma: GammaTable = field(default_factory=GammaTable)
    policy: PolicyOptions = field(default_factory=PolicyOptions)

    @property
    def weights(self) -> Weights:
        return Weights.normalized(*self.raw_weights)

    def scheduler(self, policy: Policy, weights: Weights | None = None) -> Scheduler:
        return Scheduler(
            policy=policy,
            weights=weights if weights is not None else self.weights,
            thresholds=self.thresholds,
            gamma_table=self.gamma,
            shape=self.policy.shape,
            scope=self.policy.assurance_scope,
            rebalance_on=self.policy.rebalance_on,
            max_moves=self.policy.max_moves,
        )

    def to_dict(self) -> dict:
        g = self.gamma
        return {
            "generator": self.generator.to_dict(),
            "weights": list(self.raw_weights),
            "thresholds": {"theta_low": self.thresholds.theta_low, "theta_high": self.thresholds.theta_high},
            "gamma": {
                "all_limits": g.all_limits,
                "low_limits": g.low_limits,
                "high_limits": g.high_limits,
                "requests_only": g.requests_only,
            },
            "policy": {
                "shape": [list(p) for p in self.policy.shape.points],
                "rebalance_on": self.policy.rebalance_on.value,
                "assurance_scope": self.policy.assurance_scope.value,
                "max_moves": self.policy.max_moves,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        _check_keys("config", data, {"generator", "weights", "thresholds", "gamma", "policy"})
        try:
            gen = data.get("generator", {})
            if not isinstance(gen, dict):
                raise ConfigError("generator must be an object")
            generator = GeneratorConfig.from_dict(gen)
            raw = data.get("weights", list(DEFAULT_RAW_WEIGHTS))
            if not isinstance(raw, list) or len(raw) != 3:
                raise ConfigError("weights must be a list of 3 numbers")
            Weights.normalized(*raw)
            th = _check_keys("thresholds", data.get("thresholds", {}), {"theta_low", "theta_high"})
            gm = _check_keys("gamma", data.get("gamma", {}), {"all_limits", "low_limits", "high_limits", "requests_only"})
            po = _check_keys("policy", data.get("policy", {}), {"shape", "rebalance_on", "assurance_scope", "max_moves"})
            options = PolicyOptions(
                shape=Shape(tuple(tuple(p) for p in po["shape"])) if "shape" in po else Shape(),
                rebalance_on=RebalanceTrigger(po.get("rebalance_on", "node_add")),
                assurance_scope=AssuranceScope(po.get("assurance_scope", "rt_only")),
                max_moves=int(po.get("max_moves", 100)),
            )
            if options.max_moves < 0:
                raise ConfigError("max_moves must be >= 0")
            return cls(
                generator=generator,
                raw_weights=tuple(float(w) for w in raw),
                thresholds=Thresholds(**th),
                gamma=GammaTable(**gm),
                policy=options,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(data)
