"""JSON run configurations: parsing with key-path errors and a lossless round trip.

A configuration is an object with a non-empty ``scenarios`` list and optional
run-wide defaults::

    {
      "seed": 42,
      "replicates": 10000,
      "output": {"path": "results.csv", "format": "csv"},
      "scenarios": [
        {"id": "srs-k100",
         "population": {"mode": "person", "N": 100000, "theta": 1000, "k": 100},
         "design": {"kind": "srs", "m": 1000},
         "tracing": "acs",
         "temporal": "cross_sectional"}
      ]
    }

Scenario-level ``seed`` and ``replicates`` override the run-wide values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .design import ACS, POISSON, SRS, InitialDesign
from .errors import ConfigurationError
from .mc import NO_TRACING, TEMPORAL, PopulationSpec, Scenario
from .popgraph import DEFAULT_HOUSEHOLD_SIZES, MODES, SHRINK_RULES, TOPOLOGIES

FORMATS = ("csv", "json")
DEFAULT_REPLICATES = 10_000
DEFAULT_SEED = 0

_TOP_KEYS = {"seed", "replicates", "output", "scenarios"}
_OUTPUT_KEYS = {"path", "format"}
_SCENARIO_KEYS = {"id", "population", "design", "tracing", "temporal", "replicates", "seed", "freeze_population"}
_POPULATION_KEYS = {
    "mode", "N", "theta", "k", "setting", "size_dist", "edge_nodes_per_network", "topology", "shrink_rule",
}
_DESIGN_KEYS = {"kind", "m", "eta"}


@dataclass(frozen=True)
class RunConfig:
    scenarios: tuple[Scenario, ...]
    output_path: str | None = None
    output_format: str = "csv"
    seed: int = DEFAULT_SEED
    replicates: int = DEFAULT_REPLICATES
    metadata: dict = field(default_factory=dict, compare=False)


def _fail(path: str, msg: str):
    raise ConfigurationError(f"{path}: {msg}")


def _object(value, path: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    unknown = sorted(set(value) - allowed)
    if unknown:
        _fail(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return value


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be at least {minimum}")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _choice(value, path: str, options) -> str:
    if value not in options:
        _fail(path, f"expected one of {', '.join(map(str, options))}, got {value!r}")
    return value


def _population(doc, path: str) -> PopulationSpec:
    doc = _object(doc, path, _POPULATION_KEYS)
    for key in ("N", "theta"):
        if key not in doc:
            _fail(f"{path}.{key}", "required")
    N = _int(doc["N"], f"{path}.N", 1)
    theta = _int(doc["theta"], f"{path}.theta", 0)
    if theta > N:
        _fail(f"{path}.theta", f"{theta} exceeds N={N}")
    k = doc.get("k")
    setting = doc.get("setting")
    if (k is None) == (setting is None):
        _fail(path, "give exactly one of k and setting")
    if k is not None:
        k = _int(k, f"{path}.k", 1)
        if theta % k:
            _fail(f"{path}.k", f"{k} does not divide theta={theta}")
    if setting is not None and not isinstance(setting, str):
        _fail(f"{path}.setting", "expected a string")
    size_dist = doc.get("size_dist", list(DEFAULT_HOUSEHOLD_SIZES))
    if not isinstance(size_dist, list) or not size_dist:
        _fail(f"{path}.size_dist", "expected a non-empty list of probabilities")
    size_dist = tuple(_number(v, f"{path}.size_dist[{i}]") for i, v in enumerate(size_dist))
    if any(v < 0 for v in size_dist) or abs(sum(size_dist) - 1.0) > 1e-12:
        _fail(f"{path}.size_dist", "must be nonnegative and sum to 1")
    spec = PopulationSpec(
        mode=_choice(doc.get("mode", "person"), f"{path}.mode", MODES),
        N=N,
        theta=theta,
        k=k,
        setting=setting,
        size_dist=size_dist,
        edge_nodes_per_network=_int(doc.get("edge_nodes_per_network", 0), f"{path}.edge_nodes_per_network", 0),
        topology=_choice(doc.get("topology", "star"), f"{path}.topology", TOPOLOGIES),
        shrink_rule=_choice(doc.get("shrink_rule", "uniform"), f"{path}.shrink_rule", SHRINK_RULES),
    )
    try:
        spec.validate()
    except ConfigurationError as exc:
        _fail(path, str(exc))
    return spec


def _design(doc, path: str, pop: PopulationSpec) -> InitialDesign:
    doc = _object(doc, path, _DESIGN_KEYS)
    if "m" not in doc:
        _fail(f"{path}.m", "required")
    kind = _choice(doc.get("kind", SRS), f"{path}.kind", (SRS, POISSON))
    m = _int(doc["m"], f"{path}.m", 0)
    if m > pop.N:
        _fail(f"{path}.m", f"initial sample size {m} exceeds N={pop.N}")
    eta = _number(doc.get("eta", 1.0), f"{path}.eta")
    if eta < 1:
        _fail(f"{path}.eta", "must be at least 1")
    if kind == SRS and eta != 1.0:
        _fail(f"{path}.eta", "size bias applies to Poisson sampling only")
    return InitialDesign(kind, m, eta)


def _scenario(doc, path: str, seed: int, replicates: int) -> Scenario:
    doc = _object(doc, path, _SCENARIO_KEYS)
    for key in ("id", "population", "design"):
        if key not in doc:
            _fail(f"{path}.{key}", "required")
    if not isinstance(doc["id"], str) or not doc["id"]:
        _fail(f"{path}.id", "expected a non-empty string")
    pop = _population(doc["population"], f"{path}.population")
    design = _design(doc["design"], f"{path}.design", pop)
    freeze = doc.get("freeze_population", False)
    if not isinstance(freeze, bool):
        _fail(f"{path}.freeze_population", "expected true or false")
    sc = Scenario(
        id=doc["id"],
        population=pop,
        design=design,
        tracing=_choice(doc.get("tracing", ACS), f"{path}.tracing", (ACS, NO_TRACING)),
        temporal=_choice(doc.get("temporal", "cross_sectional"), f"{path}.temporal", TEMPORAL),
        replicates=_int(doc.get("replicates", replicates), f"{path}.replicates", 1),
        seed=_int(doc.get("seed", seed), f"{path}.seed", 0),
        freeze_population=freeze,
    )
    try:
        sc.validate()
    except ConfigurationError as exc:
        _fail(path, str(exc))
    return sc


def parse_config(doc: dict[str, Any]) -> RunConfig:
    """Validate a configuration document and build the scenarios it describes."""
    doc = _object(doc, "", _TOP_KEYS)
    seed = _int(doc.get("seed", DEFAULT_SEED), "seed", 0)
    replicates = _int(doc.get("replicates", DEFAULT_REPLICATES), "replicates", 1)
    out = _object(doc.get("output", {}), "output", _OUTPUT_KEYS)
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        _fail("output.path", "expected a string")
    fmt = _choice(out.get("format", "csv"), "output.format", FORMATS)
    items = doc.get("scenarios")
    if not isinstance(items, list):
        _fail("scenarios", "expected a list")
    if not items:
        _fail("scenarios", "at least one scenario is required")
    scenarios = tuple(_scenario(item, f"scenarios[{i}]", seed, replicates) for i, item in enumerate(items))
    seen: set[str] = set()
    for i, sc in enumerate(scenarios):
        if sc.id in seen:
            _fail(f"scenarios[{i}].id", f"duplicate id {sc.id!r}")
        seen.add(sc.id)
    return RunConfig(scenarios, path, fmt, seed, replicates)


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)


def scenario_to_dict(sc: Scenario) -> dict:
    p = sc.population
    pop = {"mode": p.mode, "N": p.N, "theta": p.theta}
    if p.k is not None:
        pop["k"] = p.k
    else:
        pop["setting"] = p.setting
    pop.update(
        size_dist=list(p.size_dist),
        edge_nodes_per_network=p.edge_nodes_per_network,
        topology=p.topology,
        shrink_rule=p.shrink_rule,
    )
    return {
        "id": sc.id,
        "population": pop,
        "design": {"kind": sc.design.kind, "m": sc.design.m, "eta": sc.design.eta},
        "tracing": sc.tracing,
        "temporal": sc.temporal,
        "replicates": sc.replicates,
        "seed": sc.seed,
        "freeze_population": sc.freeze_population,
    }


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of :func:`parse_config`; every scenario is written out in full."""
    out: dict = {"seed": cfg.seed, "replicates": cfg.replicates}
    output = {"format": cfg.output_format}
    if cfg.output_path is not None:
        output["path"] = cfg.output_path
    out["output"] = output
    out["scenarios"] = [scenario_to_dict(sc) for sc in cfg.scenarios]
    return out
