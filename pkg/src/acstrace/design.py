"""Initial sampling designs and adaptive network tracing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, DesignError
from .popgraph import PopulationGraph, as_seed_sequence

SRS = "srs"
POISSON = "poisson"
ACS = "acs"
DACS = "dacs"
QASBS = "qasbs"

NETWORK_CASE = "network_case"
EDGE_UNIT = "edge_unit"
OTHER_INITIAL = "other_initial"


@dataclass(frozen=True)
class InitialDesign:
    """Initial sample ``s0``: SRS of size ``m`` or size-biased Poisson sampling.

    Under Poisson sampling a case is ``eta`` times as likely to be selected as a
    noncase, with the noncase probability scaled so that the expected sample
    size is ``m``.
    """

    kind: str = SRS
    m: int = 1
    eta: float = 1

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta))
        if self.kind not in (SRS, POISSON):
            raise ConfigurationError(f"unknown initial design {self.kind!r}")
        if self.m < 0:
            raise ConfigurationError("m must be nonnegative")
        if self.kind == SRS and self.eta != 1:
            raise ConfigurationError("SRS has eta = 1")
        if self.eta < 1:
            raise ConfigurationError("eta must be at least 1")

    def validate(self, pop: PopulationGraph) -> None:
        if self.m > pop.N:
            raise ConfigurationError(f"m={self.m} exceeds N={pop.N}")
        if self.kind == POISSON:
            p_non, p_case = self.poisson_rates(pop)
            if p_case > 1:
                raise ConfigurationError("size-biased case probability exceeds 1")

    def poisson_rates(self, pop: PopulationGraph, exact: bool = False):
        """``(p_non, p_case)`` solving ``m = theta_units*eta*p + (N - theta_units)*p``."""
        n_cases = pop.n_case_units
        if exact:
            eta = Fraction(self.eta)
            p_non = Fraction(self.m) / (pop.N + (eta - 1) * n_cases)
            return p_non, eta * p_non
        p_non = self.m / (pop.N + (self.eta - 1) * n_cases)
        return p_non, self.eta * p_non

    def unit_probabilities(self, pop: PopulationGraph, exact: bool = False):
        """First-order inclusion probability of every unit in ``s0``.

        Returns a float array, or a list of Fractions when ``exact``.
        """
        self.validate(pop)
        if self.kind == SRS:
            p = Fraction(self.m, pop.N) if exact else self.m / pop.N
            return [p] * pop.N if exact else np.full(pop.N, p)
        p_non, p_case = self.poisson_rates(pop, exact)
        if exact:
            return [p_case if y > 0 else p_non for y in pop.y.tolist()]
        return np.where(pop.y > 0, p_case, p_non)


def draw_initial(design: InitialDesign, pop: PopulationGraph, rng_seed=None) -> np.ndarray:
    """Draw the initial sample; returns sorted unit ids."""
    design.validate(pop)
    rng = np.random.default_rng(as_seed_sequence(rng_seed))
    if design.kind == SRS:
        return np.sort(rng.choice(pop.N, size=design.m, replace=False))
    p = design.unit_probabilities(pop)
    return np.flatnonzero(rng.random(pop.N) < p)


@dataclass(frozen=True)
class TracingDesign:
    """How contacts are traced from the cases in the sample.

    ``acs`` traces every contact of every sampled case until no new units
    appear.  ``dacs`` only follows edges whose strength exceeds ``psi0``.
    ``qasbs`` stops after ``q`` waves; combined with ``psi0`` and strengths it
    also applies the edge threshold.  Edges missing from ``edge_strengths`` are
    never followed when a threshold applies.
    """

    kind: str = ACS
    psi0: float | None = None
    q: int | None = None
    edge_strengths: Mapping[tuple[int, int], float] | None = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        if self.kind not in (ACS, DACS, QASBS):
            raise ConfigurationError(f"unknown tracing design {self.kind!r}")
        if self.kind == DACS and (self.edge_strengths is None or self.psi0 is None):
            raise ConfigurationError("DACS needs edge strengths and a threshold psi0")
        if self.kind == QASBS and (self.q is None or self.q < 0):
            raise ConfigurationError("qASBS needs a wave limit q >= 0")
        if self.edge_strengths is not None:
            norm = {(min(i, j), max(i, j)): float(v) for (i, j), v in self.edge_strengths.items()}
            object.__setattr__(self, "edge_strengths", norm)

    @property
    def thresholded(self) -> bool:
        return self.psi0 is not None and self.edge_strengths is not None

    def eligible(self, pop: PopulationGraph, i: int) -> Iterable[int]:
        nb = pop.neighbors(i).tolist()
        if not self.thresholded:
            return nb
        strengths = self.edge_strengths
        return [j for j in nb if strengths.get((min(i, j), max(i, j)), -np.inf) > self.psi0]


@dataclass(frozen=True)
class TraceSample:
    """Initial sample, wave samples and the final sample with unit tags."""

    s0: tuple[int, ...]
    waves: tuple[tuple[int, ...], ...]
    final: tuple[int, ...]
    tags: Mapping[int, str]
    fully_observed: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.final)

    def to_json(self) -> str:
        doc = {
            "s0": list(self.s0),
            "waves": [list(w) for w in self.waves],
            "final": list(self.final),
            "tags": {str(i): self.tags[i] for i in self.final},
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "TraceSample":
        doc = json.loads(text)
        tags = {int(i): t for i, t in doc["tags"].items()}
        return cls(
            s0=tuple(doc["s0"]),
            waves=tuple(tuple(w) for w in doc["waves"]),
            final=tuple(doc["final"]),
            tags=tags,
        )


def _tags(pop: PopulationGraph, s0: set, final: Iterable[int]) -> dict[int, str]:
    final = list(final)
    sampled_nets = {int(pop.network_of[i]) for i in final if pop.y[i] > 0}
    tags = {}
    for i in final:
        if pop.y[i] > 0:
            tags[i] = NETWORK_CASE
            continue
        nb = pop.network_of[pop.neighbors(i)]
        if any(int(n) in sampled_nets for n in nb[nb >= 0]):
            tags[i] = EDGE_UNIT
        elif i in s0:
            tags[i] = OTHER_INITIAL
        else:
            raise DesignError(f"unit {i} is neither initial nor adjacent to a sampled network")
    return tags


def trace(pop: PopulationGraph, s0: Iterable[int], tracing: TracingDesign = TracingDesign()) -> TraceSample:
    """Adaptive network tracing from ``s0``.

    Each wave holds the not-yet-sampled contacts of the cases found in the
    previous wave (or in ``s0`` for the first wave).  Noncases are never traced.
    Under ACS and DACS tracing runs until a wave comes back empty, and that empty
    wave is kept as the last entry of ``waves``.
    """
    s0 = sorted({int(i) for i in s0})
    if s0 and (s0[0] < 0 or s0[-1] >= pop.N):
        raise DesignError("initial sample contains ids outside the population")
    y = pop.y
    sampled = set(s0)
    frontier = [i for i in s0 if y[i] > 0]
    waves: list[tuple[int, ...]] = []
    while not (tracing.kind == QASBS and len(waves) == tracing.q):
        new = set()
        for i in frontier:
            new.update(j for j in tracing.eligible(pop, i) if j not in sampled)
        waves.append(tuple(sorted(new)))
        if not new:
            break
        sampled |= new
        frontier = [j for j in new if y[j] > 0]
    final = tuple(sorted(sampled))
    tags = _tags(pop, set(s0), final)
    nets = {int(pop.network_of[i]) for i in final if y[i] > 0}
    complete = [n for n in nets if sampled.issuperset(pop.networks[n].tolist())]
    fully = tuple(sorted(int(i) for n in complete for i in pop.networks[n]))
    return TraceSample(s0=tuple(s0), waves=tuple(waves), final=final, tags=tags, fully_observed=fully)


def classify(sample: TraceSample, pop: PopulationGraph) -> dict[int, str]:
    """Tag every final unit as network case, edge unit or other initial unit."""
    return _tags(pop, set(sample.s0), sample.final)
