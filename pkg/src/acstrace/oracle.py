"""Exhaustive enumeration of initial samples on toy populations.

Every possible initial sample is listed with its exact probability, the
adaptive tracing is run on each, and expectations, variances and inclusion
frequencies are computed by direct summation in rational arithmetic.  None of
this uses the closed-form probabilities, so it serves as an independent check
on :mod:`acstrace.inclusion` and :mod:`acstrace.estimate`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Iterator

import numpy as np

from . import estimate as est
from .design import POISSON, SRS, InitialDesign, trace
from .inclusion import InclusionTable, iacs_joint_inclusion
from .popgraph import HOUSEHOLD, PERSON, PopulationGraph, TwoWavePopulation


def initial_samples(design: InitialDesign, pop: PopulationGraph) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    """All possible initial samples with their exact probabilities."""
    N = pop.N
    if design.kind == SRS:
        prob = Fraction(1, comb(N, design.m))
        for s0 in itertools.combinations(range(N), design.m):
            yield s0, prob
        return
    p = design.unit_probabilities(pop, exact=True)
    for mask in range(1 << N):
        prob = Fraction(1)
        s0 = []
        for i in range(N):
            if mask >> i & 1:
                prob *= p[i]
                s0.append(i)
            else:
                prob *= 1 - p[i]
        if prob:
            yield tuple(s0), prob


def moments(values_probs) -> tuple[Fraction, Fraction]:
    mean = sum(p * v for v, p in values_probs)
    var = sum(p * (v - mean) ** 2 for v, p in values_probs)
    return mean, var


def random_population(rng: np.random.Generator, N: int, *, household: bool = False, cases=None) -> PopulationGraph:
    """Toy population with networks of mixed sizes, edge nodes and noncase contacts."""
    units = rng.permutation(N)
    if cases is None:
        n_cases = int(rng.integers(1, max(2, N - 1)))
        cases = units[:n_cases]
    cases = np.asarray(cases, dtype=np.int64)
    noncases = np.setdiff1d(np.arange(N), cases)
    edges = []
    remaining = list(rng.permutation(cases))
    while remaining:
        k = int(rng.integers(1, min(4, len(remaining)) + 1))
        group, remaining = remaining[:k], remaining[k:]
        for idx in range(1, len(group)):
            edges.append((int(group[idx]), int(group[rng.integers(idx)])))
        if len(noncases) and rng.random() < 0.6:
            edges.append((int(rng.choice(group)), int(rng.choice(noncases))))
    for _ in range(int(rng.integers(0, 3))):
        if len(noncases) >= 2:
            a, b = rng.choice(noncases, size=2, replace=False)
            edges.append((int(a), int(b)))
    size = np.ones(N, dtype=np.int64)
    y = np.zeros(N, dtype=np.int64)
    if household:
        size = rng.integers(1, 5, size=N)
        y[cases] = size[cases]
    else:
        y[cases] = 1
    return PopulationGraph.from_edges(y, edges, size=size, mode=HOUSEHOLD if household else PERSON)


def random_two_wave(rng: np.random.Generator, N: int) -> TwoWavePopulation:
    base = random_population(rng, N)
    flip = rng.random(N) < 0.3
    cases2 = np.flatnonzero((base.y > 0) ^ flip)
    if len(cases2) == 0:
        cases2 = np.array([int(rng.integers(N))])
    evolved = random_population(rng, N, cases=cases2)
    return TwoWavePopulation(base=base, evolved=evolved)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


def _eq(a, b) -> bool:
    return a == b if isinstance(a, Fraction) and isinstance(b, Fraction) else abs(float(a) - float(b)) <= 1e-12


def check_cross_sectional(pop: PopulationGraph, design: InitialDesign, label: str = "") -> list[Check]:
    """Unbiasedness, variance and inclusion probabilities of ACS on one toy population."""
    incl = InclusionTable(design, pop, exact=True)
    M, N = pop.M, pop.N
    first = [Fraction(0)] * M
    second = [[Fraction(0)] * M for _ in range(M)]
    unit_first = [Fraction(0)] * N
    draws = []
    for s0, prob in initial_samples(design, pop):
        sample = trace(pop, s0)
        draws.append((est.ht_acs_total(sample, pop, incl).value, prob))
        hit = sorted({int(pop.network_of[i]) for i in sample.final if pop.y[i] > 0})
        for a in hit:
            first[a] += prob
            for b in hit:
                second[a][b] += prob
        for i in s0:
            unit_first[i] += prob
    mean, var = moments(draws)
    checks = [
        Check(f"{label} E[theta_acs] == theta", mean == pop.theta, f"{mean} vs {pop.theta}"),
        Check(f"{label} V analytic == enumeration", var == incl.acs_variance, f"{var} vs {incl.acs_variance}"),
        Check(f"{label} unit pi_i", all(_eq(unit_first[i], incl.unit_initial[i]) for i in range(N))),
        Check(f"{label} network pi_(k)", all(first[a] == incl.network_first[a] for a in range(M))),
        Check(
            f"{label} network pi_(kl)",
            all(second[a][b] == incl.network_second[a][b] for a in range(M) for b in range(M)),
        ),
    ]
    if pop.mode == PERSON:
        _, base_var = moments(
            [(est.ht_initial_total(s0, pop, design, exact=True).value, p) for s0, p in initial_samples(design, pop)]
        )
        checks.append(
            Check(
                f"{label} V initial == enumeration",
                base_var == est.initial_variance(pop, design, exact=True),
            )
        )
    return checks


def check_two_wave(pop2: TwoWavePopulation, design: InitialDesign, label: str = "") -> list[Check]:
    """Unbiasedness and variances of the three change estimators on one toy."""
    base, evolved = pop2.base, pop2.evolved
    incl_t = InclusionTable(design, base, exact=True)
    incl_t1 = InclusionTable(design, evolved, frame=base, exact=True)
    truth = Fraction(evolved.theta - base.theta, pop2.N)
    panel, pacs, iacs = [], [], []
    N = pop2.N
    joint = {}
    event_first = [Fraction(0)] * N
    for s0, prob in initial_samples(design, base):
        s_t = trace(base, s0)
        s_t1 = trace(evolved, s0)
        panel.append((est.panel_change(s0, pop2, design, exact=True).value, prob))
        pacs.append((est.pacs_change(s_t, s_t1, pop2, incl_t, incl_t1).value, prob))
        iacs.append((est.iacs_change(s_t, evolved.y, pop2, incl_t).value, prob))
        final = set(s_t.final)
        members = [i for i in range(N) if (i in final if base.y[i] > 0 else i in s0)]
        for i in members:
            event_first[i] += prob
        for i, j in itertools.combinations(members, 2):
            joint[i, j] = joint.get((i, j), Fraction(0)) + prob
    out = []
    for name, draws, var_fn in (
        ("panel", panel, lambda: est.panel_variance(pop2, design, exact=True)),
        ("pACS", pacs, lambda: est.pacs_variance(pop2, incl_t, incl_t1)),
        ("iACS", iacs, lambda: est.iacs_variance(pop2, incl_t)),
    ):
        mean, var = moments(draws)
        out.append(Check(f"{label} E[{name}] == change", mean == truth, f"{mean} vs {truth}"))
        out.append(Check(f"{label} V[{name}] analytic == enumeration", var == var_fn(), f"{var} vs {var_fn()}"))
    ok = True
    for i, j in itertools.combinations(range(N), 2):
        pij = iacs_joint_inclusion(design, base, i, j, exact=True)
        if pij != joint.get((i, j), Fraction(0)):
            ok = False
            break
    out.append(Check(f"{label} iACS piecewise pi_(ij)", ok))
    return out


def run_suite(n_populations: int = 24, seed: int = 20200, log: Callable[[str], None] | None = None) -> list[Check]:
    """Enumeration checks over randomized toy populations (N <= 12, m <= 4).

    Alternates SRS and size-biased Poisson designs and person and household
    populations; every third toy is a two-wave population.
    """
    rng = np.random.default_rng(seed)
    checks: list[Check] = []
    for idx in range(n_populations):
        N = int(rng.integers(5, 13))
        m = int(rng.integers(1, min(4, N - 1) + 1))
        poisson = idx % 4 == 3
        design = InitialDesign(POISSON, m=m, eta=2) if poisson else InitialDesign(SRS, m=m)
        if poisson:
            N = min(N, 10)
        if idx % 3 == 2:
            pop2 = random_two_wave(rng, N)
            design = InitialDesign(design.kind, m=min(m, N), eta=design.eta)
            new = check_two_wave(pop2, design, label=f"toy{idx:02d} two-wave N={N} {design.kind} m={design.m}")
        else:
            pop = random_population(rng, N, household=idx % 5 == 4)
            new = check_cross_sectional(pop, design, label=f"toy{idx:02d} {pop.mode} N={N} {design.kind} m={m}")
        if log is not None:
            for c in new:
                log(f"{'PASS' if c.ok else 'FAIL'}  {c.name}")
        checks.extend(new)
    return checks
