"""Point estimators and their design variances.

Cross-sectional estimators return case *totals*; change estimators return
changes in *prevalence* (totals divided by the fixed population size ``N``).
All variances are exact design variances computed from the population, not
sample-based variance estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .design import SRS, InitialDesign, TraceSample
from .errors import ConfigurationError, DesignError, InputError
from .inclusion import InclusionTable
from .popgraph import PopulationGraph, TwoWavePopulation

CROSS_SECTIONAL = "cross_sectional"
PANEL = "panel"
PACS = "pACS"
IACS = "iACS"


@dataclass(frozen=True)
class Estimate:
    value: float | Fraction
    variance: float | Fraction
    kind: str = CROSS_SECTIONAL

    @property
    def se(self) -> float:
        return math.sqrt(float(self.variance))

    def scaled(self, factor) -> "Estimate":
        """Same estimate multiplied by ``factor`` (e.g. ``1/N`` for prevalence)."""
        return Estimate(self.value * factor, self.variance * factor * factor, self.kind)


def _sampled_networks(sample: TraceSample, pop: PopulationGraph) -> list[int]:
    nets = sorted({int(pop.network_of[i]) for i in sample.final if pop.y[i] > 0})
    final = set(sample.final)
    for n in nets:
        if not final.issuperset(pop.networks[n].tolist()):
            raise DesignError(f"network {n} is only partly observed; the sample is not network-exhaustive")
    return nets


def _ht_networks(nets, pop: PopulationGraph, incl: InclusionTable, values=None):
    total = Fraction(0) if incl.exact else 0.0
    first = incl.network_first
    for n in nets:
        pi = first[n]
        if pi == 0:
            raise DesignError(f"sampled network {n} has zero inclusion probability")
        v = pop.network_totals[n] if values is None else values[n]
        total += int(v) / pi if incl.exact else float(v) / pi
    return total


def ht_acs_total(sample: TraceSample, pop: PopulationGraph, incl: InclusionTable) -> Estimate:
    """HT estimator of the case total from an ACS sample.

    Each sampled network contributes its case total over its inclusion
    probability; edge units and other initial units contribute nothing.
    """
    nets = _sampled_networks(sample, pop)
    return Estimate(_ht_networks(nets, pop, incl), incl.acs_variance, CROSS_SECTIONAL)


def acs_variance_analytic(pop: PopulationGraph, design: InitialDesign, incl: InclusionTable | None = None):
    """Variance of the ACS HT total, a double sum over all pairs of case networks.

    Divide by ``N**2`` for the prevalence scale.
    """
    incl = InclusionTable(design, pop) if incl is None else incl
    return incl.acs_variance


def initial_variance(pop: PopulationGraph, design: InitialDesign, exact: bool = False):
    """Design variance of the HT total based on ``s0`` alone."""
    N, m = pop.N, design.m
    if design.kind == SRS:
        if m == 0:
            raise ConfigurationError("SRS of size 0 admits no estimator")
        y = pop.y.tolist()
        if exact:
            mean = Fraction(sum(y), N)
            s2 = sum((Fraction(v) - mean) ** 2 for v in y) / (N - 1) if N > 1 else Fraction(0)
            return Fraction(N * N) * (1 - Fraction(m, N)) / m * s2
        s2 = float(np.var(pop.y, ddof=1)) if N > 1 else 0.0
        return N * N * (1 - m / N) / m * s2
    p = design.unit_probabilities(pop, exact=exact)
    cases = np.flatnonzero(pop.y > 0).tolist()
    if exact:
        return sum(Fraction(int(pop.y[i]) ** 2) * (1 - p[i]) / p[i] for i in cases)
    yc = pop.y[cases].astype(float)
    pc = p[cases]
    return float(np.sum(yc * yc * (1 - pc) / pc))


def ht_initial_total(s0, pop: PopulationGraph, design: InitialDesign, exact: bool = False) -> Estimate:
    """HT estimator of the case total from the initial sample only."""
    s0 = np.asarray(sorted(set(int(i) for i in s0)), dtype=np.int64)
    var = initial_variance(pop, design, exact)
    if design.kind == SRS:
        tot = int(pop.y[s0].sum())
        value = Fraction(pop.N * tot, design.m) if exact else pop.N / design.m * tot
        return Estimate(value, var, CROSS_SECTIONAL)
    p = design.unit_probabilities(pop, exact=exact)
    if exact:
        value = sum((Fraction(int(pop.y[i])) / p[i] for i in s0.tolist()), Fraction(0))
    else:
        value = float(np.sum(pop.y[s0] / p[s0])) if len(s0) else 0.0
    return Estimate(value, var, CROSS_SECTIONAL)


# ---------------------------------------------------------------------------
# Change between two time points


def panel_variance(pop2: TwoWavePopulation, design: InitialDesign, exact: bool = False):
    """Variance of the panel change estimator (prevalence scale)."""
    N, m = pop2.N, design.m
    d = pop2.change
    if design.kind == SRS:
        if exact:
            mean = Fraction(int(d.sum()), N)
            s2 = sum((Fraction(int(v)) - mean) ** 2 for v in d.tolist()) / (N - 1)
            return (1 - Fraction(m, N)) / m * s2
        return (1 - m / N) / m * float(np.var(d, ddof=1))
    p = design.unit_probabilities(pop2.base, exact=exact)
    nz = np.flatnonzero(d).tolist()
    if exact:
        return sum(Fraction(int(d[i]) ** 2) * (1 - p[i]) / p[i] for i in nz) / (N * N)
    return float(np.sum(d[nz].astype(float) ** 2 * (1 - p[nz]) / p[nz])) / (N * N)


def panel_variance_approx(pop2: TwoWavePopulation, n: int) -> float:
    """Large-population approximation ``(lambda_+ + lambda_-) / n`` of the panel variance."""
    return (pop2.lambda_plus + pop2.lambda_minus) / n


def independent_variance(pop2: TwoWavePopulation, n: int) -> float:
    """Variance of the change estimate from two independent samples of size ``n``."""
    return (pop2.base.mu + pop2.evolved.mu) / n


def panel_change(s0, pop2: TwoWavePopulation, design: InitialDesign, exact: bool = False) -> Estimate:
    """HT estimator of the prevalence change from a fixed panel ``s0``."""
    s0 = sorted(set(int(i) for i in s0))
    N = pop2.N
    p = design.unit_probabilities(pop2.base, exact=exact)
    d = pop2.change
    if exact:
        value = sum((Fraction(int(d[i])) / p[i] for i in s0), Fraction(0)) / N
    else:
        idx = np.asarray(s0, dtype=np.int64)
        value = float(np.sum(d[idx] / p[idx])) / N if len(idx) else 0.0
    return Estimate(value, panel_variance(pop2, design, exact), PANEL)


def _check_frames(pop2: TwoWavePopulation, *tables: InclusionTable) -> None:
    for t in tables:
        if t.frame.N != pop2.N or not np.array_equal(t.frame.y, pop2.base.y):
            raise ConfigurationError("inclusion tables must use the first time point as sampling frame")
    if len({t.design for t in tables}) != 1:
        raise ConfigurationError("inclusion tables must share one initial design")


def pacs_variance(pop2: TwoWavePopulation, incl_t: InclusionTable, incl_t1: InclusionTable | None = None):
    """Variance of the pACS change estimator, ``V_t + V_{t+1} - 2 Cov``.

    Networks at both time points are treated as one family of hit indicators
    under the common initial sample; their pairwise covariances supply the
    cross-time term.
    """
    _check_frames(pop2, incl_t, *( [incl_t1] if incl_t1 is not None else []))
    N = pop2.N
    a, b = pop2.base, pop2.evolved
    groups = list(a.networks) + list(b.networks)
    if incl_t.exact:
        values = [Fraction(-int(v), N) for v in a.network_totals] + [Fraction(int(v), N) for v in b.network_totals]
    else:
        values = list(-a.network_totals / N) + list(b.network_totals / N)
    return incl_t.excl.ht_variance(groups, values)


def pacs_change(
    s_t: TraceSample,
    s_t1: TraceSample,
    pop2: TwoWavePopulation,
    incl_t: InclusionTable,
    incl_t1: InclusionTable,
) -> Estimate:
    """Difference of the ACS HT prevalence estimates at two time points with a common ``s0``."""
    if tuple(s_t.s0) != tuple(s_t1.s0):
        raise DesignError("pACS samples must share the initial sample")
    _check_frames(pop2, incl_t, incl_t1)
    N = pop2.N
    est_t = _ht_networks(_sampled_networks(s_t, pop2.base), pop2.base, incl_t)
    est_t1 = _ht_networks(_sampled_networks(s_t1, pop2.evolved), pop2.evolved, incl_t1)
    return Estimate((est_t1 - est_t) / N, pacs_variance(pop2, incl_t, incl_t1), PACS)


def iacs_groups(pop2: TwoWavePopulation, exact: bool = False):
    """Hit groups and per-group values for the iACS estimator viewed as HT over ``s(t)``.

    A case at t enters ``s(t)`` with its whole network, so network members are
    pooled into one group; a noncase at t enters only through ``s0``.  Values
    are ``y_{t+1}/N - y_t/N`` summed over each group; noncases that stay
    noncases have value 0 and are omitted.
    """
    N = pop2.N
    a = pop2.base
    y1, y2 = a.y, pop2.evolved.y
    groups, values = [], []
    for members in a.networks:
        diff = int(y2[members].sum() - y1[members].sum())
        groups.append(members)
        values.append(Fraction(diff, N) if exact else diff / N)
    for i in np.flatnonzero((y1 == 0) & (y2 > 0)).tolist():
        groups.append(np.array([i], dtype=np.int64))
        values.append(Fraction(int(y2[i]), N) if exact else y2[i] / N)
    return groups, values


def iacs_variance(pop2: TwoWavePopulation, incl_t: InclusionTable):
    _check_frames(pop2, incl_t)
    groups, values = iacs_groups(pop2, incl_t.exact)
    return incl_t.excl.ht_variance(groups, values)


def iacs_change(
    s_t: TraceSample,
    y_next: Mapping[int, int] | np.ndarray,
    pop2: TwoWavePopulation,
    incl: InclusionTable,
) -> Estimate:
    """Change estimator under iterated ACS.

    The time t+1 total is estimated from ``s(t)`` alone: cases at t are weighted
    by their network inclusion probability at t, noncases at t by their initial
    inclusion probability.  A noncase contributes only when it is in ``s0``;
    edge units reached by tracing have no known inclusion probability and carry
    zero weight, as in the time-t HT estimator.
    """
    _check_frames(pop2, incl)
    base = pop2.base
    if isinstance(y_next, np.ndarray):
        y_next = {i: int(y_next[i]) for i in s_t.final}
    missing = [i for i in s_t.final if i not in y_next]
    if missing:
        raise InputError(f"y at t+1 missing for sampled units {missing[:5]}")
    N = pop2.N
    nets = _sampled_networks(s_t, base)
    next_totals = {n: sum(int(y_next[int(i)]) for i in base.networks[n]) for n in nets}
    hh_cases = _ht_networks(nets, base, incl, values=next_totals)
    p = incl.unit_initial
    zero = Fraction(0) if incl.exact else 0.0
    hh_non = sum(
        (
            (Fraction(int(y_next[i])) / p[i] if incl.exact else y_next[i] / p[i])
            for i in s_t.s0
            if base.y[i] == 0
        ),
        zero,
    )
    ht_t = _ht_networks(nets, base, incl)
    return Estimate((hh_cases + hh_non - ht_t) / N, iacs_variance(pop2, incl), IACS)

