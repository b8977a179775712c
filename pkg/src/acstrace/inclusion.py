"""Inclusion and exclusion probabilities under adaptive network tracing.

A case network is in the final sample exactly when the initial sample hits at
least one of its members, so every first- and second-order probability needed
here reduces to *exclusion* probabilities: the chance that ``s0`` misses a
given unit set ``B`` entirely.

* SRS of size ``m`` from ``N``:  ``C(N - |B|, m) / C(N, m)``, which depends on
  ``|B|`` only and is tabulated once per design.
* Poisson sampling:  ``prod_{i in B} (1 - p_i)``.

Joint probabilities follow by inclusion-exclusion,
``pi_kl = 1 - pibar_k - pibar_l + pibar_{k u l}``, and covariances of inclusion
indicators are ``pibar_{k u l} - pibar_k * pibar_l``.  For many groups at once
the union terms are computed from an overlap matrix, so the unit sets may
overlap arbitrarily (e.g. networks at two time points).

Passing ``exact=True`` switches to rational arithmetic with
:class:`fractions.Fraction`; this is meant for toy populations only.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np
from scipy import sparse

from .design import POISSON, SRS, InitialDesign
from .errors import ConfigurationError
from .popgraph import CaseNetwork, PopulationGraph


def srs_exclusion_table(N: int, m: int, bmax: int) -> np.ndarray:
    """``pibar[b] = C(N-b, m) / C(N, m)`` for ``b = 0..bmax`` under SRS.

    Uses ``C(N-b, m)/C(N, m) = prod_{j<b} (1 - m/(N-j))`` accumulated in log
    space, which stays accurate at ``N = 10**5``.
    """
    bmax = min(bmax, N)
    out = np.zeros(bmax + 1)
    out[0] = 1.0
    if bmax == 0:
        return out
    j = np.arange(bmax, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log1p(-np.minimum(1.0, m / (N - j)))
    out[1:] = np.exp(np.cumsum(logs))
    return out


def _members(obj) -> np.ndarray:
    if isinstance(obj, CaseNetwork):
        return obj.members
    return np.asarray(list(obj) if not isinstance(obj, np.ndarray) else obj, dtype=np.int64)


class Exclusion:
    """Exclusion probabilities for one initial design on one sampling frame.

    The frame is the population at the time ``s0`` is drawn; it fixes each
    unit's initial inclusion probability (size bias depends on case status at
    that time).
    """

    def __init__(self, design: InitialDesign, frame: PopulationGraph, exact: bool = False):
        design.validate(frame)
        self.design = design
        self.N = frame.N
        self.m = design.m
        self.exact = exact
        self.p = design.unit_probabilities(frame, exact=exact)
        if not exact and design.kind == POISSON:
            with np.errstate(divide="ignore"):
                self.log_q = np.log1p(-self.p)
        self._table = None

    # -- scalar ------------------------------------------------------------
    def pibar_size(self, b: int):
        """SRS exclusion probability of a set of size ``b``."""
        N, m = self.N, self.m
        if b > N - m:
            return Fraction(0) if self.exact else 0.0
        if self.exact:
            return Fraction(comb(N - b, m), comb(N, m))
        return float(self.table(b)[b])

    def table(self, bmax: int) -> np.ndarray:
        if self._table is None or len(self._table) <= bmax:
            self._table = srs_exclusion_table(self.N, self.m, max(bmax, 16))
        return self._table

    def pibar(self, B) -> float | Fraction:
        """Probability that ``s0`` contains no unit of ``B``."""
        B = np.unique(_members(B))
        if self.design.kind == SRS:
            return self.pibar_size(len(B))
        if self.exact:
            out = Fraction(1)
            for i in B.tolist():
                out *= 1 - self.p[i]
            return out
        return float(np.exp(self.log_q[B].sum())) if len(B) else 1.0

    # -- vectorized over groups -------------------------------------------
    def _incidence(self, groups: Sequence[np.ndarray]) -> sparse.csr_matrix:
        rows = np.repeat(np.arange(len(groups)), [len(g) for g in groups])
        cols = np.concatenate([np.asarray(g, dtype=np.int64) for g in groups]) if groups else np.zeros(0, int)
        return sparse.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(len(groups), self.N))

    def pibar_groups(self, groups: Sequence[np.ndarray]):
        if self.exact:
            return [self.pibar(g) for g in groups]
        if self.design.kind == SRS:
            sizes = np.array([len(g) for g in groups], dtype=np.int64)
            tab = self.table(int(sizes.max()) if len(sizes) else 0)
            return np.where(sizes > self.N - self.m, 0.0, tab[np.minimum(sizes, len(tab) - 1)])
        return np.array([np.exp(self.log_q[np.asarray(g, dtype=np.int64)].sum()) for g in groups])

    def union_pibar(self, groups_a: Sequence[np.ndarray], groups_b: Sequence[np.ndarray]):
        """Matrix of ``pibar(A_g u B_h)`` for all pairs of groups."""
        if self.exact:
            return [[self.pibar(np.union1d(a, b)) for b in groups_b] for a in groups_a]
        Ga, Gb = self._incidence(groups_a), self._incidence(groups_b)
        if self.design.kind == SRS:
            overlap = (Ga @ Gb.T).toarray()
            sa = np.asarray(Ga.sum(axis=1)).ravel()
            sb = np.asarray(Gb.sum(axis=1)).ravel()
            union = (sa[:, None] + sb[None, :] - overlap).astype(np.int64)
            tab = self.table(int(union.max()) if union.size else 0)
            return np.where(union > self.N - self.m, 0.0, tab[np.minimum(union, len(tab) - 1)])
        w = sparse.diags(self.log_q)
        shared = (Ga @ w @ Gb.T).toarray()
        la = np.asarray(Ga @ self.log_q).ravel()
        lb = np.asarray(Gb @ self.log_q).ravel()
        with np.errstate(invalid="ignore"):
            out = np.exp(la[:, None] + lb[None, :] - shared)
        return np.nan_to_num(out, nan=0.0)

    def indicator_cov(self, groups_a, groups_b):
        """``Cov(I_g, I_h) = pibar(A_g u B_h) - pibar(A_g) pibar(B_h)`` for hit indicators."""
        ua = self.union_pibar(groups_a, groups_b)
        pa, pb = self.pibar_groups(groups_a), self.pibar_groups(groups_b)
        if self.exact:
            return [[ua[g][h] - pa[g] * pb[h] for h in range(len(pb))] for g in range(len(pa))]
        return ua - np.outer(pa, pb)

    def ht_variance(self, groups: Sequence[np.ndarray], values) -> float | Fraction:
        """Variance of ``sum_g values_g * I_g / pi_g`` where ``I_g`` flags that ``s0`` hits group ``g``.

        Groups with zero value are dropped.  A group that ``s0`` can never hit
        but that carries a nonzero value makes the estimator undefined and
        raises ConfigurationError.
        """
        keep = [idx for idx, v in enumerate(values) if v != 0]
        groups = [np.asarray(groups[idx], dtype=np.int64) for idx in keep]
        vals = [values[idx] for idx in keep]
        if not groups:
            return Fraction(0) if self.exact else 0.0
        pibar = self.pibar_groups(groups)
        if self.exact:
            pi = [1 - q for q in pibar]
            if any(p == 0 for p in pi):
                raise ConfigurationError("a group with nonzero value has zero inclusion probability")
            cov = self.indicator_cov(groups, groups)
            total = Fraction(0)
            for g in range(len(groups)):
                for h in range(len(groups)):
                    total += cov[g][h] / (pi[g] * pi[h]) * vals[g] * vals[h]
            return total
        pi = 1.0 - pibar
        if np.any(pi <= 0):
            raise ConfigurationError("a group with nonzero value has zero inclusion probability")
        a = np.asarray(vals, dtype=float) / pi
        cov = self.indicator_cov(groups, groups)
        return float(max(a @ cov @ a, 0.0))


class InclusionTable:
    """First- and second-order inclusion probabilities for a design and population.

    ``frame`` is the population the initial sample is drawn from; it defaults to
    ``pop``.  It differs from ``pop`` when the networks are those of a later
    time point but ``s0`` was selected earlier.
    """

    def __init__(self, design: InitialDesign, pop: PopulationGraph, frame: PopulationGraph | None = None, exact: bool = False):
        frame = pop if frame is None else frame
        if frame.N != pop.N:
            raise ConfigurationError("frame and population must share the unit set")
        self.design = design
        self.pop = pop
        self.frame = frame
        self.exact = exact
        self.excl = Exclusion(design, frame, exact=exact)

    @property
    def unit_initial(self):
        return self.excl.p

    @cached_property
    def network_first(self):
        pibar = self.excl.pibar_groups(list(self.pop.networks))
        if self.exact:
            return [1 - q for q in pibar]
        return 1.0 - np.asarray(pibar, dtype=float)

    @cached_property
    def network_second(self):
        nets = list(self.pop.networks)
        union = self.excl.union_pibar(nets, nets)
        pibar = self.excl.pibar_groups(nets)
        if self.exact:
            return [[1 - pibar[a] - pibar[b] + union[a][b] for b in range(len(nets))] for a in range(len(nets))]
        return 1.0 - pibar[:, None] - pibar[None, :] + union

    def exclusion(self, B):
        return self.excl.pibar(B)

    @cached_property
    def acs_variance(self):
        """Design variance of the HT total under ACS (see :func:`estimate.acs_variance_analytic`)."""
        return self.excl.ht_variance(list(self.pop.networks), self.pop.network_totals.tolist())


def exclusion_prob(design: InitialDesign, pop: PopulationGraph, B, exact: bool = False):
    """Probability that the initial sample misses every unit of ``B``."""
    return Exclusion(design, pop, exact).pibar(B)


def network_inclusion(design: InitialDesign, pop: PopulationGraph, network, exact: bool = False):
    """Inclusion probability of a case network: one minus its exclusion probability."""
    if isinstance(network, (int, np.integer)):
        network = pop.networks[int(network)]
    return 1 - exclusion_prob(design, pop, network, exact)


def network_joint_inclusion(design: InitialDesign, pop: PopulationGraph, kappa, ell, exact: bool = False):
    """Probability that both unit sets are hit by the initial sample.

    The sets may overlap (a network at another time point, or the same
    network), and ``pop`` serves as the sampling frame.
    """
    if isinstance(kappa, (int, np.integer)):
        kappa = pop.networks[int(kappa)]
    if isinstance(ell, (int, np.integer)):
        ell = pop.networks[int(ell)]
    ex = Exclusion(design, pop, exact)
    a, b = _members(kappa), _members(ell)
    return 1 - ex.pibar(a) - ex.pibar(b) + ex.pibar(np.union1d(a, b))


def cross_time_joint(incl_t: InclusionTable, incl_t1: InclusionTable):
    """``pi_(kl)`` for every network ``k`` at time t and ``l`` at time t+1 under a common ``s0``."""
    if incl_t.design != incl_t1.design or incl_t.frame is not incl_t1.frame:
        raise ConfigurationError("cross-time probabilities need one design and one sampling frame")
    ex = incl_t.excl
    a, b = list(incl_t.pop.networks), list(incl_t1.pop.networks)
    union = ex.union_pibar(a, b)
    pa, pb = ex.pibar_groups(a), ex.pibar_groups(b)
    if ex.exact:
        return [[1 - pa[g] - pb[h] + union[g][h] for h in range(len(b))] for g in range(len(a))]
    return 1.0 - pa[:, None] - pb[None, :] + union


def iacs_group(pop_t: PopulationGraph, i: int) -> np.ndarray:
    """Unit set whose hit puts ``i`` into ``s(t)``: its network if a case, else ``{i}``."""
    net = pop_t.network_of[i]
    return pop_t.networks[net] if net >= 0 else np.array([i], dtype=np.int64)


def iacs_joint_inclusion(design: InitialDesign, pop_t: PopulationGraph, i: int, j: int, frame=None, exact: bool = False):
    """Joint inclusion of units ``i != j`` in ``s(t)``, by case status at time t.

    Noncases enter through the initial sample only; cases through their network.
    """
    if i == j:
        raise ValueError("joint inclusion needs two distinct units")
    ex = Exclusion(design, pop_t if frame is None else frame, exact)
    yi, yj = pop_t.y[i] > 0, pop_t.y[j] > 0
    gi, gj = iacs_group(pop_t, i), iacs_group(pop_t, j)
    union = ex.pibar(np.union1d(gi, gj))
    if not yi and not yj:
        return 1 - ex.pibar(gi) - ex.pibar(gj) + union
    pi_i = ex.p[i] if not yi else 1 - ex.pibar(gi)
    pi_j = ex.p[j] if not yj else 1 - ex.pibar(gj)
    return pi_i + pi_j + union - 1
