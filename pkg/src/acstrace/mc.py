"""Seeded Monte Carlo engine for cross-sectional and two-time-point scenarios.

Only the units that can affect an estimate or the final sample size are drawn
explicitly: the case units (at either time point) and the edge units.  Their
intersection with ``s0`` is drawn exactly, by a hypergeometric count followed by
a uniform subset under SRS, or by independent Bernoulli draws under Poisson
sampling; the rest of ``s0`` only enters through its size.

Replicate streams are derived from ``(seed, scenario universe, block)`` with
:class:`numpy.random.SeedSequence`, and per-replicate results are merged in
block order, so a summary depends only on the seed, never on the number of
worker processes.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import estimate as est
from .design import ACS, POISSON, SRS, InitialDesign
from .errors import ACSError, ConfigurationError
from .inclusion import Exclusion, InclusionTable
from .popgraph import (
    DEFAULT_HOUSEHOLD_SIZES,
    HOUSEHOLD,
    PERSON,
    TABLE3_SETTINGS,
    PopulationGraph,
    TwoWavePopulation,
    build_equal_network_population,
    build_household_population,
    evolve_population,
)

CROSS_SECTIONAL = "cross_sectional"
TEMPORAL = (CROSS_SECTIONAL, est.PANEL, est.PACS, est.IACS)
NO_TRACING = "none"
WORKERS_ENV = "ACSTRACE_WORKERS"
BLOCK_CROSS = 2000
BLOCK_DYNAMIC = 250


@dataclass(frozen=True)
class PopulationSpec:
    """Recipe for a synthetic population.

    Cross-sectional populations use ``theta`` and ``k``; two-time-point
    populations name a ``setting`` from the dynamics table instead.
    """

    mode: str = PERSON
    N: int = 100_000
    theta: int = 1000
    k: int | None = None
    setting: str | None = None
    size_dist: tuple[float, ...] = DEFAULT_HOUSEHOLD_SIZES
    edge_nodes_per_network: int = 0
    topology: str = "star"
    shrink_rule: str = "uniform"

    def validate(self) -> None:
        if self.mode not in (PERSON, HOUSEHOLD):
            raise ConfigurationError(f"unknown population mode {self.mode!r}")
        if (self.k is None) == (self.setting is None):
            raise ConfigurationError("give exactly one of k and setting")
        if self.setting is not None:
            if self.setting not in TABLE3_SETTINGS:
                raise ConfigurationError(f"unknown dynamics setting {self.setting!r}")
            if self.mode != PERSON or self.edge_nodes_per_network:
                raise ConfigurationError("dynamics settings use person populations without edge nodes")
            s = TABLE3_SETTINGS[self.setting]
            if s.theta1 != self.theta:
                raise ConfigurationError(f"setting {self.setting} has case total {s.theta1}, not {self.theta}")
        if self.theta > self.N:
            raise ConfigurationError(f"theta={self.theta} exceeds N={self.N}")
        if self.k is not None and (self.k < 1 or self.theta % self.k):
            raise ConfigurationError(f"k={self.k} does not divide theta={self.theta}")

    @property
    def dynamic(self) -> bool:
        return self.setting is not None

    def build(self, seed) -> PopulationGraph | TwoWavePopulation:
        ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
        pop_seed, evolve_seed = ss.spawn(2)
        if self.dynamic:
            s = TABLE3_SETTINGS[self.setting]
            base = build_equal_network_population(self.N, self.theta, s.t1[1], pop_seed, topology=self.topology)
            return evolve_population(base, s, evolve_seed, topology=self.topology, shrink_rule=self.shrink_rule)
        kw = dict(topology=self.topology, edge_nodes_per_network=self.edge_nodes_per_network)
        if self.mode == HOUSEHOLD:
            return build_household_population(self.N, self.theta, self.k, self.size_dist, pop_seed, **kw)
        return build_equal_network_population(self.N, self.theta, self.k, pop_seed, **kw)


@dataclass(frozen=True)
class Scenario:
    """One simulation cell: population, initial design, tracing and estimator."""

    id: str
    population: PopulationSpec = field(default_factory=PopulationSpec)
    design: InitialDesign = field(default_factory=lambda: InitialDesign(SRS, 1000))
    tracing: str = ACS
    temporal: str = CROSS_SECTIONAL
    replicates: int = 1000
    seed: int = 0
    freeze_population: bool = False

    def validate(self) -> None:
        self.population.validate()
        if self.design.m > self.population.N:
            raise ConfigurationError(f"m={self.design.m} exceeds N={self.population.N}")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be at least 1")
        if self.temporal not in TEMPORAL:
            raise ConfigurationError(f"unknown temporal design {self.temporal!r}")
        if self.tracing not in (ACS, NO_TRACING):
            raise ConfigurationError("Monte Carlo estimation is defined for ACS tracing (or none)")
        if (self.temporal == CROSS_SECTIONAL) == self.population.dynamic:
            raise ConfigurationError("change designs need a dynamics setting, cross-sectional ones need k")
        if self.design.kind == POISSON:
            n_cases = self.population.theta
            p_case = self.design.eta * self.design.m / (self.population.N + (self.design.eta - 1) * n_cases)
            if p_case > 1:
                raise ConfigurationError("size-biased case probability exceeds 1")

    def universe_key(self) -> int:
        """Stable hash of everything that determines the simulated draws."""
        doc = {"population": asdict(self.population), "design": asdict(self.design), "freeze": self.freeze_population}
        return zlib.crc32(json.dumps(doc, sort_keys=True).encode())

    def population_key(self) -> int:
        """Stable hash of the population recipe; designs on one recipe share populations."""
        return zlib.crc32(json.dumps(asdict(self.population), sort_keys=True).encode())

    def population_seed(self, replicate: int | None = None) -> np.random.SeedSequence:
        if replicate is None or self.freeze_population:
            return np.random.SeedSequence(self.seed, spawn_key=(self.population_key(), 0))
        return np.random.SeedSequence(self.seed, spawn_key=(self.population_key(), 1, replicate))

    def reference_population(self):
        return self.population.build(self.population_seed())

    @property
    def design_label(self) -> str:
        base = SRS if self.design.kind == SRS else f"poisson(eta={self.design.eta:g})"
        if self.temporal == CROSS_SECTIONAL:
            return f"{base}+acs" if self.tracing == ACS else base
        return f"{base}+{self.temporal}"

    @property
    def k_or_setting(self) -> str:
        return self.population.setting if self.population.dynamic else str(self.population.k)


@dataclass
class McSummary:
    """Monte Carlo and analytic summaries for one scenario.

    ``cv`` is relative to the population case total (cross-sectional), ``se``
    is the standard deviation of the change estimate, and ``re`` is the
    variance ratio against the scenario's baseline (the initial-sample HT
    estimator on the same draws, or the panel estimator for change designs).
    """

    scenario_id: str
    design: str
    m: int
    eta: float
    k_or_setting: str
    R: int
    seed: int
    mean_n: float
    cv_mc: float | None = None
    cv_analytic: float | None = None
    se_mc: float | None = None
    se_analytic: float | None = None
    re_mc: float | None = None
    re_analytic: float | None = None
    re_mc_se: float | None = None
    mean_n_analytic: float | None = None
    mean_estimate: float | None = None
    target: float | None = None
    n_degenerate: int = 0
    baseline: "McSummary | None" = None

    CSV_COLUMNS = (
        "scenario_id", "design", "m", "eta", "k_or_setting", "R", "seed", "mean_n",
        "cv_mc", "cv_analytic", "se_mc", "se_analytic", "re_mc", "re_analytic",
    )

    def rows(self) -> list[dict]:
        """CSV rows: this scenario, then its baseline when it has one."""
        out = [{c: getattr(self, c) for c in self.CSV_COLUMNS}]
        if self.baseline is not None:
            out.extend(self.baseline.rows())
        return out


# ---------------------------------------------------------------------------
# Statistics


def ratio_of_variances(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """``var(a)/var(b)`` and its delta-method standard error for paired draws."""
    A = (a - a.mean()) ** 2
    B = (b - b.mean()) ** 2
    if B.mean() == 0:
        return math.nan, math.nan
    r = A.mean() / B.mean()
    se = math.sqrt(np.var(A - r * B, ddof=1) / len(a)) / B.mean() if len(a) > 1 else math.nan
    return float(r), float(se)


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


# ---------------------------------------------------------------------------
# Analytic quantities


def expected_sample_size_analytic(pop: PopulationGraph, design: InitialDesign) -> float:
    """Expected final sample size under ACS.

    ``E|s0|`` plus, for every case, the chance it is reached through its
    network without being in ``s0``, plus the same for every edge unit.
    """
    ex = Exclusion(design, pop)
    total = float(design.m)
    if pop.M:
        pibar_net = ex.pibar_groups(list(pop.networks))
        if design.kind == SRS:
            unit_out = np.full(pop.N, ex.pibar_size(1))
        else:
            unit_out = 1.0 - ex.p
        for members, q in zip(pop.networks, pibar_net):
            total += float(np.sum(unit_out[members] - q))
    for e in pop.edge_units.tolist():
        nets = pop.adjacent_networks(e)
        union = np.concatenate([[e]] + [pop.networks[n] for n in nets])
        total += float(ex.pibar([e]) - ex.pibar(union))
    return total


def analytic_variance(sc: Scenario, pop=None) -> float:
    """Design variance of the scenario's estimator (total or prevalence change)."""
    pop = sc.reference_population() if pop is None else pop
    d = sc.design
    if sc.temporal == CROSS_SECTIONAL:
        if sc.tracing == NO_TRACING:
            return est.initial_variance(pop, d)
        return InclusionTable(d, pop).acs_variance
    if sc.temporal == est.PANEL:
        return est.panel_variance(pop, d)
    it = InclusionTable(d, pop.base)
    if sc.temporal == est.PACS:
        return est.pacs_variance(pop, it)
    return est.iacs_variance(pop, it)


def relative_efficiency(sc: Scenario, baseline: Scenario) -> tuple[float, float]:
    """Variance ratio of ``sc`` against ``baseline``, with a standard error.

    Both variances have closed forms for every supported scenario, so the
    ratio is analytic and its standard error is 0.
    """
    if sc.population != baseline.population or sc.seed != baseline.seed:
        raise ConfigurationError("relative efficiency needs the same population specification and seed")
    if sc.population.dynamic and sc.design != baseline.design:
        raise ConfigurationError("change designs are compared under one initial design")
    sc.validate()
    baseline.validate()
    v = analytic_variance(sc)
    v0 = analytic_variance(baseline)
    if v0 == 0:
        raise ConfigurationError("baseline variance is zero")
    return v / v0, 0.0


# ---------------------------------------------------------------------------
# Cross-sectional kernel


@dataclass
class _CrossContext:
    N: int
    m: int
    kind: str
    n_rel: int
    n_case: int
    starts: np.ndarray
    sizes: np.ndarray
    weights: np.ndarray
    y_rel: np.ndarray
    p_rel: np.ndarray | None
    p_bg: float
    edge_adj: np.ndarray


def _cross_context(pop: PopulationGraph, design: InitialDesign, incl: InclusionTable) -> _CrossContext:
    nets = list(pop.networks)
    case_units = np.concatenate(nets) if nets else np.zeros(0, dtype=np.int64)
    edge = pop.edge_units
    rel = np.concatenate([case_units, edge])
    sizes = pop.network_sizes
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64) if nets else np.zeros(0, np.int64)
    edge_adj = np.zeros((len(edge), len(nets)), dtype=np.float64)
    for row, e in enumerate(edge.tolist()):
        edge_adj[row, pop.adjacent_networks(e)] = 1.0
    p = design.unit_probabilities(pop)
    return _CrossContext(
        N=pop.N,
        m=design.m,
        kind=design.kind,
        n_rel=len(rel),
        n_case=len(case_units),
        starts=starts,
        sizes=sizes.astype(np.float64),
        weights=(pop.network_totals / np.asarray(incl.network_first)).astype(np.float64),
        y_rel=pop.y[rel].astype(np.float64),
        p_rel=p[rel] if design.kind == POISSON else None,
        p_bg=float(design.poisson_rates(pop)[0]) if design.kind == POISSON else design.m / pop.N,
        edge_adj=edge_adj,
    )


def _draw_relevant(rng, ctx_kind, n_rel, N, m, p_rel, p_bg, size):
    """Rows of ``s0 ∩ relevant`` indicators plus the size of ``s0``."""
    if ctx_kind == SRS:
        h = rng.hypergeometric(n_rel, N - n_rel, m, size=size) if n_rel else np.zeros(size, dtype=np.int64)
        order = np.argsort(rng.random((size, n_rel)), axis=1)
        mask = np.zeros((size, n_rel), dtype=bool)
        rows = np.arange(size)[:, None]
        mask[rows, order] = np.arange(n_rel)[None, :] < h[:, None]
        return mask, np.full(size, m, dtype=np.int64)
    mask = rng.random((size, n_rel)) < p_rel[None, :]
    bg = rng.binomial(N - n_rel, p_bg, size=size)
    return mask, mask.sum(axis=1) + bg


def _cross_block(ctx: _CrossContext, ss: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.default_rng(ss)
    mask, s0_size = _draw_relevant(rng, ctx.kind, ctx.n_rel, ctx.N, ctx.m, ctx.p_rel, ctx.p_bg, size)
    out = np.zeros((size, 5))
    out[:, 4] = s0_size
    if ctx.n_case:
        counts = np.add.reduceat(mask[:, : ctx.n_case].astype(np.int64), ctx.starts, axis=1)
        hit = (counts > 0).astype(np.float64)
        out[:, 0] = hit @ ctx.weights
        reached = hit @ ctx.sizes - (hit * counts).sum(axis=1)
        if ctx.edge_adj.size:
            touched = (hit @ ctx.edge_adj.T) > 0
            reached += (touched & ~mask[:, ctx.n_case :]).sum(axis=1)
        out[:, 3] = hit.sum(axis=1) == 0
    else:
        reached = np.zeros(size)
        out[:, 3] = 1
    if ctx.kind == SRS:
        out[:, 1] = ctx.N / ctx.m * (mask @ ctx.y_rel) if ctx.m else 0.0
    else:
        out[:, 1] = mask @ (ctx.y_rel / ctx.p_rel) if ctx.n_rel else 0.0
    out[:, 2] = s0_size + reached
    return out


# ---------------------------------------------------------------------------
# Two-time-point kernel


def _change_replicate(pop2: TwoWavePopulation, design: InitialDesign, excl_table, rng) -> np.ndarray:
    """One replicate: panel, pACS and iACS estimates and the three sample sizes."""
    base, evolved = pop2.base, pop2.evolved
    N, m = pop2.N, design.m
    rel = np.union1d(np.flatnonzero(base.y), np.flatnonzero(evolved.y))
    n_rel = len(rel)
    y1 = base.y[rel]
    y2 = evolved.y[rel]
    if design.kind == SRS:
        p_rel = np.full(n_rel, m / N)
        p_bg = m / N
    else:
        p_non, p_case = design.poisson_rates(base)
        p_rel = np.where(y1 > 0, p_case, p_non)
        p_bg = p_non
    mask, s0_size = _draw_relevant(rng, design.kind, n_rel, N, m, p_rel, p_bg, 1)
    mask, s0_size = mask[0], int(s0_size[0])

    def layout(pop):
        sizes = pop.network_sizes
        pos = np.searchsorted(rel, np.concatenate(pop.networks)) if pop.M else np.zeros(0, np.int64)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64) if pop.M else np.zeros(0, np.int64)
        if design.kind == SRS:
            pibar = excl_table[sizes]
        else:
            logq = np.log1p(-p_rel[pos])
            pibar = np.exp(np.add.reduceat(logq, starts)) if pop.M else np.zeros(0)
        return pos, starts, sizes, 1.0 - pibar

    pos1, st1, sz1, pi1 = layout(base)
    pos2, st2, sz2, pi2 = layout(evolved)

    def hits(flags, pos, starts):
        if len(starts) == 0:
            return np.zeros(0, dtype=bool)
        return np.add.reduceat(flags[pos].astype(np.int64), starts) > 0

    h1 = hits(mask, pos1, st1)
    h2 = hits(mask, pos2, st2)
    tot1 = base.network_totals
    tot2 = evolved.network_totals
    ht1 = float(np.sum(tot1[h1] / pi1[h1]))
    ht2 = float(np.sum(tot2[h2] / pi2[h2]))
    d = y2 - y1
    panel = float(np.sum(d[mask] / p_rel[mask])) / N
    pacs = (ht2 - ht1) / N
    next_tot = np.add.reduceat(y2[pos1], st1) if len(st1) else np.zeros(0)
    hh_cases = float(np.sum(next_tot[h1] / pi1[h1]))
    non = mask & (y1 == 0)
    hh_non = float(np.sum(y2[non] / p_rel[non]))
    iacs = (hh_cases + hh_non - ht1) / N

    # sample sizes at t+1
    n_pacs = s0_size + int(np.sum(sz2[h2])) - int(np.sum(np.add.reduceat(mask[pos2].astype(np.int64), st2)[h2])) if len(st2) else s0_size
    st_mask = mask.copy()
    if len(st1):
        st_mask[pos1[np.repeat(h1, sz1)]] = True
    h2i = hits(st_mask, pos2, st2)
    fin = st_mask.copy()
    if len(st2):
        fin[pos2[np.repeat(h2i, sz2)]] = True
    n_iacs = s0_size + int(np.count_nonzero(fin & ~mask))
    return np.array([panel, pacs, iacs, s0_size, n_pacs, n_iacs])


def _change_block(sc: Scenario, frozen, excl_table, reps: range) -> np.ndarray:
    key = sc.universe_key()
    out = np.zeros((len(reps), 6))
    for row, r in enumerate(reps):
        draw_ss = np.random.SeedSequence(sc.seed, spawn_key=(key, 1, r))
        try:
            pop2 = frozen if frozen is not None else sc.population.build(sc.population_seed(r))
            out[row] = _change_replicate(pop2, sc.design, excl_table, np.random.default_rng(draw_ss))
        except ACSError as exc:
            raise type(exc)(f"scenario {sc.id}, replicate {r}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Driver


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


_CACHE: dict = {}


def simulate(sc: Scenario, workers: int | None = None) -> np.ndarray:
    """Per-replicate draws for a scenario's universe (cached by seed and universe).

    Cross-sectional columns: ACS total, initial-sample total, final sample
    size, no-network flag, size of ``s0``.  Change columns: panel, pACS and iACS estimates,
    then sample sizes at t+1 for the three designs.
    """
    workers = default_workers() if workers is None else workers
    key = (sc.universe_key(), sc.seed, sc.replicates)
    if key in _CACHE:
        return _CACHE[key]
    R = sc.replicates
    if sc.population.dynamic:
        frozen = sc.reference_population() if sc.freeze_population else None
        table = Exclusion(sc.design, sc.reference_population().base).table(200) if sc.design.kind == SRS else None
        tasks = [(sc, frozen, table, range(lo, min(lo + BLOCK_DYNAMIC, R))) for lo in range(0, R, BLOCK_DYNAMIC)]
        draws = np.concatenate(_map(_change_block, tasks, workers))
    else:
        pop = sc.reference_population()
        ctx = _cross_context(pop, sc.design, InclusionTable(sc.design, pop))
        tasks = [
            (ctx, np.random.SeedSequence(sc.seed, spawn_key=(sc.universe_key(), 2, b)), min(BLOCK_CROSS, R - lo))
            for b, lo in enumerate(range(0, R, BLOCK_CROSS))
        ]
        draws = np.concatenate(_map(_cross_block, tasks, workers))
    if len(_CACHE) > 64:
        _CACHE.clear()
    _CACHE[key] = draws
    return draws


def run_scenario(sc: Scenario, workers: int | None = None) -> McSummary:
    """Simulate a scenario and summarize it against its analytic counterparts."""
    sc.validate()
    draws = simulate(sc, workers)
    pop = sc.reference_population()
    common = dict(
        scenario_id=sc.id,
        design=sc.design_label,
        m=sc.design.m,
        eta=sc.design.eta,
        k_or_setting=sc.k_or_setting,
        R=sc.replicates,
        seed=sc.seed,
    )
    if not sc.population.dynamic:
        theta = pop.theta
        acs, init, n = draws[:, 0], draws[:, 1], draws[:, 2]
        v_init = est.initial_variance(pop, sc.design)
        base_summary = McSummary(
            **{**common, "scenario_id": f"{sc.id}/baseline", "design": replace(sc, tracing=NO_TRACING).design_label},
            mean_n=float(np.mean(draws[:, 4])),
            cv_mc=_sd(init) / theta,
            cv_analytic=math.sqrt(v_init) / theta,
            re_mc=1.0,
            re_analytic=1.0,
            mean_n_analytic=float(sc.design.m),
            mean_estimate=float(np.mean(init)),
            target=float(theta),
        )
        if sc.tracing == NO_TRACING:
            return base_summary
        v_acs = InclusionTable(sc.design, pop).acs_variance
        re_mc, re_se = ratio_of_variances(acs, init)
        return McSummary(
            **common,
            mean_n=float(np.mean(n)),
            cv_mc=_sd(acs) / theta,
            cv_analytic=math.sqrt(v_acs) / theta,
            re_mc=re_mc,
            re_analytic=v_acs / v_init if v_init else math.nan,
            re_mc_se=re_se,
            mean_n_analytic=expected_sample_size_analytic(pop, sc.design),
            mean_estimate=float(np.mean(acs)),
            target=float(theta),
            n_degenerate=int(draws[:, 3].sum()),
            baseline=base_summary,
        )
    col = {est.PANEL: 0, est.PACS: 1, est.IACS: 2}[sc.temporal]
    values = draws[:, col]
    v_panel = est.panel_variance(pop, sc.design)
    v = analytic_variance(sc, pop)
    re_mc, re_se = ratio_of_variances(values, draws[:, 0])
    return McSummary(
        **common,
        mean_n=float(np.mean(draws[:, 3 + col])),
        se_mc=_sd(values),
        se_analytic=math.sqrt(v),
        re_mc=re_mc if col else 1.0,
        re_analytic=v / v_panel if v_panel else math.nan,
        re_mc_se=re_se if col else 0.0,
        mean_estimate=float(np.mean(values)),
        target=pop.delta,
    )

