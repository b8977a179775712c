"""Population graphs with case networks, and the synthetic populations used in the simulations.

A population is a simple undirected contact graph over ``N`` units (persons or
households).  Every unit carries a nonnegative case value ``y``; the case units
are partitioned into *case networks*, the connected components of the contact
graph restricted to case units.

Units are stored column-wise in numpy arrays so that populations of
``N = 10**5`` can be regenerated cheaply inside Monte Carlo loops.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ConfigurationError

PERSON = "person"
HOUSEHOLD = "household"
MODES = (PERSON, HOUSEHOLD)
TOPOLOGIES = ("star", "path", "complete")

# Household size distribution used for the household population (sizes 1..4).
DEFAULT_HOUSEHOLD_SIZES = (0.38, 0.30, 0.12, 0.20)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _frozen(a, dtype=np.int64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _normalize_edges(edges, N: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= N):
        raise ConfigurationError("edge endpoint outside 0..N-1")
    if np.any(e[:, 0] == e[:, 1]):
        raise ConfigurationError("self-loops are not allowed in a simple graph")
    e = np.sort(e, axis=1)
    if e.size:
        key = np.unique(e[:, 0] * N + e[:, 1])
        e = np.column_stack([key // N, key % N])
    return e


@dataclass(frozen=True, eq=False)
class CaseNetwork:
    """A maximal connected set of case units."""

    id: int
    members: np.ndarray
    y_total: int

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class PopulationGraph:
    """Immutable contact graph with per-unit case values and case networks.

    Parameters
    ----------
    y : array of int, shape (N,)
        Case value per unit; 0 for noncases.  In household mode a case
        household carries its size (all members infected).
    size : array of int, shape (N,)
        Household size per unit (all ones in person mode).
    edges : array of int, shape (E, 2)
        Undirected contacts, stored once with ``i < j``.
    networks : sequence of int arrays
        Partition of the case units into case networks.
    mode : {"person", "household"}
    """

    y: np.ndarray
    size: np.ndarray
    edges: np.ndarray
    networks: tuple
    mode: str = PERSON
    network_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown population mode {self.mode!r}")
        y = _frozen(self.y)
        N = len(y)
        size = _frozen(self.size) if self.size is not None else _frozen(np.ones(N))
        if len(size) != N:
            raise ConfigurationError("size and y must have the same length")
        if np.any(y < 0) or np.any(size < 1):
            raise ConfigurationError("y must be nonnegative and sizes positive")
        edges = _frozen(_normalize_edges(self.edges, N))
        network_of = np.full(N, -1, dtype=np.int64)
        nets: tuple = ()
        if len(self.networks):
            lens = np.fromiter((len(m) for m in self.networks), dtype=np.int64, count=len(self.networks))
            if np.any(lens == 0):
                raise ConfigurationError("case networks must be nonempty")
            flat = np.concatenate([np.asarray(m, dtype=np.int64) for m in self.networks])
            if flat.min() < 0 or flat.max() >= N:
                raise ConfigurationError("network member outside 0..N-1")
            if np.bincount(flat, minlength=N).max() > 1:
                raise ConfigurationError("a unit belongs to more than one network")
            owner = np.repeat(np.arange(len(lens)), lens)
            flat = flat[np.lexsort((flat, owner))]
            flat.setflags(write=False)
            ends = np.cumsum(lens).tolist()
            nets = tuple(flat[a:b] for a, b in zip([0] + ends[:-1], ends))
            network_of[flat] = owner
        if np.any((network_of >= 0) != (y > 0)):
            raise ConfigurationError("case units and network members must coincide")
        if self.mode == PERSON and np.any(y > 1):
            raise ConfigurationError("person-mode case values must be 0 or 1")
        if self.mode == HOUSEHOLD and np.any((y > 0) & (y != size)):
            raise ConfigurationError("a case household must have y equal to its size")
        network_of.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "networks", nets)
        object.__setattr__(self, "network_of", network_of)

    @classmethod
    def from_edges(cls, y, edges, size=None, mode: str = PERSON) -> "PopulationGraph":
        """Build a population, deriving the case networks from the contact graph."""
        y = np.asarray(y, dtype=np.int64)
        N = len(y)
        e = _normalize_edges(edges, N)
        return cls(y=y, size=size, edges=e, networks=case_components(y, e), mode=mode)

    @property
    def N(self) -> int:
        return len(self.y)

    @property
    def theta(self) -> int:
        """Population case total (person cases in household mode)."""
        return int(self.y.sum())

    @property
    def mu(self) -> float:
        return self.theta / self.N

    @property
    def n_case_units(self) -> int:
        return int(np.count_nonzero(self.y))

    @property
    def M(self) -> int:
        return len(self.networks)

    @cached_property
    def network_totals(self) -> np.ndarray:
        """Sum of ``y`` over the members of each network."""
        if not self.networks:
            return np.zeros(0, dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(self.network_sizes)[:-1]])
        return np.add.reduceat(self.y[np.concatenate(self.networks)], starts).astype(np.int64)

    @cached_property
    def network_sizes(self) -> np.ndarray:
        return np.array([len(m) for m in self.networks], dtype=np.int64)

    def network(self, idx: int) -> CaseNetwork:
        members = self.networks[idx]
        return CaseNetwork(id=idx, members=members, y_total=int(self.network_totals[idx]))

    def iter_networks(self) -> Iterable[CaseNetwork]:
        for idx in range(self.M):
            yield self.network(idx)

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        N = self.N
        if len(self.edges) == 0:
            return np.zeros(N + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(N + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=N), out=indptr[1:])
        return indptr, dst[order]

    def neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._csr
        return indices[indptr[i] : indptr[i + 1]]

    @cached_property
    def edge_units(self) -> np.ndarray:
        """Noncases adjacent to at least one case."""
        if len(self.edges) == 0:
            return np.zeros(0, dtype=np.int64)
        a, b = self.edges[:, 0], self.edges[:, 1]
        ca, cb = self.y[a] > 0, self.y[b] > 0
        hits = np.concatenate([b[ca & ~cb], a[cb & ~ca]])
        return np.unique(hits)

    def adjacent_networks(self, i: int) -> np.ndarray:
        """Ids of the case networks a unit is in contact with."""
        nb = self.network_of[self.neighbors(i)]
        return np.unique(nb[nb >= 0])

    def check(self) -> None:
        """Verify the structural invariants that are too costly for the constructor.

        Raises ConfigurationError when a network is not connected within its own
        members or when an edge joins two different networks.
        """
        a, b = self.network_of[self.edges[:, 0]], self.network_of[self.edges[:, 1]]
        if np.any((a >= 0) & (b >= 0) & (a != b)):
            raise ConfigurationError("an edge connects two distinct case networks")
        recovered = case_components(self.y, self.edges)
        if sorted(tuple(m) for m in recovered) != sorted(tuple(m) for m in self.networks):
            raise ConfigurationError("networks are not the connected components of case units")


def case_components(y: np.ndarray, edges: np.ndarray) -> tuple:
    """Connected components of the case units, ordered by smallest member."""
    y = np.asarray(y)
    cases = np.flatnonzero(y > 0)
    if len(cases) == 0:
        return ()
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    keep = (y[e[:, 0]] > 0) & (y[e[:, 1]] > 0) if len(e) else np.zeros(0, dtype=bool)
    pos = np.full(len(y), -1, dtype=np.int64)
    pos[cases] = np.arange(len(cases))
    ce = e[keep]
    n = len(cases)
    g = sparse.coo_matrix(
        (np.ones(len(ce)), (pos[ce[:, 0]], pos[ce[:, 1]])), shape=(n, n)
    )
    _, labels = connected_components(g, directed=False)
    groups: dict[int, list[int]] = {}
    for unit, lab in zip(cases.tolist(), labels.tolist()):
        groups.setdefault(lab, []).append(unit)
    return tuple(np.array(g_, dtype=np.int64) for g_ in sorted(groups.values(), key=min))


def network_edges(members: Sequence[int], topology: str = "star") -> list[tuple[int, int]]:
    """Contact edges that make ``members`` connected; ``members[0]`` is the star hub."""
    members = [int(i) for i in members]
    if topology == "star":
        return [(members[0], j) for j in members[1:]]
    if topology == "path":
        return list(zip(members[:-1], members[1:]))
    if topology == "complete":
        return [(a, b) for idx, a in enumerate(members) for b in members[idx + 1 :]]
    raise ConfigurationError(f"unknown network topology {topology!r}")


def _ragged_edges(nets: Sequence[np.ndarray], topology: str) -> np.ndarray:
    """Edges of every network in ``nets``; the star case is vectorized."""
    if topology != "star" or not len(nets):
        out = [e for members in nets for e in network_edges(members, topology)]
        return np.asarray(out, dtype=np.int64).reshape(-1, 2)
    lens = np.array([len(m) for m in nets])
    flat = np.concatenate([np.asarray(m, dtype=np.int64) for m in nets])
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    hubs = np.repeat(flat[starts], lens)
    leaf = np.ones(len(flat), dtype=bool)
    leaf[starts] = False
    return np.column_stack([hubs[leaf], flat[leaf]])


def _rank_within(owner: np.ndarray) -> np.ndarray:
    """Occurrence index of each entry among earlier entries with the same owner."""
    idx = np.argsort(owner, kind="stable")
    sorted_owner = owner[idx]
    first = np.searchsorted(sorted_owner, sorted_owner, side="left")
    rank = np.empty(len(owner), dtype=np.int64)
    rank[idx] = np.arange(len(owner)) - first
    return rank


def _check_counts(N: int, theta: int, k: int) -> None:
    if N < 1 or theta < 0 or k < 1:
        raise ConfigurationError("need N >= 1, theta >= 0 and k >= 1")
    if theta % k:
        raise ConfigurationError(f"k={k} does not divide theta={theta}")
    if theta > N:
        raise ConfigurationError(f"theta={theta} exceeds N={N}")


def _equal_network_structure(rng, N, theta, k, topology, edge_nodes_per_network):
    if topology not in TOPOLOGIES:
        raise ConfigurationError(f"unknown network topology {topology!r}")
    M = theta // k
    if theta + M * edge_nodes_per_network > N:
        raise ConfigurationError("not enough noncases for the requested edge nodes")
    cases = rng.choice(N, size=theta, replace=False).reshape(M, k) if theta else np.zeros((0, k), dtype=np.int64)
    edges = [_ragged_edges(list(cases), topology)]
    if edge_nodes_per_network:
        pool = np.ones(N, dtype=bool)
        pool[cases.ravel()] = False
        extra = rng.choice(np.flatnonzero(pool), size=M * edge_nodes_per_network, replace=False)
        edges.append(np.column_stack([np.repeat(cases[:, 0], edge_nodes_per_network), extra]))
    return cases, np.concatenate(edges)


def build_equal_network_population(
    N: int,
    theta: int,
    k: int,
    rng_seed=None,
    *,
    topology: str = "star",
    edge_nodes_per_network: int = 0,
) -> PopulationGraph:
    """Person population with ``theta / k`` case networks of exactly ``k`` cases each.

    Case units are a uniform random subset of the ids.  ``edge_nodes_per_network``
    noncases are attached to each network hub when requested.
    """
    _check_counts(N, theta, k)
    struct_rng, _ = (np.random.default_rng(s) for s in as_seed_sequence(rng_seed).spawn(2))
    cases, edges = _equal_network_structure(struct_rng, N, theta, k, topology, edge_nodes_per_network)
    y = np.zeros(N, dtype=np.int64)
    y[cases.ravel()] = 1
    return PopulationGraph(y=y, size=np.ones(N, dtype=np.int64), edges=edges, networks=tuple(cases), mode=PERSON)


def build_household_population(
    N: int,
    theta: int,
    k: int,
    size_dist: Sequence[float] = DEFAULT_HOUSEHOLD_SIZES,
    rng_seed=None,
    *,
    topology: str = "star",
    edge_nodes_per_network: int = 0,
) -> PopulationGraph:
    """Household population: ``N`` households, ``theta`` case households in networks of ``k``.

    Household sizes are drawn independently from ``size_dist`` (probabilities of
    sizes 1, 2, ...) for case and noncase households alike, and a case household
    has every member infected.  The network structure uses the same random stream
    as :func:`build_equal_network_population`, so a degenerate size distribution
    reproduces the person population for the same seed.
    """
    _check_counts(N, theta, k)
    p = np.asarray(size_dist, dtype=float)
    if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ConfigurationError("size_dist must be a probability vector summing to 1")
    struct_rng, size_rng = (np.random.default_rng(s) for s in as_seed_sequence(rng_seed).spawn(2))
    cases, edges = _equal_network_structure(struct_rng, N, theta, k, topology, edge_nodes_per_network)
    sizes = size_rng.choice(np.arange(1, len(p) + 1), size=N, p=p)
    y = np.zeros(N, dtype=np.int64)
    flat = cases.ravel()
    y[flat] = sizes[flat]
    return PopulationGraph(y=y, size=sizes, edges=edges, networks=tuple(cases), mode=HOUSEHOLD)


# ---------------------------------------------------------------------------
# Two time points


@dataclass(frozen=True)
class DynamicsSetting:
    """Numbers and sizes of case networks at two time points.

    ``t1`` is ``(count, size)`` of the networks at the first time point.  At the
    second time point ``growing`` networks reach size ``k+``, ``shrinking``
    networks drop to ``k-`` and ``emerging`` networks appear among former
    noncases.  With ``random_shrink`` the shrinking cell is an upper bound: the
    residual case total is spread at random over the non-growing networks.
    """

    label: str
    t1: tuple[int, int]
    growing: tuple[int, int] = (0, 0)
    shrinking: tuple[int, int] = (0, 0)
    emerging: tuple[int, int] = (0, 0)
    random_shrink: bool = False

    @property
    def theta1(self) -> int:
        return self.t1[0] * self.t1[1]

    def validate(self, theta2: int | None = None) -> None:
        count, k = self.t1
        g, kp = self.growing
        s, km = self.shrinking
        e, ke = self.emerging
        if min(count, k, g, kp, s, km, e, ke) < 0:
            raise ConfigurationError(f"{self.label}: negative count or size")
        if g and kp < k:
            raise ConfigurationError(f"{self.label}: growing networks must not shrink")
        if s and km > k:
            raise ConfigurationError(f"{self.label}: shrinking networks must not grow")
        if g + s != count:
            raise ConfigurationError(f"{self.label}: growing + shrinking must equal the t=1 count")
        theta2 = self.theta1 if theta2 is None else theta2
        fixed = g * kp + e * ke
        if self.random_shrink:
            residual = theta2 - fixed
            if residual < 0 or residual > s * km:
                raise ConfigurationError(f"{self.label}: residual total {residual} cannot be assigned")
        elif fixed + s * km != theta2:
            raise ConfigurationError(f"{self.label}: t=2 case total differs from {theta2}")


# Constant population size 10**5 and case total 10**3 at both time points.
TABLE3_SETTINGS = {
    s.label: s
    for s in (
        DynamicsSetting("L1", (10, 100), growing=(2, 180), shrinking=(8, 80)),
        DynamicsSetting("L2", (10, 100), shrinking=(10, 80), emerging=(2, 100)),
        DynamicsSetting("L3", (10, 100), shrinking=(10, 90), emerging=(5, 20)),
        DynamicsSetting("M1", (100, 10), growing=(10, 46), shrinking=(90, 6)),
        DynamicsSetting("M2", (100, 10), shrinking=(100, 6), emerging=(10, 40)),
        DynamicsSetting("M3", (100, 10), shrinking=(100, 9), emerging=(10, 10)),
        DynamicsSetting("S1", (500, 2), growing=(10, 42), shrinking=(490, 2), random_shrink=True),
        DynamicsSetting("S2", (500, 2), shrinking=(500, 2), emerging=(10, 40), random_shrink=True),
        DynamicsSetting("S3", (500, 2), shrinking=(500, 2), emerging=(50, 2), random_shrink=True),
    )
}


@dataclass(frozen=True, eq=False)
class TwoWavePopulation:
    """The same unit set observed at two time points."""

    base: PopulationGraph
    evolved: PopulationGraph
    change: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.base.N != self.evolved.N:
            raise ConfigurationError("both time points must share the unit set")
        if self.base.mode != self.evolved.mode:
            raise ConfigurationError("both time points must use the same mode")
        d = (self.evolved.y > 0).astype(np.int64) - (self.base.y > 0).astype(np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "change", d)

    @property
    def N(self) -> int:
        return self.base.N

    @property
    def delta(self) -> float:
        """True change in prevalence."""
        return (self.evolved.theta - self.base.theta) / self.N

    @property
    def lambda_plus(self) -> float:
        """Proportion of new cases."""
        return int(np.count_nonzero(self.change > 0)) / self.N

    @property
    def lambda_minus(self) -> float:
        """Proportion of closed cases."""
        return int(np.count_nonzero(self.change < 0)) / self.N


SHRINK_RULES = ("uniform", "sequential")


def _retained_members(rng, nets: Sequence[np.ndarray], cap: int, residual: int | None, rule: str) -> list[np.ndarray]:
    """Cases kept by each non-growing network at the second time point.

    With ``residual=None`` every network keeps a uniform random subset of
    ``cap`` members.  Otherwise ``residual`` cases are kept in total:
    ``uniform`` keeps a uniformly random subset of the former cases, skipping a
    case once its network holds ``cap``; ``sequential`` hands out cases one at a
    time, each to a uniformly chosen network that is not yet full, and then
    draws the kept members within each network.
    """
    n = len(nets)
    if n == 0:
        return []
    lens = np.array([len(m) for m in nets])
    flat = np.concatenate(nets)
    owner = np.repeat(np.arange(n), lens)
    if rule not in SHRINK_RULES:
        raise ConfigurationError(f"unknown shrink rule {rule!r}")
    if residual is not None and rule == "sequential":
        sizes = np.zeros(n, dtype=np.int64)
        open_ = list(range(n))
        for _ in range(residual):
            pos = int(rng.integers(len(open_)))
            j = open_[pos]
            sizes[j] += 1
            if sizes[j] == min(cap, lens[j]):
                open_[pos] = open_[-1]
                open_.pop()
        perm = rng.permutation(len(flat))
        keep = np.zeros(len(flat), dtype=bool)
        keep[perm] = _rank_within(owner[perm]) < sizes[owner[perm]]
    else:
        perm = rng.permutation(len(flat))
        eligible = _rank_within(owner[perm]) < cap
        if residual is not None:
            eligible &= np.cumsum(eligible) <= residual
        keep = np.zeros(len(flat), dtype=bool)
        keep[perm] = eligible
    sel = np.flatnonzero(keep)
    ends = np.cumsum(np.bincount(owner[sel], minlength=n)).tolist()
    kept = flat[sel]
    return [kept[a:b] for a, b in zip([0] + ends[:-1], ends)]


def evolve_population(
    base: PopulationGraph,
    setting: DynamicsSetting,
    rng_seed=None,
    *,
    topology: str = "star",
    shrink_rule: str = "uniform",
) -> TwoWavePopulation:
    """Evolve a population of equal-size networks to the second time point.

    Growing networks keep all their members and annex fresh former noncases;
    shrinking networks keep a uniform random subset of their members, the rest
    becoming closed cases; emerging networks are formed from former noncases.
    The second-time contact graph consists of the networks' own edges only.

    For settings with ``random_shrink`` the non-growing networks share the
    residual case total at random; see ``shrink_rule``.  Networks left with no
    case disappear.
    """
    if base.mode != PERSON:
        raise ConfigurationError("two-wave evolution is defined for person populations")
    count, k = setting.t1
    if base.M != count or np.any(base.network_sizes != k):
        raise ConfigurationError(f"base population does not match setting {setting.label} at t=1")
    setting.validate(theta2=base.theta)
    rng = np.random.default_rng(as_seed_sequence(rng_seed))
    g, kp = setting.growing
    s, km = setting.shrinking
    e, ke = setting.emerging

    order = rng.permutation(count)
    grow_idx, keep_idx = order[:g], order[g:]
    need = g * (kp - k) + e * ke
    pool = np.flatnonzero(base.y == 0)
    if need > len(pool):
        raise ConfigurationError(f"setting {setting.label} needs {need} fresh units, only {len(pool)} noncases")
    fresh = rng.choice(pool, size=need, replace=False)

    nets: list[np.ndarray] = []
    cursor = 0
    for idx in grow_idx:
        add = fresh[cursor : cursor + kp - k]
        cursor += kp - k
        nets.append(np.concatenate([base.networks[idx], add]))
    residual = base.theta - g * kp - e * ke if setting.random_shrink else None
    kept = _retained_members(rng, [base.networks[i] for i in keep_idx], km, residual, shrink_rule)
    nets.extend(m for m in kept if len(m))
    for _ in range(e):
        nets.append(fresh[cursor : cursor + ke])
        cursor += ke

    y2 = np.zeros(base.N, dtype=np.int64)
    if nets:
        y2[np.concatenate(nets)] = 1
    edges = _ragged_edges(nets, topology)
    evolved = PopulationGraph(y=y2, size=base.size, edges=edges, networks=tuple(nets), mode=PERSON)
    return TwoWavePopulation(base=base, evolved=evolved)


# ---------------------------------------------------------------------------
# JSON snapshots


def to_json(pop: PopulationGraph) -> str:
    """Serialize a population as ``{mode, N, units, edges, networks}``.

    Output is deterministic: identical populations give identical bytes.
    """
    doc = {
        "mode": pop.mode,
        "N": pop.N,
        "units": [
            {"id": i, "y": int(y), "size": int(s)}
            for i, (y, s) in enumerate(zip(pop.y.tolist(), pop.size.tolist()))
        ],
        "edges": pop.edges.tolist(),
        "networks": [m.tolist() for m in pop.networks],
    }
    return json.dumps(doc, separators=(",", ":"))


def from_json(text: str) -> PopulationGraph:
    doc = json.loads(text)
    try:
        N = int(doc["N"])
        units = sorted(doc["units"], key=lambda u: u["id"])
        if [u["id"] for u in units] != list(range(N)):
            raise ConfigurationError("unit ids must be exactly 0..N-1")
        y = [u["y"] for u in units]
        size = [u.get("size", 1) for u in units]
        pop = PopulationGraph(
            y=y, size=size, edges=doc.get("edges", []), networks=doc["networks"], mode=doc["mode"]
        )
    except KeyError as exc:
        raise ConfigurationError(f"population document lacks key {exc}") from None
    pop.check()
    return pop
