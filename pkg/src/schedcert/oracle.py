"""Slot-discretized LP lower bounds on the fractional objective.

An offline check that is independent of the dual machinery: time is cut
into width-h slots, schedules become per-slot work allocations, and

    min  sum_{j,t} c_{j,t} y_{j,t}
    s.t. sum_t y_{j,t} = p_j          (work conservation)
         sum_j y_{j,t} <= h*s        (slot capacity at speed s)
         y >= 0, y_{j,t} = 0 for slots starting before r_j

is solved exactly over rationals.  Two coefficient rules:

* midpoint mode (all costs linear): c_{j,t} = delta_j g(mid_t - shift_j)
  prices a slot-constant rate exactly (the slot-average identity), so
  the LP value equals the continuous fractional optimum whenever some
  optimal schedule is piecewise constant on the slot grid -- which holds
  for priority runs on release-aligned data, where completions land on
  the grid too.

* infimum mode (any nondecreasing cost): c_{j,t} = delta_j g(start_t -
  shift_j) under-prices every feasible allocation, so the LP value is a
  certified lower bound on the continuous optimum, non-decreasing as h
  shrinks (each refinement only raises coefficients).

Three solvers cross-check each other: a density-sweep greedy (optimal
for midpoint pricing by an exchange argument), successive shortest
paths on the transportation network (the workhorse), and a dense
two-phase simplex with Bland's rule (the reference, desk scale only).
All three run on Fractions regardless of the instance's mode; float
inputs are snapped to their exact binary rationals first and the value
is returned as a float again.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from heapq import heappop, heappush

from .errors import (
    InfeasibleError,
    InstanceError,
    OutOfTheoremScope,
    TooLarge,
    UnboundedError,
)
from .numerics import is_exactable, to_fraction

DEFAULT_MAX_JOBS = 10
DEFAULT_MAX_SLOTS = 64

METHODS = ("greedy", "ssp", "simplex")


def _as_fraction(x):
    return to_fraction(x) if is_exactable(x) else Fraction(float(x))


def _ceil(x):
    return -((-x) // 1)


@dataclass
class SlotLP:
    """One discretized instance: slot grid, capacities, and unit costs."""

    jobs: list  # core Job objects, instance order
    h: Fraction  # slot width
    s: Fraction  # machine speed
    T: int  # number of slots
    mode: str  # "midpoint" (exact, linear costs) or "infimum"
    cap: Fraction  # h * s, work capacity per slot
    supply: dict  # job id -> p_j as a Fraction
    costs: dict  # (job id, slot index) -> unit cost; absent = forbidden
    exact: bool  # instance data and all coefficients are rational

    def slot_start(self, t):
        return t * self.h


@dataclass
class OracleResult:
    value: object
    y: dict  # (job id, slot index) -> allocated work, nonzero entries
    lp: SlotLP
    method: str


def build_slot_lp(
    instance,
    h=1,
    s=1,
    *,
    max_jobs=DEFAULT_MAX_JOBS,
    max_slots=DEFAULT_MAX_SLOTS,
):
    """Discretize an instance onto a width-h slot grid at speed s.

    Releases must sit on the grid: a slot straddling a release would
    either price pre-release work or forbid a partially usable slot,
    and the second choice silently over-tightens the LP, breaking the
    lower-bound guarantee.  The horizon extends sum(p)/s past the last
    release, which always leaves room for all the work.
    """
    if instance.problem == "psp":
        raise OutOfTheoremScope(
            "the slot LP models one speed bound, not packing rows"
        )
    h = _as_fraction(h)
    s = _as_fraction(s)
    if not h > 0 or not s > 0:
        raise InstanceError("slot width and speed must be positive")
    jobs = list(instance.jobs)
    if len(jobs) > max_jobs:
        raise TooLarge(f"{len(jobs)} jobs exceed the oracle cap of {max_jobs}")
    releases = {}
    for j in jobs:
        r = _as_fraction(j.r)
        if (r / h).denominator != 1:
            raise InstanceError(
                f"release {j.r} of job {j.id} is not a multiple of the slot width"
            )
        releases[j.id] = r
    if jobs:
        total = sum(_as_fraction(j.p) for j in jobs)
        last = max(releases.values())
        T = int(_ceil((last + total / s) / h))
    else:
        T = 0
    if T > max_slots:
        raise TooLarge(f"{T} slots exceed the oracle cap of {max_slots}")
    linear = all(instance.effective_cost(j)[0].kind == "linear" for j in jobs)
    mode = "midpoint" if linear else "infimum"
    exact = instance.numeric.exact
    costs = {}
    supply = {}
    for j in jobs:
        g, shift = instance.effective_cost(j)
        shift = _as_fraction(shift)
        supply[j.id] = _as_fraction(j.p)
        first = int(releases[j.id] / h)
        for t in range(first, T):
            at = t * h - shift
            if mode == "midpoint":
                at += h / 2
            c = j.density * g.value(at)
            if not is_exactable(c):
                exact = False
                c = Fraction(float(c))
            else:
                c = to_fraction(c)
            costs[(j.id, t)] = c
    return SlotLP(
        jobs=jobs,
        h=h,
        s=s,
        T=T,
        mode=mode,
        cap=h * s,
        supply=supply,
        costs=costs,
        exact=exact,
    )


def lp_lower_bound(
    instance,
    h=1,
    s=1,
    *,
    method="auto",
    max_jobs=DEFAULT_MAX_JOBS,
    max_slots=DEFAULT_MAX_SLOTS,
):
    """Exact optimum of the slot LP: the offline bound at speed s.

    In midpoint mode (linear costs) the value equals the continuous
    fractional optimum on release-aligned data; in infimum mode it is a
    lower bound that only grows as h shrinks.  ``method`` picks the
    solver: "auto" routes midpoint LPs to the greedy sweep and the rest
    to successive shortest paths; "simplex" forces the reference solver.
    """
    lp = build_slot_lp(instance, h, s, max_jobs=max_jobs, max_slots=max_slots)
    if method == "auto":
        method = "greedy" if lp.mode == "midpoint" else "ssp"
    if method == "greedy":
        if lp.mode != "midpoint":
            raise InstanceError(
                "the greedy sweep is only optimal for linear (midpoint) pricing"
            )
        value, y = _solve_greedy(lp)
    elif method == "ssp":
        value, y = _solve_ssp(lp)
    elif method == "simplex":
        value, y = _solve_simplex(lp)
    else:
        raise InstanceError(f"unknown oracle method {method!r}")
    if not lp.exact:
        value = float(value)
        y = {key: float(v) for key, v in y.items()}
    return OracleResult(value=value, y=y, lp=lp, method=method)


# ---------------------------------------------------------------------------
# solver 1: density sweep (midpoint pricing only)


def _solve_greedy(lp):
    """Fill slots in time order, densest released job first.

    Optimal for midpoint pricing by the usual exchange argument: with
    c_{j,t} = delta_j (mid_t - r_j) the release part contributes the
    constant -sum_j delta_j r_j p_j, and swapping work between jobs a, b
    across slots t1 < t2 changes the rest by (delta_a - delta_b)(mid_t1
    - mid_t2), so densest-first into earlier slots can only win.  Ties
    in density are cost-neutral for the same reason.
    """
    remaining = dict(lp.supply)
    order = sorted(lp.jobs, key=lambda j: (-_as_fraction(j.density), j.id))
    y = {}
    value = Fraction(0)
    for t in range(lp.T):
        cap = lp.cap
        for j in order:
            if not cap > 0:
                break
            c = lp.costs.get((j.id, t))
            if c is None or not remaining[j.id] > 0:
                continue
            take = min(cap, remaining[j.id])
            y[(j.id, t)] = take
            value += c * take
            remaining[j.id] -= take
            cap -= take
    if any(v > 0 for v in remaining.values()):
        raise InfeasibleError("slot capacity cannot absorb the demanded work")
    return value, y


# ---------------------------------------------------------------------------
# solver 2: successive shortest paths (the workhorse)


def _solve_ssp(lp):
    """Min-cost transportation flow by successive shortest paths.

    Source -> job arcs carry p_j, job -> slot arcs carry the unit cost,
    slot -> sink arcs carry the capacity.  Dijkstra with node potentials
    keeps residual reduced costs nonnegative (all original costs are),
    and every augmentation saturates an arc, so the loop runs at most
    jobs + slots times.  Exact on Fractions.
    """
    jobs = lp.jobs
    if not jobs:
        return Fraction(0), {}
    n, T = len(jobs), lp.T
    size = n + T + 2
    src, snk = 0, size - 1
    graph = [[] for _ in range(size)]  # arc = [to, residual cap, cost, rev index]

    def add(u, v, cap, cost):
        graph[u].append([v, cap, cost, len(graph[v])])
        graph[v].append([u, Fraction(0), -cost, len(graph[u]) - 1])

    need = sum(lp.supply.values())
    for i, j in enumerate(jobs):
        add(src, 1 + i, lp.supply[j.id], Fraction(0))
        for t in range(T):
            c = lp.costs.get((j.id, t))
            if c is not None:
                add(1 + i, 1 + n + t, need, c)
    for t in range(T):
        add(1 + n + t, snk, lp.cap, Fraction(0))

    pot = [Fraction(0)] * size
    flow = Fraction(0)
    value = Fraction(0)
    while flow < need:
        dist = [None] * size
        prev = [None] * size  # (node, arc index) on the shortest path tree
        dist[src] = Fraction(0)
        heap = [(Fraction(0), src)]
        while heap:
            d, u = heappop(heap)
            if d > dist[u]:
                continue
            for ai, (v, cap, cost, _rev) in enumerate(graph[u]):
                if not cap > 0:
                    continue
                nd = d + cost + pot[u] - pot[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    prev[v] = (u, ai)
                    heappush(heap, (nd, v))
        if dist[snk] is None:
            raise InfeasibleError("slot capacity cannot absorb the demanded work")
        for v in range(size):
            if dist[v] is not None:
                pot[v] += dist[v]
        bottleneck = need - flow
        v = snk
        while v != src:
            u, ai = prev[v]
            bottleneck = min(bottleneck, graph[u][ai][1])
            v = u
        v = snk
        while v != src:
            u, ai = prev[v]
            arc = graph[u][ai]
            arc[1] -= bottleneck
            graph[v][arc[3]][1] += bottleneck
            value += arc[2] * bottleneck
            v = u
        flow += bottleneck
    y = {}
    for i, j in enumerate(jobs):
        for v, _cap, _cost, rev in graph[1 + i]:
            if 1 + n <= v < 1 + n + T:
                pushed = graph[v][rev][1]  # residual of the reverse arc
                if pushed > 0:
                    y[(j.id, v - 1 - n)] = pushed
    return value, y


# ---------------------------------------------------------------------------
# solver 3: dense two-phase simplex (the reference)


def _pivot(rows, basis, r, c):
    piv = rows[r][c]
    rows[r] = [v / piv for v in rows[r]]
    for i in range(len(rows)):
        if i != r and rows[i][c]:
            f = rows[i][c]
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
    basis[r] = c


def _simplex_min(rows, basis, cost, active):
    """Minimize cost . x over the tableau in place; Bland's rule.

    ``active`` bounds the columns allowed to enter (phase 2 shuts the
    artificials out this way).  Basis columns at or beyond ``active``
    are priced at zero, which is correct for leftover artificials: they
    sit at value zero after a feasible phase 1.  Returns the optimum.
    """
    m = len(rows)
    width = len(rows[0])
    z = [Fraction(0)] * width
    for k in range(active):
        z[k] = cost[k]
    for i in range(m):
        ck = cost[basis[i]] if basis[i] < active else Fraction(0)
        if ck:
            z = [a - ck * b for a, b in zip(z, rows[i])]
    while True:
        col = next((k for k in range(active) if z[k] < 0), None)
        if col is None:
            return -z[-1]
        pick = None
        for i in range(m):
            a = rows[i][col]
            if a > 0:
                ratio = rows[i][-1] / a
                if (
                    pick is None
                    or ratio < pick[0]
                    or (ratio == pick[0] and basis[i] < basis[pick[1]])
                ):
                    pick = (ratio, i)
        if pick is None:
            raise UnboundedError("the transportation polytope is bounded")
        f = z[col]
        _pivot(rows, basis, pick[1], col)
        z = [a - f * b for a, b in zip(z, rows[pick[1]])]


def _solve_simplex(lp):
    """Reference solver: two-phase dense simplex over Fractions."""
    jobs = lp.jobs
    if not jobs:
        return Fraction(0), {}
    n, T = len(jobs), lp.T
    pairs = sorted(lp.costs)
    col_of = {pair: k for k, pair in enumerate(pairs)}
    ny = len(pairs)
    ncols = ny + T  # structural columns: allocations, then slot slacks
    width = ncols + n + 1  # + one artificial per job row + rhs
    rows = []
    basis = []
    for i, j in enumerate(jobs):
        row = [Fraction(0)] * width
        for t in range(T):
            k = col_of.get((j.id, t))
            if k is not None:
                row[k] = Fraction(1)
        row[ncols + i] = Fraction(1)
        row[-1] = lp.supply[j.id]
        rows.append(row)
        basis.append(ncols + i)
    for t in range(T):
        row = [Fraction(0)] * width
        for j in jobs:
            k = col_of.get((j.id, t))
            if k is not None:
                row[k] = Fraction(1)
        row[ny + t] = Fraction(1)
        row[-1] = lp.cap
        rows.append(row)
        basis.append(ny + t)
    cost1 = [Fraction(0)] * ncols + [Fraction(1)] * n
    if _simplex_min(rows, basis, cost1, ncols + n) != 0:
        raise InfeasibleError("slot capacity cannot absorb the demanded work")
    for i in range(len(rows)):  # pivot degenerate artificials out
        if basis[i] >= ncols:
            col = next((k for k in range(ncols) if rows[i][k] != 0), None)
            if col is not None:
                _pivot(rows, basis, i, col)
    cost2 = [lp.costs[pair] for pair in pairs] + [Fraction(0)] * T
    value = _simplex_min(rows, basis, cost2, ncols)
    y = {}
    for i, b in enumerate(basis):
        if b < ny and rows[i][-1] != 0:
            y[pairs[b]] = rows[i][-1]
    return value, y
