"""Dual curves, their upper envelope, and the dual-assignment procedures.

Every scheduling family in this package certifies its guarantee through
per-job dual curves.  A curve is a non-increasing function of one of three
forms (flow, completion, packing-surrogate):

    gamma_j(t) = lam_j - delta_j * g(t - r_j)     defined on [r_j, oo)
    gamma_j(t) = lam_j - delta_j * g(t)           defined on [r_j, oo)
    mu'_j(t)   = lam'_j - (delta_j / b_j)(t - r_j) defined on [r_j, oo)

and the machine-side dual is the envelope gamma(t) = max(0, max_j
gamma_j(t)).  The procedures below assign the lam_j values at release
events so the resulting dual solution is feasible and its objective
matches (or provably bounds) the schedule's cost.  All of them are pure
functions over plain tuples; ``maintain_duals`` replays a recorded engine
run and keeps the per-event snapshot log that the verification layer
audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .costs import CONCAVE, CONVEX, LINEAR, LinearCost
from .errors import (
    InstanceError,
    IterationCapExceeded,
    NegativeDual,
    NoSuccessor,
    UnsupportedShape,
)
from .numerics import Numeric, exact_div as _exact_div
from .schedulers import ETA, _marginal, jdgfp_rates, run_psp_engine

# construction names used by DualState / maintain_duals
CHAIN = "completion-chain"            # backward chain over projected completions
CHAIN_CONCAVE = "concave-reduction"   # chain init + event-driven reduction
SUCCESSOR = "successor-chain"         # completion-form curves, successor rule
EQUAL_DENSITY = "equal-density-floor"  # infimum recurrence with floor rule
PACKING = "packing-surrogate"         # chain on the scaled single-machine view
RATE_CURVE = "rate-curve"             # quadrature duals, envelope identically 0

_UNIT_LINEAR = LinearCost(1)


# ---------------------------------------------------------------------------
# Curves


@dataclass(frozen=True)
class DualCurve:
    """gamma(t) = lam - delta * g(t - shift), active for t >= start.

    ``shift`` is the job's release for flow curves and 0 for completion
    curves; ``start`` is always the release (curves of unreleased jobs do
    not exist yet).  The curve is non-increasing because g is.
    """

    jid: object
    lam: object
    delta: object
    g: object
    shift: object
    start: object

    def value(self, t):
        return self.lam - self.delta * self.g.value(t - self.shift)

    def defined_at(self, t):
        return t >= self.start

    def integral(self, a, b):
        """Integral of the raw (unclamped) curve over [a, b]."""
        ga = self.g.antiderivative(a - self.shift)
        gb = self.g.antiderivative(b - self.shift)
        return self.lam * (b - a) - self.delta * (gb - ga)

    def with_lam(self, lam):
        return replace(self, lam=lam)


def curve_positive_end(curve, numeric):
    """Earliest time from which the curve stays <= 0; None if it never sinks."""
    if numeric.leq(curve.lam, 0):
        return curve.start
    target = _exact_div(curve.lam, curve.delta)
    try:
        t0 = curve.g.inverse(target, exact=numeric.exact)
    except ValueError:
        t0 = curve.g.inverse(target, exact=False)
    if t0 is None:
        return None
    return curve.shift + t0


# ---------------------------------------------------------------------------
# Envelope


def _stationary_points(c1, c2):
    """Interior points where (gamma_1 - gamma_2)' may change sign.

    Between two consecutive grid points the envelope walk relies on every
    pairwise difference being monotone.  Differences of same-shape curves
    with equal shifts or equal densities are monotone outright, and
    piecewise-affine shapes are affine between (already gridded) kinks;
    the remaining power/log cases have a single closed-form stationary
    point, returned here so the grid can split at it.
    """
    g1, g2 = c1.g, c2.g
    if g1.to_json() != g2.to_json():
        return []  # one problem, one shape: mixed pairs never occur
    kind = g1.kind
    if kind in ("linear", "pwl"):
        return []
    if c1.shift == c2.shift or c1.delta == c2.delta:
        return []  # difference monotone: single g-term or common-density gap
    lo = max(c1.start, c2.start)
    if kind == "log":
        # d1/(1+t-s1) = d2/(1+t-s2) is affine in t
        d1, d2 = c1.delta, c2.delta
        t = _exact_div(d2 - d1 + d1 * c2.shift - d2 * c1.shift, d1 - d2)
        return [t] if t > lo else []
    if kind == "power":
        c = g1.c
        if c == 1:
            return []
        # delta_1 (t-s1)^(c-1) = delta_2 (t-s2)^(c-1)  =>  t-s1 = K (t-s2)
        ratio = _exact_div(c2.delta, c1.delta)
        from fractions import Fraction

        try:
            e = Fraction(1, 1) / (Fraction(c) - 1)
        except (TypeError, ValueError):
            e = None
        if e is not None and e.denominator == 1 and not isinstance(ratio, float):
            K = Fraction(ratio) ** int(e)
        else:
            K = float(ratio) ** (1.0 / (float(c) - 1.0))
        if K == 1:
            return []
        t = _exact_div(c1.shift - K * c2.shift, 1 - K)
        return [t] if t > lo else []
    return []


def _affine_root(u, v, du, dv):
    return u + _exact_div((v - u) * du, du - dv)


def _cross(ca, cb, u, v, numeric):
    """Point in (u, v) where the two (possibly zero-line) curves cross.

    Within a grid cell their difference is monotone, so the crossing is
    unique; it is found in closed form where the shape allows and by
    float bisection otherwise.
    """

    def d(t):
        a = ca.value(t) if ca is not None else 0
        b = cb.value(t) if cb is not None else 0
        return a - b

    du, dv = d(u), d(v)
    mid = _exact_div(u + v, 2)
    dm = d(mid)
    straight = du - 2 * dm + dv
    if numeric.exact:
        affine = straight == 0
    else:
        affine = abs(straight) <= 1e-12 * max(abs(du), abs(dv), 1.0)
    if affine and du != dv:
        return _affine_root(u, v, du, dv)
    if (ca is None) != (cb is None):
        # crossing with the zero line: gamma(t) = 0 at shift + g^{-1}(lam/delta)
        single = ca if cb is None else cb
        target = _exact_div(single.lam, single.delta)
        try:
            x = single.g.inverse(target, exact=numeric.exact)
        except ValueError:
            x = single.g.inverse(target, exact=False)
        if x is not None:
            t = single.shift + x
            if u < t < v:
                return t
    if ca is not None and cb is not None and ca.shift == cb.shift:
        # difference is (lam_a - lam_b) - (delta_a - delta_b) g(t - shift)
        dd = ca.delta - cb.delta
        if dd != 0:
            target = _exact_div(ca.lam - cb.lam, dd)
            try:
                t0 = ca.g.inverse(target, exact=numeric.exact)
            except ValueError:
                t0 = ca.g.inverse(target, exact=False)
            if t0 is not None:
                t = ca.shift + t0
                if u < t < v:
                    return t
    # monotone difference: bisect in float
    lo, hi, flo = float(u), float(v), float(du)
    for _ in range(120):
        m = (lo + hi) / 2.0
        fm = float(d(m))
        if (fm > 0) == (flo > 0):
            lo = m
        else:
            hi = m
    return (lo + hi) / 2.0


class Envelope:
    """Upper envelope max(0, max_j gamma_j(t)) of a set of dual curves.

    The time axis is subdivided at curve starts, shifted cost kinks,
    caller-supplied extra points, and closed-form stationary points of
    pairwise differences; inside a cell every pairwise difference is
    monotone, so endpoint comparisons decide dominance, and a winner
    change pins down a crossing for the walk to split at.  With exact
    arithmetic and catalog shapes the walk is exact.
    """

    def __init__(self, curves, numeric, extra=()):
        self.curves = list(curves)
        self.numeric = numeric
        self.extra = list(extra)
        self._by_id = {c.jid: c for c in self.curves}

    def value(self, t):
        best = 0
        for c in self.curves:
            if c.defined_at(t):
                v = c.value(t)
                if v > best:
                    best = v
        return best

    def report(self, t):
        """(envelope value, id of a dominant curve or None for the zero line)."""
        num = self.numeric
        best = self.value(t)
        if num.eq(best, 0):
            # prefer naming a curve that touches zero over the bare zero line
            for c in sorted(self.curves, key=lambda c: str(c.jid)):
                if c.defined_at(t) and num.eq(c.value(t), best):
                    return best, c.jid
            return best, None
        for c in sorted(self.curves, key=lambda c: str(c.jid)):
            if c.defined_at(t) and num.eq(c.value(t), best):
                return best, c.jid
        return best, None

    # -- grid construction -------------------------------------------------

    def _grid(self, a, b):
        pts = {a, b}
        for c in self.curves:
            if a < c.start < b:
                pts.add(c.start)
            for bp in c.g.breakpoints():
                t = bp + c.shift
                if a < t < b:
                    pts.add(t)
        for t in self.extra:
            if a < t < b:
                pts.add(t)
        n = len(self.curves)
        for i in range(n):
            for j in range(i + 1, n):
                for t in _stationary_points(self.curves[i], self.curves[j]):
                    if a < t < b:
                        pts.add(t)
        return sorted(pts)

    def _winners(self, active, t):
        num = self.numeric
        best = 0
        vals = {}
        for c in active:
            v = c.value(t)
            vals[c.jid] = v
            if v > best:
                best = v
        out = set()
        if num.eq(best, 0) or num.leq(best, 0):
            out.add(None)
        for jid, v in vals.items():
            if num.eq(v, best):
                out.add(jid)
        return out

    def _resolve(self, u, v, depth=0):
        """Cells (u', v', winner-id-or-None) covering [u, v]."""
        active = [c for c in self.curves if c.start <= u]
        if not active:
            return [(u, v, None)]
        wu = self._winners(active, u)
        wv = self._winners(active, v)
        common = wu & wv
        if common:
            curve_ids = sorted((j for j in common if j is not None), key=str)
            return [(u, v, curve_ids[0] if curve_ids else None)]
        if depth > 80:
            raise InstanceError("envelope walk failed to split a cell")
        pick_u = sorted((j for j in wu if j is not None), key=str)
        pick_v = sorted((j for j in wv if j is not None), key=str)
        ca = self._by_id[pick_u[0]] if pick_u else None
        cb = self._by_id[pick_v[0]] if pick_v else None
        m = _cross(ca, cb, u, v, self.numeric)
        if not (u < m < v):
            m = _exact_div(u + v, 2)
        return self._resolve(u, m, depth + 1) + self._resolve(m, v, depth + 1)

    def cells(self, a, b):
        if b <= a:
            return []
        out = []
        grid = self._grid(a, b)
        for u, v in zip(grid, grid[1:]):
            out.extend(self._resolve(u, v))
        return out

    def spans(self, a, b):
        """Like cells(), with adjacent same-winner cells merged."""
        merged = []
        for u, v, w in self.cells(a, b):
            if merged and merged[-1][2] == w and merged[-1][1] == u:
                merged[-1] = (merged[-1][0], v, w)
            else:
                merged.append((u, v, w))
        return merged

    def integral(self, a, b):
        total = 0
        for u, v, w in self.cells(a, b):
            if w is not None:
                total += self._by_id[w].integral(u, v)
        return total


# ---------------------------------------------------------------------------
# Procedures


def procedure1_assign(pending, g, numeric):
    """Backward dual assignment along projected completions.

    ``pending`` is a list of (jid, r, delta, C) sorted by increasing C.
    The last job's curve is zero at its own completion; going backward,
    consecutive curves meet at the earlier job's completion:

        lam_k = delta_k g(C_k - r_k)
        lam_j = lam_{j+1} - delta_{j+1} g(C_j - r_{j+1}) + delta_j g(C_j - r_j)

    Returns {jid: lam}.  Raises NegativeDual if any lam lands below zero,
    which signals a policy/shape combination this chain does not support.
    """
    if not pending:
        return {}
    out = {}
    jid, r, d, c = pending[-1]
    lam = d * g.value(c - r)
    out[jid] = lam
    for i in range(len(pending) - 2, -1, -1):
        jid, r, d, c = pending[i]
        njid, nr, nd, nc = pending[i + 1]
        if c - nr < 0:
            raise InstanceError(
                f"job {njid} released after completion C_{jid}: not a pending chain"
            )
        lam = lam - nd * g.value(c - nr) + d * g.value(c - r)
        out[jid] = lam
    for jid, value in out.items():
        if not numeric.nonneg(value):
            raise NegativeDual(f"lambda_{jid} = {value} < 0 from the completion chain")
    return out


def procedure2_update_past(past, pending, deltas, g, numeric):
    """Propagate pending increments to jobs completed in the busy interval.

    ``past``    -- (jid, r, delta, C, lam_before), completed, any order;
    ``pending`` -- (jid, r, delta, C, lam_before) for pending jobs that
                   already had a curve before this event (the newly
                   released job has none and is simply absent);
    ``deltas``  -- {jid: increment} for the pending representatives.

    Scanning completed jobs by decreasing completion time, each job a is
    matched to the job b whose pre-update curve passes through a's curve
    value at C_a (requiring r_b <= C_a < C_b; ties pick the smallest C_b)
    and joins b's set; afterwards every member of a set gets its pending
    representative's increment.  Returns ({jid: lam_after}, sets) where
    sets maps representative -> member list (representative first).

    A completed job whose own curve is zero at its completion may have no
    successor: its chain ended there (the machine only stayed busy through
    a zero-length gap, or the next job was released exactly then).  Such a
    job anchors its own set and keeps a zero increment, and earlier jobs
    of its stretch match into that set as usual.  A job with a *positive*
    curve value and no successor is a genuine defect and raises
    NoSuccessor.
    """
    info = {}
    rep = {}
    members = {}
    for jid, r, d, c, lam in pending:
        info[jid] = (r, d, c, lam)
        rep[jid] = jid
        members[jid] = [jid]
    for jid, r, d, c, lam in past:
        info[jid] = (r, d, c, lam)

    def curve_at(jid, t):
        r, d, _c, lam = info[jid]
        return lam - d * g.value(t - r)

    for a_jid, a_r, a_d, a_c, a_lam in sorted(past, key=lambda x: x[3], reverse=True):
        va = a_lam - a_d * g.value(a_c - a_r)
        cands = []
        for b_jid, (b_r, _b_d, b_c, _b_lam) in info.items():
            if b_jid == a_jid or not (b_r <= a_c < b_c):
                continue
            if numeric.eq(va, curve_at(b_jid, a_c)):
                cands.append((b_c, b_jid))
        if not cands:
            if numeric.eq(va, 0):
                rep[a_jid] = a_jid  # its dual interval ended at C_a
                members[a_jid] = [a_jid]
                continue
            raise NoSuccessor(
                f"job {a_jid}: no curve passes through gamma({a_c}) = {va}"
            )
        _, b_jid = min(cands)
        rep[a_jid] = rep[b_jid]
        members[rep[b_jid]].append(a_jid)

    out = {}
    for jid, _r, _d, _c, lam in past:
        inc = deltas.get(rep[jid], 0)
        value = lam + inc
        if not numeric.nonneg(value):
            raise NegativeDual(f"lambda_{jid} = {value} < 0 after the past update")
        out[jid] = value
    return out, members


def procedure3_gcp(released, g, pieces, numeric):
    """Completion-form duals recomputed over every released job.

    ``released`` is (jid, r, delta, C) for all released jobs (projected C
    for pending ones); ``pieces`` must cover the realized prefix and the
    projection so the job running right after each completion can be
    found.  A job followed by idle time (or by nothing) closes its busy
    interval and its curve is zero at its own completion; otherwise its
    curve meets the successor's there:

        lam_j = lam_j' + (delta_j - delta_j') g(C_j)
    """
    order = sorted(released, key=lambda x: x[3])
    nonidle = sorted((p for p in pieces if not p.idle), key=lambda p: p.t1)

    def running_after(t):
        for p in nonidle:
            if numeric.eq(p.t1, t):
                return next(iter(p.rates))
            if p.t1 > t:
                break
        return None

    lam = {}
    delta_of = {jid: d for jid, _r, d, _c in order}
    for jid, _r, d, c in reversed(order):
        succ = running_after(c)
        if succ is None:
            lam[jid] = d * g.value(c)
        else:
            lam[jid] = lam[succ] + (d - delta_of[succ]) * g.value(c)
        if not numeric.nonneg(lam[jid]):
            raise NegativeDual(f"lambda_{jid} = {lam[jid]} < 0 from the successor chain")
    return lam


def procedure4_equal_density(released, g, delta, numeric):
    """Infimum-based duals for release-order service with one density.

    ``released`` is (jid, r, C) sorted by increasing C; a gap
    r_{j+1} > C_j splits busy intervals and restarts the recurrence.
    Within an interval,

        lam_k = delta g(C_k - r_k)
        lam_j = lam_{j+1} + delta * inf_{t >= C_j} [g(t - r_j) - g(t - r_{j+1})]

    raised to delta g(C_j - r_j) whenever the recurrence would push the
    curve below zero at the job's own completion.  Returns ({jid: lam},
    ids where the floor rule fired).
    """
    out = {}
    floored = set()
    nxt = None  # (jid, r, C) of the later job in the same busy interval
    for jid, r, c in reversed(list(released)):
        if nxt is None or numeric.lt(c, nxt[1]):
            lam = delta * g.value(c - r)
        else:
            inf_val = g.shifted_diff_inf(r, nxt[1], c)
            lam = out[nxt[0]] + delta * inf_val
            if numeric.lt(lam, delta * g.value(c - r)):
                lam = delta * g.value(c - r)
                floored.add(jid)
        out[jid] = lam
        nxt = (jid, r, c)
    return out, floored


def procedure5_concave(pending, g, numeric, cap_factor=10):
    """Event-driven continuous reduction for concave shapes.

    ``pending`` is (jid, r, delta, C) sorted by increasing C.  Every lam
    starts at the value making its curve zero at the last completion C_k;
    the loop over j = 2..k then continuously reduces the lam of the
    active set A = {a < j : gamma_a(C_{j-1}) > lam_j}, pausing at the
    earliest of two event kinds:

      (i)  lam_a meets the curve value gamma_b(C_{a-1}) of an outside job
           b < a  -> b joins A (the pair keeps falling in lockstep);
      (ii) gamma_a(C_{j-1}) meets lam_j -> a leaves A.

    Repeats until A empties; raises IterationCapExceeded beyond
    cap_factor * k^2 events in one round.  Returns ({jid: lam}, log).
    """
    k = len(pending)
    if k == 0:
        return {}, []
    ids = [x[0] for x in pending]
    rel = {x[0]: x[1] for x in pending}
    den = {x[0]: x[2] for x in pending}
    comp = [x[3] for x in pending]
    c_last = comp[-1]
    lam = {jid: den[jid] * g.value(c_last - rel[jid]) for jid in ids}
    log = []

    def gam(i, t):
        jid = ids[i]
        return lam[jid] - den[jid] * g.value(t - rel[jid])

    for j in range(1, k):
        lam_j = lam[ids[j]]
        t_ref = comp[j - 1]
        active = {a for a in range(j) if numeric.lt(lam_j, gam(a, t_ref))}
        steps = 0
        while active:
            steps += 1
            if steps > cap_factor * k * k:
                raise IterationCapExceeded(
                    f"round {ids[j]}: more than {cap_factor}*k^2 reduction events"
                )
            cands = []
            for a in active:
                gap_out = gam(a, t_ref) - lam_j
                if numeric.nonneg(gap_out):
                    cands.append(gap_out)
                for b in range(a):
                    if b in active:
                        continue
                    gap_in = lam[ids[a]] - gam(b, comp[a - 1])
                    if numeric.nonneg(gap_in):
                        cands.append(gap_in)
            if not cands:
                raise IterationCapExceeded(
                    f"round {ids[j]}: reduction admits no stopping event"
                )
            rho = min(cands)
            if rho < 0:  # float dust inside the tolerance band
                rho = 0
            for a in active:
                lam[ids[a]] -= rho
            added = set()
            removed = set()
            for a in active:
                for b in range(a):
                    if b not in active and numeric.eq(lam[ids[a]], gam(b, comp[a - 1])):
                        added.add(b)
                if numeric.eq(gam(a, t_ref), lam_j):
                    removed.add(a)
            active = (active | added) - removed
            log.append(
                {
                    "round": ids[j],
                    "rho": rho,
                    "added": sorted(ids[b] for b in added),
                    "removed": sorted(ids[a] for a in removed),
                    "active": sorted(ids[a] for a in active),
                }
            )
    for jid, value in lam.items():
        if not numeric.nonneg(value):
            raise NegativeDual(f"lambda_{jid} = {value} < 0 after the reduction")
    return lam, log


# ---------------------------------------------------------------------------
# Event-driven maintenance


@dataclass
class DualState:
    """Final duals plus the per-event history needed to audit them."""

    problem: str
    construction: str
    instance: object
    schedule: object
    numeric: Numeric
    lam: dict
    snapshots: list = field(default_factory=list)
    surrogate_lam: dict | None = None  # packing runs: lam'_j
    row_gammas: list | None = None  # packing runs: (t1, t2, tight row index)
    gamma_zero: bool = False  # rate-curve runs: gamma(t) = 0 everywhere
    aux: dict = field(default_factory=dict)

    def curve(self, jid, lam=None) -> DualCurve:
        job = self.instance.job(jid)
        if self.problem == "psp":
            if lam is None:
                lam = self.surrogate_lam[jid]
            delta = job.density / self.instance.col_min(jid)
            return DualCurve(jid, lam, delta, _UNIT_LINEAR, job.r, job.r)
        g, shift = self.instance.effective_cost(job)
        if lam is None:
            lam = self.lam[jid]
        return DualCurve(jid, lam, job.density, g, shift, job.r)

    def curves(self):
        if self.gamma_zero:
            return []
        source = self.surrogate_lam if self.problem == "psp" else self.lam
        return [self.curve(jid) for jid in source]

    def envelope(self, extra=()) -> Envelope:
        return Envelope(self.curves(), self.numeric, extra)

    def lam_dot_p(self):
        return sum(self.lam[j.id] * j.p for j in self.instance.jobs)

    def trace_json(self):
        from .numerics import number_to_json as num

        out = []
        for s in self.snapshots:
            out.append(
                {
                    "tau": num(s["tau"]),
                    "lambdas_before": {str(k): num(v) for k, v in s["lambdas_before"].items()},
                    "lambdas_after": {str(k): num(v) for k, v in s["lambdas_after"].items()},
                    "deltas": {str(k): num(v) for k, v in s["deltas"].items()},
                    "sets": [[k for k in group] for group in s["sets"]],
                }
            )
        return out


def pick_construction(instance, policy_name):
    """Default dual construction for a (problem, policy, shape) combination."""
    if instance.problem == "gcp":
        if policy_name != "hdf":
            raise UnsupportedShape("completion-cost duals are defined for hdf runs")
        return SUCCESSOR
    if instance.problem == "psp":
        return PACKING
    if instance.problem == "jdgfp":
        return RATE_CURVE
    shape = instance.g.shape_class
    if policy_name == "hdf":
        if shape == LINEAR:
            return CHAIN
        if shape == CONCAVE:
            return CHAIN_CONCAVE
        raise UnsupportedShape(f"no hdf dual construction for a {shape} cost")
    if policy_name == "fifo":
        if not instance.equal_density:
            raise UnsupportedShape("fifo dual constructions need equal densities")
        if shape in (LINEAR, CONVEX):
            return CHAIN
        return EQUAL_DENSITY
    if policy_name == "lifo":
        if not instance.equal_density:
            raise UnsupportedShape("lifo dual constructions need equal densities")
        if shape in (LINEAR, CONCAVE):
            return CHAIN
        raise UnsupportedShape(f"no lifo dual construction for a {shape} cost")
    raise UnsupportedShape(f"no dual construction for policy {policy_name!r}")


def _projection_pieces(ev):
    """Flatten an event's projected schedule to (t1, t2, job-or-None) rows."""
    out = []
    for p in ev.projection.pieces:
        out.append((p.t1, p.t2, None if p.idle else next(iter(p.rates))))
    return out


def _drive_chain(run, g, dens, concave):
    """Replay release events through the chain (or reduction) + past update."""
    inst = run.instance
    num = inst.numeric
    lam = {}
    snaps = []
    for ev in run.events:
        pend = []
        for jid in ev.pending.ids():
            job = inst.job(jid)
            pend.append((jid, job.r, dens(job), ev.projected[jid]))
        pend.sort(key=lambda x: x[3])
        before = dict(lam)
        if concave:
            new_pend, ev_log = procedure5_concave(pend, g, num)
        else:
            new_pend = procedure1_assign(pend, g, num)
            ev_log = []
        deltas = {
            jid: new_pend[jid] - before[jid] for jid, _r, _d, _c in pend if jid in before
        }
        past = []
        for jid, cj in ev.completions.items():
            if cj > ev.busy_start:
                job = inst.job(jid)
                past.append((jid, job.r, dens(job), cj, before[jid]))
        match_pend = [
            (jid, r, d, c, before[jid]) for jid, r, d, c in pend if jid in before
        ]
        upd, sets = procedure2_update_past(past, match_pend, deltas, g, num)
        lam.update(new_pend)
        lam.update(upd)
        snaps.append(
            {
                "tau": ev.tau,
                "newcomer": ev.released,
                "busy_start": ev.busy_start,
                "pending": [x[0] for x in pend],
                "projected": dict(ev.projected),
                "completions": dict(ev.completions),
                "past": [x[0] for x in past],
                "lambdas_before": before,
                "lambdas_after": dict(lam),
                "deltas": deltas,
                "sets": [[rep] + [m for m in mem if m != rep] for rep, mem in sets.items()],
                "reduction_events": ev_log,
                "projection_pieces": _projection_pieces(ev),
            }
        )
    return lam, snaps


def _drive_recompute(run, assign):
    """Replay events for the constructions that rebuild every dual per event."""
    lam = {}
    snaps = []
    for ev in run.events:
        before = dict(lam)
        lam, extra = assign(ev)
        snaps.append(
            {
                "tau": ev.tau,
                "newcomer": ev.released,
                "busy_start": ev.busy_start,
                "pending": ev.pending.ids(),
                "projected": dict(ev.projected),
                "completions": dict(ev.completions),
                "past": sorted(ev.completions, key=lambda j: str(j)),
                "lambdas_before": before,
                "lambdas_after": dict(lam),
                "deltas": {jid: lam[jid] - before[jid] for jid in before},
                "sets": [],
                "projection_pieces": _projection_pieces(ev),
                **extra,
            }
        )
    return lam, snaps


def maintain_duals(run, construction=None) -> DualState:
    """Replay an engine run's release events into a final dual state."""
    inst = run.instance
    num = inst.numeric
    if construction is None:
        construction = pick_construction(inst, run.policy.name)

    surrogate = None
    rows = None
    if construction == CHAIN:
        lam, snaps = _drive_chain(run, inst.g, lambda j: j.density, concave=False)
    elif construction == CHAIN_CONCAVE:
        lam, snaps = _drive_chain(run, inst.g, lambda j: j.density, concave=True)
    elif construction == SUCCESSOR:
        g = inst.g

        def assign3(ev):
            released = []
            for jid, c in {**ev.completions, **ev.projected}.items():
                job = inst.job(jid)
                released.append((jid, job.r, job.density, c))
            return procedure3_gcp(released, g, ev.projection.pieces, num), {}

        lam, snaps = _drive_recompute(run, assign3)
    elif construction == EQUAL_DENSITY:
        if not inst.equal_density:
            raise UnsupportedShape("the floor construction needs equal densities")
        g = inst.g
        delta = inst.jobs[0].density

        def assign4(ev):
            released = sorted(
                (jid, inst.job(jid).r, c)
                for jid, c in {**ev.completions, **ev.projected}.items()
            )
            released.sort(key=lambda x: x[2])
            out, floored = procedure4_equal_density(released, g, delta, num)
            return out, {"floored": sorted(floored, key=str)}

        lam, snaps = _drive_recompute(run, assign4)
    elif construction == PACKING:
        dens = lambda j: j.density / inst.col_min(j.id)  # noqa: E731
        surrogate, snaps = _drive_chain(run, _UNIT_LINEAR, dens, concave=False)
        lam = {jid: inst.col_min(jid) * v for jid, v in surrogate.items()}
        rows = [
            (p.t1, p.t2, inst.tight_row(next(iter(p.rates))))
            for p in run.schedule.pieces
            if not p.idle
        ]
    else:
        raise UnsupportedShape(
            "rate-curve dual states are built by jdgfp_state, not maintain_duals"
        )

    return DualState(
        problem=inst.problem,
        construction=construction,
        instance=inst,
        schedule=run.schedule,
        numeric=num,
        lam=lam,
        snapshots=snaps,
        surrogate_lam=surrogate,
        row_gammas=rows,
    )


def psp_duals(schedule, instance) -> DualState:
    """Job duals and machine-row curves for a packing run.

    Re-runs the packing engine to recover the release events, checks the
    passed schedule agrees with it, and runs the chain + past update on
    the scaled single-machine view (density delta_j / b_j, unit-slope
    cost).  The job duals are lam_j = b_j lam'_j; at any time the tight
    row of the running job carries the surrogate envelope and every other
    row carries zero, recorded as (t1, t2, row) spans in ``row_gammas``.
    """
    run = run_psp_engine(instance)
    num = instance.numeric
    for jid, c in run.schedule.completions.items():
        if jid not in schedule.completions or not num.eq(schedule.completions[jid], c):
            raise InstanceError(
                f"schedule does not match the packing engine run at job {jid}"
            )
    state = maintain_duals(run, PACKING)
    return state


# ---------------------------------------------------------------------------
# Rate-curve duals (quadrature)


def _adaptive_simpson(f, a, b, tol, depth=30):
    if b <= a:
        return 0.0
    fa, fm, fb = f(a), f((a + b) / 2.0), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_refine(f, a, b, fa, fm, fb, whole, tol, depth)


def _simpson_refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2.0
    lm, rm = (a + m) / 2.0, (m + b) / 2.0
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _simpson_refine(
        f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1
    ) + _simpson_refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)


def _rate_window_integral(job, jobs, idx, a, b, k):
    """Integral over [a, b] of the dual integrand for one job.

    The integrand is nu_j * (sum of marginals over jobs up to and
    including j in the pending order) + w_j g_j' * (sum of rates strictly
    before j).  For curved shapes the integration substitutes
    v = g_j(t - r_j): the factor 1/g_j'(t) then cancels the job's own
    marginal singularity at its release, leaving a bounded integrand.
    """
    ahead = jobs[:idx]
    upto = jobs[: idx + 1]
    w = float(job.w)
    r = float(job.r)
    g = job.g

    def raw(t):
        rates = jdgfp_rates(jobs, t, k)
        w_sum = sum(_marginal(o, t) for o in upto)
        n_sum = sum(rates[o.id] for o in ahead)
        return rates[job.id] * w_sum + w * _marginal_unit(g, t - r) * n_sum

    if g.kind == "piecewise_linear":
        # bounded slopes: integrate in t directly
        tol = 1e-10 * max(1.0, float(b - a))
        return _adaptive_simpson(raw, float(a), float(b), tol)

    va = float(g.value(max(float(a) - r, 0.0)))
    vb = float(g.value(float(b) - r))

    def h(v):
        t = r + g.inverse(v, exact=False)
        gp = _marginal_unit(g, t - r)
        rates = jdgfp_rates(jobs, t, k)
        w_sum = sum(_marginal(o, t) for o in upto)
        n_sum = sum(rates[o.id] for o in ahead)
        return rates[job.id] * w_sum / gp + w * n_sum

    tol = 1e-10 * max(1.0, vb - va)
    return _adaptive_simpson(h, va, vb, tol)


def _marginal_unit(g, x):
    """g'(x) with the same clamp the engine uses near x = 0."""
    if x < ETA:
        x = ETA
    return g.derivative(x)


def jdgfp_duals(sim, instance=None, eps=None):
    """Quadrature duals for a rate-curve run; the envelope is identically 0.

    For each job, lam_j p_j is 1/(k+1) times the integral, over the
    windows where j is pending, of

        nu_j(t) * sum_{a <= j} w_a g_a'(t - r_a)
        + w_j g_j'(t - r_j) * sum_{a < j} nu_a(t)

    with the pending jobs ordered by (release, id).  Integration reuses
    the simulation's windows and an adaptive rule well inside the 1e-6
    relative tolerance the identity checks allow.
    """
    instance = instance or sim.instance
    if eps is not None and math.ceil(2.0 / float(eps)) != sim.k:
        raise InstanceError("eps does not match the simulation's k")
    k = sim.k
    totals = {j.id: 0.0 for j in instance.jobs}
    for a, b, ids in sim.segments:
        if not b > a:
            continue
        jobs = [instance.job(i) for i in ids]
        for idx, job in enumerate(jobs):
            totals[job.id] += _rate_window_integral(job, jobs, idx, a, b, k)
    return {
        jid: totals[jid] / ((k + 1) * float(instance.job(jid).p)) for jid in totals
    }


def jdgfp_state(sim, instance=None) -> DualState:
    """Wrap rate-curve duals in a DualState (gamma identically zero)."""
    instance = instance or sim.instance
    lam = jdgfp_duals(sim, instance)
    return DualState(
        problem="jdgfp",
        construction=RATE_CURVE,
        instance=instance,
        schedule=sim.schedule,
        numeric=instance.numeric,
        lam=lam,
        gamma_zero=True,
        aux={"sim": sim, "eps": sim.eps, "k": sim.k},
    )


def jdgfp_pending_ids(sim, tau):
    for a, b, ids in sim.segments:
        if a <= tau < b:
            return ids
    return ()


def jdgfp_aggregate_marginal(sim, instance, tau):
    """Total marginal cost of the jobs pending at tau."""
    return sum(_marginal(instance.job(i), tau) for i in jdgfp_pending_ids(sim, tau))


def jdgfp_total_cost(sim, instance=None):
    """Closed form for the cost integral: each job adds w g(C - r)."""
    instance = instance or sim.instance
    total = 0.0
    for j in instance.jobs:
        c = float(sim.schedule.completions[j.id])
        total += float(j.w) * float(j.g.value(c - float(j.r)))
    return total
