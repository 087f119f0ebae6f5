"""Dual-solution auditing: property checks, objectives, and certificates.

The dual states built by the maintenance layer come with claims attached:
the curve of the running job dominates the envelope (or, for the relaxed
constructions, stays nonnegative while the job's multiplier dominates
every rival curve), every curve is dead past the last completion, and the
multipliers are feasible for the scheduling LP's dual.  This module
audits those claims from the raw numbers -- it rebuilds curves from the
stored multipliers rather than trusting the construction -- and combines
the verdicts with primal/dual objective values into Certificate bundles.

Checks are endpoint-sound rather than sampled wherever the shape catalog
allows: the envelope walk subdivides time at curve starts, cost kinks,
stationary points of pairwise differences, and winner crossings, so that
inside each cell every comparison is between functions with a monotone
difference and the two endpoints decide the whole cell.  The one
exception is the rate-curve (per-job cost) family, whose dual bound is
checked on a fixed 100-point grid per job at a stated relative
tolerance, matching how those duals are integrated in the first place.

Failures never raise: every check returns a list of violation records
(empty means pass) carrying the witness time, the jobs involved, and the
curve values, so a failing certificate can be printed and inspected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .core import (
    fractional_cost,
    fractional_cost_remaining_weight_form,
    integral_cost,
)
from .costs import CONCAVE, CONVEX, LINEAR
from .duals import (
    CHAIN,
    CHAIN_CONCAVE,
    EQUAL_DENSITY,
    PACKING,
    RATE_CURVE,
    SUCCESSOR,
    Envelope,
    curve_positive_end,
    jdgfp_aggregate_marginal,
    jdgfp_state,
    jdgfp_total_cost,
    maintain_duals,
    psp_duals,
)
from .errors import InstanceError, OutOfTheoremScope
from .numerics import exact_div, is_exactable, number_to_json, to_fraction
from .schedulers import run_priority_engine, simulate_jdgfp, simulate_psp

# constructions whose dual states carry the strict dominance property
# (running curve equals the envelope) versus the relaxed one (running
# curve nonnegative, multiplier dominates rival curves).
STRICT_FAMILY = (CHAIN, SUCCESSOR, PACKING)
RELAXED_FAMILY = (CHAIN_CONCAVE, EQUAL_DENSITY)

REL_IDENTITY = 1e-8  # relative tolerance for the two fractional-cost forms
REL_RATE = 1e-6  # relative tolerance for rate-curve (quadrature) identities
RATE_GRID = 100  # per-job sample count for the rate-curve dual bound


# ---------------------------------------------------------------------------
# shared plumbing


def _schedule_rows(schedule):
    """Flatten a schedule into (t1, t2, running-job-or-None) rows."""
    return [
        (p.t1, p.t2, None if p.idle else next(iter(p.rates)))
        for p in schedule.pieces
    ]


def _clip_rows(rows, hi):
    """Rows clipped to [start, hi], adjacent same-job rows merged."""
    out = []
    for t1, t2, jid in rows:
        if t1 >= hi:
            break
        t2 = min(t2, hi)
        if not t2 > t1:
            continue
        if out and out[-1][2] == jid and out[-1][1] == t1:
            out[-1] = (out[-1][0], t2, jid)
        else:
            out.append((t1, t2, jid))
    return out


def _event_indices(state, tau):
    num = state.numeric
    idx = [i for i, s in enumerate(state.snapshots) if num.eq(s["tau"], tau)]
    if not idx:
        raise InstanceError(f"no release event recorded at tau = {tau}")
    return idx


def _context(state, event_index):
    """(rows, lam map, completion map) for the final state or one event.

    Event contexts use the event's recorded multipliers and its projected
    schedule (realized prefix plus the projection of the moment), with
    completion times taken from realized completions plus projections.
    For packing states the multipliers are the scaled single-machine ones,
    matching what ``DualState.curve`` expects.
    """
    if event_index is None:
        lam = state.surrogate_lam if state.problem == "psp" else state.lam
        return _schedule_rows(state.schedule), lam, dict(state.schedule.completions)
    s = state.snapshots[event_index]
    comp = {**s["completions"], **s["projected"]}
    return s["projection_pieces"], s["lambdas_after"], comp


def _curves_for(state, lam_map):
    return {jid: state.curve(jid, lam_map[jid]) for jid in lam_map}


def _active_max(curves, cutoff, t):
    """max(0, curves active from cutoff, evaluated at t).

    Activity is decided at the left end of the cell being checked, which
    gives boundary evaluations left-limit semantics: a curve born exactly
    at a piece's right endpoint does not retroactively join that piece.
    """
    best = 0
    for c in curves:
        if c.start <= cutoff:
            v = c.value(t)
            if v > best:
                best = v
    return best


def _targets(state, tau):
    """Audit targets: the final state plus every event, or one event."""
    if tau is None:
        return [None] + list(range(len(state.snapshots)))
    return _event_indices(state, tau)


# ---------------------------------------------------------------------------
# property checks


def check_P1_P2(schedule, state, tau=None):
    """Strict dominance audit for chain-built dual states.

    On every busy row the running job's curve must equal the envelope --
    checked at the endpoints of every envelope cell inside the row, which
    decides the whole row because cell differences are monotone -- and on
    every idle row the envelope must be zero.  With ``tau`` given, only
    the release events at that time are replayed (recorded multipliers
    against the realized prefix plus the projection of the moment), and
    the prefix is additionally compared against ``schedule`` for
    immutability; with ``tau=None`` the final state and every recorded
    event are audited.  Returns a list of violation records.
    """
    if state.construction in RELAXED_FAMILY:
        raise InstanceError(
            "this dual state carries the relaxed property; use check_Q1_Q2"
        )
    if state.construction == RATE_CURVE:
        raise InstanceError("rate-curve states have no dominance property")
    schedule = schedule if schedule is not None else state.schedule
    out = []
    for target in _targets(state, tau):
        rows, lam, _comp = _context(state, target)
        out.extend(_dominance_violations(state, rows, lam, target))
        if target is not None:
            out.extend(_immutability_violations(state, schedule, target))
    return out


def check_Q1_Q2(schedule, state, tau=None):
    """Relaxed dominance audit for the floor/reduction dual states.

    On every busy row the running job's curve must be nonnegative and its
    multiplier must dominate every pending rival's curve value, checked
    at cell endpoints (rival curves are non-increasing and pending sets
    are cell-constant, so the left endpoint decides each cell).  Event
    replays add the prefix-immutability comparison, as in check_P1_P2.
    States carrying the strict property are accepted: the relaxed
    property is implied by the strict one, so auditing it is meaningful.
    """
    if state.construction == RATE_CURVE:
        raise InstanceError("rate-curve states have no dominance property")
    schedule = schedule if schedule is not None else state.schedule
    out = []
    for target in _targets(state, tau):
        rows, lam, comp = _context(state, target)
        out.extend(_relaxed_violations(state, rows, lam, comp, target))
        if target is not None:
            out.extend(_immutability_violations(state, schedule, target))
    return out


def _dominance_violations(state, rows, lam_map, event_index):
    num = state.numeric
    curves = _curves_for(state, lam_map)
    env = Envelope(list(curves.values()), num)
    out = []
    for t1, t2, jid in rows:
        if not t2 > t1:
            continue
        if jid is not None and jid not in curves:
            out.append(
                {
                    "kind": "missing-dual",
                    "event": event_index,
                    "job": jid,
                    "t": t1,
                    "piece": (t1, t2),
                }
            )
            continue
        for u, v, winner in env.cells(t1, t2):
            if jid is None:
                for t in (u, v):
                    val = _active_max(curves.values(), u, t)
                    if not num.eq(val, 0):
                        out.append(
                            {
                                "kind": "idle-positive",
                                "event": event_index,
                                "t": t,
                                "value": val,
                                "piece": (t1, t2),
                            }
                        )
                        break
                continue
            if winner == jid:
                continue
            c = curves[jid]
            for t in (u, v):
                val = _active_max(curves.values(), u, t)
                cv = c.value(t)
                if not num.eq(cv, val):
                    out.append(
                        {
                            "kind": "not-dominant",
                            "event": event_index,
                            "job": jid,
                            "t": t,
                            "curve_value": cv,
                            "envelope_value": val,
                            "piece": (t1, t2),
                        }
                    )
                    break
    return out


def _relaxed_violations(state, rows, lam_map, comp, event_index):
    num = state.numeric
    curves = _curves_for(state, lam_map)
    env = Envelope(list(curves.values()), num)
    out = []
    for t1, t2, jid in rows:
        if not t2 > t1 or jid is None:
            continue
        if jid not in curves:
            out.append(
                {
                    "kind": "missing-dual",
                    "event": event_index,
                    "job": jid,
                    "t": t1,
                    "piece": (t1, t2),
                }
            )
            continue
        c = curves[jid]
        lam_j = lam_map[jid]
        for u, v, _winner in env.cells(t1, t2):
            for t in (u, v):
                if not num.nonneg(c.value(t)):
                    out.append(
                        {
                            "kind": "running-negative",
                            "event": event_index,
                            "job": jid,
                            "t": t,
                            "curve_value": c.value(t),
                            "piece": (t1, t2),
                        }
                    )
                    break
            for rid, rc in curves.items():
                if rid == jid or rc.start > u:
                    continue
                if rid in comp and not num.lt(u, comp[rid]):
                    continue  # rival already completed by this cell
                if not num.geq(lam_j, rc.value(u)):
                    out.append(
                        {
                            "kind": "rival-exceeds-lambda",
                            "event": event_index,
                            "job": jid,
                            "rival": rid,
                            "t": u,
                            "lambda": lam_j,
                            "rival_value": rc.value(u),
                            "piece": (t1, t2),
                        }
                    )
    return out


def _immutability_violations(state, schedule, event_index):
    """The schedule prefix before an event must match the final schedule."""
    s = state.snapshots[event_index]
    tau = s["tau"]
    final = _clip_rows(_schedule_rows(schedule), tau)
    seen = _clip_rows(s["projection_pieces"], tau)
    if final != seen:
        return [
            {
                "kind": "history-altered",
                "event": event_index,
                "tau": tau,
                "final_prefix": final,
                "event_prefix": seen,
            }
        ]
    return []


def check_P3(state, tau=None):
    """Every curve must be nonpositive from the last completion onward.

    Checked symbolically: each curve's earliest sink time (closed form
    per shape) must not exceed the relevant last completion time; a curve
    that never sinks is reported outright.  Curves are non-increasing, so
    this single comparison covers the whole tail.  ``tau=None`` audits
    the final state and every recorded event.
    """
    if state.construction == RATE_CURVE or state.gamma_zero:
        return []
    num = state.numeric
    out = []
    for target in _targets(state, tau):
        _rows, lam, comp = _context(state, target)
        if not comp:
            continue
        cmax = max(comp.values())
        for jid, c in _curves_for(state, lam).items():
            end = curve_positive_end(c, num)
            if end is None:
                out.append(
                    {
                        "kind": "positive-forever",
                        "event": target,
                        "job": jid,
                        "t": cmax,
                        "value": c.value(cmax),
                    }
                )
            elif num.lt(cmax, end):
                out.append(
                    {
                        "kind": "positive-past-makespan",
                        "event": target,
                        "job": jid,
                        "t": cmax,
                        "value": c.value(cmax),
                        "sinks_at": end,
                    }
                )
    return out


def _idle_gap_violations(state):
    """Every released curve must already be dead at each interior gap start.

    This is the busy-period boundary condition behind the exact
    primal = dual identities: a positive curve across an idle gap would
    add envelope mass the schedule never pays for.  Curves are
    non-increasing and none can start inside a gap (a release would end
    it), so the gap's left endpoint decides the whole gap.
    """
    if state.gamma_zero:
        return []
    num = state.numeric
    out = []
    curves = state.curves()
    for t1, t2, jid in _schedule_rows(state.schedule):
        if jid is not None or not t2 > t1:
            continue
        for c in curves:
            if c.start <= t1 and not num.leq(c.value(t1), 0):
                out.append(
                    {
                        "kind": "gap-positive",
                        "job": c.jid,
                        "t": t1,
                        "value": c.value(t1),
                        "piece": (t1, t2),
                    }
                )
    return out


def _g_plateau(g):
    """The finite limit of g at infinity, or None if g is unbounded."""
    slopes = getattr(g, "slopes", None)
    if slopes and slopes[-1] == 0:
        return g.value(g.breakpoints()[-1])
    return None


def check_dual_feasible(state, instance=None):
    """Audit the dual constraint from the raw multipliers.

    Flow/completion states: lam_j - gamma(t) <= delta_j g(t - shift_j)
    for all t >= r_j, with gamma the envelope rebuilt from the stored
    multipliers; checked at every envelope cell endpoint up to the last
    completion plus the bounded-cost limit at infinity.  By construction
    the envelope dominates each curve, so for intact states this is an
    arithmetic audit; it exists to catch states whose stored numbers no
    longer produce the envelope they claim.

    A state with ``gamma_zero`` set (machine curve identically zero)
    makes the same constraint bind at the release instant, where it reads
    lam_j <= 0 -- any positive multiplier is then infeasible.

    Packing states: checked in both forms at every row span and envelope
    cell endpoint -- the strong per-job form lam'_j - mu'(t) <= delta'_j
    (t - r_j) on the scaled view, and the original row form
    lam_j - sum_i b_ij gamma_i(t) <= delta_j (t - r_j), where the running
    job's tight row carries mu' and every other row is zero.

    Rate-curve states: their dual LP bounds each multiplier by
    delta_j g_j(tau - r_j) + (aggregate marginal at tau)/k; sampled on a
    fixed 100-point grid per job at 1e-6 relative tolerance.
    """
    inst = instance if instance is not None else state.instance
    if state.construction == RATE_CURVE:
        return _rate_curve_feasibility(state, inst)
    if state.problem == "psp":
        return _packing_feasibility(state, inst)
    num = state.numeric
    if state.gamma_zero:
        out = []
        for j in inst.jobs:
            lam = state.lam[j.id]
            if not num.leq(lam, 0):
                out.append(
                    {
                        "kind": "infeasible-at-release",
                        "job": j.id,
                        "t": j.r,
                        "lambda": lam,
                        "bound": 0,
                    }
                )
        return out
    curves = _curves_for(state, state.lam)
    env = Envelope(list(curves.values()), num)
    comp = state.schedule.completions
    out = []
    cmax = max(comp.values()) if comp else 0
    tails = [0]
    for c in curves.values():
        plateau = _g_plateau(c.g)
        if plateau is not None:
            tails.append(c.lam - c.delta * plateau)
    gamma_limit = max(tails)
    for jid, c in curves.items():
        if c.start < cmax:
            for u, v, _w in env.cells(c.start, cmax):
                for t in (u, v):
                    gval = _active_max(curves.values(), u, t)
                    if not num.leq(c.value(t), gval):
                        out.append(
                            {
                                "kind": "constraint-violated",
                                "job": jid,
                                "t": t,
                                "curve_value": c.value(t),
                                "gamma": gval,
                            }
                        )
        plateau = _g_plateau(c.g)
        if plateau is not None and not num.leq(
            c.lam - c.delta * plateau, gamma_limit
        ):
            out.append(
                {
                    "kind": "constraint-violated-at-infinity",
                    "job": jid,
                    "t": None,
                    "curve_value": c.lam - c.delta * plateau,
                    "gamma": gamma_limit,
                }
            )
    return out


def _packing_feasibility(state, inst):
    num = state.numeric
    curves = _curves_for(state, state.surrogate_lam)
    env = Envelope(list(curves.values()), num)
    rows = _schedule_rows(state.schedule)
    comp = state.schedule.completions
    cmax = max(comp.values()) if comp else 0
    order = [j.id for j in inst.jobs]
    out = []
    for j in inst.jobs:
        jid = j.id
        lam = state.lam[jid]
        col = order.index(jid)
        own = curves[jid]
        for t1, t2, run_jid in rows:
            lo = max(t1, j.r)
            if not t2 > lo:
                continue
            b_run = inst.B[inst.tight_row(run_jid)][col] if run_jid is not None else 0
            for u, v, _w in env.cells(lo, t2):
                for t in (u, v):
                    mu = _active_max(curves.values(), u, t)
                    if not num.leq(own.value(t), mu):
                        out.append(
                            {
                                "kind": "surrogate-exceeds-envelope",
                                "job": jid,
                                "t": t,
                                "curve_value": own.value(t),
                                "gamma": mu,
                            }
                        )
                    lhs = lam - b_run * mu - j.density * (t - j.r)
                    if not num.leq(lhs, 0):
                        out.append(
                            {
                                "kind": "packing-infeasible",
                                "job": jid,
                                "t": t,
                                "excess": lhs,
                                "row_demand": b_run,
                            }
                        )
        # all rows are zero past the last completion; the binding point is cmax
        if not num.leq(lam, j.density * (cmax - j.r)):
            out.append(
                {
                    "kind": "packing-infeasible",
                    "job": jid,
                    "t": cmax,
                    "excess": lam - j.density * (cmax - j.r),
                    "row_demand": 0,
                }
            )
    return out


def _rate_curve_feasibility(state, inst):
    sim = state.aux["sim"]
    k = state.aux["k"]
    out = []
    comp = state.schedule.completions
    cmax = max(float(c) for c in comp.values()) if comp else 0.0
    for j in inst.jobs:
        lam = state.lam[j.id]
        r = float(j.r)
        span = cmax - r
        if span <= 0:
            span = float(j.p)
        for i in range(RATE_GRID):
            tau = r + (i + 0.5) * span / RATE_GRID
            bound = float(j.density) * float(j.g.value(tau - r))
            bound += jdgfp_aggregate_marginal(sim, inst, tau) / k
            if lam - bound > REL_RATE * max(1.0, abs(bound)):
                out.append(
                    {
                        "kind": "rate-bound-violated",
                        "job": j.id,
                        "t": tau,
                        "lambda": lam,
                        "bound": bound,
                    }
                )
    return out


# ---------------------------------------------------------------------------
# objectives


def machine_curve_mass(state):
    """Closed-form integral of the machine dual curve over all time.

    Flow/completion states integrate the envelope from the first curve
    start until every curve has sunk below zero; a curve that never
    sinks makes the mass infinite.  Packing states sum the scaled-view
    envelope over the recorded row spans (all rows are zero on gaps and
    past the last completion).  Rate-curve states have zero mass.
    """
    if state.gamma_zero:
        return 0
    num = state.numeric
    curves = state.curves()
    if not curves:
        return 0
    env = Envelope(curves, num)
    if state.problem == "psp":
        return sum(env.integral(t1, t2) for t1, t2, _row in state.row_gammas)
    ends = []
    for c in curves:
        end = curve_positive_end(c, num)
        if end is None:
            return math.inf
        ends.append(end)
    lo = min(c.start for c in curves)
    hi = max(ends)
    if not hi > lo:
        return 0
    return env.integral(lo, hi)


def dual_objective(state, alpha=1):
    """sum_j lam_j p_j minus 1/alpha times the machine curve mass.

    ``alpha`` is the speed the dual is evaluated against: the curves are
    built from the unit-speed run and only the machine term is scaled.
    A state whose curves never sink has objective -infinity.
    """
    lamp = state.lam_dot_p()
    if state.gamma_zero:
        return lamp
    mass = machine_curve_mass(state)
    if isinstance(mass, float) and math.isinf(mass):
        return float("-inf")
    return lamp - exact_div(mass, alpha)


def psp_job_contributions(state):
    """Per-job dual and fractional sides of the packing identity.

    For each job: lam_j p_j - (b_j / B_j) * int_{exec(j)} mu'(t) dt on
    the dual side versus delta_j int_{exec(j)} (t - r_j) x_j(t) dt on the
    fractional side; the two agree for intact packing states (the scaled
    view runs the job at full surrogate rate while the true schedule runs
    it at rate 1/B_j over a B_j-times-longer stretch).
    """
    inst = state.instance
    num = state.numeric
    env = Envelope(state.curves(), num)
    out = {}
    for j in inst.jobs:
        b = inst.col_min(j.id)
        cap = inst.col_max(j.id)
        mu_mass = 0
        frac = 0
        for t1, t2, x in state.schedule.job_segments(j.id):
            mu_mass += env.integral(t1, t2)
            a1, a2 = t1 - j.r, t2 - j.r
            frac += j.density * x * exact_div(a2 * a2 - a1 * a1, 2)
        dual_side = state.lam[j.id] * j.p - exact_div(b, cap) * mu_mass
        out[j.id] = (dual_side, frac)
    return out


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    """Verdict bundle for one instance/algorithm/speed combination.

    ``properties`` maps a check name to {"ok": bool, "witnesses": [...]};
    ``inequalities`` records every numeric claim with its slack, so a
    passing certificate shows explicitly nonnegative slack everywhere
    (or slack above -1e-9 in float mode).
    """

    instance_id: str
    algorithm: str
    problem: str
    construction: str | None
    mode: str
    eps: object | None
    alpha: object
    primal_integral: object
    primal_fractional: object
    dual_value: object
    properties: dict
    inequalities: list
    ok: bool
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "instance_id": self.instance_id,
            "algorithm": self.algorithm,
            "problem": self.problem,
            "construction": self.construction,
            "mode": self.mode,
            "eps": _jsonify(self.eps),
            "alpha": _jsonify(self.alpha),
            "primal_integral": _jsonify(self.primal_integral),
            "primal_fractional": _jsonify(self.primal_fractional),
            "dual_value": _jsonify(self.dual_value),
            "properties": _jsonify(self.properties),
            "inequalities": _jsonify(self.inequalities),
            "ok": self.ok,
            "detail": _jsonify(self.detail),
        }


def _jsonify(x):
    if isinstance(x, dict):
        return {str(k): _jsonify(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonify(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    return number_to_json(x)


def _value_mode(*vals):
    return "float" if any(isinstance(v, float) for v in vals) else "exact"


def instance_fingerprint(instance):
    """Stable short id derived from the instance's canonical JSON."""
    blob = json.dumps(instance.to_json(), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _prop(witnesses):
    return {"ok": not witnesses, "witnesses": witnesses}


def _inequality(name, lhs, relation, rhs, ok):
    row = {
        "name": name,
        "lhs": lhs,
        "relation": relation,
        "rhs": rhs,
        "ok": bool(ok),
        "mode": _value_mode(lhs, rhs),
    }
    if relation == "<=":
        row["slack"] = rhs - lhs
    else:
        row["difference"] = rhs - lhs
    return row


def _collect_properties(state):
    """Run the family-appropriate property suite over the whole history."""
    if state.construction in RELAXED_FAMILY:
        dominance = ("Q1Q2", check_Q1_Q2(state.schedule, state))
    else:
        dominance = ("P1P2", check_P1_P2(state.schedule, state))
    props = {
        dominance[0]: _prop(dominance[1]),
        "P3": _prop(check_P3(state)),
        "dual_feasible": _prop(check_dual_feasible(state)),
        "idle_gaps_zero": _prop(_idle_gap_violations(state)),
    }
    return props


def _optimality_policy(instance, algorithm):
    """Resolve/validate the policy for an optimality certificate."""
    prob = instance.problem
    if prob == "gcp":
        if algorithm in (None, "hdf"):
            return "hdf"
        raise OutOfTheoremScope(
            f"completion-cost optimality is proved for hdf, not {algorithm!r}"
        )
    if prob != "gfp":
        raise OutOfTheoremScope(
            f"optimality certificates cover gfp and gcp, not {prob!r}"
        )
    shape = instance.g.shape_class
    equal = instance.equal_density
    if algorithm is None:
        if shape == LINEAR:
            return "hdf"
        if shape == CONVEX and equal:
            return "fifo"
        if shape == CONCAVE and equal:
            return "lifo"
        raise OutOfTheoremScope(
            f"no optimality-grade policy for a {shape} cost"
            + ("" if equal else " with unequal densities")
        )
    if algorithm == "hdf" and shape == LINEAR:
        return "hdf"
    if algorithm == "fifo" and equal and shape in (LINEAR, CONVEX):
        return "fifo"
    if algorithm == "lifo" and equal and shape in (LINEAR, CONCAVE):
        return "lifo"
    raise OutOfTheoremScope(
        f"({algorithm}, {shape}{'' if equal else ', unequal densities'}) "
        "is outside the proved optimality pairs"
    )


def certify_fractional_optimality(instance, algorithm=None):
    """Certificate that the run's fractional cost equals its dual bound.

    Covers the proved pairs: hdf on linear costs, hdf on completion
    costs (any shape), fifo on convex equal-density costs, and lifo on
    concave equal-density costs; anything else raises OutOfTheoremScope.
    The certificate passes only if the full property suite is clean and
    the primal fractional cost equals dual_objective(1) (exactly in
    exact mode), plus the two fractional-cost forms agree.
    """
    policy_name = _optimality_policy(instance, algorithm)
    run = run_priority_engine(instance, policy_name)
    state = maintain_duals(run)
    num = state.numeric
    props = _collect_properties(state)
    frac = fractional_cost(instance, run.schedule)
    frac_by_parts = fractional_cost_remaining_weight_form(instance, run.schedule)
    integral = integral_cost(instance, run.schedule)
    dual = dual_objective(state, 1)
    inequalities = [
        _inequality("fractional-equals-dual", frac, "==", dual, num.eq(frac, dual)),
        _inequality(
            "objective-forms-agree",
            frac,
            "==",
            frac_by_parts,
            num.eq(frac, frac_by_parts)
            or num.close_rel(frac, frac_by_parts, REL_IDENTITY),
        ),
    ]
    ok = all(p["ok"] for p in props.values()) and all(q["ok"] for q in inequalities)
    return Certificate(
        instance_id=instance_fingerprint(instance),
        algorithm=policy_name,
        problem=instance.problem,
        construction=state.construction,
        mode=num.mode,
        eps=None,
        alpha=1,
        primal_integral=integral,
        primal_fractional=frac,
        dual_value=dual,
        properties=props,
        inequalities=inequalities,
        ok=ok,
    )


def certify_integral_competitiveness(instance, algorithm, eps):
    """Certificate for the speed-scaled integral cost guarantee.

    Runs the policy at unit speed, builds its dual state, audits the
    family-appropriate property suite, and asserts both the per-job
    cover w_j g(C_j - shift_j) <= lam_j p_j and the headline bound
    integral cost <= ((1+eps)/eps) * dual_objective(1+eps).
    """
    if instance.problem in ("psp", "jdgfp"):
        raise OutOfTheoremScope(
            f"integral competitiveness certificates do not cover {instance.problem!r}"
        )
    num = instance.numeric
    if is_exactable(eps):
        eps_c = to_fraction(eps) if num.exact else float(to_fraction(eps))
    else:
        eps_c = float(eps)
    if not eps_c > 0:
        raise InstanceError("eps must be positive")
    run = run_priority_engine(instance, algorithm)
    state = maintain_duals(run)
    props = _collect_properties(state)

    cover_witnesses = []
    for j in instance.jobs:
        g, shift = instance.effective_cost(j)
        own = j.w * g.value(run.schedule.completions[j.id] - shift)
        if not num.leq(own, state.lam[j.id] * j.p):
            cover_witnesses.append(
                {
                    "kind": "job-cost-exceeds-dual",
                    "job": j.id,
                    "cost": own,
                    "lambda_p": state.lam[j.id] * j.p,
                }
            )
    props["job_cover"] = _prop(cover_witnesses)

    alpha = 1 + eps_c
    integral = integral_cost(instance, run.schedule)
    frac = fractional_cost(instance, run.schedule)
    dual = dual_objective(state, alpha)
    bound = exact_div(1 + eps_c, eps_c) * dual
    inequalities = [
        _inequality("competitive-ratio", integral, "<=", bound, num.leq(integral, bound))
    ]
    ok = all(p["ok"] for p in props.values()) and all(q["ok"] for q in inequalities)
    return Certificate(
        instance_id=instance_fingerprint(instance),
        algorithm=algorithm,
        problem=instance.problem,
        construction=state.construction,
        mode=num.mode,
        eps=eps_c,
        alpha=alpha,
        primal_integral=integral,
        primal_fractional=frac,
        dual_value=dual,
        properties=props,
        inequalities=inequalities,
        ok=ok,
    )


def _trajectory_cost_integral(sim, instance):
    """Aggregate marginal cost integrated over the recorded windows.

    Each window [a, b) with pending set S contributes
    sum_{j in S} w_j (g_j(b - r_j) - g_j(a - r_j)): the exact integral of
    the aggregate marginal over the window.  If the windows tile each
    job's [r_j, C_j] this telescopes to the total cost; the residual is
    a direct measure of the integrator's window bookkeeping.
    """
    total = 0.0
    for a, b, ids in sim.segments:
        if not b > a:
            continue
        for jid in ids:
            j = instance.job(jid)
            r = float(j.r)
            total += float(j.w) * (
                float(j.g.value(b - r)) - float(j.g.value(max(a - r, 0.0)))
            )
    return total


def certify_jdgfp(instance, eps):
    """Certificate for the rate-curve (per-job cost) guarantee.

    Asserts (a) the quadrature identity (k+1) sum_j lam_j p_j = total
    cost and the window-integral identity int G = total cost, both at
    1e-6 relative; (b) the sampled dual bound lam_j <= delta_j
    g_j(tau - r_j) + G(tau)/k on a 100-point grid per job; (c) the
    headline inequality F <= (4(1+eps)^2/eps^2) [sum lam p - int G /
    ((1+eps) k)]; and (d) the pure-arithmetic coefficient inequality
    1/(k+1) - 1/((1+eps)k) >= eps^2 / (4 (1+eps)^2) behind (c).
    """
    eps_f = float(to_fraction(eps)) if is_exactable(eps) else float(eps)
    if not eps_f > 0:
        raise InstanceError("eps must be positive")
    sim = simulate_jdgfp(instance, eps_f)
    state = jdgfp_state(sim, instance)
    k = sim.k
    lamp = state.lam_dot_p()
    total = jdgfp_total_cost(sim, instance)
    window_integral = _trajectory_cost_integral(sim, instance)
    props = {"rate_bound": _prop(check_dual_feasible(state))}

    scale = max(abs(total), 1.0)
    identity_ok = abs((k + 1) * lamp - total) <= REL_RATE * scale
    windows_ok = abs(window_integral - total) <= REL_RATE * scale
    coeff_lhs = 1.0 / (k + 1) - 1.0 / ((1.0 + eps_f) * k)
    coeff_rhs = eps_f * eps_f / (4.0 * (1.0 + eps_f) ** 2)
    bracket = lamp - window_integral / ((1.0 + eps_f) * k)
    bound = (4.0 * (1.0 + eps_f) ** 2 / eps_f**2) * bracket
    inequalities = [
        _inequality("rate-identity", (k + 1) * lamp, "==", total, identity_ok),
        _inequality("window-integral", window_integral, "==", total, windows_ok),
        _inequality(
            "competitive-ratio", total, "<=", bound, total <= bound + 1e-9 * scale
        ),
        _inequality(
            "coefficient", coeff_rhs, "<=", coeff_lhs, coeff_rhs <= coeff_lhs + 1e-12
        ),
    ]
    ok = all(p["ok"] for p in props.values()) and all(q["ok"] for q in inequalities)
    return Certificate(
        instance_id=instance_fingerprint(instance),
        algorithm="rate-curve",
        problem=instance.problem,
        construction=state.construction,
        mode=state.numeric.mode,
        eps=eps_f,
        alpha=1.0 + eps_f,
        primal_integral=total,
        primal_fractional=fractional_cost(instance, sim.schedule),
        dual_value=lamp,
        properties=props,
        inequalities=inequalities,
        ok=ok,
        detail={"k": k, "bracket": bracket},
    )


def certify_packing_identity(instance):
    """Certificate for a packing run's dual accounting.

    Runs the packing priority rule, builds its duals, audits the strict
    property suite plus dual feasibility (both packing forms), and
    asserts per job that the dual-side contribution lam_j p_j -
    (b_j/B_j) int mu' equals the fractional cost the job actually pays,
    along with dual_objective(1) <= fractional cost and the agreement
    of the two fractional-cost forms.
    """
    if instance.problem != "psp":
        raise OutOfTheoremScope(
            f"packing identity certificates cover psp, not {instance.problem!r}"
        )
    schedule = simulate_psp(instance)
    state = psp_duals(schedule, instance)
    num = state.numeric
    props = _collect_properties(state)
    frac = fractional_cost(instance, schedule)
    frac_by_parts = fractional_cost_remaining_weight_form(instance, schedule)
    integral = integral_cost(instance, schedule)
    dual = dual_objective(state, 1)
    inequalities = [
        _inequality("dual-below-fractional", dual, "<=", frac, num.leq(dual, frac)),
        _inequality(
            "objective-forms-agree",
            frac,
            "==",
            frac_by_parts,
            num.eq(frac, frac_by_parts)
            or num.close_rel(frac, frac_by_parts, REL_IDENTITY),
        ),
    ]
    for jid, (dual_side, frac_side) in sorted(psp_job_contributions(state).items()):
        inequalities.append(
            _inequality(
                f"job-{jid}-contribution",
                dual_side,
                "==",
                frac_side,
                num.eq(dual_side, frac_side)
                or num.close_rel(dual_side, frac_side, REL_IDENTITY),
            )
        )
    ok = all(p["ok"] for p in props.values()) and all(q["ok"] for q in inequalities)
    return Certificate(
        instance_id=instance_fingerprint(instance),
        algorithm="psp",
        problem=instance.problem,
        construction=state.construction,
        mode=num.mode,
        eps=None,
        alpha=1,
        primal_integral=integral,
        primal_fractional=frac,
        dual_value=dual,
        properties=props,
        inequalities=inequalities,
        ok=ok,
    )
