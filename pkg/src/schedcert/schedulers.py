"""Schedulers: priority policies, the packing variant, and rate curves.

All single-machine policies here share one event-driven engine: releases are
processed one job at a time (simultaneous releases in id order); at each
release the pending set is re-ranked by the policy's static key and the
machine follows that order until the next release.  The machine never idles
while work is pending.  The engine records a snapshot per release event --
pending order, remaining work, realized prefix, projected completions --
which is exactly what the dual-maintenance layer replays.

The packing variant (``simulate_psp``) runs the pending job with the highest
scaled density w_j / (p_j b_j) at work rate speed / B_j, where b_j and B_j
are the smallest and largest entries of the job's constraint column.

``simulate_jdgfp`` shares the machine fractionally: each pending job gets a
rate from ``jdgfp_rates`` (a normalized power-mean of the jobs' marginal
costs), integrated with fixed Simpson steps between events and bisection to
localize completions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import Instance, Piece, Schedule
from .errors import InstanceError, StepUnderflow

ETA = 1e-9  # clamp for marginal-cost evaluation at a job's own release


# ---------------------------------------------------------------------------
# Priority policies


class Policy:
    """A static priority order over jobs; smaller key runs first."""

    def __init__(self, name, key):
        self.name = name
        self.key = key

    def __repr__(self):
        return f"Policy({self.name})"


def _hdf_key(job):
    return (-job.density, job.id)


def _fifo_key(job):
    return (job.r, job.id)


def _lifo_key(job):
    return (-job.r, job.id)


POLICIES = {
    "hdf": Policy("hdf", _hdf_key),
    "fifo": Policy("fifo", _fifo_key),
    "lifo": Policy("lifo", _lifo_key),
}


def get_policy(name) -> Policy:
    if isinstance(name, Policy):
        return name
    try:
        return POLICIES[name]
    except KeyError:
        raise InstanceError(f"unknown policy {name!r}") from None


# ---------------------------------------------------------------------------
# Event-driven engine


@dataclass
class PendingState:
    """Pending jobs in execution order with their remaining work."""

    tau: object
    items: list  # list of [job, remaining]

    def ids(self):
        return [job.id for job, _ in self.items]

    def projected_completions(self, rate_of):
        """Completion times if no further job arrives."""
        out = {}
        t = self.tau
        for job, q in self.items:
            t = t + q / rate_of(job)
            out[job.id] = t
        return out

    def projected_pieces(self, rate_of):
        out = []
        t = self.tau
        for job, q in self.items:
            d = q / rate_of(job)
            out.append(Piece(t, t + d, {job.id: rate_of(job)}))
            t = t + d
        return out


@dataclass
class ReleaseEvent:
    """Snapshot taken right after one job is added to the pending set."""

    tau: object
    released: int
    pending: PendingState  # includes the newcomer
    completions: dict  # realized completions so far
    busy_start: object  # start of the busy interval containing tau
    projected: dict  # completion times of pending jobs if nothing else arrives
    projection: Schedule  # realized prefix + projected pieces


@dataclass
class EngineRun:
    instance: Instance
    policy: Policy
    speed: object
    schedule: Schedule
    events: list = field(default_factory=list)


def run_priority_engine(instance, policy, speed=1, rate_of=None) -> EngineRun:
    """Simulate a priority policy, recording one snapshot per release."""
    policy = get_policy(policy)
    speed = instance.numeric.convert(speed)
    if rate_of is None:
        rate_of = lambda job: speed  # noqa: E731 - exclusive full-speed run

    releases = sorted(instance.jobs, key=lambda j: (j.r, j.id))
    pending: list = []  # [job, remaining], sorted by policy key
    pieces: list[Piece] = []
    completions: dict = {}
    events: list[ReleaseEvent] = []
    t = instance.numeric.convert(0)
    busy_start = None

    def advance(target):
        """Run the machine up to the target time."""
        nonlocal t, busy_start
        while t < target and pending:
            job, q = pending[0]
            rate = rate_of(job)
            finish = t + q / rate
            if finish <= target:
                pieces.append(Piece(t, finish, {job.id: rate}))
                completions[job.id] = finish
                pending.pop(0)
                t = finish
            else:
                pieces.append(Piece(t, target, {job.id: rate}))
                pending[0][1] = q - rate * (target - t)
                t = target
        if t < target:
            pieces.append(Piece(t, target, {}))  # explicit idle
            t = target
            busy_start = None

    for z in releases:
        advance(z.r)
        if busy_start is None:
            busy_start = t
        pending.append([z, z.p])
        pending.sort(key=lambda item: policy.key(item[0]))
        state = PendingState(t, [[job, q] for job, q in pending])
        projected = state.projected_completions(rate_of)
        proj_sched = Schedule.from_pieces(
            speed,
            list(pieces) + state.projected_pieces(rate_of),
            {**completions, **projected},
        )
        events.append(
            ReleaseEvent(
                tau=t,
                released=z.id,
                pending=state,
                completions=dict(completions),
                busy_start=busy_start,
                projected=projected,
                projection=proj_sched,
            )
        )

    # drain the queue after the last release
    while pending:
        job, q = pending.pop(0)
        rate = rate_of(job)
        finish = t + q / rate
        pieces.append(Piece(t, finish, {job.id: rate}))
        completions[job.id] = finish
        t = finish
    schedule = Schedule.from_pieces(speed, pieces, completions)
    return EngineRun(instance, policy, speed, schedule, events)


def simulate_class_A(instance, policy, speed=1) -> Schedule:
    """Preemptive single-machine run of a priority policy (no idling,
    order re-fixed at each release)."""
    return run_priority_engine(instance, policy, speed).schedule


def psp_priority_key(instance):
    def key(job):
        return (-job.density / instance.col_min(job.id), job.id)

    return key


def run_psp_engine(instance, speed=1) -> EngineRun:
    """Packing variant: highest scaled density first, at rate speed / B_j."""
    if instance.problem != "psp":
        raise InstanceError("run_psp_engine needs a psp instance")
    policy = Policy("psp", psp_priority_key(instance))
    rate_of = lambda job: speed / instance.col_max(job.id)  # noqa: E731
    return run_priority_engine(instance, policy, instance.numeric.convert(speed), rate_of=rate_of)


def simulate_psp(instance, speed=1) -> Schedule:
    return run_psp_engine(instance, speed).schedule


# ---------------------------------------------------------------------------
# Job-dependent rate curves


def _marginal(job, t):
    """w_j g_j'(t - r_j), clamped away from the release singularity."""
    dt = t - job.r
    if dt < ETA:
        dt = ETA
    return job.w * job.g.derivative(dt)


def jdgfp_rates(pending_jobs, t, k):
    """Machine shares for the pending set at time t.

    Jobs are ranked by (release, id); with P_i(t) the prefix sums of the
    marginal costs w_j g_j'(t - r_j) over jobs ranked <= i, job i receives

        nu_i = (P_i^k - P_{i-1}^k) / P_n^k,

    a partition of unity weighted toward recent arrivals.  The prefix is
    the aggregate that matters: once job i is released, nothing can join
    its prefix set (any job ranked before i is already here), so P_i(t)
    only decays -- the monotonicity the dual rate bound leans on.
    """
    order = sorted(pending_jobs, key=lambda j: (j.r, j.id))
    u = [_marginal(j, t) for j in order]
    prefixes = [0.0]
    for x in u:
        prefixes.append(prefixes[-1] + x)
    total = prefixes[-1]
    if total <= 0:  # flat shapes everywhere: degenerate, run the newest job
        last = len(order) - 1
        return {j.id: (1.0 if i == last else 0.0) for i, j in enumerate(order)}
    powers = [(x / total) ** k for x in prefixes]
    return {j.id: powers[i + 1] - powers[i] for i, j in enumerate(order)}


@dataclass
class JdgfpSim:
    """Result of a rate-curve run: sampled schedule plus the pending
    windows needed by the dual construction."""

    instance: Instance
    eps: float
    k: int
    speed: float
    schedule: Schedule
    segments: list  # (t0, t1, tuple of pending ids) between events


def simulate_jdgfp(instance, eps, speed=1.0) -> JdgfpSim:
    """Integrate the rate curves with fixed Simpson steps between events.

    Step length is min(1e-3 * min_j p_j, gap to the next release); a
    completion inside a step is localized by bisecting the step map until
    the remaining work is within 1e-10 (at most 200 iterations).
    """
    if instance.problem != "jdgfp":
        raise InstanceError("simulate_jdgfp needs a jdgfp instance")
    k = math.ceil(2.0 / float(eps))
    speed = float(speed)
    releases = sorted(instance.jobs, key=lambda j: (j.r, j.id))
    h_base = 1e-3 * min(float(j.p) for j in releases)

    t = 0.0
    q = {}
    pending = []  # sorted by (r, id)
    pieces = []
    completions = {}
    segments = []
    seg_start = 0.0
    rel_idx = 0
    n = len(releases)

    def nu(time):
        return jdgfp_rates(pending, time, k)

    def seg_break(now):
        nonlocal seg_start
        if pending and now > seg_start:
            segments.append((seg_start, now, tuple(j.id for j in pending)))
        seg_start = now

    def step_increments(t0, h):
        """Simpson work increments over [t0, t0+h] for each pending job."""
        a = nu(t0)
        m = nu(t0 + h / 2)
        b = nu(t0 + h)
        return {
            j.id: speed * h / 6.0 * (a[j.id] + 4.0 * m[j.id] + b[j.id])
            for j in pending
        }

    def locate_completion(t0, h, jid):
        """Smallest step length d <= h with q_jid exhausted at t0 + d."""
        lo, hi = 0.0, h
        for _ in range(200):
            mid = (lo + hi) / 2.0
            rem = q[jid] - step_increments(t0, mid)[jid]
            if abs(rem) <= 1e-10:
                return mid
            if rem > 0:
                lo = mid
            else:
                hi = mid
        raise StepUnderflow(f"could not localize completion of job {jid}")

    while rel_idx < n or pending:
        if not pending:
            z = releases[rel_idx]
            if t < float(z.r):
                pieces.append(Piece(t, float(z.r), {}))
                t = float(z.r)
                seg_start = t
            while rel_idx < n and float(releases[rel_idx].r) == t:
                zz = releases[rel_idx]
                pending.append(zz)
                q[zz.id] = float(zz.p)
                rel_idx += 1
            pending.sort(key=lambda j: (j.r, j.id))
            seg_start = t
            continue

        next_rel = float(releases[rel_idx].r) if rel_idx < n else math.inf
        h = min(h_base, next_rel - t)
        inc = step_increments(t, h)
        finishing = [jid for jid in inc if q[jid] - inc[jid] <= 1e-10]
        if finishing:
            d = min(locate_completion(t, h, jid) for jid in finishing)
            inc = step_increments(t, d)
            done = [j for j in pending if q[j.id] - inc[j.id] <= 1e-10]
            h = d
        else:
            done = []
        if h > 0:
            pieces.append(
                Piece(t, t + h, {jid: x / h for jid, x in inc.items() if x > 0})
            )
            for jid, x in inc.items():
                q[jid] -= x
        t += h
        if done:
            seg_break(t)
            for j in done:
                completions[j.id] = t
                pending.remove(j)
                del q[j.id]
        if t >= next_rel and rel_idx < n:
            seg_break(t)
            while rel_idx < n and float(releases[rel_idx].r) == t:
                zz = releases[rel_idx]
                pending.append(zz)
                q[zz.id] = float(zz.p)
                rel_idx += 1
            pending.sort(key=lambda j: (j.r, j.id))

    schedule = Schedule.from_pieces(speed, pieces, completions, merge=False)
    return JdgfpSim(instance, float(eps), k, speed, schedule, segments)
