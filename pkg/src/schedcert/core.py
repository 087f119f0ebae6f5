"""Core types: jobs, instances, schedules, and the cost functionals.

An instance fixes the problem flavor:

* ``gfp``    weighted cost of flow time, shared shape g: sum_j w_j g(C_j - r_j)
* ``gcp``    weighted cost of completion time: sum_j w_j g(C_j)
* ``psp``    flow time under row constraints B x <= speed (linear g implied)
* ``jdgfp``  per-job cost shapes g_j of flow time

Schedules are piecewise-constant rate assignments over disjoint contiguous
intervals covering [0, C_max], idle intervals kept explicitly.  All numbers
live in the instance's arithmetic mode (exact rationals or floats).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .costs import CostFunction, LinearCost, cost_from_json
from .errors import IncompleteSchedule, InstanceError, NonPositiveDemand
from .numerics import (
    EXACT,
    FLOAT,
    Numeric,
    is_exactable,
    number_from_json,
    number_to_json,
)

PROBLEMS = ("gfp", "gcp", "psp", "jdgfp")


@dataclass
class Job:
    id: int
    r: object  # release time
    p: object  # processing requirement
    w: object  # weight
    g: CostFunction | None = None  # per-job cost shape (jdgfp only)

    @property
    def density(self):
        return self.w / self.p


class Instance:
    """Problem instance; use Instance.make so numbers get coerced to a mode."""

    def __init__(self, problem, jobs, g=None, B=None, numeric=None):
        self.problem = problem
        self.jobs = jobs
        self.g = g
        self.B = B
        self.numeric = numeric or Numeric(EXACT)
        self._by_id = {j.id: j for j in jobs}
        self._validate()

    @staticmethod
    def make(problem, jobs_data, g=None, B=None, mode=None):
        """Build an instance from raw numbers, picking the arithmetic mode.

        jobs_data: iterable of dicts with id, r, p, w (and optional g for
        jdgfp).  mode: None for automatic, or "exact"/"float" to force.
        """
        if problem not in PROBLEMS:
            raise InstanceError(f"unknown problem {problem!r}")
        raw_numbers = []
        for jd in jobs_data:
            raw_numbers += [jd["r"], jd["p"], jd["w"]]
        if B is not None:
            for row in B:
                raw_numbers += list(row)

        shapes = []
        if g is not None:
            shapes.append(g)
        per_job_g = [jd.get("g") for jd in jobs_data]
        shapes += [s for s in per_job_g if s is not None]

        exact_ok = all(is_exactable(x) for x in raw_numbers) and all(
            s.exact_capable for s in shapes
        )
        if problem == "jdgfp":
            exact_ok = False  # rate curves are integrated numerically

        if mode is None:
            mode = EXACT if exact_ok else FLOAT
        elif mode == EXACT and not exact_ok:
            raise InstanceError("exact mode impossible for this instance")
        numeric = Numeric(mode)

        jobs = [
            Job(
                id=int(jd["id"]),
                r=numeric.convert(jd["r"]),
                p=numeric.convert(jd["p"]),
                w=numeric.convert(jd["w"]),
                g=jd.get("g"),
            )
            for jd in jobs_data
        ]
        Bc = None
        if B is not None:
            Bc = [[numeric.convert(x) for x in row] for row in B]
        return Instance(problem, jobs, g=g, B=Bc, numeric=numeric)

    def _validate(self):
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise InstanceError("job ids must be unique")
        for j in self.jobs:
            if j.r < 0:
                raise InstanceError(f"job {j.id}: release must be >= 0")
            if j.p <= 0:
                raise InstanceError(f"job {j.id}: processing time must be > 0")
            if j.w <= 0:
                raise InstanceError(f"job {j.id}: weight must be > 0")
        if self.problem in ("gfp", "gcp"):
            if self.g is None:
                raise InstanceError(f"{self.problem} needs a cost function")
        if self.problem == "jdgfp":
            for j in self.jobs:
                if j.g is None:
                    raise InstanceError(f"jdgfp job {j.id} needs its own cost shape")
        if self.problem == "psp":
            if self.B is None or not self.B:
                raise InstanceError("psp needs a constraint matrix B")
            n = len(self.jobs)
            for row in self.B:
                if len(row) != n:
                    raise InstanceError("B rows must have one column per job")
                for x in row:
                    if x <= 0:
                        raise NonPositiveDemand("B entries must be positive")

    def job(self, jid) -> Job:
        return self._by_id[jid]

    @property
    def n(self):
        return len(self.jobs)

    @property
    def equal_density(self) -> bool:
        dens = {j.density for j in self.jobs}
        return len(dens) <= 1

    # psp column extremes: b_j = min_i b_ij, B_j = max_i b_ij
    def col_min(self, jid):
        col = self._col(jid)
        return min(col)

    def col_max(self, jid):
        col = self._col(jid)
        return max(col)

    def _col(self, jid):
        idx = [j.id for j in self.jobs].index(jid)
        return [row[idx] for row in self.B]

    def tight_row(self, jid):
        """Smallest row index attaining the column maximum."""
        col = self._col(jid)
        mx = max(col)
        return col.index(mx)

    def effective_cost(self, job) -> tuple[CostFunction, object]:
        """(shape, time shift) so the job's cost rate at t is g(t - shift)."""
        if self.problem == "gcp":
            return self.g, 0 * job.r
        if self.problem == "jdgfp":
            return job.g, job.r
        if self.problem == "psp":
            return _UNIT_LINEAR, job.r
        return self.g, job.r

    def to_json(self):
        d = {
            "problem": self.problem,
            "mode": self.numeric.mode,
            "jobs": [
                {
                    "id": j.id,
                    "r": number_to_json(j.r),
                    "p": number_to_json(j.p),
                    "w": number_to_json(j.w),
                    **({"g": j.g.to_json()} if j.g is not None else {}),
                }
                for j in self.jobs
            ],
        }
        if self.g is not None:
            d["g"] = self.g.to_json()
        if self.B is not None:
            d["B"] = [[number_to_json(x) for x in row] for row in self.B]
        return d

    @staticmethod
    def from_json(d, mode=None):
        g = cost_from_json(d["g"]) if "g" in d else None
        jobs_data = []
        for jd in d["jobs"]:
            rec = {
                "id": jd["id"],
                "r": jd["r"],
                "p": jd["p"],
                "w": jd["w"],
            }
            if "g" in jd:
                rec["g"] = cost_from_json(jd["g"])
            jobs_data.append(rec)
        B = d.get("B")
        return Instance.make(
            d["problem"], jobs_data, g=g, B=B, mode=mode or d.get("mode")
        )


_UNIT_LINEAR = LinearCost(1)


@dataclass
class Piece:
    """Constant-rate interval [t1, t2); rates maps job id -> work rate.
    An empty rates map is explicit idle time."""

    t1: object
    t2: object
    rates: dict = field(default_factory=dict)

    @property
    def idle(self):
        return not self.rates


class Schedule:
    def __init__(self, speed, pieces, completions):
        self.speed = speed
        self.pieces = pieces
        self.completions = completions

    @staticmethod
    def from_pieces(speed, pieces, completions, merge=True):
        pieces = [p for p in pieces if p.t2 > p.t1]
        pieces.sort(key=lambda p: p.t1)
        if merge:
            merged = []
            for p in pieces:
                if merged and merged[-1].t2 == p.t1 and merged[-1].rates == p.rates:
                    merged[-1] = Piece(merged[-1].t1, p.t2, p.rates)
                else:
                    merged.append(p)
            pieces = merged
        return Schedule(speed, pieces, dict(completions))

    @property
    def makespan(self):
        for p in reversed(self.pieces):
            if not p.idle:
                return p.t2
        return 0

    def work_by_job(self):
        tot = {}
        for p in self.pieces:
            for jid, x in p.rates.items():
                tot[jid] = tot.get(jid, 0) + x * (p.t2 - p.t1)
        return tot

    def job_segments(self, jid, upto=None):
        """(t1, t2, rate) spans where the job runs, optionally clipped."""
        out = []
        for p in self.pieces:
            if jid in p.rates:
                t1, t2 = p.t1, p.t2
                if upto is not None:
                    t2 = min(t2, upto)
                if t2 > t1:
                    out.append((t1, t2, p.rates[jid]))
        return out

    def boundaries(self):
        bs = []
        for p in self.pieces:
            if not bs or bs[-1] != p.t1:
                bs.append(p.t1)
            bs.append(p.t2)
        return bs

    def validate(self, instance, tol=None):
        """Structural checks; raises InstanceError on violation."""
        num = instance.numeric
        work_tol = 0 if num.exact else (tol if tol is not None else 1e-7)
        prev_end = None
        for p in self.pieces:
            if p.t2 <= p.t1:
                raise InstanceError("empty or reversed piece")
            if prev_end is not None and p.t1 != prev_end:
                raise InstanceError("pieces must be contiguous (idle is explicit)")
            prev_end = p.t2
            total = sum(p.rates.values(), 0)
            if not num.leq(total, self.speed):
                raise InstanceError(f"rates exceed speed on [{p.t1},{p.t2})")
            for jid, x in p.rates.items():
                if x < 0:
                    raise InstanceError("negative rate")
                if p.t1 < instance.job(jid).r:
                    raise InstanceError(f"job {jid} runs before release")
                if jid in self.completions and p.t1 >= self.completions[jid] and x > 0:
                    raise InstanceError(f"job {jid} runs after completion")
            if instance.problem == "psp":
                jids = [j.id for j in instance.jobs]
                for row in instance.B:
                    load = sum(
                        row[jids.index(jid)] * x for jid, x in p.rates.items()
                    )
                    if not num.leq(load, self.speed):
                        raise InstanceError("row constraint violated")
        if self.pieces and self.pieces[0].t1 != 0:
            raise InstanceError("schedule must start at time 0")
        work = self.work_by_job()
        for j in instance.jobs:
            got = work.get(j.id, 0)
            ok = (got == j.p) if num.exact else abs(got - j.p) <= work_tol
            if not ok:
                raise IncompleteSchedule(f"job {j.id}: work {got} != p {j.p}")
            if j.id not in self.completions:
                raise InstanceError(f"job {j.id} has no completion time")
        return True

    def to_json(self):
        rows = []
        for p in self.pieces:
            if p.idle:
                rows.append(
                    {"t1": number_to_json(p.t1), "t2": number_to_json(p.t2), "job": None, "rate": 0}
                )
            else:
                for jid in sorted(p.rates):
                    rows.append(
                        {
                            "t1": number_to_json(p.t1),
                            "t2": number_to_json(p.t2),
                            "job": jid,
                            "rate": number_to_json(p.rates[jid]),
                        }
                    )
        return {
            "speed": number_to_json(self.speed),
            "pieces": rows,
            "completions": {str(k): number_to_json(v) for k, v in self.completions.items()},
        }

    @staticmethod
    def from_json(d):
        groups = {}
        order = []
        for row in d["pieces"]:
            key = (str(row["t1"]), str(row["t2"]))
            if key not in groups:
                groups[key] = Piece(
                    number_from_json(row["t1"]), number_from_json(row["t2"]), {}
                )
                order.append(key)
            if row["job"] is not None:
                groups[key].rates[int(row["job"])] = number_from_json(row["rate"])
        completions = {int(k): number_from_json(v) for k, v in d["completions"].items()}
        return Schedule.from_pieces(
            number_from_json(d["speed"]), [groups[k] for k in order], completions, merge=False
        )


# ---------------------------------------------------------------------------
# Cost functionals


def integral_cost(instance, schedule):
    """sum_j w_j g_j(C_j - shift_j): the cost of the completion times."""
    total = 0
    for j in instance.jobs:
        g, shift = instance.effective_cost(j)
        total += j.w * g.value(schedule.completions[j.id] - shift)
    return total


def fractional_cost(instance, schedule):
    """Density-weighted cost of where the work is actually placed:
    sum_j delta_j int g_j(t - shift_j) x_j(t) dt."""
    total = 0
    for j in instance.jobs:
        g, shift = instance.effective_cost(j)
        for t1, t2, x in schedule.job_segments(j.id):
            total += j.density * x * (g.antiderivative(t2 - shift) - g.antiderivative(t1 - shift))
    return total


def fractional_cost_remaining_weight_form(instance, schedule):
    """Same functional through the remaining-work lens:
    sum_j (w_j/p_j) int_{shift_j}^{C_j} q_j(t) g_j'(t - shift_j) dt,
    with q_j the remaining work (= p_j before the release).  Evaluated
    without touching g' at all: on a span [a, b] where the rate x is
    constant, q(t) = q_a - x (t - a) and

        int_a^b q g'(t-s) dt = q_a [g]_a^b - x ((b-a) g(b-s) - [G]_a^b)

    where G is the antiderivative of g.  Waiting spans (x = 0) contribute
    q_a [g]_a^b; for completion-form costs the stretch before the release
    is one such span and contributes p_j g(r_j - shift_j) up front (zero
    for flow-form costs, whose shift is the release itself).  Agreement
    with fractional_cost is the package's core bookkeeping identity and
    is asserted by the verification layer.
    """
    total = 0
    for j in instance.jobs:
        g, shift = instance.effective_cost(j)
        C = schedule.completions[j.id]
        # walk [r_j, C_j] across piece boundaries, tracking remaining work
        q = j.p
        t = j.r
        acc = q * (g.value(j.r - shift) - g.value(0))
        for p in schedule.pieces:
            a = max(p.t1, j.r)
            b = min(p.t2, C)
            if b <= a:
                continue
            if a > t:  # gap in piece cover (should not happen) -> waiting
                a = t
            x = p.rates.get(j.id, 0)
            ga, gb = g.value(a - shift), g.value(b - shift)
            Ga, Gb = g.antiderivative(a - shift), g.antiderivative(b - shift)
            acc += q * (gb - ga) - x * ((b - a) * gb - (Gb - Ga))
            q = q - x * (b - a)
            t = b
        total += j.density * acc
    return total
