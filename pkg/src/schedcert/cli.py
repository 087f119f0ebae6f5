"""Command-line front end: generate instances, certify runs, sweep seeds.

Three subcommands::

    schedcert gen   --seed 7 --n 5 --problem gfp --g linear -o inst.json
    schedcert run   inst.json --alg hdf --eps 0.5 --checks p,feasible,oracle
    schedcert sweep --seeds 0:50 --n 5 --alg hdf --eps 0.5,1 -o report.csv

``gen`` draws a random instance (deterministic for a given config) and
writes it as JSON with the generating config echoed alongside.  ``run``
schedules one instance, builds and audits its dual state, and emits the
certificate (plus, on request, the schedule, the event-by-event dual
trace, and an envelope CSV for plotting).  ``sweep`` repeats gen+run
over a seed range and writes one CSV row per certificate; reruns with
the same arguments are byte-identical.

Every output embeds the config hash and the arithmetic mode.  Exit
codes: 0 when all requested checks pass, 2 when a property or
certificate check fails (argparse also uses 2 for usage errors), 3 when
the LP oracle disagrees with the dual value.  ``sweep`` can fan out
over processes via the SCHEDCERT_WORKERS environment variable; results
are merged in seed order so the worker count never changes the output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import random
import sys
from dataclasses import asdict, dataclass, field

from .core import Instance, fractional_cost
from .costs import LinearCost, LogCost, PiecewiseLinearCost, PowerCost
from .duals import (
    RATE_CURVE,
    jdgfp_state,
    maintain_duals,
    psp_duals,
)
from .errors import InstanceError, OutOfTheoremScope, SchedcertError
from .numerics import number_to_json
from .oracle import lp_lower_bound
from .schedulers import run_priority_engine, simulate_jdgfp, simulate_psp
from .verify import (
    STRICT_FAMILY,
    _jsonify,
    certify_fractional_optimality,
    certify_integral_competitiveness,
    certify_jdgfp,
    certify_packing_identity,
    check_dual_feasible,
    check_P1_P2,
    check_Q1_Q2,
    dual_objective,
)

ALGORITHMS = ("hdf", "fifo", "lifo", "psp", "jdgfp")
G_FAMILIES = ("linear", "quadratic", "sqrt", "log", "pwl-concave", "mixed")
CHECK_NAMES = ("p", "q", "feasible", "oracle", "jdgfp")
ENVELOPE_SAMPLES = 200  # per schedule piece, breakpoints added on top

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_ORACLE_MISMATCH = 3


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a generated instance and its run.

    The same config always yields the same instance: one
    ``random.Random(seed)`` stream drawn in a fixed order (the
    equal-density slope first, then r, p, w, and the per-job cost shape
    for each job in id order, then the packing matrix row by row).
    """

    seed: int = 0
    n: int = 4
    problem: str = "gfp"
    g: str = "linear"
    algorithm: str | None = None
    eps: tuple = ()
    r_max: int = 20
    p_min: int = 1
    p_max: int = 20
    w_max: int = 20
    equal_density: bool = False
    rows: int = 2
    b_max: int = 4
    checks: tuple = ()
    mode: str | None = None  # None = automatic, else "exact" / "float"


def config_hash(config) -> str:
    """Stable short hash of a config (dataclass or plain dict)."""
    d = asdict(config) if not isinstance(config, dict) else config
    blob = json.dumps(d, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def make_shape(name):
    if name == "linear":
        return LinearCost(1)
    if name == "quadratic":
        return PowerCost(2)
    if name == "sqrt":
        return PowerCost("1/2")
    if name == "log":
        return LogCost()
    if name == "pwl-concave":
        return PiecewiseLinearCost([(0, 0), (1, 1), (2, "3/2")])
    raise InstanceError(f"unknown cost family {name!r}")


def generate_instance(config: ExperimentConfig) -> Instance:
    """Draw the instance the config describes (deterministic)."""
    rng = random.Random(config.seed)
    if config.n < 0:
        raise InstanceError("n must be >= 0")
    if config.p_min < 1 or config.p_max < config.p_min:
        raise InstanceError("need 1 <= p_min <= p_max")

    jdgfp_shapes = ("linear", "log", "sqrt")
    delta = rng.randint(1, 3) if config.equal_density else None
    jobs = []
    for i in range(1, config.n + 1):
        r = rng.randint(0, config.r_max)
        p = rng.randint(config.p_min, config.p_max)
        if delta is not None:
            w = delta * p
        else:
            w = rng.randint(1, config.w_max)
        rec = {"id": i, "r": r, "p": p, "w": w}
        if config.problem == "jdgfp":
            name = rng.choice(jdgfp_shapes) if config.g == "mixed" else config.g
            rec["g"] = make_shape(name)
        jobs.append(rec)

    g = None
    B = None
    if config.problem in ("gfp", "gcp"):
        g = make_shape(config.g)
    elif config.problem == "psp":
        if config.rows < 1:
            raise InstanceError("psp needs at least one packing row")
        B = [
            [rng.randint(1, config.b_max) for _ in range(config.n)]
            for _ in range(config.rows)
        ]
    return Instance.make(config.problem, jobs, g=g, B=B, mode=config.mode)


# ---------------------------------------------------------------------------
# single run: schedule + duals + certificate + extra checks


@dataclass
class RunOutcome:
    certificate: object
    schedule: object
    state: object
    extra_checks: dict = field(default_factory=dict)
    oracle: dict | None = None

    @property
    def checks_ok(self) -> bool:
        return self.certificate.ok and all(
            c["ok"] for c in self.extra_checks.values()
        )

    @property
    def oracle_ok(self) -> bool:
        return self.oracle is None or self.oracle["ok"]


def _resolve_algorithm(instance, algorithm):
    prob = instance.problem
    if prob == "psp":
        if algorithm not in (None, "psp"):
            raise OutOfTheoremScope(
                f"packing instances run the packing priority rule, not {algorithm!r};"
                " use --alg psp"
            )
        return "psp"
    if prob == "jdgfp":
        if algorithm not in (None, "jdgfp"):
            raise OutOfTheoremScope(
                f"per-job-cost instances run the rate-curve rule, not {algorithm!r};"
                " use --alg jdgfp"
            )
        return "jdgfp"
    if algorithm in ("psp", "jdgfp"):
        raise OutOfTheoremScope(
            f"--alg {algorithm} applies to {algorithm} instances, not {prob!r};"
            " flow/completion-cost instances take hdf, fifo, or lifo"
        )
    return algorithm  # None lets the optimality certificate infer the policy


def _rebuild_state(instance, algorithm, eps):
    """Re-run the certified algorithm so the CLI can export its artifacts."""
    if instance.problem == "psp":
        schedule = simulate_psp(instance)
        return schedule, psp_duals(schedule, instance)
    if instance.problem == "jdgfp":
        sim = simulate_jdgfp(instance, float(eps))
        return sim.schedule, jdgfp_state(sim, instance)
    run = run_priority_engine(instance, algorithm)
    return run.schedule, maintain_duals(run)


def _extra_checks(names, instance, state, schedule):
    out = {}
    for name in names:
        if name == "oracle":
            continue  # handled separately: it can flip the exit code to 3
        if name == "p":
            witnesses = check_P1_P2(schedule, state)
        elif name == "q":
            witnesses = check_Q1_Q2(schedule, state)
        elif name == "feasible":
            witnesses = check_dual_feasible(state)
        elif name == "jdgfp":
            if state.construction != RATE_CURVE:
                raise InstanceError(
                    "the jdgfp check audits rate-curve runs; this run's duals"
                    f" use the {state.construction} construction"
                )
            witnesses = check_dual_feasible(state)
        else:
            raise InstanceError(f"unknown check {name!r}")
        out[name] = {"ok": not witnesses, "witnesses": _jsonify(witnesses)}
    return out


def _oracle_comparison(instance, state, schedule):
    """Compare the slot-LP lower bound against this run's dual and cost.

    Always sound: lp <= the run's fractional cost.  When the dual state
    comes from a strict-family construction its dual value equals the
    fractional optimum, so additionally lp == dual under midpoint
    (all-linear) pricing and lp <= dual under infimum pricing.
    """
    if instance.problem not in ("gfp", "gcp"):
        raise InstanceError(
            "the oracle check compares flow/completion-cost runs; "
            f"{instance.problem!r} instances are out of its scope"
        )
    res = lp_lower_bound(instance)
    dual = dual_objective(state, 1)
    frac = fractional_cost(instance, schedule)
    exact = not isinstance(res.value, float) and not isinstance(dual, float)

    def leq(a, b):
        if exact and not isinstance(a, float) and not isinstance(b, float):
            return a <= b
        scale = max(1.0, abs(float(b)))
        return float(a) <= float(b) + 1e-9 * scale

    vs_frac = {"relation": "<=", "ok": bool(leq(res.value, frac))}
    vs_dual = None
    if state.construction in STRICT_FAMILY:
        if res.lp.mode == "midpoint":
            ok = leq(res.value, dual) and leq(dual, res.value)
            vs_dual = {"relation": "==", "ok": bool(ok)}
        else:
            vs_dual = {"relation": "<=", "ok": bool(leq(res.value, dual))}
    ok = vs_frac["ok"] and (vs_dual is None or vs_dual["ok"])
    return {
        "method": res.method,
        "pricing": res.lp.mode,
        "h": number_to_json(res.lp.h),
        "value": number_to_json(res.value),
        "dual": number_to_json(dual),
        "fractional": number_to_json(frac),
        "vs_fractional": vs_frac,
        "vs_dual": vs_dual,
        "ok": bool(ok),
    }


def run_instance(instance, algorithm=None, eps=None, checks=()) -> RunOutcome:
    """Certify one run and execute any extra named checks."""
    algorithm = _resolve_algorithm(instance, algorithm)
    if instance.problem == "psp":
        if eps is not None:
            raise InstanceError("packing identity certificates take no --eps")
        cert = certify_packing_identity(instance)
    elif instance.problem == "jdgfp":
        if eps is None:
            raise InstanceError("rate-curve runs need --eps")
        cert = certify_jdgfp(instance, eps)
    elif eps is not None:
        if algorithm is None:
            raise InstanceError("--eps needs an explicit --alg")
        cert = certify_integral_competitiveness(instance, algorithm, eps)
    else:
        cert = certify_fractional_optimality(instance, algorithm)

    extra_names = [c for c in checks if c != "oracle"]
    need_state = bool(extra_names) or "oracle" in checks
    schedule = state = None
    extras = {}
    oracle = None
    if need_state:
        schedule, state = _rebuild_state(instance, cert.algorithm, cert.eps)
        extras = _extra_checks(extra_names, instance, state, schedule)
        if "oracle" in checks:
            oracle = _oracle_comparison(instance, state, schedule)
    return RunOutcome(cert, schedule, state, extras, oracle)


# ---------------------------------------------------------------------------
# output writers


def _dump_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as f:
            f.write(text + "\n")


def write_envelope_csv(path, state, schedule, header_comment):
    """Sample the dual envelope along the schedule: t, gamma, dominant_job.

    Each schedule piece contributes ENVELOPE_SAMPLES evenly spaced
    points; every piece boundary and every envelope cell boundary is
    added on top, so kinks and crossings are hit exactly.
    """
    env = state.envelope()
    points = set()
    for p in schedule.pieces:
        points.add(p.t1)
        points.add(p.t2)
        span = p.t2 - p.t1
        for i in range(ENVELOPE_SAMPLES):
            points.add(p.t1 + span * i / ENVELOPE_SAMPLES)
    makespan = schedule.makespan
    if makespan > 0:
        for u, v, _ in env.cells(0, makespan):
            points.add(u)
            points.add(v)
    with open(path, "w", newline="") as f:
        f.write(header_comment)
        writer = csv.writer(f)
        writer.writerow(["t", "gamma", "dominant_job"])
        for t in sorted(points):
            gamma, jid = env.report(t)
            writer.writerow([float(t), float(gamma), "" if jid is None else jid])


# ---------------------------------------------------------------------------
# subcommands


def _load_instance_doc(path, mode=None):
    with open(path) as f:
        doc = json.load(f)
    inst_json = doc["instance"] if "instance" in doc else doc
    instance = Instance.from_json(inst_json, mode=mode)
    return instance, doc


def cmd_gen(args):
    config = _config_from_args(args)
    instance = generate_instance(config)
    doc = {
        "config": asdict(config),
        "config_hash": config_hash(config),
        "mode": instance.numeric.mode,
        "instance": instance.to_json(),
    }
    _dump_json(doc, args.out)
    return EXIT_OK


def cmd_run(args):
    mode = _mode_from_args(args)
    instance, doc = _load_instance_doc(args.instance, mode=mode)
    checks = _parse_checks(args.checks)
    eps_list = _parse_eps(args.eps)
    if len(eps_list) > 1:
        raise InstanceError("run takes a single --eps; sweep takes a list")
    eps = eps_list[0] if eps_list else None

    outcome = run_instance(instance, args.alg, eps, checks)
    cert = outcome.certificate
    run_hash = config_hash(
        {
            "instance": doc.get("config_hash") or cert.instance_id,
            "algorithm": cert.algorithm,
            "eps": number_to_json(cert.eps) if cert.eps is not None else None,
            "checks": list(checks),
            "mode": cert.mode,
        }
    )

    cert_doc = {
        "config_hash": run_hash,
        "mode": cert.mode,
        "certificate": cert.to_json(),
    }
    if outcome.extra_checks:
        cert_doc["extra_checks"] = outcome.extra_checks
    if outcome.oracle is not None:
        cert_doc["oracle"] = outcome.oracle
    _dump_json(cert_doc, args.cert)

    needs_artifacts = args.schedule or args.trace or args.plot_envelope
    if needs_artifacts and outcome.schedule is None:
        schedule, state = _rebuild_state(instance, cert.algorithm, cert.eps)
    else:
        schedule, state = outcome.schedule, outcome.state
    if args.schedule:
        _dump_json(
            {
                "config_hash": run_hash,
                "mode": cert.mode,
                "schedule": schedule.to_json(),
            },
            args.schedule,
        )
    if args.trace:
        _dump_json(
            {
                "config_hash": run_hash,
                "mode": cert.mode,
                "events": state.trace_json(),
            },
            args.trace,
        )
    if args.plot_envelope:
        comment = f"# config_hash={run_hash} mode={cert.mode}\n"
        write_envelope_csv(args.plot_envelope, state, schedule, comment)

    if args.cert not in (None, "-"):
        verdict = "PASS" if outcome.checks_ok and outcome.oracle_ok else "FAIL"
        print(
            f"{verdict} instance={cert.instance_id} algorithm={cert.algorithm}"
            f" dual={number_to_json(cert.dual_value)}"
        )
    if not outcome.checks_ok:
        return EXIT_CHECK_FAILED
    if not outcome.oracle_ok:
        return EXIT_ORACLE_MISMATCH
    return EXIT_OK


SWEEP_COLUMNS = (
    "seed",
    "n",
    "algorithm",
    "eps",
    "primal_int",
    "primal_frac",
    "dual",
    "ratio",
    "slack",
    "all_properties_pass",
)

_HEADLINE_ROWS = (
    "competitive-ratio",
    "fractional-equals-dual",
    "dual-below-fractional",
)


def _headline_slack(cert):
    for row in cert.inequalities:
        if row["name"] in _HEADLINE_ROWS:
            return row.get("slack", row.get("difference"))
    return None


def _cell(x):
    if x is None:
        return ""
    v = number_to_json(x)
    return "" if v is None else str(v)


def _cert_row(config, cert, oracle):
    dual = cert.dual_value
    primal = cert.primal_integral if cert.eps is not None else cert.primal_fractional
    ratio = None
    degenerate = dual == 0 or (isinstance(dual, float) and math.isinf(dual))
    if not degenerate:
        ratio = primal / dual
    row_ok = cert.ok and (oracle is None or oracle["ok"])
    return [
        config.seed,
        config.n,
        cert.algorithm,
        _cell(cert.eps),
        _cell(cert.primal_integral),
        _cell(cert.primal_fractional),
        _cell(dual),
        _cell(ratio),
        _cell(_headline_slack(cert)),
        str(bool(row_ok)),
    ]


def _failed_row(config, eps):
    return [
        config.seed,
        config.n,
        config.algorithm or "",
        _cell(eps),
        "",
        "",
        "",
        "",
        "",
        "False",
    ]


def _sweep_seed(task):
    """One seed's worth of sweep rows: (rows, messages, oracle_failures)."""
    config, eps_list, checks = task
    rows, messages, oracle_bad = [], [], 0
    try:
        instance = generate_instance(config)
    except SchedcertError as e:
        msg = f"seed {config.seed}: {e}"
        return [_failed_row(config, None)], [msg], 0

    def one(eps):
        nonlocal oracle_bad
        try:
            outcome = run_instance(instance, config.algorithm, eps, checks)
            cert = outcome.certificate
            if not outcome.checks_ok:
                messages.append(f"seed {config.seed}: certificate failed")
            if outcome.oracle is not None and not outcome.oracle["ok"]:
                oracle_bad += 1
                messages.append(f"seed {config.seed}: oracle mismatch")
            rows.append(_cert_row(config, cert, outcome.oracle))
        except SchedcertError as e:
            msg = f"seed {config.seed}: {e}"
            messages.append(msg)
            rows.append(_failed_row(config, eps))

    if eps_list:
        for eps in eps_list:
            one(eps)
    else:
        one(None)
    return rows, messages, oracle_bad


def cmd_sweep(args):
    seeds = _parse_seeds(args.seeds)
    eps_list = _parse_eps(args.eps)
    checks = _parse_checks(args.checks)
    base = _config_from_args(args, seed=0)
    if base.problem == "jdgfp" and not eps_list:
        raise InstanceError("rate-curve sweeps need --eps")

    sweep_cfg = dict(asdict(base), seeds=args.seeds, eps=list(eps_list))
    sweep_hash = config_hash(sweep_cfg)
    tasks = [
        (_config_from_args(args, seed=s), eps_list, checks) for s in seeds
    ]

    workers = int(os.environ.get("SCHEDCERT_WORKERS", "1") or "1")
    if workers > 1 and len(tasks) > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_sweep_seed, tasks)
    else:
        results = [_sweep_seed(t) for t in tasks]

    all_rows, all_messages, oracle_bad = [], [], 0
    for rows, messages, bad in results:
        all_rows.extend(rows)
        all_messages.extend(messages)
        oracle_bad += bad

    mode = base.mode or _auto_mode(base.problem, base.g)
    buf = io.StringIO()
    buf.write(f"# config_hash={sweep_hash} mode={mode}\n")
    writer = csv.writer(buf)
    writer.writerow(SWEEP_COLUMNS)
    for row in all_rows:
        writer.writerow(row)
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as f:
            f.write(text)

    for msg in all_messages:
        print(msg, file=sys.stderr)
    failed = any(row[-1] != "True" for row in all_rows)
    if failed:
        return EXIT_CHECK_FAILED
    if oracle_bad:
        return EXIT_ORACLE_MISMATCH
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _parse_seeds(text):
    if ":" in text:
        a, b = text.split(":", 1)
        return list(range(int(a), int(b)))
    return [int(s) for s in text.split(",") if s != ""]


def _parse_eps(text):
    if not text:
        return []
    return [s.strip() for s in str(text).split(",") if s.strip()]


def _parse_checks(text):
    if not text:
        return ()
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    for name in names:
        if name not in CHECK_NAMES:
            raise InstanceError(
                f"unknown check {name!r}; choose from {', '.join(CHECK_NAMES)}"
            )
    return names


def _mode_from_args(args):
    if getattr(args, "exact", False):
        return "exact"
    if getattr(args, "float", False):
        return "float"
    return None


def _auto_mode(problem, g):
    """The arithmetic mode Instance.make picks when none is forced."""
    if problem == "jdgfp":
        return "float"  # rate curves are integrated numerically
    if problem == "psp":
        return "exact"
    return "exact" if g in ("linear", "quadratic", "pwl-concave") else "float"


def _config_from_args(args, seed=None):
    g = args.g
    if g is None:
        g = "mixed" if args.problem == "jdgfp" else "linear"
    elif args.problem == "psp":
        raise InstanceError("packing instances carry no cost family; drop --g")
    if args.problem == "jdgfp" and g not in ("mixed", "linear", "log", "sqrt"):
        raise InstanceError(
            "per-job cost families must be differentiable concave:"
            " linear, log, sqrt, or mixed"
        )
    if args.problem != "jdgfp" and g == "mixed":
        raise InstanceError("the mixed cost family applies to jdgfp instances only")
    return ExperimentConfig(
        seed=getattr(args, "seed", 0) if seed is None else seed,
        n=args.n,
        problem=args.problem,
        g=g,
        algorithm=getattr(args, "alg", None),
        eps=tuple(_parse_eps(getattr(args, "eps", None))),
        r_max=args.r_max,
        p_min=args.p_min,
        p_max=args.p_max,
        w_max=args.w_max,
        equal_density=args.equal_density,
        rows=args.rows,
        b_max=args.b_max,
        checks=tuple(_parse_checks(getattr(args, "checks", None))),
        mode=_mode_from_args(args),
    )


def _add_generation_flags(sub):
    sub.add_argument("--n", type=int, default=4, help="number of jobs")
    sub.add_argument(
        "--problem",
        choices=("gfp", "gcp", "psp", "jdgfp"),
        default="gfp",
        help="gfp: flow cost, gcp: completion cost, psp: packing, jdgfp: per-job costs",
    )
    sub.add_argument(
        "--g",
        choices=G_FAMILIES,
        default=None,
        help="cost family (default: linear; jdgfp defaults to a per-job mix)",
    )
    sub.add_argument("--r-max", type=int, default=20, help="max release time")
    sub.add_argument("--p-min", type=int, default=1, help="min processing time")
    sub.add_argument("--p-max", type=int, default=20, help="max processing time")
    sub.add_argument("--w-max", type=int, default=20, help="max weight")
    sub.add_argument(
        "--equal-density",
        action="store_true",
        help="draw one slope and set every w_j = slope * p_j",
    )
    sub.add_argument("--rows", type=int, default=2, help="packing rows (psp)")
    sub.add_argument("--b-max", type=int, default=4, help="max packing entry (psp)")
    _add_mode_flags(sub)


def _add_mode_flags(sub):
    grp = sub.add_mutually_exclusive_group()
    grp.add_argument(
        "--exact", action="store_true", help="force exact rational arithmetic"
    )
    grp.add_argument("--float", action="store_true", help="force float arithmetic")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="schedcert",
        description="Generate, schedule, and certify preemptive scheduling instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance as JSON")
    gen.add_argument("--seed", type=int, default=0)
    _add_generation_flags(gen)
    gen.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="schedule one instance and certify the run")
    run.add_argument("instance", help="instance JSON (as written by gen)")
    run.add_argument("--alg", choices=ALGORITHMS, default=None)
    run.add_argument("--eps", default=None, help="speed surplus for integral bounds")
    run.add_argument(
        "--checks",
        default=None,
        help="extra audits: comma list from p,q,feasible,oracle,jdgfp",
    )
    run.add_argument("--cert", default=None, help="certificate JSON path (default stdout)")
    run.add_argument("--schedule", default=None, help="write the schedule JSON here")
    run.add_argument("--trace", default=None, help="write the dual event trace here")
    run.add_argument(
        "--plot-envelope",
        default=None,
        metavar="CSV",
        help="write t,gamma,dominant_job samples of the dual envelope",
    )
    _add_mode_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="gen+run over a seed range into a CSV")
    sweep.add_argument(
        "--seeds", required=True, help="seed range a:b (half-open) or comma list"
    )
    sweep.add_argument("--alg", choices=ALGORITHMS, default=None)
    sweep.add_argument("--eps", default=None, help="comma list, one row per value")
    sweep.add_argument(
        "--checks", default=None, help="extra audits per row (see run --checks)"
    )
    _add_generation_flags(sweep)
    sweep.add_argument("-o", "--out", default=None, help="CSV path (default stdout)")
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchedcertError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
