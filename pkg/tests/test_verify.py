"""Property audits, dual objectives, and certificate assembly.

Golden objective values are frozen from hand integration of the dual
envelopes on the same small instances the maintenance tests use.
Perturbation tests corrupt one stored multiplier and assert the audit
reports the right violation kind at the right witness time.
"""

import json
import math
from fractions import Fraction

import pytest

from schedcert.core import Instance, fractional_cost, integral_cost
from schedcert.costs import LinearCost, LogCost, PiecewiseLinearCost, PowerCost
from schedcert.duals import (
    CHAIN,
    CHAIN_CONCAVE,
    EQUAL_DENSITY,
    SUCCESSOR,
    DualState,
    jdgfp_state,
    jdgfp_total_cost,
    maintain_duals,
    psp_duals,
)
from schedcert.errors import InstanceError, OutOfTheoremScope
from schedcert.schedulers import (
    run_priority_engine,
    simulate_jdgfp,
    simulate_psp,
)
from schedcert.verify import (
    certify_fractional_optimality,
    certify_integral_competitiveness,
    certify_jdgfp,
    check_P1_P2,
    check_P3,
    check_Q1_Q2,
    check_dual_feasible,
    dual_objective,
    instance_fingerprint,
    machine_curve_mass,
    psp_job_contributions,
)

F = Fraction

CONCAVE_PWL = PiecewiseLinearCost([(0, 0), (1, 1), (2, F(3, 2))])
PLATEAU_PWL = PiecewiseLinearCost([(0, 0), (1, 1), (2, 1)])


def two_job_instance():
    return Instance.make(
        "gfp",
        [{"id": 1, "r": 0, "p": 2, "w": 4}, {"id": 2, "r": 1, "p": 1, "w": 3}],
        g=LinearCost(1),
    )


def hdf_state():
    ins = two_job_instance()
    run = run_priority_engine(ins, "hdf", 1)
    return ins, run, maintain_duals(run)


def gcp_state():
    ins = Instance.make(
        "gcp",
        [{"id": 1, "r": 0, "p": 2, "w": 4}, {"id": 2, "r": 1, "p": 1, "w": 1}],
        g=LinearCost(1),
    )
    run = run_priority_engine(ins, "hdf", 1)
    return ins, run, maintain_duals(run)


def fifo_quadratic_state():
    ins = Instance.make(
        "gfp",
        [{"id": 1, "r": 0, "p": 1, "w": 1}, {"id": 2, "r": "1/2", "p": 1, "w": 1}],
        g=PowerCost(2),
    )
    run = run_priority_engine(ins, "fifo", 1)
    return ins, run, maintain_duals(run)


def lifo_concave_instance():
    return Instance.make(
        "gfp",
        [{"id": 1, "r": 0, "p": 2, "w": 2}, {"id": 2, "r": 1, "p": 1, "w": 1}],
        g=CONCAVE_PWL,
    )


def floor_state():
    ins = Instance.make(
        "gfp",
        [
            {"id": 1, "r": 0, "p": 3, "w": 3},
            {"id": 2, "r": "11/4", "p": "1/8", "w": "1/8"},
        ],
        g=CONCAVE_PWL,
    )
    run = run_priority_engine(ins, "fifo", 1)
    return ins, run, maintain_duals(run)


def concave_hdf_state():
    ins = Instance.make(
        "gfp",
        [
            {"id": 1, "r": 0, "p": 1, "w": 4},
            {"id": 2, "r": 0, "p": 1, "w": 1},
            {"id": 3, "r": 0, "p": 1, "w": 1},
        ],
        g=PowerCost("1/2"),
    )
    run = run_priority_engine(ins, "hdf", 1)
    return ins, run, maintain_duals(run)


def psp_single_state():
    ins = Instance.make("psp", [{"id": 1, "r": 0, "p": 1, "w": 2}], B=[[2], [1]])
    sched = simulate_psp(ins, 1)
    return ins, sched, psp_duals(sched, ins)


def psp_two_state():
    ins = Instance.make(
        "psp",
        [{"id": 1, "r": 0, "p": 2, "w": 4}, {"id": 2, "r": 0, "p": 1, "w": 3}],
        B=[[1, 2], [2, 1]],
    )
    sched = simulate_psp(ins, 1)
    return ins, sched, psp_duals(sched, ins)


def jdgfp_two_identical():
    return Instance.make(
        "jdgfp",
        [
            {"id": 1, "r": 0, "p": 1, "w": 1, "g": LinearCost(1)},
            {"id": 2, "r": 0, "p": 1, "w": 1, "g": LinearCost(1)},
        ],
    )


# ---------------------------------------------------------------------------
# dual_objective and machine_curve_mass


def test_dual_objective_hdf_golden():
    _ins, run, state = hdf_state()
    assert machine_curve_mass(state) == F(19, 2)
    assert dual_objective(state, 1) == F(15, 2)
    assert dual_objective(state, 1) == fractional_cost(run.instance, run.schedule)
    assert dual_objective(state, 2) == 17 - F(19, 4)


def test_dual_objective_gcp_single_job():
    # lam = delta g(C) = 3; mass = int_1^3 (3 - t) dt = 2; 6 - 2 = 4
    ins = Instance.make(
        "gcp", [{"id": 1, "r": 1, "p": 2, "w": 2}], g=LinearCost(1)
    )
    state = maintain_duals(run_priority_engine(ins, "hdf", 1))
    assert state.lam == {1: 3}
    assert machine_curve_mass(state) == 2
    assert dual_objective(state, 1) == 4


def test_dual_objective_fifo_quadratic_golden():
    ins, run, state = fifo_quadratic_state()
    assert dual_objective(state, 1) == F(17, 12)
    assert dual_objective(state, 1) == fractional_cost(ins, run.schedule)


def test_dual_objective_psp_single_weak_bound():
    ins, sched, state = psp_single_state()
    assert machine_curve_mass(state) == 4  # int_0^2 (4 - 2t) dt
    assert dual_objective(state, 1) == 0
    assert fractional_cost(ins, sched) == 2  # any dual value stays below it


def test_dual_objective_rate_curve_state_is_lam_dot_p():
    ins = jdgfp_two_identical()
    sim = simulate_jdgfp(ins, 1.0)
    state = jdgfp_state(sim, ins)
    assert state.gamma_zero
    assert machine_curve_mass(state) == 0
    assert dual_objective(state, 1) == pytest.approx(state.lam_dot_p())


def test_dual_objective_never_sinking_curve_is_minus_inf():
    # plateau cost: g tops out at 1, so lam above delta * 1 never sinks
    ins = Instance.make(
        "gfp", [{"id": 1, "r": 0, "p": 1, "w": 1}], g=PLATEAU_PWL
    )
    state = maintain_duals(run_priority_engine(ins, "fifo", 1))
    assert state.lam == {1: 1}
    state.lam[1] = 2
    assert machine_curve_mass(state) == math.inf
    assert dual_objective(state, 1) == float("-inf")
    kinds = {v["kind"] for v in check_P3(state)}
    assert "positive-forever" in kinds


def test_empty_instance_all_checks_pass():
    ins = Instance.make("gfp", [], g=LinearCost(1))
    state = maintain_duals(run_priority_engine(ins, "hdf", 1))
    assert check_P1_P2(None, state) == []
    assert check_P3(state) == []
    assert check_dual_feasible(state) == []
    assert dual_objective(state, 1) == 0
    cert = certify_fractional_optimality(ins)
    assert cert.ok and cert.primal_fractional == 0


# ---------------------------------------------------------------------------
# check_P1_P2: strict dominance and history immutability


def test_check_P1_P2_hdf_clean_with_dominant_sequence():
    _ins, run, state = hdf_state()
    assert check_P1_P2(run.schedule, state) == []
    winners = [w for _u, _v, w in state.envelope().spans(0, 3)]
    assert winners == [1, 2, 1]


def test_check_P1_P2_perturbed_lambda_fails_in_last_piece():
    # lam_2 = 6 lifts curve 2 above curve 1 on [2, 3) where job 1 runs
    _ins, run, state = hdf_state()
    state.lam[2] = 6
    vio = check_P1_P2(run.schedule, state)
    assert vio
    hits = [v for v in vio if v["kind"] == "not-dominant"]
    assert hits and all(v["job"] == 1 for v in hits)
    assert any(2 <= v["t"] < 3 for v in hits)
    # the perturbation postdates the recorded events, which stay clean
    assert all(v["event"] is None for v in vio)


def test_check_P1_P2_tau_replays_one_event():
    _ins, run, state = hdf_state()
    assert check_P1_P2(run.schedule, state, tau=1) == []
    with pytest.raises(InstanceError):
        check_P1_P2(run.schedule, state, tau=F(1, 2))


def test_check_P1_P2_history_tamper_detected():
    _ins, run, state = hdf_state()
    snap = state.snapshots[1]
    snap["projection_pieces"][0] = (0, 1, 2)  # claim job 2 ran first
    vio = check_P1_P2(run.schedule, state, tau=1)
    assert any(v["kind"] == "history-altered" for v in vio)


def test_check_P1_P2_rejects_other_families():
    _ins, _run, floor = floor_state()
    with pytest.raises(InstanceError):
        check_P1_P2(None, floor)
    ins = jdgfp_two_identical()
    state = jdgfp_state(simulate_jdgfp(ins, 1.0), ins)
    with pytest.raises(InstanceError):
        check_P1_P2(None, state)


# ---------------------------------------------------------------------------
# check_Q1_Q2: relaxed dominance


def test_check_Q1_Q2_floor_golden_clean():
    _ins, run, state = floor_state()
    assert state.construction == EQUAL_DENSITY
    assert check_Q1_Q2(run.schedule, state) == []


def test_check_Q1_Q2_concave_reduction_clean():
    _ins, run, state = concave_hdf_state()
    assert state.construction == CHAIN_CONCAVE
    assert check_Q1_Q2(run.schedule, state) == []


def test_check_Q1_Q2_accepts_strict_family_state():
    # the strict property implies the relaxed one, so the audit still runs
    _ins, run, state = hdf_state()
    assert state.construction == CHAIN
    assert check_Q1_Q2(run.schedule, state) == []


def test_check_Q1_Q2_corrupted_multiplier():
    # dropping the running job's multiplier sinks its own curve negative
    # and puts rival curves above it
    _ins, run, state = concave_hdf_state()
    state.lam[1] = 0.1
    kinds = {v["kind"] for v in check_Q1_Q2(run.schedule, state)}
    assert "running-negative" in kinds
    assert "rival-exceeds-lambda" in kinds


def test_check_Q1_Q2_tau_replay():
    _ins, run, state = floor_state()
    assert check_Q1_Q2(run.schedule, state, tau=F(11, 4)) == []
    with pytest.raises(InstanceError):
        check_Q1_Q2(run.schedule, state, tau=5)


# ---------------------------------------------------------------------------
# check_P3: curves dead past the last completion


def test_check_P3_goldens_clean():
    for make in (hdf_state, gcp_state, fifo_quadratic_state, floor_state):
        _ins, _run, state = make()
        assert check_P3(state) == []


def test_check_P3_inflated_multiplier():
    _ins, _run, state = hdf_state()
    state.lam[1] = 7  # curve 7 - 2t stays positive until 7/2 > C_max = 3
    vio = check_P3(state)
    assert vio and vio[0]["kind"] == "positive-past-makespan"
    assert vio[0]["job"] == 1
    assert vio[0]["t"] == 3 and vio[0]["sinks_at"] == F(7, 2)


# ---------------------------------------------------------------------------
# check_dual_feasible


def test_check_dual_feasible_goldens_clean():
    for make in (
        hdf_state,
        gcp_state,
        fifo_quadratic_state,
        floor_state,
        concave_hdf_state,
    ):
        _ins, _run, state = make()
        assert check_dual_feasible(state) == []


def test_check_dual_feasible_zero_machine_curve():
    # with gamma = 0 the constraint binds at the release instant, where it
    # reads lam_j <= 0: any positive multiplier is infeasible
    ins = Instance.make("gfp", [{"id": 1, "r": 0, "p": 1, "w": 1}], g=LinearCost(1))
    run = run_priority_engine(ins, "hdf", 1)

    def zero_gamma_state(lam):
        return DualState(
            problem="gfp",
            construction=CHAIN,
            instance=ins,
            schedule=run.schedule,
            numeric=ins.numeric,
            lam=lam,
            gamma_zero=True,
        )

    assert check_dual_feasible(zero_gamma_state({1: 0})) == []
    vio = check_dual_feasible(zero_gamma_state({1: 2}))  # delta g(p) + 1
    assert vio == [
        {"kind": "infeasible-at-release", "job": 1, "t": 0, "lambda": 2, "bound": 0}
    ]


def test_check_dual_feasible_psp_zero_slack_on_own_pieces():
    _ins, _sched, state = psp_single_state()
    assert check_dual_feasible(state) == []
    c = state.curve(1)
    for t in (0, 1, 2):  # lam - b_j mu'(t) = delta (t - r) exactly
        assert state.lam[1] - 1 * c.value(t) == 2 * t


def test_check_dual_feasible_psp_corrupted_lambda():
    _ins, _sched, state = psp_single_state()
    state.lam[1] += 2  # rows all sink by t = 2, so lam <= delta (2 - r) binds
    vio = check_dual_feasible(state)
    assert any(v["kind"] == "packing-infeasible" and v["job"] == 1 for v in vio)


def test_check_dual_feasible_rate_bound_detects_corruption():
    ins = jdgfp_two_identical()
    state = jdgfp_state(simulate_jdgfp(ins, 1.0), ins)
    assert check_dual_feasible(state) == []
    state.lam[2] = 17.0
    vio = check_dual_feasible(state)
    assert vio and all(v["kind"] == "rate-bound-violated" for v in vio)
    assert all(v["job"] == 2 for v in vio)


# ---------------------------------------------------------------------------
# packing identities


def test_psp_job_contributions_identity():
    _ins, _sched, state = psp_two_state()
    contrib = psp_job_contributions(state)
    assert contrib == {1: (16, 16), 2: (3, 3)}
    _ins, _sched, single = psp_single_state()
    assert psp_job_contributions(single) == {1: (2, 2)}


# ---------------------------------------------------------------------------
# certify_fractional_optimality


def test_certify_optimality_hdf_golden():
    cert = certify_fractional_optimality(two_job_instance(), "hdf")
    assert cert.ok
    assert cert.algorithm == "hdf"
    assert cert.construction == CHAIN
    assert cert.mode == "exact"
    assert cert.primal_fractional == F(15, 2)
    assert cert.dual_value == F(15, 2)
    assert cert.primal_integral == 15
    assert "P1P2" in cert.properties
    by_name = {q["name"]: q for q in cert.inequalities}
    assert by_name["fractional-equals-dual"]["difference"] == 0
    assert by_name["objective-forms-agree"]["ok"]


def test_certify_optimality_gcp_golden():
    ins, run, _state = gcp_state()
    cert = certify_fractional_optimality(ins, "hdf")
    assert cert.ok
    assert cert.construction == SUCCESSOR
    assert cert.dual_value == fractional_cost(ins, run.schedule)


def test_certify_optimality_fifo_and_lifo_goldens():
    ins, _run, _state = fifo_quadratic_state()
    cert = certify_fractional_optimality(ins, "fifo")
    assert cert.ok and cert.dual_value == F(17, 12)
    cert = certify_fractional_optimality(lifo_concave_instance(), "lifo")
    assert cert.ok and cert.dual_value == F(11, 4)


def test_certify_optimality_infers_policy():
    assert certify_fractional_optimality(two_job_instance()).algorithm == "hdf"
    ins, _run, _state = fifo_quadratic_state()
    assert certify_fractional_optimality(ins).algorithm == "fifo"
    assert (
        certify_fractional_optimality(lifo_concave_instance()).algorithm == "lifo"
    )
    gcp, _run, _state = gcp_state()
    assert certify_fractional_optimality(gcp).algorithm == "hdf"


def test_certify_optimality_scope_rejections():
    quad, _run, _state = fifo_quadratic_state()
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(quad, "hdf")  # hdf needs linear costs
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(two_job_instance(), "fifo")  # unequal densities
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(lifo_concave_instance(), "fifo")
    gcp, _run, _state = gcp_state()
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(gcp, "fifo")
    psp, _sched, _state = psp_single_state()
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(psp)
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(jdgfp_two_identical())


def test_certify_optimality_unequal_concave_has_no_default_policy():
    ins = Instance.make(
        "gfp",
        [{"id": 1, "r": 0, "p": 1, "w": 3}, {"id": 2, "r": 0, "p": 2, "w": 1}],
        g=PowerCost("1/2"),
    )
    with pytest.raises(OutOfTheoremScope):
        certify_fractional_optimality(ins)


def test_certify_optimality_lifo_sqrt_float_mode():
    # irrational cost values force float mode; equality then holds to 1e-9
    ins = Instance.make(
        "gfp",
        [
            {"id": 1, "r": 0, "p": 2, "w": 2},
            {"id": 2, "r": 1, "p": 1, "w": 1},
            {"id": 3, "r": 3, "p": 2, "w": 2},
        ],
        g=PowerCost("1/2"),
    )
    cert = certify_fractional_optimality(ins, "lifo")
    assert cert.mode == "float"
    assert cert.ok
    assert cert.dual_value == pytest.approx(cert.primal_fractional, abs=1e-9)


# ---------------------------------------------------------------------------
# certify_integral_competitiveness


def test_certify_integral_hdf_eps_one_golden():
    cert = certify_integral_competitiveness(two_job_instance(), "hdf", 1)
    assert cert.ok
    assert cert.eps == 1 and cert.alpha == 2
    assert cert.primal_integral == 15
    assert cert.dual_value == F(49, 4)
    row = cert.inequalities[0]
    assert row["name"] == "competitive-ratio"
    assert row["rhs"] == F(49, 2)
    assert row["slack"] == F(19, 2)
    assert cert.properties["job_cover"]["ok"]


def test_certify_integral_job_cover_is_tight_for_the_late_job():
    # job 1: w g(C - r) = 4 * 3 = 12 = lam_1 p_1; job 2: 3 <= 5
    _ins, run, state = hdf_state()
    j1_cost = 4 * (run.schedule.completions[1] - 0)
    assert j1_cost == state.lam[1] * 2


def test_certify_integral_eps_forms():
    cert = certify_integral_competitiveness(two_job_instance(), "hdf", "1/2")
    assert cert.alpha == F(3, 2)
    assert cert.inequalities[0]["mode"] == "exact"
    cert = certify_integral_competitiveness(two_job_instance(), "hdf", 0.1)
    assert cert.alpha == pytest.approx(1.1)
    assert cert.inequalities[0]["mode"] == "float"
    assert cert.ok


def test_certify_integral_large_eps_sanity():
    # as eps grows the bound tends to lam . p, which still covers the
    # integral cost because every job's cost is covered term by term
    cert = certify_integral_competitiveness(two_job_instance(), "hdf", 1000)
    assert cert.ok
    assert cert.inequalities[0]["slack"] >= 0


def test_certify_integral_relaxed_family_routing():
    ins = Instance.make(
        "gfp",
        [
            {"id": 1, "r": 0, "p": 1, "w": 4},
            {"id": 2, "r": 0, "p": 1, "w": 1},
            {"id": 3, "r": 0, "p": 1, "w": 1},
        ],
        g=PowerCost("1/2"),
    )
    cert = certify_integral_competitiveness(ins, "hdf", 1)
    assert cert.ok
    assert "Q1Q2" in cert.properties and "P1P2" not in cert.properties


def test_certify_integral_validation():
    with pytest.raises(InstanceError):
        certify_integral_competitiveness(two_job_instance(), "hdf", 0)
    with pytest.raises(InstanceError):
        certify_integral_competitiveness(two_job_instance(), "hdf", -1)
    psp, _sched, _state = psp_single_state()
    with pytest.raises(OutOfTheoremScope):
        certify_integral_competitiveness(psp, "hdf", 1)
    with pytest.raises(OutOfTheoremScope):
        certify_integral_competitiveness(jdgfp_two_identical(), "hdf", 1)


# ---------------------------------------------------------------------------
# certify_jdgfp


def test_certify_jdgfp_single_job():
    ins = Instance.make(
        "jdgfp", [{"id": 0, "r": 0, "p": 3, "w": 1, "g": LinearCost(1)}]
    )
    cert = certify_jdgfp(ins, 1.0)
    assert cert.ok
    assert cert.detail["k"] == 2
    assert cert.primal_integral == pytest.approx(3.0, rel=1e-6)
    assert cert.dual_value == pytest.approx(1.0, rel=1e-6)  # lam p = F / (k+1)
    assert cert.detail["bracket"] == pytest.approx(0.25, rel=1e-5)
    rows = {q["name"]: q for q in cert.inequalities}
    assert rows["competitive-ratio"]["rhs"] == pytest.approx(4.0, rel=1e-5)
    assert rows["rate-identity"]["ok"] and rows["window-integral"]["ok"]


def test_certify_jdgfp_two_identical_golden():
    cert = certify_jdgfp(jdgfp_two_identical(), 1.0)
    assert cert.ok
    assert cert.primal_integral == pytest.approx(10 / 3, rel=1e-6)
    assert cert.dual_value == pytest.approx(10 / 9, rel=1e-5)
    assert cert.detail["bracket"] == pytest.approx(5 / 18, rel=1e-5)
    assert cert.properties["rate_bound"]["ok"]


def test_certify_jdgfp_coefficient_inequality_across_eps():
    ins = jdgfp_two_identical()
    for eps in (0.1, 0.5, 1.0, 2.0):
        cert = certify_jdgfp(ins, eps)
        rows = {q["name"]: q for q in cert.inequalities}
        assert rows["coefficient"]["ok"], eps
        assert cert.detail["k"] == math.ceil(2 / eps)


def test_certify_jdgfp_mixed_shapes():
    ins = Instance.make(
        "jdgfp",
        [
            {"id": 1, "r": 0, "p": 2, "w": 2, "g": LogCost()},
            {"id": 2, "r": 1, "p": 1, "w": 1, "g": PowerCost("1/2")},
            {"id": 3, "r": 1, "p": 1, "w": 3, "g": LinearCost(1)},
        ],
    )
    for eps in (0.5, 1.0):
        cert = certify_jdgfp(ins, eps)
        assert cert.ok, cert.to_json()


# ---------------------------------------------------------------------------
# certificate serialization and fingerprints


def test_certificate_json_roundtrip():
    cert = certify_fractional_optimality(two_job_instance(), "hdf")
    blob = json.dumps(cert.to_json())
    parsed = json.loads(blob)
    assert parsed["ok"] is True
    assert parsed["primal_fractional"] == "15/2"
    assert parsed["primal_integral"] == 15
    assert parsed["inequalities"][0]["mode"] == "exact"
    assert parsed["properties"]["P1P2"]["ok"] is True


def test_certificate_json_float_rows():
    cert = certify_jdgfp(jdgfp_two_identical(), 1.0)
    parsed = json.loads(json.dumps(cert.to_json()))
    assert all(row["mode"] == "float" for row in parsed["inequalities"])


def test_instance_fingerprint_stable_and_distinct():
    a = instance_fingerprint(two_job_instance())
    assert a == instance_fingerprint(two_job_instance())
    assert len(a) == 12
    gcp, _run, _state = gcp_state()
    assert a != instance_fingerprint(gcp)
