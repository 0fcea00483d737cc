import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

import nslmm.integrate  # noqa: F401  (the submodule, looked up below)
from nslmm import (ConfigurationError, DenominatorSpec, ExactStartup,
                   PhiKind, RecordMode, RunConfig,
                   RungeKuttaStartup, eval_phi, exact_solution,
                   forward_euler_step, get_method, integrate,
                   make_phi_for_method, nslmm_step, nsrk_step,
                   reference_solution, seir_problem)
from nslmm.problems import OdeProblem

from conftest import ORDER_MATCHED_PHI

# "nslmm.integrate" the module, not the same-named driver function that
# nslmm/__init__ re-exports
integrate_mod = sys.modules["nslmm.integrate"]


def _config(problem, method, phi, dt, t_end, y0, **kw):
    return RunConfig(problem=problem, method=method, phi=phi, dt=dt,
                     t_end=t_end, y0=y0, **kw)


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def test_nslmm_step_equilibrium(logistic2):
    m = get_method("sspms42")
    phi = DenominatorSpec(PhiKind.IDENTITY)
    out = nslmm_step(m, phi, logistic2, [[2.0]] * 4, 0.3)
    assert out == pytest.approx([2.0], rel=1e-15)


def test_nslmm_step_pinned_value(logistic2):
    # SSPMS(4,2) with phi5, threshold 1/3, history newest-first
    # [1.2, 1.1, 1.05, 1.0], dt = 0.1:
    #   (8/9)*1.2 + phi5(0.1)*(4/3)*1.2*(2-1.2) + (1/9)*1.0
    # pinned by a 40-digit independent evaluation
    m = get_method("sspms42")
    phi = DenominatorSpec(PhiKind.PHI5, bound=1 / 3)
    history = [[1.2], [1.1], [1.05], [1.0]]
    out = nslmm_step(m, phi, logistic2, history, 0.1)
    assert out[0] == pytest.approx(1.3020711590904566, rel=1e-14)


def test_nslmm_step_history_length(logistic2):
    m = get_method("sspms42")
    with pytest.raises(ValueError):
        nslmm_step(m, DenominatorSpec(PhiKind.IDENTITY), logistic2,
                   [[1.0]] * 3, 0.1)


def _convex_combination_oracle(method, phi, problem, history, dt):
    """alpha-weighted Euler substeps with effective steps phi(dt)*beta/alpha."""
    h = float(eval_phi(phi, dt))
    acc = np.zeros(problem.dimension)
    for j, a, b in method.terms:
        u = np.asarray(history[j - 1], dtype=float)
        if b == 0.0:
            acc = acc + a * u
        else:
            acc = acc + a * forward_euler_step(problem, u, h * b / a)
    return acc


@given(values=st.lists(st.floats(min_value=0.05, max_value=1.9),
                       min_size=6, max_size=6),
       dt=st.floats(min_value=1e-4, max_value=50.0))
def test_convex_combination_identity(logistic2, values, dt):
    m = get_method("sspms64")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI8)
    history = [[v] for v in values]
    direct = nslmm_step(m, phi, logistic2, history, dt)
    oracle = _convex_combination_oracle(m, phi, logistic2, history, dt)
    scale = max(1.0, float(np.max(np.abs(direct))))
    assert np.max(np.abs(direct - oracle)) <= 1e-14 * scale


def test_nsrk_step_equilibrium(logistic2):
    rk = get_method("ssprk22")
    out = nsrk_step(rk, DenominatorSpec(PhiKind.IDENTITY), logistic2, [2.0], 0.9)
    assert out == pytest.approx([2.0], abs=1e-15)


def test_nsrk_step_pinned_value(logistic2):
    # u1 = 1.5, result = 0.5*1 + 0.5*(1.5 + 0.5*1.5*0.5) = 1.4375
    rk = get_method("ssprk22")
    out = nsrk_step(rk, DenominatorSpec(PhiKind.IDENTITY), logistic2, [1.0], 0.5)
    assert out[0] == pytest.approx(1.4375, rel=1e-15)


def test_rk33_phi7_phi8_agree_to_fourth_order(logistic2):
    # both transforms equal dt + O(dt^4), so single-step results differ by
    # O(dt^4): the log-log slope of the difference is about 4
    rk = get_method("ssprk33")
    diffs, dts = [], []
    for k in range(0, 7):
        dt = 0.1 * 2.0 ** (-k)
        a = nsrk_step(rk, DenominatorSpec(PhiKind.PHI7, bound=0.5),
                      logistic2, [1.0], dt)
        b = nsrk_step(rk, DenominatorSpec(PhiKind.PHI8, bound=0.5),
                      logistic2, [1.0], dt)
        diffs.append(abs(a[0] - b[0]))
        dts.append(dt)
    slope = np.polyfit(np.log(dts), np.log(diffs), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------


def test_equilibrium_trajectory_is_constant(logistic2):
    # constant in exact arithmetic; the decimal coefficient set of the
    # six-step method sums to 1 only to ~2e-15, so round-off accumulates
    for mid in ("sspms64", "ssprk104"):
        m = get_method(mid)
        phi = make_phi_for_method(m, 0.5, PhiKind.PHI8)
        traj = integrate(_config(logistic2, m, phi, 0.25, 5.0, [2.0]))
        assert np.max(np.abs(traj.states - 2.0)) <= 1e-12


def test_zero_rhs_reproduces_the_weighted_history_sum(logistic2):
    # with f == 0 one step is exactly the alpha-weighted history sum
    m = get_method("sspms64")
    flat = OdeProblem(name="flat", dimension=1, params={},
                      rhs=lambda u: np.zeros_like(u))
    rng = np.random.default_rng(1)
    history = [rng.uniform(-2, 2, size=1) for _ in range(6)]
    out = nslmm_step(m, DenominatorSpec(PhiKind.PHI8, bound=0.4), flat,
                     history, 0.5)
    expect = sum(a * history[j - 1] for j, a, _b in m.terms)
    assert np.array_equal(out, expect)


def test_zero_rhs_constant_history_stays_constant():
    flat = OdeProblem(name="flat", dimension=2, params={},
                      rhs=lambda u: np.zeros_like(u),
                      exact=lambda t, y0: np.asarray(y0, float),
                      bound_rule=lambda y0: 1.0)
    y0 = np.array([0.3, -1.7])
    m = get_method("sspms64")
    phi = DenominatorSpec(PhiKind.PHI8, bound=0.4)
    traj = integrate(_config(flat, m, phi, 0.5, 20.0, y0,
                             startup=ExactStartup()))
    # constant up to the ~2e-15 coefficient-sum defect per step
    assert np.max(np.abs(traj.states - y0)) <= 40 * 5e-15


def test_integrate_determinism_bitwise(logistic2):
    m = get_method("sspms64")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI8)
    cfg = _config(logistic2, m, phi, 0.0125, 1.0, [1.0])
    a = integrate(cfg)
    b = integrate(cfg)
    assert np.array_equal(a.states, b.states)
    assert a.to_csv() == b.to_csv()


def test_identity_and_patched_transform_agree_bitwise(logistic2, monkeypatch):
    # the standard method is the identity-transform special case of the same
    # code path: forcing phi8 to evaluate as the identity must reproduce the
    # identity run bit for bit
    m = get_method("sspms64")
    cfg_id = _config(logistic2, m, DenominatorSpec(PhiKind.IDENTITY),
                     0.0125, 1.0, [1.0])
    ref = integrate(cfg_id)
    monkeypatch.setattr(integrate_mod, "eval_phi", lambda spec, x: x)
    cfg_ns = _config(logistic2, m, DenominatorSpec(PhiKind.PHI8, bound=0.08),
                     0.0125, 1.0, [1.0])
    patched = integrate(cfg_ns)
    assert np.array_equal(ref.states, patched.states)


def test_misaligned_grid_rejected(logistic2):
    m = get_method("sspms64")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI8)
    with pytest.raises(ConfigurationError):
        integrate(_config(logistic2, m, phi, 0.7, 1.0, [1.0]))


def test_exact_startup_requires_closed_form(seir0, seir_y0):
    m = get_method("sspms64")
    phi = make_phi_for_method(m, 0.2, PhiKind.PHI8)
    with pytest.raises(ConfigurationError):
        integrate(_config(seir0, m, phi, 0.1, 1.0, seir_y0,
                          startup=ExactStartup()))


def test_default_startup_policies(logistic2, seir0, seir_y0):
    m = get_method("sspms64")
    phi_l = make_phi_for_method(m, 0.5, PhiKind.PHI8)
    traj = integrate(_config(logistic2, m, phi_l, 0.1, 1.0, [1.0]))
    assert traj.provenance["startup"] == "ExactStartup"
    phi_s = make_phi_for_method(m, 0.2, PhiKind.PHI8)
    traj = integrate(_config(seir0, m, phi_s, 0.1, 1.0, seir_y0))
    assert traj.provenance["startup"] == "RungeKuttaStartup"


def test_startup_states_match_exact_solution(logistic2):
    m = get_method("sspms64")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI8)
    traj = integrate(_config(logistic2, m, phi, 0.1, 1.0, [1.0]))
    for i in range(6):
        expect = exact_solution(logistic2, 0.1 * i, [1.0])
        assert traj.states[i] == pytest.approx(expect, rel=1e-15)


def test_record_modes(logistic2):
    m = get_method("sspms42")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI5)
    full = integrate(_config(logistic2, m, phi, 0.1, 1.0, [1.0]))
    assert full.states.shape == (11, 1)
    assert full.times[0] == 0.0
    assert full.times[-1] == pytest.approx(1.0)
    final = integrate(_config(logistic2, m, phi, 0.1, 1.0, [1.0],
                              record=RecordMode.FINAL_STATE_ONLY))
    assert final.states.shape == (1, 1)
    assert final.first_index == 10
    assert final.times[0] == pytest.approx(1.0)
    assert final.final_state == pytest.approx(full.final_state, rel=1e-15)


def test_trajectory_csv_roundtrip(logistic2):
    m = get_method("sspms42")
    phi = make_phi_for_method(m, 0.5, PhiKind.PHI5)
    traj = integrate(_config(logistic2, m, phi, 0.25, 2.0, [1.0]))
    text = traj.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,u1"
    parsed = np.array([[float(v) for v in line.split(",")]
                       for line in lines[1:]])
    assert np.array_equal(parsed[:, 1], traj.states[:, 0])
    assert np.array_equal(parsed[:, 0], np.asarray(traj.times))


def test_rk_startup_policy_explicit(seir0, seir_y0):
    m = get_method("sspms42")
    phi = make_phi_for_method(m, 0.2, PhiKind.PHI5)
    traj = integrate(_config(
        seir0, m, phi, 0.05, 1.0, seir_y0,
        startup=RungeKuttaStartup(rk="ssprk22", phi_kind=PhiKind.PHI5)))
    # startup preserves the component sum exactly up to round-off
    sums = traj.states[:4].sum(axis=1)
    assert sums == pytest.approx(np.ones(4), rel=1e-14)


# ---------------------------------------------------------------------------
# reference solver
# ---------------------------------------------------------------------------


def test_reference_matches_exact_solution(logistic2):
    ref = reference_solution(logistic2, [1.0], 1.0, 1e-5)
    exact = exact_solution(logistic2, 1.0, [1.0])
    assert abs(ref[0] - exact[0]) <= 1e-12


def test_reference_fixed_point():
    prob = seir_problem(0.0)
    y0 = np.array([0.6, 0.0, 0.0, 0.4])
    ref = reference_solution(prob, y0, 5.0, 1e-2)
    assert np.array_equal(ref, y0)


def test_reference_richardson_self_consistency(seir0, seir_y0):
    a = reference_solution(seir0, seir_y0, 5.0, 1e-3)
    b = reference_solution(seir0, seir_y0, 5.0, 5e-4)
    assert np.max(np.abs(a - b)) <= 1e-10


def test_reference_misaligned_rejected(logistic2):
    with pytest.raises(ConfigurationError):
        reference_solution(logistic2, [1.0], 1.0, 0.3)


# ---------------------------------------------------------------------------
# step-halving sanity
# ---------------------------------------------------------------------------

#: accumulated round-off reaches a few 1e-14 over hundreds of staged steps;
#: ratios against errors below this floor are meaningless
ROUNDOFF_FLOOR = 1e-13


@pytest.mark.parametrize("method_id", sorted(["sspms42", "sspms43", "sspms64",
                                              "ssprk22", "ssprk33", "ssprk104"]))
def test_step_halving_error_ratios(logistic2, method_id):
    method = get_method(method_id)
    p = method.design_order
    phi = make_phi_for_method(method, 0.5, ORDER_MATCHED_PHI[p])
    exact = exact_solution(logistic2, 1.0, [1.0])
    errors = []
    for k in range(8):
        traj = integrate(_config(logistic2, method, phi, 0.05 * 2.0 ** (-k),
                                 1.0, [1.0],
                                 record=RecordMode.FINAL_STATE_ONLY))
        errors.append(abs(float(traj.final_state[0] - exact[0])))
    for k in range(7):
        if errors[k + 1] < ROUNDOFF_FLOOR:
            break
        assert errors[k] / errors[k + 1] >= 2.0 ** (p - 0.5), (k, errors)
