import math

import numpy as np
import pytest

from nambuhj.dynamics import RK4, RK45, IntegratorConfig, conservation_report, convergence_order, integrate
from nambuhj.errors import DegenerateError, DomainExitError, StepUnderflowError
from nambuhj.fields import ScalarField, VectorField
from nambuhj.systems import ks3_preset, riccati_preset

LINEAR = VectorField(lambda p, t: [p[0]], 1)
ZERO3 = VectorField.constant([0.0, 0.0, 0.0])


@pytest.mark.parametrize("method", [RK4, RK45])
def test_zero_field_constant(method):
    traj = integrate(ZERO3, [1.0, -2.0, 3.0], IntegratorConfig(method, (0, 1), step=0.1))
    assert np.all(traj.states == [1.0, -2.0, 3.0])


def test_riccati_linear_closed_form():
    p = riccati_preset(3, a0=0.0, a1=1.0, a2=0.0)
    traj = integrate(p.rhs, [1, 2, 3], IntegratorConfig(RK45, (0, 1), abs_tol=1e-10, rel_tol=1e-10), p.domain)
    assert np.max(np.abs(traj.final - math.e * np.array([1, 2, 3]))) <= 1e-8


def test_ks3_rhs_matches_nambu_flow():
    ks = ks3_preset(c0=0.0, b1=-1.0)
    cfg = IntegratorConfig(RK45, (0, 0.5), abs_tol=1e-11, rel_tol=1e-11)
    a = integrate(ks.rhs, [0, 1, 0], cfg, ks.domain)
    b = integrate(ks.nambu_field(), [0, 1, 0], cfg, ks.domain)
    assert np.max(np.abs(a.final - b.final)) <= 1e-6


def test_ks3_conservation_and_drift_ratio():
    ks = ks3_preset(c0=0.0, b1=-1.0)
    X = ks.nambu_field()
    H = list(ks.hamiltonians.fields)
    drifts = []
    for h in (1e-3, 5e-4):
        traj = integrate(X, [0, 1, 0], IntegratorConfig(RK4, (0, 1), step=h), ks.domain)
        rep = conservation_report(traj, H)
        assert all(d.conserved_claim for d in rep.values())
        drifts.append(max(d.max_drift for d in rep.values()))
    assert drifts[0] <= 1e-7
    assert drifts[0] / drifts[1] >= 12.0


def test_conservation_report_constant_and_time_dependent():
    traj = integrate(LINEAR, [1.0], IntegratorConfig(RK4, (0, 1), step=0.1))
    rep = conservation_report(traj, [ScalarField.constant(2.0, 1), ScalarField(lambda p, t: p[0] * t, 1, "xt",
                                                                               autonomous=False)])
    assert rep["2.0"].max_drift == 0.0 and rep["2.0"].conserved_claim
    assert not rep["xt"].conserved_claim


def test_convergence_order_linear():
    order = convergence_order(LINEAR, [1.0], 1.0, [1e-2, 5e-3, 2.5e-3])
    assert abs(order - 4.0) <= 0.5


def test_convergence_order_degenerate():
    with pytest.raises(DegenerateError):
        convergence_order(VectorField.constant([0.0]), [1.0], 1.0, [1e-2, 5e-3, 2.5e-3])


def test_convergence_order_ks3():
    ks = ks3_preset(c0=0.0, b1=-1.0)
    order = convergence_order(ks.rhs, [0, 1, 0], 1.0, [4e-2, 2e-2, 1e-2], domain=ks.domain)
    assert 3.5 <= order <= 4.5


def test_nonautonomous_order_four():
    X = VectorField(lambda p, t: [math.cos(t) * p[0]], 1)
    order = convergence_order(X, [1.0], 2.0, [0.1, 0.05, 0.025])
    assert abs(order - 4.0) <= 0.5
    traj = integrate(X, [1.0], IntegratorConfig(RK4, (0, 2), step=0.01))
    assert traj.final[0] == pytest.approx(math.exp(math.sin(2.0)), rel=1e-8)


def test_time_reversal():
    ks = ks3_preset(c0=0.0, b1=-1.0)
    X = ks.rhs
    h = 1e-2
    fwd = integrate(X, [0, 1, 0], IntegratorConfig(RK4, (0, 1), step=h), ks.domain)
    back_field = VectorField(lambda p, t: [-v for v in X(p, 1.0 - t)], 3)
    back = integrate(back_field, fwd.final, IntegratorConfig(RK4, (0, 1), step=h), ks.domain)
    half = integrate(X, [0, 1, 0], IntegratorConfig(RK4, (0, 1), step=h / 2), ks.domain)
    one_way = np.max(np.abs(fwd.final - half.final)) * 16 / 15
    assert np.max(np.abs(back.final - [0, 1, 0])) <= 10 * max(one_way, 1e-15)


def test_domain_exit_reports_last_valid_time():
    X = VectorField.constant([-1.0])
    with pytest.raises(DomainExitError) as err:
        integrate(X, [0.45], IntegratorConfig(RK4, (0, 2), step=0.1), domain=lambda p: p[0] > 0)
    assert err.value.last_valid_time == pytest.approx(0.4)


def test_initial_condition_outside_domain():
    with pytest.raises(DomainExitError):
        integrate(ZERO3, [0, 0, 0], IntegratorConfig(), domain=lambda p: p[1] != 0)


def test_step_underflow():
    blowup = VectorField(lambda p, t: [p[0] * p[0]], 1)
    with pytest.raises((StepUnderflowError, DomainExitError)):
        integrate(blowup, [1.0], IntegratorConfig(RK45, (0, 2), min_step=1e-6))


def test_sample_times_increase_and_stride():
    traj = integrate(LINEAR, [1.0], IntegratorConfig(RK4, (0, 1), step=0.01, stride=10))
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj) == 11 and traj.times[-1] == 1.0
    ad = integrate(LINEAR, [1.0], IntegratorConfig(RK45, (0, 1), abs_tol=1e-9, rel_tol=1e-9))
    assert np.all(np.diff(ad.times) > 0) and ad.times[-1] == 1.0


@pytest.mark.parametrize("kwargs", [dict(t_span=(1, 0)), dict(method="euler"), dict(step=0.0), dict(stride=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)
