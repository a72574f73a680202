import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifpopt.exceptions import AssumptionViolation, DomainError
from ifpopt.objective import (aggregate_gradient, averaged_hessian, eval_gradient,
                              eval_hessian, eval_value, from_name, logexp2,
                              paper_objectives, quadratic, sinquad,
                              solve_centralized_optimum, verify_constants)

X_STAR = -0.5797478958723475
finite = st.floats(-5, 5, allow_nan=False)


def test_quadratic_gradients():
    f1, f2 = paper_objectives()[:2]
    assert eval_gradient(f1, 0.0)[0] == 3.0
    assert eval_gradient(f2, 1.0)[0] == 0.0


def test_logexp2_slope_at_zero():
    f5 = logexp2()
    assert eval_gradient(f5, 0.0)[0] == pytest.approx(0.9, abs=1e-14)
    h = 1e-6
    fd = (eval_value(f5, h) - eval_value(f5, -h)) / (2 * h)
    assert fd == pytest.approx(0.9, abs=1e-8)


@pytest.mark.parametrize("spec", paper_objectives(), ids=lambda s: s.kind)
def test_gradient_matches_finite_difference(spec):
    for x in np.linspace(-4, 4, 9):
        h = 1e-6
        fd = (eval_value(spec, x + h) - eval_value(spec, x - h)) / (2 * h)
        assert eval_gradient(spec, x)[0] == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("spec", paper_objectives(), ids=lambda s: s.kind)
def test_catalog_constants_hold_on_samples(spec):
    lo, hi = verify_constants(spec, n_pairs=10_000, tol=1e-9)
    assert spec.mu - 1e-9 <= lo and hi <= spec.lip + 1e-9


def test_catalog_moduli():
    got = [(s.mu, s.lip) for s in paper_objectives()]
    assert got == [(1, 1), (1, 1), (1, 3), (1, 2), (1.2, 2.41)]


def test_wrong_declared_constant_is_caught():
    from dataclasses import replace
    bad = replace(sinquad(), lip=2.5)
    with pytest.raises(AssumptionViolation):
        verify_constants(bad, n_pairs=2000)


def test_averaged_hessian_quadratic_is_constant():
    f1 = paper_objectives()[0]
    assert averaged_hessian(f1, 4.0, -3.0)[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_averaged_hessian_sinquad_closed_form():
    B = averaged_hessian(sinquad(), np.pi, 0.0)[0, 0]
    assert B == pytest.approx(2 - 2 / np.pi, abs=1e-12)


@pytest.mark.parametrize("spec", paper_objectives(), ids=lambda s: s.kind)
def test_averaged_hessian_secant_identity(spec):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x, y = rng.uniform(-5, 5, 2)
        B = averaged_hessian(spec, x, y)
        r = eval_gradient(spec, x) - eval_gradient(spec, y) - B @ [x - y]
        assert abs(r[0]) <= 1e-8
        assert spec.mu - 1e-12 <= B[0, 0] <= spec.lip + 1e-12


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.sampled_from(range(5)))
def test_averaged_hessian_in_modulus_band(x, y, k):
    spec = paper_objectives()[k]
    B = averaged_hessian(spec, x, y)[0, 0]
    assert spec.mu - 1e-12 <= B <= spec.lip + 1e-12


def test_aggregate_gradient_bracket():
    specs = paper_objectives()
    assert aggregate_gradient(specs, [0.0])[0] == pytest.approx(4.9, abs=1e-12)
    g_m1 = aggregate_gradient(specs, [-1.0])[0]
    assert g_m1 == pytest.approx(-3.40, abs=5e-3)


def test_benchmark_optimum(opt, specs):
    assert -1 < opt.x_star[0] < 0
    assert opt.x_star[0] == pytest.approx(X_STAR, abs=1e-10)
    assert abs(aggregate_gradient(specs, opt.x_star)[0]) <= 1e-10
    assert abs(opt.lambda_star.sum()) <= 1e-9


def test_optimum_trivial_cases():
    s = solve_centralized_optimum([quadratic(1.0)])
    assert s.x_star[0] == pytest.approx(0.0, abs=1e-12)
    assert s.lambda_star[0][0] == pytest.approx(0.0, abs=1e-12)
    pair = [quadratic(1.0, -1.0, 0.5), quadratic(1.0, 1.0, 0.5)]
    assert solve_centralized_optimum(pair).x_star[0] == pytest.approx(0.0, abs=1e-12)


def test_optimum_idempotent(specs, opt):
    again = solve_centralized_optimum(specs, 1.0, tol=1e-10, x0=opt.x_star)
    assert abs(again.x_star[0] - opt.x_star[0]) <= 1e-10


def test_vector_decision_optimum():
    specs = paper_objectives(dim=3)
    s = solve_centralized_optimum(specs, tol=1e-10)
    assert np.allclose(s.x_star, X_STAR, atol=1e-9)


def test_from_name():
    q = from_name("quad(2, -1, 0.5)")
    assert (q.mu, q.lip) == (2.0, 2.0)
    assert eval_value(q, 1.0) == pytest.approx(0.5)
    assert from_name("logexp1").lip == 2.0
    with pytest.raises(DomainError):
        from_name("cubic")
    with pytest.raises(DomainError):
        from_name("quad(0,1,1)")


def test_non_finite_input_rejected():
    with pytest.raises(DomainError):
        eval_gradient(sinquad(), np.nan)
    with pytest.raises(DomainError):
        eval_hessian(sinquad(), [1.0, 2.0])
