import numpy as np
import pytest

from nslasso import (
    InvalidDimensions,
    NonConvergedWarning,
    NonPositiveLambda,
    NsConfig,
    PrimalDualState,
    SingularNewtonSystem,
    StopReason,
    assemble_newton_system,
    evaluate_F,
    fista_solve,
    generalized_newton_step,
    gram_spectral_norm,
    lambda_zero,
    lasso_objective,
    newton_derivative_gamma,
    normalize_columns,
    ns_iterate,
    ns_solve,
    soft_threshold,
    xty_over_n,
)


def _instance(seed, n=30, p=20):
    rng = np.random.default_rng(seed)
    X = normalize_columns(rng.standard_normal((n, p)))
    y = rng.standard_normal(n)
    return X, y


def _midpoint_lambda(d, m):
    """A level strictly between the m-th and (m+1)-th largest |d|."""
    vs = np.sort(np.abs(d))
    return 0.5 * (vs[-m] + vs[-m - 1])


def test_gram_spectral_norm_matches_eigvalsh():
    for seed in (0, 1, 2):
        X, _ = _instance(seed, n=40, p=25)
        exact = float(np.linalg.eigvalsh(X.values.T @ X.values / X.n).max())
        assert gram_spectral_norm(X, rel_tol=1e-10) == pytest.approx(exact, rel=1e-6)


def test_gram_spectral_norm_orthogonal_is_one():
    X = normalize_columns(np.eye(6))
    assert gram_spectral_norm(X) == pytest.approx(1.0, rel=1e-8)


def test_fista_orthogonal_equals_soft_threshold():
    n = 10
    X = normalize_columns(np.eye(n))
    rng = np.random.default_rng(3)
    y = rng.uniform(-3, 3, n)
    lam = 0.4 * lambda_zero(X, y)
    beta = fista_solve(X, y, lam, tol=1e-12)
    assert np.allclose(beta, soft_threshold(xty_over_n(X, y), lam), atol=1e-10)


def test_fista_result_is_a_minimizer():
    X, y = _instance(4)
    lam = 0.3 * lambda_zero(X, y)
    beta = fista_solve(X, y, lam, tol=1e-12)
    obj = lasso_objective(X, y, beta, lam)
    rng = np.random.default_rng(5)
    for scale in (1e-3, 1e-5):
        for _ in range(50):
            trial = beta + scale * rng.standard_normal(X.p)
            assert lasso_objective(X, y, trial, lam) >= obj - 1e-12


def test_fista_insensitive_to_init():
    X, y = _instance(6)
    lam = 0.25 * lambda_zero(X, y)
    b0 = fista_solve(X, y, lam, tol=1e-12)
    warm = np.random.default_rng(7).standard_normal(X.p)
    b1 = fista_solve(X, y, lam, tol=1e-12, init=warm)
    o0 = lasso_objective(X, y, b0, lam)
    o1 = lasso_objective(X, y, b1, lam)
    assert abs(o0 - o1) <= 1e-10 * max(1.0, abs(o0))
    assert np.allclose(b0, b1, atol=1e-7)


def test_fista_warns_when_budget_too_small():
    X, y = _instance(8)
    lam = 0.1 * lambda_zero(X, y)
    with pytest.warns(NonConvergedWarning):
        out = fista_solve(X, y, lam, tol=1e-14, max_iter=3)
    assert out.shape == (X.p,)


def test_fista_rejects_bad_inputs():
    X, y = _instance(9)
    with pytest.raises(NonPositiveLambda):
        fista_solve(X, y, 0.0)


def test_newton_derivative_gamma_frozen():
    v = np.array([2.0, -2.0, 1.0, -1.0, 0.5, 0.0])
    g = newton_derivative_gamma(v, 1.0)
    # the boundary |v| = lam contributes 0, matching the strict screen
    assert np.array_equal(g, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    with pytest.raises(NonPositiveLambda):
        newton_derivative_gamma(v, 0.0)


def test_evaluate_F_matches_naive_loops():
    X, y = _instance(10, n=8, p=5)
    rng = np.random.default_rng(11)
    beta = rng.standard_normal(5)
    d = rng.standard_normal(5)
    lam = 0.7
    state = PrimalDualState(beta, d, lam)
    F = evaluate_F(state, X, y)
    n, p = X.n, X.p
    for j in range(p):
        v = beta[j] + d[j]
        gamma = np.sign(v) * max(abs(v) - lam, 0.0)
        assert F[j] == pytest.approx(beta[j] - gamma, abs=1e-12)
        resid = [y[i] - sum(X.values[i, k] * beta[k] for k in range(p)) for i in range(n)]
        f2 = n * d[j] - sum(X.values[i, j] * resid[i] for i in range(n))
        assert F[p + j] == pytest.approx(f2, rel=1e-10, abs=1e-9)


def test_evaluate_F_vanishes_at_solution():
    X, y = _instance(12)
    lam = 0.35 * lambda_zero(X, y)
    res = ns_solve(X, y, NsConfig(lam=lam))
    assert res.converged_by is StopReason.WORKING_SET_FIXED_POINT
    F = evaluate_F(res.state, X, y)
    assert np.linalg.norm(F, ord=np.inf) <= 1e-8 * X.n


def test_newton_system_matches_finite_differences():
    # F is piecewise linear, so central differences recover H exactly
    # wherever no coordinate of beta + d sits on the kink |v| = lam
    X, y = _instance(13, n=12, p=6)
    rng = np.random.default_rng(14)
    beta = rng.standard_normal(6)
    d = rng.standard_normal(6)
    lam = 0.8
    margin = np.min(np.abs(np.abs(beta + d) - lam))
    assert margin > 1e-3  # seed chosen so the state is safely off the kink
    state = PrimalDualState(beta, d, lam)
    system = assemble_newton_system(state, X, y, lam)

    p = X.p
    b = newton_derivative_gamma(beta + d, lam)
    act = np.flatnonzero(b == 1.0)
    ina = np.flatnonzero(b == 0.0)
    row_order = np.concatenate([act, ina, p + act, p + ina])

    h = 1e-7
    z0 = np.concatenate([beta, d])
    H_fd = np.zeros((2 * p, 2 * p))
    for j in range(2 * p):
        nat = system.permutation[j]
        zp, zm = z0.copy(), z0.copy()
        zp[nat] += h
        zm[nat] -= h
        Fp = evaluate_F(PrimalDualState(zp[:p], zp[p:], lam), X, y)
        Fm = evaluate_F(PrimalDualState(zm[:p], zm[p:], lam), X, y)
        H_fd[:, j] = (Fp - Fm)[row_order] / (2 * h)
    assert np.allclose(system.h, H_fd, atol=1e-5 * X.n)


def test_newton_rhs_is_negative_F():
    X, y = _instance(15, n=10, p=5)
    rng = np.random.default_rng(16)
    state = PrimalDualState(rng.standard_normal(5), rng.standard_normal(5), 0.6)
    system = assemble_newton_system(state, X, y, 0.6)
    F = evaluate_F(state, X, y)
    b = newton_derivative_gamma(state.beta + state.d, 0.6)
    act = np.flatnonzero(b == 1.0)
    ina = np.flatnonzero(b == 0.0)
    row_order = np.concatenate([act, ina, 5 + act, 5 + ina])
    assert np.allclose(system.rhs, -F[row_order], atol=1e-12)


def test_newton_step_equals_screening_update():
    # the screening update and the explicit generalized Newton step are
    # the same map whenever the working set is unambiguous
    hits = 0
    for seed in range(10):
        X, y = _instance(100 + seed, n=40, p=25)
        d0 = xty_over_n(X, y)
        lam = _midpoint_lambda(d0, m=4)
        state = PrimalDualState(np.zeros(X.p), d0, lam)
        for _ in range(3):  # compare along a short trajectory
            margin = np.min(np.abs(np.abs(state.beta + state.d) - lam))
            if margin <= 1e-8:
                break
            newton = generalized_newton_step(state, X, y, lam)
            screened, _ = ns_iterate(state, X, y, NsConfig(lam=lam))
            assert np.allclose(newton.beta, screened.beta, atol=1e-10)
            assert np.allclose(newton.d, screened.d, atol=1e-10)
            hits += 1
            state = screened
    assert hits >= 10


def test_newton_step_singular_on_duplicate_active_columns():
    rng = np.random.default_rng(17)
    base = rng.standard_normal((8, 1))
    X = normalize_columns(np.hstack([base, base, rng.standard_normal((8, 2))]))
    y = base.ravel() + 0.01 * rng.standard_normal(8)
    d0 = xty_over_n(X, y)
    lam = 0.5 * np.abs(d0).max()  # both duplicates screen in
    state = PrimalDualState(np.zeros(4), d0, lam)
    assert np.abs(d0[0]) > lam and np.abs(d0[1]) > lam
    with pytest.raises(SingularNewtonSystem):
        generalized_newton_step(state, X, y, lam)


def test_newton_assembly_rejects_large_p():
    rng = np.random.default_rng(18)
    X = normalize_columns(rng.standard_normal((10, 201)))
    state = PrimalDualState(np.zeros(201), np.zeros(201), 1.0)
    with pytest.raises(InvalidDimensions):
        assemble_newton_system(state, X, rng.standard_normal(10), 1.0)


def test_newton_assembly_puts_boundary_coordinate_in_inactive_block():
    X, y = _instance(19, n=10, p=4)
    beta = np.array([0.0, 0.0, 0.0, 0.0])
    d = np.array([1.0, 0.5, -1.0, 2.0])
    state = PrimalDualState(beta, d, 1.0)
    system = assemble_newton_system(state, X, y, 1.0)
    # coordinates 0 and 2 sit exactly on |v| = lam: inactive; only 3 is in
    b = newton_derivative_gamma(beta + d, 1.0)
    assert np.array_equal(np.flatnonzero(b == 1.0), [3])
    assert system.h.shape == (8, 8)
    # d_A block is 1x1 and carries -1
    assert system.h[0, 0] == -1.0
