import warnings

import numpy as np
import pytest

from nslasso import (
    CgStalledWarning,
    DimensionMismatch,
    LsMethod,
    NonPositiveLambda,
    NsConfig,
    PrimalDualState,
    SingularSystem,
    StopReason,
    WorkingSet,
    fista_solve,
    lambda_zero,
    lasso_objective,
    normalize_columns,
    ns_iterate,
    ns_solve,
    restricted_ls_solve,
    soft_threshold,
    working_set,
    xty_over_n,
)


def _planted_instance(seed, n=40, p=80, T=4, sigma=0.2):
    rng = np.random.default_rng(seed)
    X_raw = rng.standard_normal((n, p))
    beta_star = np.zeros(p)
    idx = rng.choice(p, T, replace=False)
    beta_star[idx] = rng.choice([-1.0, 1.0], T) * (1 + rng.random(T))
    y = X_raw @ beta_star + sigma * rng.standard_normal(n)
    return normalize_columns(X_raw), y


def test_working_set_is_strict():
    beta = np.array([0.5, 0.0, -0.2, 0.0])
    d = np.array([0.5, 1.0, -0.8, 0.3])
    # |beta + d| = [1.0, 1.0, 1.0, 0.3]; everything at the boundary stays out
    A = working_set(beta, d, lam=1.0)
    assert A.size == 0
    A2 = working_set(beta, d, lam=0.9999999)
    assert np.array_equal(A2.indices, [0, 1, 2])


def test_working_set_validation():
    with pytest.raises(NonPositiveLambda):
        working_set(np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(DimensionMismatch):
        working_set(np.zeros(2), np.zeros(3), 1.0)


def test_restricted_ls_direct_matches_dense_solve():
    rng = np.random.default_rng(0)
    X = normalize_columns(rng.standard_normal((30, 12)))
    A = WorkingSet(indices=np.array([0, 3, 4, 8, 11]), p=12)
    rhs = rng.standard_normal(5)
    cfg = NsConfig(lam=1.0, ls_method=LsMethod.DIRECT)
    u = restricted_ls_solve(X, A, rhs, cfg)
    Xa = X.values[:, A.indices]
    expected = np.linalg.solve(Xa.T @ Xa / 30, rhs)
    assert np.allclose(u, expected, rtol=1e-10)


def test_restricted_ls_cg_matches_direct():
    rng = np.random.default_rng(1)
    X = normalize_columns(rng.standard_normal((60, 40)))
    A = WorkingSet(indices=np.sort(rng.choice(40, 20, replace=False)), p=40)
    rhs = rng.standard_normal(20)
    u_dir = restricted_ls_solve(X, A, rhs, NsConfig(lam=1.0, ls_method=LsMethod.DIRECT))
    u_cg = restricted_ls_solve(X, A, rhs, NsConfig(lam=1.0, ls_method=LsMethod.CG))
    assert np.allclose(u_cg, u_dir, atol=1e-8)


def test_restricted_ls_cg_accepts_warm_start():
    rng = np.random.default_rng(2)
    X = normalize_columns(rng.standard_normal((50, 30)))
    A = WorkingSet(indices=np.arange(10), p=30)
    rhs = rng.standard_normal(10)
    exact = restricted_ls_solve(X, A, rhs, NsConfig(lam=1.0, ls_method=LsMethod.DIRECT))
    with warnings.catch_warnings():
        warnings.simplefilter("error")  # a warm start at the solution needs no work
        out = restricted_ls_solve(
            X, A, rhs, NsConfig(lam=1.0, ls_method=LsMethod.CG), warm=exact
        )
    assert np.allclose(out, exact, atol=1e-10)


def test_restricted_ls_cg_stall_is_flagged_but_returns():
    rng = np.random.default_rng(3)
    X = normalize_columns(rng.standard_normal((40, 25)))
    A = WorkingSet(indices=np.arange(20), p=25)
    rhs = rng.standard_normal(20)
    cfg = NsConfig(lam=1.0, ls_method=LsMethod.CG, cg_max_iter=2)
    with pytest.warns(CgStalledWarning):
        out = restricted_ls_solve(X, A, rhs, cfg)
    assert out.shape == (20,)
    assert np.all(np.isfinite(out))


def test_restricted_ls_direct_singular_raises():
    col = np.random.default_rng(4).standard_normal((10, 1))
    X = normalize_columns(np.hstack([col, col]))  # duplicated column
    A = WorkingSet(indices=np.array([0, 1]), p=2)
    cfg = NsConfig(lam=1.0, ls_method=LsMethod.DIRECT)
    with pytest.raises(SingularSystem):
        restricted_ls_solve(X, A, np.ones(2), cfg)


def test_restricted_ls_auto_avoids_direct_beyond_n():
    # |A| > n makes the Gram singular, so auto must take the CG route
    rng = np.random.default_rng(5)
    X = normalize_columns(rng.standard_normal((15, 40)))
    A = WorkingSet(indices=np.arange(30), p=40)
    cfg = NsConfig(lam=1.0, ls_method=LsMethod.AUTO)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CgStalledWarning)
        out = restricted_ls_solve(X, A, rng.standard_normal(30), cfg)
    assert np.all(np.isfinite(out))


def test_restricted_ls_empty_set():
    X = normalize_columns(np.random.default_rng(6).standard_normal((8, 3)))
    A = WorkingSet(indices=np.array([], dtype=int), p=3)
    out = restricted_ls_solve(X, A, np.zeros(0), NsConfig(lam=1.0))
    assert out.shape == (0,)


def test_ns_iterate_empty_working_set():
    X, y = _planted_instance(7)
    lam = 2.0 * lambda_zero(X, y)
    state = PrimalDualState(np.zeros(X.p), xty_over_n(X, y), lam)
    new, A = ns_iterate(state, X, y, NsConfig(lam=lam))
    assert A.size == 0
    assert np.all(new.beta == 0.0)
    assert np.allclose(new.d, xty_over_n(X, y), rtol=0, atol=0)


def test_ns_iterate_pins_active_duals_exactly():
    X, y = _planted_instance(8)
    lam = 0.5 * lambda_zero(X, y)
    lam_bar = 0.3 * lam
    cfg = NsConfig(lam=lam, lam_bar=lam_bar)
    state = PrimalDualState(np.zeros(X.p), xty_over_n(X, y), lam, lam_bar)
    new, A = ns_iterate(state, X, y, cfg)
    assert A.size > 0
    # exact equality: these entries are assigned, not recomputed
    assert np.all(np.abs(new.d[A.indices]) == lam - lam_bar)
    # off-set coefficients are exact zeros
    off = np.setdiff1d(np.arange(X.p), A.indices)
    assert np.all(new.beta[off] == 0.0)


def test_ns_iterate_solves_restricted_normal_equations():
    X, y = _planted_instance(9)
    lam = 0.4 * lambda_zero(X, y)
    cfg = NsConfig(lam=lam, lam_bar=0.1 * lam)
    state = PrimalDualState(np.zeros(X.p), xty_over_n(X, y), lam, cfg.lam_bar)
    new, A = ns_iterate(state, X, y, cfg)
    idx = A.indices
    Xa = X.values[:, idx]
    s = np.sign(state.beta[idx] + state.d[idx])
    rhs = Xa.T @ y / X.n - (lam - cfg.lam_bar) * s
    expected = np.linalg.solve(Xa.T @ Xa / X.n, rhs)
    assert np.allclose(new.beta[idx], expected, rtol=1e-10)
    # dual refresh on the complement comes from the new residuals
    off = np.setdiff1d(np.arange(X.p), idx)
    resid = y - Xa @ new.beta[idx]
    assert np.allclose(new.d[off], X.values[:, off].T @ resid / X.n, rtol=1e-12)


def test_ns_solve_orthogonal_equals_soft_threshold():
    n = 8
    X = normalize_columns(np.eye(n))
    rng = np.random.default_rng(10)
    for _ in range(5):
        y = rng.uniform(-4, 4, size=n)
        lam = float(rng.uniform(0.2, 1.2)) * lambda_zero(X, y)
        res = ns_solve(X, y, NsConfig(lam=lam))
        expected = soft_threshold(X.values.T @ y / n, lam)
        assert np.allclose(res.state.beta, expected, rtol=0, atol=1e-12)
        assert res.converged_by is StopReason.WORKING_SET_FIXED_POINT


def test_ns_solve_above_lambda_zero_returns_zero_in_one_iteration():
    X, y = _planted_instance(11)
    lam = 1.01 * lambda_zero(X, y)
    res = ns_solve(X, y, NsConfig(lam=lam))
    assert res.iterations == 1
    assert res.converged_by is StopReason.WORKING_SET_FIXED_POINT
    assert np.all(res.state.beta == 0.0)
    assert res.working_set.size == 0


def test_ns_solve_fixed_point_certifies_kkt():
    X, y = _planted_instance(12)
    lam = 0.3 * lambda_zero(X, y)
    res = ns_solve(X, y, NsConfig(lam=lam))
    assert res.converged_by is StopReason.WORKING_SET_FIXED_POINT
    assert res.kkt.residual_inf <= 1e-8
    # the returned set is the fixed point of the final state
    induced = working_set(res.state.beta, res.state.d, lam)
    assert induced == res.working_set
    # support is contained in the working set
    assert set(np.flatnonzero(res.state.beta)) <= set(res.working_set.indices.tolist())


def test_ns_solve_matches_fista_objective():
    for seed in (13, 14, 15):
        X, y = _planted_instance(seed)
        lam = 0.35 * lambda_zero(X, y)
        res = ns_solve(X, y, NsConfig(lam=lam))
        if res.converged_by is not StopReason.WORKING_SET_FIXED_POINT:
            continue
        ref = fista_solve(X, y, lam, tol=1e-11)
        o1 = res.kkt.objective
        o2 = lasso_objective(X, y, ref, lam)
        assert abs(o1 - o2) <= 1e-9 * max(1.0, abs(o1), abs(o2))


@pytest.mark.filterwarnings("ignore::nslasso.CgStalledWarning")
def test_ns_solve_iteration_cap_returns_last_iterate():
    X, y = _planted_instance(16, n=30, p=60)
    lam = 0.25 * lambda_zero(X, y)
    full = ns_solve(X, y, NsConfig(lam=lam, max_iter=50))
    if full.iterations < 2:
        pytest.skip("instance converged immediately; cap not exercised")
    res = ns_solve(X, y, NsConfig(lam=lam, max_iter=1))
    assert res.iterations == 1
    assert res.converged_by is StopReason.ITERATION_CAP
    assert np.all(np.isfinite(res.state.beta))
    # one iterate from the cold start equals the first iterate of the full run
    one, _ = ns_iterate(
        PrimalDualState(np.zeros(X.p), xty_over_n(X, y), lam), X, y, NsConfig(lam=lam)
    )
    assert np.array_equal(res.state.beta, one.beta)


def test_ns_solve_one_step_from_near_solution():
    # initializing close enough to the solved state converges in one update
    for seed in (17, 18, 19):
        X, y = _planted_instance(seed)
        lam = 0.4 * lambda_zero(X, y)
        ref = ns_solve(X, y, NsConfig(lam=lam))
        assert ref.converged_by is StopReason.WORKING_SET_FIXED_POINT
        beta, d = ref.state.beta, ref.state.d
        margin = np.min(np.abs(np.abs(beta + d) - lam))
        if margin < 1e-6:
            continue
        rng = np.random.default_rng(seed)
        pert = 0.45 * margin
        init = PrimalDualState(
            beta + pert * rng.uniform(-1, 1, X.p),
            d + pert * rng.uniform(-1, 1, X.p),
            lam,
        )
        out, _ = ns_iterate(init, X, y, NsConfig(lam=lam))
        assert np.allclose(out.beta, beta, rtol=0, atol=1e-9)


def test_ns_solve_permutation_equivariance():
    X, y = _planted_instance(20)
    lam = 0.35 * lambda_zero(X, y)
    res = ns_solve(X, y, NsConfig(lam=lam))
    rng = np.random.default_rng(21)
    perm = rng.permutation(X.p)
    Xp = normalize_columns(X.values[:, perm] * X.column_scales[perm])
    res_p = ns_solve(Xp, y, NsConfig(lam=lam))
    assert np.allclose(res_p.state.beta, res.state.beta[perm], atol=1e-10)


def test_ns_config_validation():
    with pytest.raises(NonPositiveLambda):
        NsConfig(lam=-1.0)
    with pytest.raises(DimensionMismatch):
        NsConfig(lam=1.0, lam_bar=1.0)
    with pytest.raises(DimensionMismatch):
        NsConfig(lam=1.0, max_iter=0)
    with pytest.raises(DimensionMismatch):
        NsConfig(lam=1.0, cg_tol=0.0)
    cfg = NsConfig(lam=1.0, ls_method="direct")
    assert cfg.ls_method is LsMethod.DIRECT
