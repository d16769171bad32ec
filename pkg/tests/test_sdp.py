import cvxpy as cp
import numpy as np
import pytest

from airsopt.beamforming import ScaConfig, autocorrelation, gain_matrix, realify, sca_subproblem
from airsopt.sdp import SdpError, solve_sdp


def random_problem(rng, n, m, p):
    """Feasible, bounded instance: b from a PD point, C dual-feasible by construction."""
    A = rng.normal(size=(m, n, n))
    A = A + A.transpose(0, 2, 1)
    a = rng.normal(size=(m, p))
    X0 = np.eye(n) + 0.1 * np.diag(rng.uniform(size=n))
    x0 = np.ones(p)
    b = np.einsum("mij,ij->m", A, X0) + a @ x0
    y0 = rng.normal(size=m)
    G = rng.normal(size=(n, n))
    C = np.tensordot(y0, A, axes=1) + G @ G.T + np.eye(n)
    c = a.T @ y0 + rng.uniform(0.5, 1.5, size=p)
    return C, A, b, c, a


def cvx_reference(C, A, b, c, a):
    n, p = C.shape[0], c.size
    X = cp.Variable((n, n), symmetric=True)
    x = cp.Variable(p)
    cons = [X >> 0, x >= 0]
    cons += [cp.trace(A[i] @ X) + a[i] @ x == b[i] for i in range(len(b))]
    prob = cp.Problem(cp.Minimize(cp.trace(C @ X) + c @ x), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


@pytest.mark.parametrize("seed", range(5))
def test_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    C, A, b, c, a = random_problem(rng, 6, 4, 2)
    res = solve_sdp(C, A, b, c=c, a=a)
    ref = cvx_reference(C, A, b, c, a)
    assert abs(res.primal_objective - ref) <= 1e-6 * (1 + abs(ref))
    assert np.linalg.eigvalsh(res.X).min() >= -1e-9
    assert np.all(res.x >= -1e-9)
    assert res.primal_residual < 1e-8


def test_pure_psd_block():
    # min tr X  s.t. X[0,0] = 1, 2 X[0,1] = 1; the optimum is the rank-one [[1, .5], [.5, .25]]
    A = np.zeros((2, 2, 2))
    A[0, 0, 0] = 1.0
    A[1, 0, 1] = A[1, 1, 0] = 1.0
    res = solve_sdp(np.eye(2), A, np.array([1.0, 1.0]))
    assert np.allclose(res.X, [[1.0, 0.5], [0.5, 0.25]], atol=1e-6)


def test_infeasible_raises():
    # X[0,0] = -1 has no PSD solution
    A = np.zeros((1, 2, 2))
    A[0, 0, 0] = 1.0
    with pytest.raises(SdpError) as err:
        solve_sdp(np.eye(2), A, np.array([-1.0]), max_iter=40)
    assert err.value.iterations > 0


def test_subproblem_matches_complex_cvxpy_model():
    rng = np.random.default_rng(21)
    n = 4
    responses = np.exp(-1j * np.outer(rng.uniform(-2, 2, 2), np.arange(n)))
    weights = np.array([0.6, 0.8])
    cfg = ScaConfig()
    W, delta = sca_subproblem(np.zeros((n, n), complex), responses, weights, cfg)

    Wv = cp.Variable((n, n), hermitian=True)
    d = cp.Variable()
    gains = [cp.real(cp.trace(gain_matrix(f).conj().T @ Wv)) for f in responses]
    cons = [Wv >> 0, cp.diag(Wv) == 1] + [w * g >= d for w, g in zip(weights, gains)]
    e1 = np.zeros(n)
    e1[0] = 1.0
    obj = d + cfg.penalty * cp.real(Wv[0, 0])
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    ours = delta + cfg.penalty * np.real(W[0, 0])
    assert abs(ours - prob.value) <= 1e-4 * abs(prob.value)


def test_gain_matrix_is_linear_form_of_autocorrelation():
    rng = np.random.default_rng(22)
    n = 5
    f = np.exp(-1j * 0.7 * np.arange(n))
    for _ in range(10):
        G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        W = G @ G.conj().T
        lhs = np.real(np.trace(gain_matrix(f).conj().T @ W))
        rhs = np.real(np.vdot(f, autocorrelation(W)))
        assert np.isclose(lhs, rhs, rtol=1e-12)
        # real embedding keeps the trace inner product (up to the factor 2)
        assert np.isclose(0.5 * np.sum(realify(gain_matrix(f)) * realify(W)), lhs, rtol=1e-12)
