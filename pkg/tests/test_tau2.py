import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiral_potts.algebra import TAU_ID, config_index, configs, root_power, scale, weyl_ops
from chiral_potts.cpm import superintegrable_point
from chiral_potts.tau2 import (
    K_operator,
    Tau2Spec,
    build_fusion,
    build_H,
    build_H0,
    build_H1,
    build_tau2,
    fusion_boundary_residual,
    general_L,
    local_L,
    q_power,
    spin_inversion,
    spin_shift,
    translation,
)

specs = st.builds(Tau2Spec, st.just(3), st.integers(1, 3), st.integers(0, 2), st.integers(0, 2))
cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def rel(a, b):
    return np.linalg.norm(a - b, 1) / scale(a, b)


def test_spec_validation():
    with pytest.raises(ValueError):
        Tau2Spec(4, 2)
    with pytest.raises(ValueError):
        Tau2Spec(3, 2, m=3)
    assert Tau2Spec(3, 2, 0, 5).r == 2


def test_local_L_entries():
    X, _, _, _ = weyl_ops(3)
    for m in range(3):
        L0 = local_L(Tau2Spec(3, 1, m), 0.0)
        assert np.allclose(L0[1][1], root_power(3, 1 + 2 * m) * X)
    L1 = local_L(Tau2Spec(3, 1, 0), 1.0)
    assert np.allclose(L1[0][0], np.eye(3) - X)


@pytest.mark.parametrize("N,m,kp", [(3, 0, 0.6), (3, 2, -0.3), (5, 1, 0.4)])
def test_gauge_normalization(N, m, kp):
    p = superintegrable_point(N, m, kp)
    t = 0.3 + 0.7j
    Lg = general_L(N, t, p.x, p.y, p.x, p.y, p.mu**2)
    g = [np.sqrt(complex(((1 - kp) / (1 + kp)) ** (1 / N))), 1]
    Ln = local_L(Tau2Spec(N, 1, m), root_power(N, m) * t / p.t)
    for i in range(2):
        for j in range(2):
            assert np.abs(g[i] * Lg[i][j] / g[j] - Ln[i][j]).max() <= 1e-10


@given(cplx)
def test_single_site_transfer_by_hand(t):
    # N=3, L=1, m=r=0: A(wt) + D(wt) = (1 - w t) + w (1 - t) X
    X, _, _, _ = weyl_ops(3)
    w = root_power(3, 1)
    hand = (1 - w * t) * np.eye(3) + w * (1 - t) * X
    assert np.abs(build_tau2(Tau2Spec(3, 1, 0, 0), t) - hand).max() <= 1e-12


@given(specs, cplx, cplx)
def test_commuting_family_and_charge(spec, t1, t2):
    T1, T2 = build_tau2(spec, t1), build_tau2(spec, t2)
    X = spin_shift(spec)
    assert np.linalg.norm(T1 @ T2 - T2 @ T1, 1) / scale(T1 @ T2) <= TAU_ID
    assert np.linalg.norm(T1 @ X - X @ T1, 1) / scale(T1) <= 1e-12


@given(specs, cplx)
def test_fusion_seeds(spec, t):
    assert np.allclose(build_fusion(spec, 1, t), np.eye(spec.dim))
    assert np.allclose(build_fusion(spec, 0, t), 0)
    assert rel(build_fusion(spec, 2, t), build_tau2(spec, t)) <= TAU_ID
    with pytest.raises(ValueError):
        build_fusion(spec, spec.N + 2, t)


@pytest.mark.parametrize("m,r", [(0, 0), (1, 2), (2, 1)])
@pytest.mark.parametrize("branch", [0, 1])
def test_fusion_boundary(m, r, branch):
    spec = Tau2Spec(3, 2, m, r)
    t = 0.4 - 0.9j
    top = build_fusion(spec, 4, t)
    assert fusion_boundary_residual(spec, t, 0.35, branch) / scale(top) <= 1e-8


@given(specs, st.floats(-3, 3).filter(lambda k: abs(k) > 1e-3))
def test_hamiltonian_hermitian(spec, kp):
    H = build_H(spec, kp)
    assert np.linalg.norm(H - H.conj().T, 1) / scale(H) <= 1e-12


@pytest.mark.parametrize("L,m,r", [(2, 0, 0), (3, 1, 2), (3, 2, 1)])
def test_dolan_grady(L, m, r):
    spec = Tau2Spec(3, L, m, r)
    A, B = 2 * build_H0(spec) / 3, -2 * build_H1(spec) / 3
    c = lambda x, y: x @ y - y @ x
    for P, R in ((A, B), (B, A)):
        lhs = c(P, c(P, c(P, R)))
        assert np.linalg.norm(lhs - 16 * c(P, R), 1) / scale(lhs) <= 1e-8


@pytest.mark.parametrize("r", [0, 1, 2])
def test_H0_against_diagonal_sum(r):
    # brute force: H0 is diagonal with entries sum_l sum_j c_j w^{j(s_l - s_{l+1})}
    N, L, m = 3, 2, 0
    spec = Tau2Spec(N, L, m, r)
    diag = []
    for sig in configs(N, L):
        nxt = list(sig[1:]) + [sig[0] - r]
        e = sum(-2 * root_power(N, m * j) / (1 - root_power(N, -j)) * root_power(N, j * (sig[l] - nxt[l]))
                for j in range(1, N) for l in range(L))
        diag.append(e)
    H0 = build_H0(spec)
    assert np.abs(H0 - np.diag(diag)).max() <= 1e-12
    assert np.allclose(np.sort(np.linalg.eigvalsh(H0)), np.sort(np.real(diag)))


@given(specs, cplx)
def test_translation(spec, t):
    S = translation(spec)
    X = spin_shift(spec)
    SL = np.linalg.matrix_power(S, spec.L)
    assert np.allclose(SL, np.linalg.matrix_power(X.conj().T, spec.r))
    assert np.allclose(S @ X, X @ S)
    T = build_tau2(spec, t)
    assert rel(S @ T, T @ S) <= TAU_ID


def test_spin_inversion_example():
    spec = Tau2Spec(3, 2, 0, 0)
    J = spin_inversion(spec)
    v = np.zeros(9)
    v[config_index(3, [1, 2])] = 1
    assert np.allclose(J @ v, v)


@given(specs, cplx, st.floats(-3, 3).filter(lambda k: abs(k) > 1e-3))
def test_inversion_relations(spec, t, kp):
    J = spin_inversion(spec)
    assert rel(J @ build_H(spec, kp) @ J.conj().T, build_H(spec, -kp)) <= TAU_ID
    if abs(t) < 1e-3:
        return
    lhs = J @ build_tau2(spec, spec.wp(spec.m) * t) @ J.conj().T
    rhs = (-t) ** spec.L * q_power(spec, -spec.L) * K_operator(spec) @ build_tau2(spec, spec.wp(spec.m - 1) / t)
    assert rel(lhs, rhs) <= TAU_ID
