import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiral_potts import cpm
from chiral_potts.algebra import root_power, scale
from chiral_potts.onsager import direct_eigvectors, sign_vectors
from chiral_potts.sectors import enumerate_sectors
from chiral_potts.tau2 import Tau2Spec, build_H, build_tau2, translation

kprimes = st.sampled_from([0.2, 0.35, 0.6, -0.3, -0.7, 2.5, -4.0])


def test_superintegrable_point_coordinates():
    p = cpm.superintegrable_point(3, 0, 0.6)
    assert np.isclose(p.mu, 1)
    assert np.isclose(cpm.eta(3, 0.6), 0.25 ** (1 / 3))
    assert p.curve_residual() <= 1e-12
    p1 = cpm.superintegrable_point(3, 1, 0.6)
    assert np.isclose(p1.x / p1.y, root_power(3, 1))
    with pytest.raises(cpm.RapidityError):
        cpm.superintegrable_point(3, 0, 1.0)


@given(st.sampled_from([3, 5]), st.integers(0, 4), kprimes, st.integers(0, 10_000))
def test_rapidities_on_curve(N, m, kp, seed):
    p = cpm.superintegrable_point(N, m % N, kp)
    q = cpm.random_rapidity(p, seed)
    assert q.curve_residual() <= 1e-10
    qs = cpm.dual_rapidity(q)
    assert qs.curve_residual() <= 1e-10
    assert np.isclose(qs.mu, 1 / q.mu)
    assert np.isclose(qs.kprime, 1 / kp)
    assert cpm.periodicity_residual(p, q) <= 1e-9


@pytest.mark.parametrize("N,m,kp", [(3, 0, 0.6), (3, 2, -0.3), (5, 1, 0.4)])
def test_dual_of_superintegrable_point(N, m, kp):
    p = cpm.superintegrable_point(N, m, kp)
    ps = cpm.dual_rapidity(p)
    p2 = cpm.superintegrable_point(N, m, 1 / kp)
    assert np.isclose(ps.x / p2.x, 1) and np.isclose(ps.y / p2.y, 1)
    assert np.isclose(ps.t**N, -(p.t**N))


@given(kprimes, st.integers(0, 10_000))
def test_weights(kp, seed):
    p = cpm.superintegrable_point(3, 1, kp)
    q = cpm.random_rapidity(p, seed)
    W, Wb = cpm.boltzmann_weights(p, q)
    assert W[0] == 1 and Wb[0] == 1
    Wp, _ = cpm.boltzmann_weights(q, q)
    assert np.allclose(Wp, 1)
    # Fourier transform of Wbar is the dual W
    Ws, _ = cpm.boltzmann_weights(cpm.dual_rapidity(p), cpm.dual_rapidity(q))
    f = cpm.weight_fourier(Wb)
    assert np.abs(f / f[0] - Ws).max() <= 1e-9


@pytest.mark.parametrize("L,m,r", [(2, 0, 0), (2, 1, 2), (3, 2, 1)])
def test_transfer_matrices(L, m, r):
    spec = Tau2Spec(3, L, m, r)
    p = cpm.superintegrable_point(3, m, 0.45)
    q1, q2 = cpm.random_rapidity(p, 1), cpm.random_rapidity(p, 2)
    T1, T2 = cpm.build_T(p, q1, spec), cpm.build_T(p, q2, spec)
    assert np.linalg.norm(T1 @ T2 - T2 @ T1, 1) / scale(T1 @ T2) <= 1e-8
    S = translation(spec)
    assert np.linalg.norm(cpm.build_That(p, q1, spec) - S @ T1, 1) / scale(T1) <= 1e-10
    tau = build_tau2(spec, cpm.normalized_coords(p, q1, m)[2])
    assert np.linalg.norm(T1 @ tau - tau @ T1, 1) / scale(T1 @ tau) <= 1e-8


@pytest.mark.parametrize("kp", [0.3, -0.5, 2.0])
def test_hamiltonian_from_transfer_expansion(kp):
    spec = Tau2Spec(3, 2, 1, 1)
    Hd = cpm.hamiltonian_from_That(spec, kp)
    H = build_H(spec, kp)
    assert np.linalg.norm(Hd - H, 1) / scale(H) <= 1e-5


@pytest.mark.parametrize("Q", [0, 1, 2])
def test_transfer_duality(Q):
    spec = Tau2Spec(3, 2, 1, 2)
    p = cpm.superintegrable_point(3, 1, 0.4)
    q = cpm.random_rapidity(p, 17)
    assert cpm.duality_residual(spec, Q, q, 0.4) <= 1e-7


def test_closed_form_on_canonical_sector():
    spec = Tau2Spec(3, 3, 0, 0)
    sec = next(s for s in enumerate_sectors(spec, 0) if s.mE == 2)
    kp = 0.6
    p = cpm.superintegrable_point(3, 0, kp)
    q = cpm.random_rapidity(p, 5)
    T = cpm.build_T(p, q, spec)
    vecs = direct_eigvectors(sec, kp)
    S = translation(spec)
    mom = cpm.momentum(sec)
    for s in sign_vectors(sec.mE):
        v = vecs[s]
        lam = cpm.eval_T_eigenvalue(sec, q, s, "T", p)
        assert np.linalg.norm(T @ v - lam * v) / abs(lam) <= 1e-6
        assert np.linalg.norm(S @ v - mom * v) <= 1e-8
        assert cpm.G_consistency(sec, q, s) <= 1e-8
    assert cpm.curve_w_residual(sec, kp) <= 1e-9


def test_rapidity_json_roundtrip():
    p = cpm.random_rapidity(cpm.superintegrable_point(3, 2, -0.3), 9)
    q = cpm.Rapidity.from_json(p.to_json())
    assert np.isclose(q.x, p.x) and np.isclose(q.mu, p.mu) and np.isclose(q.k, p.k)
