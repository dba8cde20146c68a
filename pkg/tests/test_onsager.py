import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiral_potts.algebra import TAU_ID, duality_map, root_power, scale, sector_basis
from chiral_potts.onsager import (
    V_ZERO,
    W_INF,
    VectorError,
    angles,
    compare_with_direct,
    direct_eigvectors,
    dual_sector,
    duality_vectors,
    energy,
    epsilon,
    family_sign_check,
    inversion_vectors,
    limit_basis,
    overlap,
    parse_sign_label,
    sector_H,
    sign_label,
    sign_vectors,
    synthesis_coefficients,
    synthesize,
)
from chiral_potts.sectors import enumerate_sectors, inversion_partner
from chiral_potts.tau2 import Tau2Spec, build_H0, build_H1, translation

thetas = st.floats(0.01, np.pi - 0.01)
kps = st.floats(-5, 5).filter(lambda k: abs(k) > 1e-2 and abs(abs(k) - 1) > 1e-3)
CANON = Tau2Spec(3, 3, 0, 0)


def canonical():
    return next(s for s in enumerate_sectors(CANON, 0) if s.mE == 2)


def typed_sectors(L=3):
    for m in range(3):
        for r in range(3):
            spec = Tau2Spec(3, L, m, r)
            for Q in range(3):
                yield from (s for s in enumerate_sectors(spec, Q) if s.mE >= 1)


@given(thetas)
def test_epsilon_table(th):
    assert np.isclose(epsilon(th, 0), 1)
    assert np.isclose(epsilon(th, 1), 2 * np.sin(th / 2))


@given(thetas, kps)
def test_epsilon_reciprocity(th, kp):
    assert np.isclose(epsilon(th, kp), abs(kp) * epsilon(th, 1 / kp))


@given(thetas, kps)
def test_angle_table_and_reflection(th, kp):
    assert np.isclose(angles(th, 0)[0], 2 * np.pi)
    assert angles(th, 0)[1] is None
    assert np.isclose(angles(th, 1)[0], (3 * np.pi + th) / 2)
    assert np.isclose(angles(th, -1)[1], np.pi + th / 2)
    vt, ph = angles(th, kp)
    assert np.isclose(ph + angles(th, 1 / kp)[0], 3 * np.pi + th)
    assert np.isclose(ph, vt if kp > 0 else vt - np.pi)


def test_sign_labels():
    for s in sign_vectors(3):
        assert parse_sign_label(sign_label(s)) == s
    assert sign_vectors(0) == [()]


@given(kps)
def test_energy_relations(kp):
    s = canonical()
    for sig in sign_vectors(2):
        E, Et = energy(s, sig, kp)
        assert np.isclose(E, 3 * sum(x * epsilon(t, kp) for x, t in zip(sig, s.theta)))
        if kp > 0:
            assert E == Et


@pytest.mark.parametrize("kp", [0.3, -0.3, 0.8, -0.8, 2.5])
def test_sector_spectrum(kp):
    for s in typed_sectors():
        vals = np.sort(np.linalg.eigvalsh(sector_H(s, kp)))
        pred = np.sort([energy(s, x, kp)[0] for x in sign_vectors(s.mE)])
        assert np.abs(vals - pred).max() <= 1e-8 * scale(sector_H(s, kp))


def test_direct_vectors_canonical():
    s = canonical()
    vecs = direct_eigvectors(s, 0.6)
    assert len(vecs) == 4
    H = build_H0(CANON) + 0.6 * build_H1(CANON)
    for sig, v in vecs.items():
        assert np.linalg.norm(H @ v - energy(s, sig, 0.6)[0] * v) <= 1e-8


def test_energy_collision_is_reported():
    s = canonical()
    # equal angles make E(+,-) and E(-,+) coincide
    with pytest.raises(VectorError):
        bad = s.__class__(**{**s.__dict__, "theta": np.array([1.0, 1.0])})
        direct_eigvectors(bad, 0.5)


def test_limit_bases_eigenstructure():
    s = canonical()
    H1, H0 = build_H1(CANON), build_H0(CANON)
    w, v = limit_basis(s, W_INF), limit_basis(s, V_ZERO)
    assert w.gram_error() <= 1e-8 and v.gram_error() <= 1e-8
    for sig in sign_vectors(2):
        assert np.linalg.norm(H1 @ w.vectors[sig] - (s.beta + 3 * sum(sig)) * w.vectors[sig]) <= 1e-6
        assert np.linalg.norm(H0 @ v.vectors[sig] - (s.alpha + 3 * sum(sig)) * v.vectors[sig]) <= 1e-6


def test_infinite_k_coefficients_are_identity():
    s = canonical()
    C = synthesis_coefficients(s, W_INF, 1e9)
    assert np.abs(np.abs(C) - np.eye(4)).max() <= 1e-6


@pytest.mark.parametrize("kp", [0.2, 0.6, -0.4, 3.0, -2.2])
def test_synthesis_matches_direct(kp):
    for s in list(typed_sectors())[::3]:
        for kind in (W_INF, V_ZERO):
            try:
                ov = compare_with_direct(s, limit_basis(s, kind), kp)
            except VectorError:
                continue
            assert ov >= 1 - 1e-6


@pytest.mark.parametrize("kp", [0.5, -0.5, -2.0])
def test_w_v_relation(kp):
    s = canonical()
    assert family_sign_check(s, limit_basis(s, W_INF), kp) <= 1e-6


def test_duality_operators():
    spec = Tau2Spec(3, 3, 1, 2)
    for Q in range(3):
        dspec = spec.with_r(Q)
        Psi = duality_map(3, 3, spec.r, Q)
        Vd = sector_basis(3, 3, spec.r, Q, "difference").isometry
        R = lambda op: Vd.conj().T @ op @ Vd
        assert np.linalg.norm(R(build_H0(spec)) - R(Psi.conj().T @ build_H1(dspec) @ Psi), 1) <= TAU_ID * 10
        assert np.linalg.norm(R(build_H1(spec)) - R(Psi.conj().T @ build_H0(dspec) @ Psi), 1) <= TAU_ID * 10
        back = duality_map(3, 3, Q, spec.r)
        S = translation(spec)
        assert np.abs(R(back @ Psi) - root_power(3, Q * spec.r) * R(S)).max() <= 1e-12


@pytest.mark.parametrize("kp", [0.2, 0.7])
def test_duality_vectors(kp):
    for s in list(typed_sectors())[::4]:
        d = dual_sector(s)
        assert (d.F.degree, d.Pa, d.Pb, d.J, d.mE) == (s.F.degree, s.Pa, s.Pb, s.J, s.mE)
        assert d.Pmu in (s.Pmu + s.dE, s.Pmu - s.dE)
        res = duality_vectors(s, kp)
        assert res["modulus_dev"] <= 1e-6 and res["sign_dev"] <= 1e-6


@pytest.mark.parametrize("kp", [0.3, 1.7])
def test_inversion_vectors_and_energies(kp):
    for s in list(typed_sectors())[::3]:
        for kind in {t[0] for t in s.types}:
            res = inversion_vectors(s, kp, kind)
            assert res["min_overlap"] >= 1 - 1e-6
            p = inversion_partner(s, kind)
            if kind == "I":
                assert p.alpha == s.alpha and p.beta == -s.beta


def test_synthesized_vectors_are_unit():
    s = canonical()
    fam = limit_basis(s, V_ZERO)
    for sig in sign_vectors(2):
        v = synthesize(s, fam, sig, 0.45)
        assert abs(np.linalg.norm(v) - 1) <= 1e-8
        assert overlap(v, v) == pytest.approx(1)
