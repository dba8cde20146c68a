import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiral_potts import xxz
from chiral_potts.algebra import TAU_GRP, TAU_ID, sector_basis, scale
from chiral_potts.onsager import W_INF, direct_eigvectors, limit_basis, overlap
from chiral_potts.sectors import enumerate_sectors, inversion_partner
from chiral_potts.tau2 import Tau2Spec, build_tau2, monodromy, spin_inversion, spin_shift

specs = st.builds(Tau2Spec, st.just(3), st.integers(1, 3), st.integers(0, 2), st.integers(0, 2))
cplx = st.complex_numbers(min_magnitude=0.2, max_magnitude=2, allow_nan=False, allow_infinity=False)
CANON = Tau2Spec(3, 3, 0, 0)


def canonical():
    return next(s for s in enumerate_sectors(CANON, 0) if s.mE == 2)


@pytest.mark.parametrize("N,m", [(3, 0), (3, 2), (5, 1)])
def test_local_representation(N, m):
    rep = xxz.xxz_rep(N, m)
    M = (N - 1) // 2
    U = rep.basis
    for k in range(N):
        e = U[:, k]
        assert np.allclose(rep.Kh @ e, xxz.qpow(N, k - M) * e)
        assert np.allclose(rep.Sz @ e, (k - M) * e)
        up = xxz.qhalf(N, -1) * xxz.qint(N, N - 1 - k) * U[:, k + 1] if k + 1 < N else 0 * e
        dn = xxz.qhalf(N, 1) * xxz.qint(N, k) * U[:, k - 1] if k > 0 else 0 * e
        assert np.allclose(rep.ep @ e, up)
        assert np.allclose(rep.em @ e, dn)


@given(specs, cplx)
def test_transfer_equivalence(spec, s):
    assert xxz.tauT_residual(spec, s) <= TAU_ID
    assert max(xxz.tTMon_residuals(spec, s).values()) <= TAU_ID
    assert max(xxz.xxz_inversion_residual(spec, s).values()) <= TAU_ID


@given(specs, cplx, cplx)
def test_abcd_exchange(spec, s, sp):
    if abs(s * s - sp * sp) < 1e-2:
        return
    assert xxz.abcd_residual(spec, s, sp) <= TAU_ID


@pytest.mark.parametrize("L,m,r", [(2, 0, 0), (3, 1, 2)])
def test_K_is_q_to_H1(L, m, r):
    assert xxz.K_vs_H1_residual(Tau2Spec(3, L, m, r)) <= TAU_ID


@given(specs, cplx)
def test_pseudo_vacua(spec, t):
    res = xxz.vacuum_checks(spec, t)
    assert res["C_plus"] <= 1e-12 * scale(build_tau2(spec, t))
    assert max(res.values()) <= 1e-12 * scale(build_tau2(spec, t))


@pytest.mark.parametrize("L,m", [(2, 0), (3, 1), (3, 2)])
def test_vacuum_charges(L, m):
    assert xxz.vacuum_charges(Tau2Spec(3, L, m)) == ((-(1 + m) * L) % 3, (-m * L) % 3)


def test_nilpotent_powers():
    spec = Tau2Spec(3, 2, 1, 0)
    assert np.allclose(xxz.nilpotent_power(spec, "B", 1, 0), np.eye(9))
    with pytest.raises(ValueError):
        xxz.nilpotent_power(spec, "B", 1, 5)
    for which in ("B", "C"):
        for sign in (1, -1):
            ref = xxz.nilpotent_power(spec, which, sign, 3)
            lim = xxz.sbq_limit(spec, which, sign)
            assert np.linalg.norm(lim - ref, 1) / scale(ref) <= 1e-5
            for n in range(1, 5):
                c, res = xxz.grading_exponent(spec, xxz.nilpotent_power(spec, which, sign, n))
                assert res <= TAU_ID
                assert c == ((-n if which == "B" else n) % 3)


def test_monodromy_grading():
    spec = Tau2Spec(3, 3, 2, 1)
    X = spin_shift(spec)
    (_, B), (C, _) = monodromy(spec, 0.4 + 0.3j)
    assert np.allclose(X @ B @ X.conj().T, B / spec.w)
    assert np.allclose(X @ C @ X.conj().T, spec.w * C)


@pytest.mark.parametrize("m,r", [(0, 0), (1, 2), (2, 1)])
def test_commuting_families(m, r):
    spec = Tau2Spec(3, 3, m, r)
    t = 0.6 - 0.45j
    top = 6
    for Q in range(3):
        V = sector_basis(3, 3, r, Q, "difference").isometry
        for fam, (c1, c2) in xxz.commuting_classes(spec, Q).items():
            for n in range(c1, top + 1, 3):
                for npr in range(c2, top + 1, 3):
                    op = xxz.family_operator(spec, fam, n, npr)
                    assert xxz.family_commutator(spec, Q, op, t) <= TAU_ID
            # off the admissible class the commutator does not vanish
            off = [(n, npr) for n in range(top + 1) for npr in range(top + 1) if (n - npr) % 3]
            nonzero = [xxz.family_operator(spec, fam, n, npr) for n, npr in off]
            nonzero = [op for op in nonzero if np.linalg.norm(op @ V) > 1e-9]
            if nonzero:
                assert max(xxz.family_commutator(spec, Q, op, t) for op in nonzero) > 1e-6


def test_bethe_state_canonical():
    s = canonical()
    st_plus = xxz.bethe_state(s, 1, "I")
    cert = xxz.bethe_certificate(s, st_plus)
    assert cert["out_of_sector"] <= TAU_GRP and cert["eigen_residual"] <= 1e-7
    # J = 0: the Bethe state is the pseudo-vacuum
    assert overlap(st_plus["vector"], xxz.pseudo_vacua(CANON)[0]) >= 1 - 1e-12
    proxy = direct_eigvectors(s, 1e6)
    assert overlap(st_plus["vector"], proxy[(1, 1)]) >= 1 - 1e-6
    assert overlap(st_plus["vector"], limit_basis(s, W_INF).vectors[(1, 1)]) >= 1 - 1e-6


@pytest.mark.parametrize("m,r", [(0, 1), (1, 1), (2, 0)])
def test_bethe_states_all_types(m, r):
    spec = Tau2Spec(3, 3, m, r)
    for Q in range(3):
        for s in enumerate_sectors(spec, Q):
            for tp in s.types:
                sign = 1 if tp[1] == "+" else -1
                state = xxz.bethe_state(s, sign, tp[0])
                cert = xxz.bethe_certificate(s, state)
                assert cert["out_of_sector"] <= TAU_GRP
                assert cert["eigen_residual"] <= 1e-7


def test_bethe_state_rejects_missing_type():
    s = next(x for x in enumerate_sectors(Tau2Spec(3, 3, 1, 1), 0) if x.types == ("i+",))
    with pytest.raises(xxz.BetheError):
        xxz.bethe_state(s, -1)
    with pytest.raises(xxz.BetheError):
        xxz.bethe_state(s, 1, "I")


@pytest.mark.parametrize("m,r", [(0, 0), (1, 2)])
def test_inversion_maps_bethe_states(m, r):
    spec = Tau2Spec(3, 3, m, r)
    J = spin_inversion(spec)
    for Q in range(3):
        for s in enumerate_sectors(spec, Q):
            if "I+" in s.types:
                p = inversion_partner(s, "I")
                a = J @ xxz.bethe_state(s, 1, "I")["vector"]
                b = xxz.bethe_state(p, -1, "I")["vector"]
                assert overlap(a, b) >= 1 - 1e-6
                assert xxz.inversion_bethe_overlap(s, "I") >= 1 - 1e-6
