"""Spin-(N-1)/2 XXZ chain equivalent to the superintegrable tau2 model:
representation, jet-valued monodromy, pseudo-vacua and algebraic Bethe states."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import Jet, duality_map, fourier_matrix, half, kron_all, root_power, scale
from .sectors import Sector
from .tau2 import Tau2Spec, build_H1, build_tau2, chain_product, monodromy, spin_shift


def qpow(N: int, k: int) -> complex:
    """q**k with q = w^M."""
    return root_power(N, ((N - 1) // 2) * k)


def qhalf(N: int, k: int) -> complex:
    """q**(k/2) with q^(1/2) = q^(M+1)."""
    return qpow(N, half(N, k))


def qint(N: int, n: int) -> complex:
    """q-number [n] = (q^n - q^-n) / (q - q^-1)."""
    return (qpow(N, n) - qpow(N, -n)) / (qpow(N, 1) - qpow(N, -1))


def qfact(N: int, n: int) -> complex:
    out = 1.0 + 0j
    for i in range(1, n + 1):
        out *= qint(N, i)
    return out


def dqint(N: int, n: int) -> complex:
    """q d/dq of the q-number [n] at q = w^M."""
    q = qpow(N, 1)
    num, den = qpow(N, n) - qpow(N, -n), q - 1 / q
    return (n * (qpow(N, n) + qpow(N, -n)) * den - num * (q + 1 / q)) / den**2


@dataclass(frozen=True)
class XXZRep:
    """Local U_q(sl2) representation, all matrices in the spin basis.

    The basis vectors e^k (k = 0..N-1) are the Fourier vectors |(k-m)^>.
    The d* fields are the q d/dq derivatives of the highest-weight form
    deformed off the root of unity.
    """

    N: int
    m: int
    basis: np.ndarray  # columns e^k
    Kh: np.ndarray  # K^(1/2)
    Khi: np.ndarray  # K^(-1/2)
    ep: np.ndarray  # e^+
    em: np.ndarray  # e^-
    Sz: np.ndarray
    dKh: np.ndarray
    dKhi: np.ndarray
    dep: np.ndarray
    dem: np.ndarray


@lru_cache(maxsize=None)
def xxz_rep(N: int, m: int) -> XXZRep:
    F = fourier_matrix(N)
    U = F[:, [(k - m) % N for k in range(N)]]
    M = (N - 1) // 2
    Kh = np.diag([qpow(N, k - M) for k in range(N)])
    dKh = np.diag([(k - M) * qpow(N, k - M) for k in range(N)])
    dKhi = np.diag([-(k - M) * qpow(N, M - k) for k in range(N)])
    ep, em, dep, dem = (np.zeros((N, N), dtype=complex) for _ in range(4))
    for k in range(N):
        if k + 1 < N:
            n = N - 1 - k
            ep[k + 1, k] = qhalf(N, -1) * qint(N, n)
            dep[k + 1, k] = qhalf(N, -1) * (dqint(N, n) - 0.5 * qint(N, n))
        if k - 1 >= 0:
            em[k - 1, k] = qhalf(N, 1) * qint(N, k)
            dem[k - 1, k] = qhalf(N, 1) * (dqint(N, k) + 0.5 * qint(N, k))
    Sz = np.diag([k - M for k in range(N)]).astype(complex)
    to_spin = lambda A: U @ A @ U.conj().T
    return XXZRep(N, m, U, to_spin(Kh), to_spin(np.linalg.inv(Kh)), to_spin(ep), to_spin(em), to_spin(Sz),
                  to_spin(dKh), to_spin(dKhi), to_spin(dep), to_spin(dem))


def K_half(spec: Tau2Spec, power: int = 1) -> np.ndarray:
    """prod_l K_l^(power/2)."""
    rep = xxz_rep(spec.N, spec.m)
    loc = rep.Kh if power >= 0 else rep.Khi
    loc = np.linalg.matrix_power(loc, abs(power))
    return kron_all([loc] * spec.L)


def local_xxz(spec: Tau2Spec, s, deform_rep: bool = True) -> list:
    """XXZ L-operator with its q-dependence carried as jets.

    s may be a complex number or a Jet.  The coefficients q^(+-(1+2m)) are the
    q-independent twist rho^(-+1); q - 1/q is differentiated, and so are
    K^(1/2), e^+- unless deform_rep is False (then they are q-constants).
    """
    N, m = spec.N, spec.m
    rep = xxz_rep(N, m)
    q = qpow(N, 1)
    c1 = qpow(N, 1 + 2 * m)
    c2 = Jet(q - 1 / q, 0j, q + 1 / q)
    c3 = qpow(N, -1 - 2 * m)
    s = Jet.lift(s)
    si = 1 / s
    if deform_rep:
        Kh, Khi = Jet(rep.Kh, 0j, rep.dKh), Jet(rep.Khi, 0j, rep.dKhi)
        ep, em = Jet(rep.ep, 0j, rep.dep), Jet(rep.em, 0j, rep.dem)
    else:
        Kh, Khi, ep, em = (Jet.const(a) for a in (rep.Kh, rep.Khi, rep.ep, rep.em))
    return [
        [c1 * s * Khi - si * Kh, c2 * em],
        [c2 * ep, s * Kh - c3 * si * Khi],
    ]


def xxz_monodromy(spec: Tau2Spec, s, deform_rep: bool = True) -> list:
    """[[A, B], [C, D]] as Jets (value, s d/ds part, q d/dq part)."""
    loc = local_xxz(spec, s, deform_rep)
    return chain_product([loc] * spec.L)


def xxz_monodromy_values(spec: Tau2Spec, s: complex) -> list:
    mono = xxz_monodromy(spec, complex(s))
    return [[mono[i][j].value for j in range(2)] for i in range(2)]


def xxz_transfer(spec: Tau2Spec, s: complex) -> np.ndarray:
    (A, _), (_, D) = xxz_monodromy_values(spec, s)
    return A + qpow(spec.N, -2 * spec.r) * D


def tauT_residual(spec: Tau2Spec, s: complex) -> float:
    """tau2(s^2) against (-s/q)^L K^(-1/2) T(s/q)."""
    N, L = spec.N, spec.L
    q = qpow(N, 1)
    lhs = build_tau2(spec, s * s)
    rhs = (-s / q) ** L * K_half(spec, -1) @ xxz_transfer(spec, s / q)
    return float(np.linalg.norm(lhs - rhs, 1) / scale(lhs))


def tTMon_residuals(spec: Tau2Spec, s: complex) -> dict:
    """Entry-wise relation between the tau2 monodromy at t = s^2 and the XXZ one at s."""
    N, L = spec.N, spec.L
    q = qpow(N, 1)
    (A, B), (C, D) = monodromy(spec, s * s)
    (xA, xB), (xC, xD) = xxz_monodromy_values(spec, s)
    Ki = K_half(spec, -1)
    pairs = {
        "A": (A, (-s) ** L * Ki @ xA),
        "B": (B, (-s) ** (L - 1) / q * Ki @ xB),
        "C": (C, (-s) ** (L + 1) * q * Ki @ xC),
        "D": (D, (-s) ** L * Ki @ xD),
    }
    return {k: float(np.linalg.norm(a - b, 1) / scale(a)) for k, (a, b) in pairs.items()}


def K_vs_H1_residual(spec: Tau2Spec) -> float:
    """K = q^H1 on the whole chain."""
    K = K_half(spec, 2)
    vals, vecs = np.linalg.eigh(build_H1(spec))
    ints = np.rint(vals.real).astype(int)
    qH = vecs @ np.diag([qpow(spec.N, int(v)) for v in ints]) @ vecs.conj().T
    return float(max(np.abs(vals - ints).max(), np.linalg.norm(K - qH, 1)))


def xxz_inversion_residual(spec: Tau2Spec, s: complex) -> dict:
    """j A(s) j = A(s'), j B(s) j = q C(s'), j C(s) j = B(s')/q, s' = -q^(-1-2m)/s."""
    from .tau2 import spin_inversion

    N, m = spec.N, spec.m
    q = qpow(N, 1)
    J = spin_inversion(spec)
    sp = -qpow(N, -1 - 2 * m) / s
    (A, B), (C, D) = xxz_monodromy_values(spec, s)
    (A2, B2), (C2, D2) = xxz_monodromy_values(spec, sp)
    conj = lambda X: J @ X @ J.conj().T
    pairs = {"A": (conj(A), A2), "B": (conj(B), q * C2), "C": (conj(C), B2 / q), "D": (conj(D), D2)}
    return {k: float(np.linalg.norm(a - b, 1) / scale(a)) for k, (a, b) in pairs.items()}


def abcd_residual(spec: Tau2Spec, s: complex, sp: complex) -> float:
    """A(s)B(s') = f B(s')A(s) - g B(s)A(s')."""
    N = spec.N
    q = qpow(N, 1)
    f = (s * s * q * q - sp * sp) / (q * (s * s - sp * sp))
    g = s * sp * (q * q - 1) / (q * (s * s - sp * sp))
    (A, B), _ = xxz_monodromy_values(spec, s)
    (A2, B2), _ = xxz_monodromy_values(spec, sp)
    lhs = A @ B2
    rhs = f * B2 @ A - g * B @ A2
    return float(np.linalg.norm(lhs - rhs, 1) / scale(lhs, B2 @ A))


# ------------------------------------------------------------- Bethe states


def pseudo_vacua(spec: Tau2Spec):
    """(Omega+, Omega-) = products of e^(N-1) resp. e^0."""
    rep = xxz_rep(spec.N, spec.m)
    top = rep.basis[:, spec.N - 1]
    bot = rep.basis[:, 0]
    return kron_all([top[:, None]] * spec.L)[:, 0], kron_all([bot[:, None]] * spec.L)[:, 0]


def vacuum_checks(spec: Tau2Spec, t: complex) -> dict:
    """Annihilation and A/D eigenvalue residuals of the pseudo-vacua at t."""
    L, m = spec.L, spec.m
    om_p, om_m = pseudo_vacua(spec)
    (A, B), (C, D) = monodromy(spec, t)
    wp = spec.wp
    return {
        "C_plus": float(np.linalg.norm(C @ om_p)),
        "B_minus": float(np.linalg.norm(B @ om_m)),
        "A_plus": float(np.linalg.norm(A @ om_p - (1 - wp(-m - 1) * t) ** L * om_p)),
        "D_plus": float(np.linalg.norm(D @ om_p - (wp(m) - t) ** L * om_p)),
        "A_minus": float(np.linalg.norm(A @ om_m - (1 - wp(-m) * t) ** L * om_m)),
        "D_minus": float(np.linalg.norm(D @ om_m - (wp(1 + m) - t) ** L * om_m)),
    }


def vacuum_charges(spec: Tau2Spec) -> tuple:
    """Exponents c with (prod X) Omega = w^c Omega for (Omega+, Omega-)."""
    X = spin_shift(spec)
    out = []
    for v in pseudo_vacua(spec):
        lam = np.vdot(v, X @ v)
        out.append(int(np.rint(np.angle(lam) * spec.N / (2 * np.pi))) % spec.N)
    return tuple(out)


class BetheError(RuntimeError):
    pass


def _abs_bethe(spec: Tau2Spec, F_roots_v, sign: int, vac: np.ndarray) -> np.ndarray:
    vec = vac.astype(complex)
    for v in F_roots_v:
        t = -1 / (spec.w * v)
        (A, B), (C, D) = monodromy(spec, t)
        vec = (B if sign > 0 else C) @ vec
    return vec


def bethe_state(sector: Sector, sign: int | None = None, kind: str | None = None) -> dict:
    """Algebraic Bethe state of a typed sector.

    I-types use psi+- = prod B or C (-1/(w v_j)) Omega+-; i-types build the
    same state for the dual chain (boundary Q) and pull it back through Psi.
    kind forces the I or i construction when a sector carries both.
    Returns {"vector", "kind" ("I" or "i"), "sign"}.
    """
    spec = sector.spec
    types = sector.types
    if sign is None:
        sign = 1 if any(t.endswith("+") for t in types) else -1
    suffix = "+" if sign > 0 else "-"
    if "I" + suffix in types and kind in (None, "I"):
        vac = pseudo_vacua(spec)[0 if sign > 0 else 1]
        vec = _abs_bethe(spec, sector.bethe_v, sign, vac)
        kind = "I"
    elif "i" + suffix in types and kind in (None, "i"):
        dspec = spec.with_r(sector.Q)
        vac = pseudo_vacua(dspec)[0 if sign > 0 else 1]
        dual_vec = _abs_bethe(dspec, sector.bethe_v, sign, vac)
        Psi = duality_map(spec.N, spec.L, spec.r, sector.Q)
        vec = Psi.conj().T @ dual_vec
        kind = "i"
    else:
        raise BetheError(f"sector of types {types} has no {suffix} Bethe state")
    nrm = np.linalg.norm(vec)
    if nrm < 1e-10:
        raise BetheError("Bethe state has zero norm")
    return {"vector": vec, "kind": kind, "sign": sign}


def bethe_certificate(sector: Sector, state: dict) -> dict:
    """Sector membership and the H1 (I) or H0 (i) eigen-relation of a Bethe state."""
    from .tau2 import build_H0

    spec = sector.spec
    v = state["vector"] / np.linalg.norm(state["vector"])
    V = sector.frame_full
    out_of_sector = float(np.linalg.norm(v - V @ (V.conj().T @ v)))
    if state["kind"] == "I":
        op, lin = build_H1(spec), sector.beta
    else:
        op, lin = build_H0(spec), sector.alpha
    target = state["sign"] * spec.N * sector.mE
    eig = float(np.linalg.norm(op @ v - (lin + target) * v) / scale(op))
    return {"out_of_sector": out_of_sector, "eigen_residual": eig}


# ------------------------------------------------------ nilpotent N-th powers


def nilpotent_power(spec: Tau2Spec, which: str, sign: int, n: int) -> np.ndarray:
    """Normalized n-th power B_+-^(n) (which="B") or C_+-^(n) (which="C").

    Explicit sum over site occupations k_i < N with sum n; the q-factorials
    never vanish because every k_i stays below N.
    """
    N, L, m = spec.N, spec.L, spec.m
    if not 0 <= n <= (N - 1) * L:
        raise ValueError(f"power {n} outside 0..{(N - 1) * L}")
    if which not in ("B", "C") or sign not in (1, -1):
        raise ValueError("which must be 'B' or 'C' and sign +-1")
    rep = xxz_rep(N, m)
    rho = qpow(N, -2 * m - 1)
    raise_op = rep.em if which == "B" else rep.ep
    kpow = sign if which == "B" else -sign
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for k in itertools.product(range(N), repeat=L):
        if sum(k) != n:
            continue
        coef = 1.0 + 0j
        ops = []
        for i in range(L):
            before, after = sum(k[:i]), sum(k[i + 1:])
            x = kpow * (before - after)
            Kx = np.linalg.matrix_power(rep.Kh if x >= 0 else rep.Khi, abs(x))
            ops.append(Kx @ np.linalg.matrix_power(raise_op, k[i]))
            coef /= qfact(N, k[i])
            if which == "B":
                coef *= rho ** (-after) if sign > 0 else rho ** before
            else:
                coef *= rho ** (-before) if sign > 0 else rho ** after
        out += coef * kron_all(ops)
    return out


def entry_limit(spec: Tau2Spec, which: str, sign: int, s_abs: float = 1e4) -> np.ndarray:
    """Leading (sign=+1, s -> inf) or lowest (sign=-1, s -> 0) term of B(s) or C(s)."""
    N, L = spec.N, spec.L
    q = qpow(N, 1)
    s = s_abs if sign > 0 else 1 / s_abs
    (_, B), (C, _) = xxz_monodromy_values(spec, s)
    X = B if which == "B" else C
    return (sign * s) ** (-sign * (L - 1)) * X / (q - 1 / q)


def averaged_jets(spec: Tau2Spec, s: complex, which: str, phis=None, deform_rep: bool = True) -> Jet:
    """Product over i of the entry at s q^i as one jet.

    The q-part is <X>_q, the q-derivative taken at fixed arguments s q^i;
    the s-part is <X>_s, or the phi-weighted sum when phis (one weight per
    factor) is given.
    """
    N = spec.N
    prod = None
    for i in range(N):
        x = s * qpow(N, i)
        mono = xxz_monodromy(spec, Jet(complex(x), complex(x), 0j), deform_rep)
        e = mono[0][1] if which == "B" else mono[1][0]
        w = 1.0 if phis is None else phis[i]
        jet = Jet(e.value, w * e.ds, e.dq)
        prod = jet if prod is None else prod @ jet
    return prod


def sbq_limit(spec: Tau2Spec, which: str, sign: int, s_abs: float = 1e3, deform_rep: bool = True) -> np.ndarray:
    """(2N^2)^-1 (+-s)^(-+N(L-1)) <X>_q at large or small |s|."""
    N, L = spec.N, spec.L
    s = s_abs if sign > 0 else 1 / s_abs
    avg = averaged_jets(spec, s, which, deform_rep=deform_rep)
    return (sign * s) ** (-sign * N * (L - 1)) * avg.dq / (2 * N * N)


def commuting_classes(spec: Tau2Spec, Q: int) -> dict:
    """Residue class mod N of the powers (n, n') in each commuting family."""
    N, L, m, r = spec.N, spec.L, spec.m, spec.r
    plus = (Q - r) % N
    minus = ((1 + 2 * m) * L + Q + r) % N
    return {"CB+": (plus, plus), "BC+": (-plus % N, -plus % N), "CB-": (minus, minus), "BC-": (-minus % N, -minus % N)}


def family_operator(spec: Tau2Spec, family: str, n: int, nprime: int) -> np.ndarray:
    """C^(n') B^(n) (family "CB+-") or B^(n') C^(n) (family "BC+-")."""
    sign = 1 if family.endswith("+") else -1
    if family.startswith("CB"):
        return nilpotent_power(spec, "C", sign, nprime) @ nilpotent_power(spec, "B", sign, n)
    return nilpotent_power(spec, "B", sign, nprime) @ nilpotent_power(spec, "C", sign, n)


def family_commutator(spec: Tau2Spec, Q: int, op: np.ndarray, t: complex) -> float:
    """Relative norm of [tau2(t), op] on the charge-Q space."""
    from .algebra import sector_basis

    V = sector_basis(spec.N, spec.L, spec.r, Q, "difference").isometry
    T = build_tau2(spec, t)
    comm = (T @ op - op @ T) @ V
    return float(np.linalg.norm(comm, 1) / scale(T @ op @ V, op @ T @ V))


def grading_exponent(spec: Tau2Spec, op: np.ndarray) -> tuple:
    """(c, residual) with (prod X) op (prod X)^-1 = w^c op."""
    X = spin_shift(spec)
    conj = X @ op @ X.conj().T
    best = None
    for c in range(spec.N):
        res = float(np.linalg.norm(conj - spec.wp(c) * op, 1) / scale(op))
        if best is None or res < best[1]:
            best = (c, res)
    return best


# ------------------------------------------------------ Fabricius-McCoy current


class CurrentError(RuntimeError):
    pass


def _route(sector: Sector, sign: int | None):
    """(sign, kind, working sector, Psi or None) for the current of a typed sector."""
    from .onsager import dual_sector

    if sign is None:
        sign = 1 if any(t.endswith("+") for t in sector.types) else -1
    suffix = "+" if sign > 0 else "-"
    if "I" + suffix in sector.types:
        return sign, "I", sector, None
    if "i" + suffix in sector.types:
        spec = sector.spec
        dual = dual_sector(sector)
        return sign, "i", dual, duality_map(spec.N, spec.L, spec.r, sector.Q)
    raise CurrentError(f"sector of types {sector.types} has no {suffix} current")


def p_weight(sector: Sector, t):
    """p(t) = (1 - t^N)^L t^-(Pa+Pb) / ((1 - w^-m t)^L F(t) F(w t))."""
    spec = sector.spec
    N, L, m = spec.N, spec.L, spec.m
    t = np.asarray(t, dtype=complex)
    return (1 - t**N) ** L * t ** (-(sector.Pa + sector.Pb)) / (
        (1 - root_power(N, -m) * t) ** L * sector.F(t) * sector.F(spec.w * t))


def phi_function(sector: Sector, t):
    """phi as a function of t = s^2: sum_k k p(w^(k-1) t) / sum_k p(w^k t)."""
    N = sector.N
    num = sum(k * p_weight(sector, root_power(N, k - 1) * t) for k in range(1, N + 1))
    den = sum(p_weight(sector, root_power(N, k) * t) for k in range(N))
    return num / den


def phi_pole_distance(sector: Sector, s: complex) -> float:
    """Distance of t^N (t = s^2) from the F-root strings, P_ev zeros and t^N = 1."""
    N = sector.N
    xi = (s * s) ** N
    bad = [1.0]
    if sector.F.degree > 0:
        bad += list(sector.F.roots() ** N)
    if sector.Pev.degree > 0:
        bad += list(sector.Pev.roots())
    return float(min(abs(xi - b) for b in bad))


def phi_sample(sector: Sector, rng, radius: float = 0.7, margin: float = 1e-4, tries: int = 100) -> complex:
    """Random s whose t^N stays at least `margin` away from every phi pole."""
    for _ in range(tries):
        s = complex(*rng.normal(size=2)) * radius
        if phi_pole_distance(sector, s) > margin:
            return s
    raise CurrentError("could not sample s away from the phi poles")


def vart_residual(sector: Sector, s: complex) -> float:
    """Relative residual of the shifted phi-difference relation at s."""
    spec = sector.spec
    N, L, m = spec.N, spec.L, spec.m
    t = s * s
    ph = lambda k: phi_function(sector, root_power(N, k) * t)  # phi(q^-k s)
    p0, p1, p2 = ph(0), ph(1), ph(2)
    fl = (1 - root_power(N, -m) * t) ** L * sector.F(t)
    fr = (1 - root_power(N, 1 - m) * t) ** L * sector.F(root_power(N, 2) * t) * root_power(N, sector.Pa + sector.Pb)
    lhs, rhs = (p0 - p1 - 1) * fl, (p1 - p2 - 1) * fr
    # normalize by the terms before the phi differences cancel
    ref = (abs(p0) + abs(p1) + 1) * abs(fl) + (abs(p1) + abs(p2) + 1) * abs(fr)
    return float(abs(lhs - rhs) / max(ref, 1e-300))


def varpc_residual(sector: Sector, s: complex, sign: int = 1) -> float:
    """Relative residual of the phi constraint in the XXZ variables.

    sign=+1 is the B-current form, sign=-1 the C-current form; i-type
    sectors are checked on the dual chain where their current is built.
    """
    sign, _, sector, _ = _route(sector, sign)
    spec = sector.spec
    N, m, r, L = spec.N, spec.m, spec.r, spec.L
    q = qpow(N, 1)
    s2 = -1 / (spec.w * sector.bethe_v)
    f_s = lambda x: np.prod([(x * x * q * q - y2) / (q * (x * x - y2)) for y2 in s2]) if len(s2) else 1.0
    f_i = lambda x: np.prod([(y2 * q * q - x * x) / (q * (y2 - x * x)) for y2 in s2]) if len(s2) else 1.0
    # a, d with the common factor q^(-1/2) removed (it cancels between the terms)
    a = lambda x: x * qpow(N, 2 * m + 2) - 1 / x
    d = lambda x: x - qpow(N, -2 * m) / x
    ph = lambda x: phi_function(sector, x * x)
    pu, p0, pd = ph(s * q), ph(s), ph(s / q)
    if sign > 0:
        c1, c2 = a(s) ** L * f_s(s), qpow(N, -2 * r) * d(s) ** L * f_i(s)
        t1, t2 = (pu - p0 - 1) * c1, (pd - p0 + 1) * c2
        ref = (abs(pu) + abs(p0) + 1) * abs(c1) + (abs(pd) + abs(p0) + 1) * abs(c2)
    else:
        c1, c2 = a(s / q) ** L * f_i(s), qpow(N, -2 * r) * d(s * q) ** L * f_s(s)
        t1, t2 = (pd - p0 + 1) * c1, (pu - p0 - 1) * c2
        ref = (abs(pd) + abs(p0) + 1) * abs(c1) + (abs(pu) + abs(p0) + 1) * abs(c2)
    return float(abs(t1 + t2) / max(ref, 1e-300))


def current_at(spec: Tau2Spec, sector: Sector, s: complex, which: str) -> np.ndarray:
    """<X>_q + sum_n phi(s q^n) X_s(s q^n) prod_(i != n) X(s q^i) in the given spec."""
    N = spec.N
    phis = [phi_function(sector, (s * qpow(N, i)) ** 2) for i in range(N)]
    jet = averaged_jets(spec, s, which, phis)
    return jet.dq + jet.ds


def fm_current(sector: Sector, s: complex, sign: int | None = None) -> np.ndarray:
    """Fabricius-McCoy current of a typed sector at s, on the sector's own space.

    B-current for + types, C-current for - types; i-types are built on the
    dual chain and conjugated back through Psi.
    """
    sign, kind, work, Psi = _route(sector, sign)
    op = current_at(work.spec, work, s, "B" if sign > 0 else "C")
    if Psi is not None:
        op = Psi.conj().T @ op @ Psi
    return op


def avg_s_residual(spec: Tau2Spec, s: complex, which: str = "B") -> float:
    """<X>_s relative to the size of a single-factor term."""
    jet = averaged_jets(spec, s, which)
    ref = averaged_jets(spec, s, which, [1.0] + [0.0] * (spec.N - 1)).ds
    return float(np.linalg.norm(jet.ds, 1) / scale(ref))


def fm_commutation_residual(sector: Sector, s_list, sprime: complex, sign: int | None = None) -> float:
    """|| [T(s'), prod current(x_i)] psi || relative, on the working chain."""
    sign, kind, work, _ = _route(sector, sign)
    spec = work.spec
    which = "B" if sign > 0 else "C"
    psi = bethe_state(work, sign, "I")["vector"]
    psi = psi / np.linalg.norm(psi)
    T = xxz_transfer(spec, sprime)
    ops = [current_at(spec, work, x, which) for x in s_list]
    v = psi
    for op in ops:
        v = op @ v
    lhs = T @ v
    w = T @ psi
    for op in ops:
        w = op @ w
    big = np.linalg.norm(T, 1) * np.prod([np.linalg.norm(o, 1) for o in ops])
    return float(np.linalg.norm(lhs - w) / max(1.0, big))


def fm_inversion_residual(sector: Sector, s: complex) -> float:
    """C-current of an I- sector against j B'(-q^(-1-2m)/s) j of its I+ partner."""
    from .sectors import inversion_partner
    from .tau2 import spin_inversion

    spec = sector.spec
    if "I-" not in sector.types:
        raise CurrentError("inversion consistency needs an I- sector")
    partner = inversion_partner(sector, "I")
    if "I+" not in partner.types:
        raise CurrentError("inversion partner is not of type I+")
    C = current_at(spec, sector, s, "C")
    sp = -qpow(spec.N, -1 - 2 * spec.m) / s
    J = spin_inversion(spec)
    B = current_at(partner.spec, partner, sp, "B")
    rhs = J @ B @ J.conj().T
    return float(np.linalg.norm(C - rhs, 1) / scale(C, rhs))


# ------------------------------------------------ regular current and loop modes


class RegularizationError(RuntimeError):
    pass


def _node_radius(work: Sector) -> float:
    """Circle radius in xi = t^N kept away from the singular points of the sampled current."""
    bad = [1.0]
    bad += [1 / abs(a) for a in work.a]
    if work.F.degree > 0:
        bad += list(np.abs(work.F.roots()) ** work.N)
    logs = np.log(np.abs(np.asarray(bad, dtype=float)))
    cands = np.geomspace(0.25, 4.0, 81)
    gap = [np.min(np.abs(np.log(R) - logs)) for R in cands]
    return float(cands[int(np.argmax(gap))])


def _polydiv_ops(C: np.ndarray, g: np.ndarray):
    """Long division of an operator polynomial (coefficient axis 0) by a scalar polynomial."""
    g = np.asarray(g, dtype=complex)
    deg_g = len(g) - 1
    rem = C.astype(complex).copy()
    nq = C.shape[0] - deg_g
    if nq <= 0:
        return np.zeros((1,) + C.shape[1:], dtype=complex), rem
    quot = np.zeros((nq,) + C.shape[1:], dtype=complex)
    for k in range(nq - 1, -1, -1):
        quot[k] = rem[k + deg_g] / g[-1]
        rem[k: k + deg_g + 1] -= np.multiply.outer(g, quot[k])
    return quot, rem[:deg_g]


def _opnorm(x) -> float:
    return float(np.linalg.norm(x, 2)) if np.ndim(x) == 2 else float(np.linalg.norm(x))


@dataclass
class RegularCurrent:
    """Sampled current as a polynomial in xi on the working frame, with its mode data.

    sign=+1 is the B-current (lowering modes e-(n)), sign=-1 the C-current
    (raising modes e+(n)).  All operators are in frame coordinates of the
    working sector (the sector itself for I types, its dual for i types).
    """

    sector: Sector
    work: Sector
    kind: str
    sign: int
    Psi: np.ndarray | None
    radius: float
    coeffs: np.ndarray  # O_k, k = 0..L+mE-1, frame coordinates
    first: np.ndarray  # e-(0) or e+(1)
    second: np.ndarray  # e-(-1) or e+(0)
    gamma: np.ndarray  # coefficients of gamma(xi)
    Q: np.ndarray  # operator polynomial O / gamma
    psi: np.ndarray  # Bethe state, frame coordinates
    diagnostics: dict

    @property
    def first_index(self) -> int:
        return 0 if self.sign > 0 else 1

    def to_json(self) -> dict:
        d = dict(self.diagnostics)
        d.update(sign=self.sign, kind=self.kind, radius=self.radius,
                 gamma=[[float(z.real), float(z.imag)] for z in self.gamma])
        return d


def sample_current(sector: Sector, sign: int | None = None, nodes: int | None = None):
    """O(xi) = Pev(xi) (-s)^(N(L-1)) current(s) at circle nodes, xi = s^(2N).

    Returns (sign, kind, work, Psi, xi nodes, samples on the full working space, frame).
    """
    sign, kind, work, Psi = _route(sector, sign)
    spec = work.spec
    N, L = spec.N, spec.L
    which = "B" if sign > 0 else "C"
    n = nodes if nodes is not None else L + work.mE + 2
    R = _node_radius(work)
    xis = R * np.exp(1j * (0.37 + 2 * np.pi * np.arange(n) / n))
    samples = []
    for xi in xis:
        s = np.sqrt(xi ** (1.0 / N))
        op = current_at(spec, work, s, which)
        samples.append(work.Pev(xi) * (-s) ** (N * (L - 1)) * op)
    return sign, kind, work, Psi, xis, np.array(samples), work.frame_full


def _common_factor(inside: np.ndarray, L: int, mE: int):
    """Scalar polynomial of degree L dividing every entry of a degree-(L+mE-1) operator polynomial.

    The entries span gamma * (polynomials of degree < mE); gamma is the
    combination of that span whose top mE-1 coefficients vanish.  Returns
    (gamma with gamma[0] = 1, relative size of the first discarded singular value).
    """
    rows = inside.reshape(inside.shape[0], -1).T
    _, sv, vh = np.linalg.svd(rows, full_matrices=False)
    span = vh[:mE]
    gap = float(sv[mE] / sv[0]) if len(sv) > mE else 0.0
    if mE > 1:
        _, _, nh = np.linalg.svd(span[:, L + 1:].T)
        y = nh[-1].conj()
        g = y @ span
    else:
        g = span[0]
    g = g[: L + 1]
    return g / g[0], gap


def regularize_current(sector: Sector, sign: int | None = None, remainder_tol: float = 1e-7) -> RegularCurrent:
    """Polynomial fit of the regularized current on the frame, first modes, gamma and Q = O / gamma.

    The fit is taken on O(xi) V (V the frame): the full operator keeps the
    poles of phi at the Bethe-root strings, its action on the eigenspace
    does not.
    """
    sign, kind, work, Psi, xis, samples, V = sample_current(sector, sign)
    N, L, mE = work.N, work.L, work.mE
    if mE < 1:
        raise RegularizationError("sector has no degeneracy (m_E = 0)")
    deg = L + mE - 1
    n = len(xis)
    R = abs(xis[0])
    phase0 = np.angle(xis[0])
    on_frame = np.array([o @ V for o in samples])
    # DFT on the circle: c_j R^j e^(i j phase0) = mean_k O_k e^(-2 pi i j k / n)
    raw = np.fft.fft(on_frame, axis=0) / n
    j = np.arange(n)
    full = raw / (R**j * np.exp(1j * j * phase0))[:, None, None]
    sc = max(_opnorm(x) for x in on_frame)
    remainder = max(_opnorm(raw[k]) for k in range(deg + 1, n)) / sc
    proj = np.eye(V.shape[0]) - V @ V.conj().T
    leak = max(_opnorm(proj @ c) for c in full[: deg + 1]) / max(_opnorm(c) for c in full[: deg + 1])
    if remainder > remainder_tol:
        raise RegularizationError(f"current is not a polynomial of degree {deg} in xi (remainder {remainder:.2e})")
    inside = np.array([V.conj().T @ c for c in full[: deg + 1]])

    two_n2 = 2 * N * N
    prod_a = float(np.prod(work.a))
    first = inside[0] / two_n2
    second = (-1) ** deg * inside[deg] / (two_n2 * prod_a)

    # endpoint values of the matrix-element quotient g(xi) / (|psi|^2 sum_i w_i^2 prod_(j != i)(1 - a_j xi))
    psi = V.conj().T @ bethe_state(work, sign, "I")["vector"]
    psi_a = first @ psi
    g = np.array([np.vdot(psi_a, c @ psi) for c in inside])
    w = np.ones(mE) if sign > 0 else np.asarray(work.a, dtype=float)
    den = np.zeros(mE, dtype=complex)
    for i in range(mE):
        others = [work.a[k] for k in range(mE) if k != i]
        den += w[i] ** 2 * np.polynomial.polynomial.polyfromroots([1 / a for a in others]) * np.prod([-a for a in others])
    den *= np.vdot(psi, psi)
    quot, qrem = np.polynomial.polynomial.polydiv(g, den)
    quotient_rem = float(np.max(np.abs(qrem)) / np.max(np.abs(g))) if mE > 1 else 0.0
    g0 = complex(g[0] / den[0])
    gL = complex((-1) ** L * g[deg] / den[mE - 1])

    # gamma itself: the common scalar factor of all frame entries, scaled to the measured gamma_0
    shape, rank_gap = _common_factor(inside, L, mE)
    gamma = g0 * shape
    Qc, Qrem = _polydiv_ops(inside, gamma)
    q_rem = max((_opnorm(x) for x in Qrem), default=0.0) / max(_opnorm(c) for c in inside)
    diag = {
        "degree": deg,
        "nodes": n,
        "polynomial_remainder": float(remainder),
        "frame_leak": float(leak),
        "gamma_0": [g0.real, g0.imag],
        "gamma_L": [gL.real, gL.imag],
        "gamma_0_dev": float(abs(g0 - two_n2) / two_n2),
        "gamma_L_dev": float(abs(gL - two_n2) / two_n2),
        "gamma_end_ratio_dev": float(abs((-1) ** L * shape[L] - 1)),
        "matrix_element_quotient_remainder": quotient_rem,
        "common_factor_rank_gap": rank_gap,
        "Q_remainder": float(q_rem),
        "Q_degree": int(Qc.shape[0] - 1),
    }
    return RegularCurrent(sector, work, kind, sign, Psi, R, inside, first, second, gamma, Qc, psi, diag)


@dataclass
class LoopModeSet:
    """Loop modes e(n) and product operators e_i of one current, in working-frame coordinates."""

    sector: Sector
    current: RegularCurrent
    modes: dict  # n -> e(n)
    e_raw: list  # residues of Q / Pev, e(n) = sum_i e_raw[i] a_i^n
    e: list  # rescaled so that |e_i psi| = |psi|
    diagnostics: dict

    @property
    def sign(self) -> int:
        return self.current.sign

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.current.work.a, dtype=float)

    def to_json(self) -> dict:
        d = dict(self.diagnostics)
        d["modes"] = sorted(int(n) for n in self.modes)
        d["current"] = self.current.to_json()
        return d


def _series_quotient(Q: np.ndarray, P: np.ndarray, order: int) -> list:
    """Taylor coefficients of Q(xi) / P(xi) with P(0) = 1, operator-valued Q."""
    out = []
    for k in range(order):
        acc = Q[k].copy() if k < len(Q) else np.zeros_like(Q[0])
        for l in range(1, min(k, len(P) - 1) + 1):
            acc = acc - P[l] * out[k - l]
        out.append(acc)
    return out


def product_operators(sector: Sector, sign: int | None = None, current: RegularCurrent | None = None) -> LoopModeSet:
    """e_i = Q(1/a_i) / prod_(j != i)(1 - a_j / a_i) (extra 1/a_i for the raising current)."""
    rc = current if current is not None else regularize_current(sector, sign)
    a = np.asarray(rc.work.a, dtype=float)
    mE = len(a)
    if mE > 1 and min(abs(a[i] - a[j]) / abs(a[i]) for i in range(mE) for j in range(mE) if i != j) < 1e-8:
        raise RegularizationError("coincident evaluation points a_i")
    Qpoly = lambda x: sum(c * x**k for k, c in enumerate(rc.Q))
    e_raw = []
    for i in range(mE):
        den = np.prod([1 - a[j] / a[i] for j in range(mE) if j != i])
        ei = Qpoly(1 / a[i]) / den
        e_raw.append(ei / a[i] if rc.sign < 0 else ei)

    n1 = rc.first_index
    series = _series_quotient(rc.Q, np.asarray(rc.work.Pev.coeffs), mE + 2)
    modes = {n1 + k: op for k, op in enumerate(series)}
    top = rc.Q[-1] if len(rc.Q) == mE else np.zeros_like(rc.Q[0])
    modes[n1 - 1] = (-1) ** (mE - 1) * top / np.prod(a)

    rel = lambda x, y: _opnorm(x - y) / max(_opnorm(y), 1e-300)
    loop_res = max(rel(sum(e_raw[i] * a[i] ** n for i in range(mE)), op) for n, op in modes.items())
    window_res = 0.0
    stack = np.array([modes[n] for n in sorted(modes)])
    ns = sorted(modes)
    for start in range(len(ns) - mE + 1):
        idx = ns[start: start + mE]
        A = np.array([[a[i] ** n for i in range(mE)] for n in idx])
        sol = np.linalg.solve(A, stack[start: start + mE].reshape(mE, -1)).reshape((mE,) + stack.shape[1:])
        window_res = max(window_res, max(rel(sol[i], e_raw[i]) for i in range(mE)))

    psi = rc.psi
    pn = np.linalg.norm(psi)
    e = []
    for ei in e_raw:
        nrm = np.linalg.norm(ei @ psi)
        if nrm < 1e-10 * pn * max(_opnorm(ei), 1.0):
            raise RegularizationError("product operator annihilates the Bethe state")
        e.append(ei * (pn / nrm))
    nil = max(_opnorm(x @ x) / _opnorm(x) ** 2 for x in e)
    comm = max((_opnorm(e[i] @ e[j] - e[j] @ e[i]) / (_opnorm(e[i]) * _opnorm(e[j]))
                for i in range(mE) for j in range(i + 1, mE)), default=0.0)
    diag = {
        "loop_law": float(loop_res),
        "window_consistency": float(window_res),
        "nilpotency": float(nil),
        "commutativity": float(comm),
        "raw_norm_ratios": [float(np.linalg.norm(x @ psi) / pn) for x in e_raw],
    }
    return LoopModeSet(sector, rc, modes, e_raw, e, diag)


def serre_residuals(sector: Sector) -> dict:
    """[x,[x,[x,y]]] for x = e+-(j), y = e-+(k), j != k in {0, 1}, on a sector carrying both currents."""
    lo = product_operators(sector, 1)
    hi = product_operators(sector, -1)
    if lo.current.kind != hi.current.kind:
        raise CurrentError("the two currents live on different working chains")
    rel = lambda x, y: _opnorm(x @ (x @ (x @ y - y @ x) - (x @ y - y @ x) @ x) - (x @ (x @ y - y @ x) - (x @ y - y @ x) @ x) @ x) / (
        _opnorm(x) ** 3 * _opnorm(y))
    out = {}
    for j, k in ((0, 1), (1, 0)):
        out[f"e+({j}),e-({k})"] = float(rel(hi.modes[j], lo.modes[k]))
        out[f"e-({j}),e+({k})"] = float(rel(lo.modes[j], hi.modes[k]))
    return out


def generate_u_basis(sector: Sector, sign: int | None = None, loops: LoopModeSet | None = None):
    """u(s) = prod_(s_i = -1) e_i- psi+ (or prod_(s_i = +1) e_i+ psi-), normalized, on the sector's space."""
    from .onsager import V_ZERO, W_INF, VectorFamily, sign_vectors

    lm = loops if loops is not None else product_operators(sector, sign)
    rc = lm.current
    V = rc.work.frame_full
    flip = -1 if rc.sign > 0 else 1
    vectors = {}
    for s in sign_vectors(sector.mE):
        v = rc.psi.copy()
        for i, si in enumerate(s):
            if si == flip:
                v = lm.e[i] @ v
        full = V @ v
        if rc.Psi is not None:
            full = rc.Psi.conj().T @ full
        nrm = np.linalg.norm(full)
        if nrm < 1e-8 * np.linalg.norm(rc.psi):
            raise RegularizationError(f"u vector collapsed for signs {s}")
        vectors[s] = full / nrm
    return VectorFamily(sector, W_INF if rc.kind == "I" else V_ZERO, vectors, "bethe")


def u_basis_certificate(sector: Sector, family) -> dict:
    """Gram error, tau2 eigen-residual and minimum overlap with the exact limit basis."""
    from .onsager import limit_basis, overlap

    ref = limit_basis(sector, family.kind)
    U = family.matrix()
    t = 0.37 + 0.21j
    T = build_tau2(sector.spec, t)
    lam = sector.eigpoly(t)
    eig = max(float(np.linalg.norm(T @ u - lam * u)) for u in U.T) / scale(T)
    return {
        "gram": family.gram_error(),
        "tau2_residual": eig,
        "min_overlap": min(overlap(family.vectors[s], ref.vectors[s]) for s in ref.vectors),
    }


def inversion_bethe_overlap(sector: Sector, kind: str = "I") -> float:
    """|<j psi+, psi->| / norms, psi- the Bethe state of the inversion partner.

    kind="I" uses j on an I+ sector; kind="i" uses j* on an i+ sector.
    """
    from .onsager import overlap
    from .sectors import inversion_partner
    from .tau2 import dual_spin_inversion, spin_inversion

    if kind + "+" not in sector.types:
        raise BetheError(f"sector has no {kind}+ type")
    partner = inversion_partner(sector, kind)
    plus = bethe_state(sector, 1, kind)["vector"]
    minus = bethe_state(partner, -1, kind)["vector"]
    op = spin_inversion(sector.spec) if kind == "I" else dual_spin_inversion(sector.spec, sector.Q)
    return overlap(op @ plus, minus)
