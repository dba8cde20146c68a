"""Onsager-sector decomposition of a (r, Q) quantum space.

Every tau2 eigenspace is recovered numerically, its eigenvalue polynomial is
matched to a Bethe triple (F, Pa, Pb), and the evaluation data (P, a_i,
theta_i) and quantum numbers are derived from that triple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .algebra import TAU_GRP, CPolynomial, circle_nodes, poly_fit, root_power, sector_basis
from .tau2 import Tau2Spec, build_fusion, build_tau2

DIM_CAP = 625
TYPES = ("I+", "I-", "i+", "i-")


class SectorError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Sector:
    spec: Tau2Spec
    Q: int
    F: CPolynomial
    J: int
    Pa: int
    Pb: int
    Pmu: int
    mE: int
    dE: int
    alpha: int
    beta: int
    P: CPolynomial  # in t, from the sum formula
    Pev: CPolynomial  # in xi = t^N, Pev(0) = 1
    a: np.ndarray
    theta: np.ndarray
    types: tuple
    frame: np.ndarray  # orthonormal columns in difference-basis coordinates
    eigpoly: CPolynomial
    diagnostics: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def degeneracy(self) -> int:
        return 2**self.mE

    @property
    def basis(self):
        return sector_basis(self.N, self.L, self.r, self.Q, "difference")

    @property
    def frame_full(self) -> np.ndarray:
        return self.basis.isometry @ self.frame

    @property
    def bethe_v(self) -> np.ndarray:
        return bethe_variables(self.F, self.spec)

    def key(self) -> tuple:
        return (self.N, self.L, self.spec.m, self.r, self.Q, self.Pa, self.Pb, tuple(np.round(self.F.coeffs, 9)))

    def has(self, t: str) -> bool:
        return t in self.types

    def to_json(self) -> dict:
        cpl = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "N": self.N, "L": self.L, "m": self.spec.m, "r": self.r, "Q": self.Q,
            "J": self.J, "Pa": self.Pa, "Pb": self.Pb, "Pmu": self.Pmu, "mE": self.mE, "dE": self.dE,
            "alpha": self.alpha, "beta": self.beta, "types": list(self.types),
            "F_coeffs": [cpl(c) for c in self.F.coeffs],
            "theta": [float(x) for x in self.theta],
            "a": [float(np.real(x)) for x in self.a],
            "eigpoly_coeffs": [cpl(c) for c in self.eigpoly.coeffs],
        }


# ----------------------------------------------------------------- sampling


def sector_tau2(spec: Tau2Spec, Q: int, t: complex) -> np.ndarray:
    V = sector_basis(spec.N, spec.L, spec.r, Q, "difference").isometry
    return V.conj().T @ build_tau2(spec, t) @ V


def _group_by_signature(sig: np.ndarray, tol: float) -> list:
    """Cluster rows of `sig` whose entries agree within tol everywhere."""
    groups: list = []
    for i, row in enumerate(sig):
        for g in groups:
            if np.max(np.abs(sig[g[0]] - row)) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def eigen_decompose(spec: Tau2Spec, Q: int, seed: int = 0, cap: int = DIM_CAP, attempts: int = 5) -> list:
    """Common eigenspaces of the tau2 family on the (r, Q) space.

    Returns a list of (eigpoly, frame) with orthonormal frames in
    difference-basis coordinates.
    """
    d = spec.N ** (spec.L - 1)
    if d > cap:
        raise SectorError(f"sector dimension {d} exceeds cap {cap}")
    for attempt in range(attempts):
        rng = np.random.default_rng(seed + 7919 * attempt)
        nodes = circle_nodes(spec.L + 2, 0.9, phase=0.37 + 0.11 * attempt)
        mats = [sector_tau2(spec, Q, t) for t in nodes]
        scl = max(1.0, max(np.abs(np.linalg.eigvals(m)).max() for m in mats[:1]))
        c = rng.normal(size=len(mats)) + 1j * rng.normal(size=len(mats))
        G = sum(ci * mi for ci, mi in zip(c, mats))
        G = G + G.conj().T  # the family is normal, so this is Hermitian and commuting
        _, vecs = np.linalg.eigh(G)
        sig = np.array([[v.conj() @ m @ v for m in mats] for v in vecs.T])
        groups = _group_by_signature(sig, TAU_GRP * scl)
        out, ok = [], True
        for g in groups:
            frame = vecs[:, g]
            lam = sig[g].mean(axis=0)
            eigpoly = poly_fit(nodes[:-1], lam[:-1])
            held = max(np.linalg.norm(m @ frame - l * frame) for m, l in zip(mats, lam))
            if abs(eigpoly(nodes[-1]) - lam[-1]) > TAU_GRP * scl or held > TAU_GRP * scl:
                ok = False
                break
            out.append((CPolynomial(eigpoly.coeffs, tol=1e-12), frame))
        if ok and sum(f.shape[1] for _, f in out) == d:
            return out
    raise SectorError(f"could not separate tau2 eigenspaces for {spec}, Q={Q}")


# --------------------------------------------------------------- TQ fitting


def tq_rhs(spec: Tau2Spec, F: CPolynomial, Pa: int, Pb: int) -> CPolynomial:
    """w^-Pa (1-w^-m t)^L F(t) + w^Pb (1-w^{1-m} t)^L F(w^2 t), as a polynomial."""
    N, L, m = spec.N, spec.L, spec.m
    a = CPolynomial([1, -root_power(N, -m)])
    b = CPolynomial([1, -root_power(N, 1 - m)])
    aL, bL = CPolynomial([1]), CPolynomial([1])
    for _ in range(L):
        aL, bL = aL * a, bL * b
    return root_power(N, -Pa) * (aL * F) + root_power(N, Pb) * (bL * F.scaled_arg(root_power(N, 2)))


def eigenvalue_from_bethe(spec: Tau2Spec, F: CPolynomial, Pa: int, Pb: int, t):
    return tq_rhs(spec, F, Pa, Pb)(t) / F(spec.w * t)


def _tq_matrix(spec: Tau2Spec, eigpoly: CPolynomial, Pa: int, Pb: int, J: int):
    """Columns: coefficient vectors of the TQ residual for F = t^j, j = 0..J.

    Also returns the per-column magnitude of the two sides, the natural scale
    against which a vanishing residual is judged.
    """
    rows = spec.L + J + 1
    pad = lambda p: np.pad(p.coeffs, (0, rows - len(p.coeffs)))[:rows]
    cols, mags = [], []
    for j in range(J + 1):
        e = CPolynomial(np.eye(J + 1)[j])
        lhs = pad(eigpoly * e.scaled_arg(spec.w))
        rhs = pad(tq_rhs(spec, e, Pa, Pb))
        cols.append(lhs - rhs)
        mags.append(max(np.linalg.norm(lhs), np.linalg.norm(rhs)))
    return np.array(cols).T, np.array(mags)


def pab_candidates(spec: Tau2Spec, Q: int):
    N, L, m, r = spec.N, spec.L, spec.m, spec.r
    for s in range(N):
        for Pa in range(s + 1):
            Pb = s - Pa
            if (Pb - Pa - Q - r - (1 + 2 * m) * L) % N == 0:
                yield Pa, Pb


def fit_bethe_data(eigpoly: CPolynomial, spec: Tau2Spec, Q: int, tol: float = 1e-8):
    """Recover (F, Pa, Pb, J) from a tau2 eigenvalue polynomial."""
    accepted, report = [], []
    for Pa, Pb in pab_candidates(spec, Q):
        for J in range(((spec.N - 1) * spec.L - Pa - Pb) // 2 + 1):
            A, mags = _tq_matrix(spec, eigpoly, Pa, Pb, J)
            _, sv, vh = np.linalg.svd(A / mags)
            sv = np.concatenate([sv, np.zeros(J + 1 - len(sv))])
            nullity = int(np.sum(sv <= tol))
            report.append(((Pa, Pb, J), float(sv[-1])))
            if nullity != 1:
                continue
            f = vh[-1].conj() / mags
            if abs(f[0]) < tol * np.abs(f).max() or abs(f[-1]) < tol * np.abs(f).max():
                continue
            F = CPolynomial(f / f[0])
            if bethe_residual(F, Pa, Pb, spec) > 1e-7:
                continue
            accepted.append((F, Pa, Pb, J))
    if len(accepted) != 1:
        raise SectorError(f"expected one Bethe triple, found {len(accepted)}; residuals: {report}")
    return accepted[0]


def bethe_variables(F: CPolynomial, spec: Tau2Spec) -> np.ndarray:
    """v_j from F(t) = prod (1 + w v_j t), sorted by argument then modulus."""
    roots = F.roots()
    v = -1.0 / (spec.w * roots)
    order = np.lexsort((np.abs(v), np.round(np.angle(v), 9)))
    return v[order]


def bethe_residual(F: CPolynomial, Pa: int, Pb: int, spec: Tau2Spec) -> float:
    if F.degree <= 0:
        return 0.0
    N, L, m = spec.N, spec.L, spec.m
    v = bethe_variables(F, spec)
    if len(v) > 1:
        gaps = np.abs(v[:, None] - v[None, :]) + np.eye(len(v))
        if gaps.min() < 1e-8:
            raise SectorError("repeated Bethe roots")
    w = spec.w
    worst = 0.0
    for vi in v:
        den = vi + root_power(N, -2 - m)
        if abs(den) < 1e-12 or abs(vi + root_power(N, -1 - m)) < 1e-12:
            raise SectorError("Bethe root at a singular point")
        lhs = ((vi + root_power(N, -1 - m)) / den) ** L
        rhs = -root_power(N, -Pa - Pb) * np.prod((vi - v / w) / (vi - w * v))
        worst = max(worst, abs(lhs - rhs) / (abs(lhs) + abs(rhs)))
    return float(worst)


# ------------------------------------------------------------ P polynomial


def P_sum(spec: Tau2Spec, F: CPolynomial, Pa: int, Pb: int, t):
    """P(t) from the sum over the omega-orbit of t."""
    N, L, m = spec.N, spec.L, spec.m
    t = np.asarray(t, dtype=complex)
    tot = 0
    for k in range(N):
        wk = root_power(N, k) * t
        tot = tot + (1 - t**N) ** L * wk ** (-(Pa + Pb)) / (
            (1 - root_power(N, k - m) * t) ** L * F(wk) * F(root_power(N, k + 1) * t))
    return root_power(N, -Pb) * tot


def compute_P(spec: Tau2Spec, F: CPolynomial, Pa: int, Pb: int, J: int):
    """Returns (P, Pev, P0, mE, dE, a, theta, remainder)."""
    N, L = spec.N, spec.L
    top = (N - 1) * L - Pa - Pb - 2 * J
    mE, dE = divmod(top, N)
    nodes = circle_nodes(top + 4, 0.8, phase=0.23)
    P = poly_fit(nodes, P_sum(spec, F, Pa, Pb, nodes), degree=top + 2)
    c = np.array(P.coeffs)
    c = np.pad(c, (0, max(0, top + 3 - len(c))))
    pscale = np.abs(c).max()
    off = np.array([c[k] for k in range(len(c)) if k % N != 0])
    remainder = float(np.abs(off).max() / pscale) if off.size else 0.0
    if remainder > 1e-8:
        raise SectorError(f"P is not a polynomial in t^N (remainder {remainder:.2e})")
    xi = c[::N][: mE + 1]
    if abs(xi[0]) < 1e-10 * pscale:
        raise SectorError("P(0) vanishes")
    if len(c[::N]) > mE + 1 and np.abs(c[::N][mE + 1:]).max() > 1e-8 * pscale:
        raise SectorError("P degree exceeds m_E")
    P = CPolynomial(np.where(np.arange(len(c)) % N == 0, c, 0)[: N * mE + 1])
    Pev = CPolynomial(xi / xi[0])
    tN = poly_roots_sorted(Pev)
    if tN.size and (np.abs(tN.imag).max() > TAU_GRP * max(1, np.abs(tN).max()) or tN.real.max() >= 0):
        raise SectorError(f"evaluation roots are not negative real: {tN}")
    tN = tN.real
    a = 1.0 / tN
    theta = np.arccos(np.clip((tN + 1) / (tN - 1), -1, 1))
    order = np.argsort(theta)
    return P, Pev, complex(xi[0]), mE, dE, a[order], theta[order], remainder


def poly_roots_sorted(p: CPolynomial) -> np.ndarray:
    if p.degree <= 0:
        return np.zeros(0, dtype=complex)
    return np.sort_complex(p.roots())


def P_fusion(spec: Tau2Spec, Q: int, F: CPolynomial, Pa: int, Pb: int, frame: np.ndarray, t: complex) -> complex:
    """P(t) = t^{-Pa-Pb} tau^(N)(t) / F(t)^2 evaluated on the sector."""
    V = sector_basis(spec.N, spec.L, spec.r, Q, "difference").isometry @ frame[:, 0]
    tauN = build_fusion(spec, spec.N, t)
    lam = V.conj() @ tauN @ V
    return t ** (-(Pa + Pb)) * lam / F(t) ** 2


# ------------------------------------------------------------ classification


def classify(spec: Tau2Spec, Q: int, Pa: int, Pb: int, J: int, mE: int, dE: int):
    """Type flags and P_mu for one sector; raises if no type matches."""
    N, L, m, r = spec.N, spec.L, spec.m, spec.r
    md = lambda x: x % N
    lo = Pb - m * L + J
    Pmu = lo + md(r - lo)
    if Pmu > lo + dE:
        raise SectorError(f"no P_mu in [{lo}, {lo + dE}] congruent to r={r}")
    types = []
    if Pa == 0 and md(Pb - (m * L + r - J)) == 0 and md(Q + (1 + m) * L + J) == 0:
        types.append("I+")
    if Pb == 0 and md(Pa + (1 + m) * L + r + J) == 0 and md(Q + m * L - J) == 0:
        types.append("I-")
    if Pa == 0 and md(Pb - (m * L + Q - J)) == 0 and md(r + (1 + m) * L + J) == 0:
        types.append("i+")
    if Pb == 0 and md(Pa + (1 + m) * L + Q + J) == 0 and md(r + m * L - J) == 0:
        types.append("i-")
    if not types:
        raise SectorError(f"sector (Pa={Pa}, Pb={Pb}, J={J}) matches no type")
    # P_mu closed forms per type, checked against the congruence solution
    expect = {
        "I+": Pb - m * L + J,
        "I-": (N - 1 - m) * L - Pa - N * mE - J,
        "i+": (N - 1 - m) * L - N * mE - J,
        "i-": -m * L + J,
    }
    for t in types:
        if expect[t] != Pmu:
            raise SectorError(f"P_mu mismatch for type {t}: {expect[t]} vs {Pmu}")
    return tuple(types), int(Pmu)


def linear_terms(spec: Tau2Spec, Pa: int, Pb: int, Pmu: int, mE: int):
    N, L, m = spec.N, spec.L, spec.m
    alpha = 2 * Pmu + N * mE - (N - 1 - 2 * m) * L
    beta = 2 * (Pb - Pa) - alpha
    return int(alpha), int(beta)


# ------------------------------------------------------------------ pipeline


def build_sector(spec: Tau2Spec, Q: int, eigpoly: CPolynomial, frame: np.ndarray) -> Sector:
    F, Pa, Pb, J = fit_bethe_data(eigpoly, spec, Q)
    P, Pev, P0, mE, dE, a, theta, rem = compute_P(spec, F, Pa, Pb, J)
    if frame.shape[1] != 2**mE:
        raise SectorError(f"eigenspace dimension {frame.shape[1]} != 2^{mE}")
    types, Pmu = classify(spec, Q, Pa, Pb, J, mE, dE)
    alpha, beta = linear_terms(spec, Pa, Pb, Pmu, mE)
    diag = {"bethe_residual": bethe_residual(F, Pa, Pb, spec), "P_remainder": rem}
    return Sector(spec, Q % spec.N, F, J, Pa, Pb, Pmu, mE, dE, alpha, beta, P, Pev, a, theta, types, frame, eigpoly, diag)


@lru_cache(maxsize=256)
def enumerate_sectors(spec: Tau2Spec, Q: int, seed: int = 0) -> tuple:
    """All Onsager sectors of the (r, Q) space with a completeness check."""
    Q = Q % spec.N
    groups = eigen_decompose(spec, Q, seed=seed)
    sectors = [build_sector(spec, Q, ep, fr) for ep, fr in groups]
    total = sum(s.degeneracy for s in sectors)
    if total != spec.N ** (spec.L - 1):
        raise SectorError(f"completeness failed: sum 2^mE = {total}")
    sectors.sort(key=lambda s: (s.Pa + s.Pb, s.J, s.Pa, tuple(np.round(s.theta, 6))))
    return tuple(sectors)


def all_sectors(spec: Tau2Spec, seed: int = 0) -> dict:
    return {Q: enumerate_sectors(spec, Q, seed) for Q in range(spec.N)}


def find_sector(spec: Tau2Spec, Q: int, F: CPolynomial, Pa: int, Pb: int, tol: float = 1e-6) -> Sector:
    for s in enumerate_sectors(spec, Q % spec.N):
        if s.Pa == Pa and s.Pb == Pb and s.F.degree == F.degree and np.allclose(s.F.coeffs, F.coeffs, atol=tol):
            return s
    raise SectorError(f"no sector with (Pa, Pb)=({Pa}, {Pb}) and F={F} in Q={Q}, {spec}")


# ----------------------------------------------------------- inversion pair


PARTNER_TYPE = {"I+": "I-", "I-": "I+", "i+": "i-", "i-": "i+"}


def _pick_type(sector: Sector, kind: str | None) -> str:
    if kind is None:
        return sector.types[0]
    if kind in ("I", "i"):
        for t in sector.types:
            if t[0] == kind:
                return t
        raise SectorError(f"sector has no {kind}-type flag: {sector.types}")
    if kind not in sector.types:
        raise SectorError(f"sector is not of type {kind}: {sector.types}")
    return kind


def inversion_partner_data(sector: Sector, kind: str | None = None):
    """(F', Pa', Pb', Q', r', partner type) with v'_j = w^{-3-2m} / v_j."""
    spec = sector.spec
    N, L, m = spec.N, spec.L, spec.m
    t = _pick_type(sector, kind)
    v = sector.bethe_v
    vp = root_power(N, -3 - 2 * m) / v
    Fp = CPolynomial([1])
    for x in vp:
        Fp = Fp * CPolynomial([1, spec.w * x])
    tp = PARTNER_TYPE[t]
    Pap, Pbp = (sector.dE, 0) if tp.endswith("-") else (0, sector.dE)
    if t[0] == "I":
        Qp, rp = (-(1 + 2 * m) * L - sector.Q) % N, spec.r
    else:
        Qp, rp = sector.Q, (-(1 + 2 * m) * L - spec.r) % N
    return Fp, Pap, Pbp, Qp, rp, tp


def inversion_partner(sector: Sector, kind: str | None = None) -> Sector:
    Fp, Pap, Pbp, Qp, rp, tp = inversion_partner_data(sector, kind)
    partner = find_sector(sector.spec.with_r(rp), Qp, Fp, Pap, Pbp)
    if tp not in partner.types:
        raise SectorError(f"partner lacks expected type {tp}: {partner.types}")
    return partner
