"""Onsager-algebra eigenvector machinery on a single sector."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import TAU_GRP, duality_map
from .sectors import Sector, find_sector, inversion_partner
from .tau2 import build_H0, build_H1, dual_spin_inversion, spin_inversion

W_INF = "w_at_infinity"
V_ZERO = "v_at_zero"


class VectorError(RuntimeError):
    pass


def sign_vectors(mE: int) -> list:
    return list(itertools.product((1, -1), repeat=mE))


def sign_label(s) -> str:
    return "".join("+" if x > 0 else "-" for x in s)


def parse_sign_label(label: str) -> tuple:
    return tuple(1 if c == "+" else -1 for c in label)


def epsilon(theta, kprime):
    return np.sqrt(1 + kprime**2 - 2 * kprime * np.cos(theta))


def angles(theta, kprime):
    """(vartheta, phi) for real k'; phi is None at k' = 0."""
    vt = 2 * np.pi + np.angle(1 - kprime * np.exp(1j * np.asarray(theta)))
    if kprime == 0:
        return vt, None
    return vt, (vt if kprime > 0 else vt - np.pi)


def energy(sector: Sector, s, kprime: float):
    """(E, E~) for sign vector s."""
    s = np.asarray(s, dtype=float)
    core = sector.alpha + kprime * sector.beta
    spread = sector.N * float(np.dot(s, epsilon(sector.theta, kprime))) if len(s) else 0.0
    sgn = np.sign(kprime) if kprime != 0 else 1.0
    return core + spread, core + sgn * spread


def restrict(sector: Sector, op: np.ndarray) -> np.ndarray:
    V = sector.frame_full
    return V.conj().T @ op @ V


def sector_H(sector: Sector, kprime: float) -> np.ndarray:
    return restrict(sector, build_H0(sector.spec) + kprime * build_H1(sector.spec))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v))
    return v * (abs(v[i]) / v[i])


def direct_eigvectors(sector: Sector, kprime: float) -> dict:
    """{s: v(s; k')} by diagonalizing H(k') on the sector, labelled by E(s; k')."""
    signs = sign_vectors(sector.mE)
    pred = np.array([energy(sector, s, kprime)[0] for s in signs])
    if len(pred) > 1:
        gap = np.min(np.abs(pred[:, None] - pred[None, :]) + np.eye(len(pred)) * 1e9)
        if gap < 10 * TAU_GRP:
            raise VectorError(f"energy collision at k'={kprime} (gap {gap:.1e})")
    vals, vecs = np.linalg.eigh(sector_H(sector, kprime))
    out = {}
    for val, vec in zip(vals, vecs.T):
        j = int(np.argmin(np.abs(pred - val)))
        if abs(pred[j] - val) > 1e-6 * max(1.0, abs(val)):
            raise VectorError(f"eigenvalue {val} matches no predicted energy")
        out[signs[j]] = _fix_phase(sector.frame_full @ vec)
    if len(out) != len(signs):
        raise VectorError("label assignment is not a bijection")
    return out


@dataclass
class VectorFamily:
    sector: Sector
    kind: str
    vectors: dict  # sign tuple -> full-space unit vector
    phase_tag: str = "onsager"

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.vectors[s] for s in sign_vectors(self.sector.mE)])

    def gram_error(self) -> float:
        U = self.matrix()
        return float(np.abs(U.conj().T @ U - np.eye(U.shape[1])).max())

    def to_json(self) -> dict:
        return {sign_label(s): [[float(z.real), float(z.imag)] for z in v] for s, v in self.vectors.items()}


def _flip(s, i):
    s = list(s)
    s[i] = -s[i]
    return tuple(s)


def align_phases(sector: Sector, vectors: dict, kind: str) -> tuple:
    """Fix relative phases of a basic eigenvector family to the Onsager convention.

    For the w-kind family, <u(s)|H0|u(s')> = -N sin(theta_i) when s' is s with
    the i-th sign flipped; for the v-kind family the H1 elements equal
    +N sin(theta_i).  Returns the re-phased vectors and the largest
    deviation of any such matrix element from its required value.
    """
    N, mE = sector.N, sector.mE
    signs = sign_vectors(mE)
    if kind == W_INF:
        op, sgn = build_H0(sector.spec), -1.0
    elif kind == V_ZERO:
        op, sgn = build_H1(sector.spec), 1.0
    else:
        raise ValueError(kind)
    out = {signs[0]: _fix_phase(vectors[signs[0]])}
    for s in signs[1:]:
        i = s.index(-1)
        parent = _flip(s, i)
        elem = out[parent].conj() @ op @ vectors[s]
        out[s] = vectors[s] * (abs(elem) / elem) * np.sign(sgn)
    worst = 0.0
    for s in signs:
        for i in range(mE):
            target = sgn * N * np.sin(sector.theta[i])
            elem = out[s].conj() @ op @ out[_flip(s, i)]
            worst = max(worst, abs(elem - target))
    return out, float(worst)


def limit_basis(sector: Sector, kind: str) -> VectorFamily:
    """Basic eigenvectors w(s; inf) or v(s; 0) computed exactly.

    The leading operator (H1 for w, H0 for v) is diagonalized on the sector
    and each of its eigenspaces is split by the other operator projected into
    it, which is the k' -> inf (resp. 0) limit of the H(k') eigenvectors.
    """
    spec = sector.spec
    H0, H1 = restrict(sector, build_H0(spec)), restrict(sector, build_H1(spec))
    lead, sub = (H1, H0) if kind == W_INF else (H0, H1)
    base = sector.beta if kind == W_INF else sector.alpha
    signs = sign_vectors(sector.mE)
    vals, vecs = np.linalg.eigh(lead)
    vectors = {}
    for level in sorted(set(np.round((vals - base) / sector.N).astype(int))):
        idx = np.where(np.abs((vals - base) / sector.N - level) < 1e-6)[0]
        block = vecs[:, idx]
        bv, bw = np.linalg.eigh(block.conj().T @ sub @ block)
        cands = [s for s in signs if sum(s) == level]
        if len(cands) != len(idx):
            raise VectorError(f"level {level} has {len(idx)} vectors, expected {len(cands)}")
        for val, vec in zip(bv, bw.T):
            # projected sub-operator is diagonal: alpha - N sum s_i cos(theta_i) for w,
            # beta - N sum s_i cos(theta_i) for v
            other = sector.alpha if kind == W_INF else sector.beta
            pred = [other - sector.N * float(np.dot(s, np.cos(sector.theta))) for s in cands]
            j = int(np.argmin(np.abs(np.array(pred) - val)))
            if abs(pred[j] - val) > 1e-6:
                raise VectorError("limit-basis label assignment failed")
            vectors[cands[j]] = sector.frame_full @ (block @ vec)
    if len(vectors) != len(signs):
        raise VectorError("limit-basis labels are not a bijection")
    vectors, dev = align_phases(sector, vectors, kind)
    if dev > 1e-6:
        raise VectorError(f"Onsager phase alignment failed (deviation {dev:.2e})")
    return VectorFamily(sector, kind, vectors, "onsager")


def synthesis_coefficients(sector: Sector, kind: str, kprime: float) -> np.ndarray:
    """Matrix C with columns indexed by s and rows by s' (basic vectors)."""
    vt, ph = angles(sector.theta, kprime)
    if kind == W_INF:
        if ph is None:
            raise ValueError("w-kind synthesis is undefined at k' = 0")
        half_angle = (ph - sector.theta) / 2
    elif kind == V_ZERO:
        half_angle = (vt - np.pi) / 2
    else:
        raise ValueError(kind)
    signs = sign_vectors(sector.mE)
    C = np.ones((len(signs), len(signs)))
    for a, sp in enumerate(signs):
        for b, s in enumerate(signs):
            for i in range(sector.mE):
                C[a, b] *= np.sin(half_angle[i] + (s[i] - sp[i]) * np.pi / 4)
    return C


def synthesize(sector: Sector, family: VectorFamily, s, kprime: float) -> np.ndarray:
    signs = sign_vectors(sector.mE)
    C = synthesis_coefficients(sector, family.kind, kprime)
    col = C[:, signs.index(tuple(s))]
    return sum(c * family.vectors[sp] for c, sp in zip(col, signs))


def synthesize_all(sector: Sector, family: VectorFamily, kprime: float) -> dict:
    return {s: synthesize(sector, family, s, kprime) for s in sign_vectors(sector.mE)}


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def compare_with_direct(sector: Sector, family: VectorFamily, kprime: float) -> float:
    """Minimum overlap between synthesized and directly diagonalized vectors.

    The w family is compared through w(s; k') = v(s; k') for k' > 0 and
    w(s; k') = lambda(s) v(-s; k') for k' < 0.
    """
    direct = direct_eigvectors(sector, kprime)
    worst = 1.0
    for s in sign_vectors(sector.mE):
        target = s if (family.kind == V_ZERO or kprime > 0) else tuple(-x for x in s)
        worst = min(worst, overlap(synthesize(sector, family, s, kprime), direct[target]))
    return worst


def family_sign_check(sector: Sector, family_w: VectorFamily, kprime: float) -> float:
    """Max |w(s;k') - lambda(s) v(-s;k')| for k' < 0 after removing one global phase."""
    v_fam = limit_basis(sector, V_ZERO)
    ws = synthesize_all(sector, family_w, kprime)
    vs = synthesize_all(sector, v_fam, kprime)
    signs = sign_vectors(sector.mE)
    lam = lambda s: float(np.prod(s)) if len(s) else 1.0
    if kprime > 0:
        pairs = [(ws[s], vs[s]) for s in signs]
    else:
        pairs = [(ws[s], lam(s) * vs[tuple(-x for x in s)]) for s in signs]
    phase = np.vdot(pairs[0][1], pairs[0][0])
    phase /= abs(phase)
    return float(max(np.linalg.norm(a - phase * b) for a, b in pairs))


# ------------------------------------------------------------------ duality


def dual_sector(sector: Sector) -> Sector:
    spec = sector.spec
    return find_sector(spec.with_r(sector.Q), spec.r, sector.F, sector.Pa, sector.Pb)


def duality_vectors(sector: Sector, kprime: float) -> dict:
    """Check Psi(w(s; k')) = c prod(-s_i) v_dual(s; 1/k') with |c| = 1.

    Returns the measured ratios and diagnostics; the w family of the sector
    and the v family of the dual sector are both the exact limit bases.
    """
    spec = sector.spec
    dual = dual_sector(sector)
    Psi = duality_map(spec.N, spec.L, spec.r, sector.Q)
    w_fam = limit_basis(sector, W_INF)
    v_fam = limit_basis(dual, V_ZERO)
    signs = sign_vectors(sector.mE)
    ratios = {}
    for s in signs:
        a = Psi @ synthesize(sector, w_fam, s, kprime)
        b = synthesize(dual, v_fam, s, 1.0 / kprime)
        ratios[s] = np.vdot(b, a)
        resid = np.linalg.norm(a - ratios[s] * b)
        if resid > 1e-6:
            raise VectorError(f"Psi w({sign_label(s)}) is not proportional to the dual v vector ({resid:.1e})")
    c = ratios[signs[0]] / np.prod([-x for x in signs[0]]) if signs[0] else ratios[signs[0]]
    sign_dev = max(abs(ratios[s] - c * np.prod([-x for x in s])) for s in signs)
    return {
        "dual": dual,
        "ratios": {sign_label(s): complex(v) for s, v in ratios.items()},
        "modulus_dev": float(max(abs(abs(v) - 1) for v in ratios.values())),
        "sign_dev": float(sign_dev),
        "global_phase": complex(c),
    }


# ---------------------------------------------------------------- inversion


def inversion_index_map(sector: Sector, partner: Sector) -> list:
    """perm[i] = index j of the partner angle with theta'_j = pi - theta_i.

    Inversion sends a_i to 1/a_i, so sorting reverses the order of the angles.
    """
    perm = []
    for th in sector.theta:
        j = int(np.argmin(np.abs(partner.theta - (np.pi - th))))
        if abs(partner.theta[j] - (np.pi - th)) > 1e-6 or j in perm:
            raise VectorError("partner angles do not mirror the sector angles")
        perm.append(j)
    return perm


def inverted_label(s, perm) -> tuple:
    out = [0] * len(s)
    for i, j in enumerate(perm):
        out[j] = -s[i]
    return tuple(out)


def inversion_vectors(sector: Sector, kprime: float, kind: str | None = None) -> dict:
    """Check the k' <-> -k' correspondence induced by j (I types) or j* (i types)."""
    spec = sector.spec
    if kind is None:
        kind = "I" if any(t[0] == "I" for t in sector.types) else "i"
    partner = inversion_partner(sector, kind)
    signs = sign_vectors(sector.mE)
    if kind == "I":
        op = spin_inversion(spec)
        fam, pfam = limit_basis(sector, W_INF), limit_basis(partner, W_INF)
        factor = 1.0
    else:
        op = dual_spin_inversion(spec, sector.Q)
        fam, pfam = limit_basis(sector, V_ZERO), limit_basis(partner, V_ZERO)
        factor = (-1.0) ** sector.mE
    perm = inversion_index_map(sector, partner)
    worst, ratios = 1.0, {}
    for s in signs:
        a = op @ synthesize(sector, fam, s, kprime)
        b = factor * synthesize(partner, pfam, inverted_label(s, perm), -kprime)
        worst = min(worst, overlap(a, b))
        ratios[sign_label(s)] = complex(np.vdot(b, a))
    return {"partner": partner, "index_map": perm, "min_overlap": worst, "ratios": ratios}
