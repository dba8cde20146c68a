"""Verification suites: every identity is reduced to (name, residual, tolerance)
and the worst residual over the configured parameter grid is reported."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import TAU_GRP, TAU_ID, duality_map, root_power, scale, sector_basis
from .sectors import DIM_CAP, SectorError, enumerate_sectors, inversion_partner
from .tau2 import (
    K_operator,
    Tau2Spec,
    build_fusion,
    build_H,
    build_H0,
    build_H1,
    build_tau2,
    dual_spin_inversion,
    fusion_boundary_residual,
    monodromy,
    q_power,
    spin_inversion,
    spin_shift,
    translation,
)

SUITES = ("tau2", "cpm", "sectors", "onsager", "duality", "inversion", "xxz", "fmcurrent")
ONSAGER_KPRIMES = (0.3, -0.3, 0.8, -0.8, 2.5)


@dataclass
class RunConfig:
    """Parameter grid and options; None for m, r or Q means every value mod N."""

    N: tuple = (3,)
    L: tuple = (2,)
    m: tuple | None = None
    r: tuple | None = None
    Q: tuple | None = None
    kprimes: tuple = (0.2, 0.6, 0.9)
    seed: int = 0
    suites: tuple = SUITES
    tolerances: dict = field(default_factory=dict)
    out: str = "out"
    jobs: int = 1

    def __post_init__(self):
        for n in self.N:
            if n < 3 or n % 2 == 0:
                raise ValueError(f"N must be odd and >= 3, got {n}")
            for L in self.L:
                if L < 1 or n ** (L - 1) > DIM_CAP:
                    raise ValueError(f"N^(L-1) = {n}^{L - 1} exceeds the dimension cap {DIM_CAP}")
        for k in self.kprimes:
            if k == 0 or abs(k) == 1:
                raise ValueError(f"k' = {k} is excluded")
        for s in self.suites:
            if s not in SUITES:
                raise ValueError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")

    @staticmethod
    def _values(sel, N):
        return range(N) if sel is None else sorted({v % N for v in sel})

    def specs(self):
        for N in self.N:
            for L in self.L:
                for m in self._values(self.m, N):
                    for r in self._values(self.r, N):
                        yield Tau2Spec(N, L, m, r)

    def charges(self, spec: Tau2Spec):
        return self._values(self.Q, spec.N)

    def to_json(self) -> dict:
        sel = lambda v: "all" if v is None else list(v)
        return {"N": list(self.N), "L": list(self.L), "m": sel(self.m), "r": sel(self.r), "Q": sel(self.Q),
                "kprime": list(self.kprimes), "seed": self.seed, "suites": list(self.suites),
                "tolerances": dict(sorted(self.tolerances.items()))}


def _parse_ints(text: str):
    text = text.strip()
    if text.lower() == "all":
        return None
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_config(text: str) -> dict:
    """Parse key = value lines ('#' starts a comment) into RunConfig keyword arguments."""
    out, tol = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key in ("N", "L"):
            vals = _parse_ints(val)
            if vals is None:
                raise ValueError(f"config line {lineno}: {key} cannot be 'all'")
            out[key] = vals
        elif key in ("m", "r", "Q"):
            out[key] = _parse_ints(val)
        elif key in ("kprime", "kprimes"):
            out["kprimes"] = tuple(float(x) for x in val.split(",") if x.strip())
        elif key == "seed":
            out["seed"] = int(val)
        elif key in ("suite", "suites"):
            out["suites"] = tuple(x.strip() for x in val.split(",") if x.strip())
        elif key in ("out", "output_dir"):
            out["out"] = val
        elif key == "jobs":
            out["jobs"] = int(val)
        elif key.startswith("tol."):
            tol[key[4:]] = float(val)
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    if tol:
        out["tolerances"] = tol
    return out


@dataclass
class Entry:
    name: str
    residual: float
    tolerance: float
    where: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_json(self) -> dict:
        res = float(self.residual) if np.isfinite(self.residual) else str(self.residual)
        return {"identity_name": self.name, "max_residual": res, "tolerance": self.tolerance,
                "pass": self.passed, "worst_at": self.where}


class Report:
    """Keeps the worst residual per identity name."""

    def __init__(self, tolerances: dict | None = None):
        self.entries: dict = {}
        self.overrides = dict(tolerances or {})

    def add(self, name: str, residual, tol: float, where: str = ""):
        tol = float(self.overrides.get(name, tol))
        residual = float(residual) if residual is not None else math.inf
        if not np.isfinite(residual):
            residual = math.inf
        old = self.entries.get(name)
        if old is None or residual > old.residual:
            self.entries[name] = Entry(name, residual, tol, where)

    def fail(self, name: str, where: str, err: Exception):
        self.add(name, math.inf, 0.0, f"{where}: {type(err).__name__}: {err}")

    def merge(self, other: Report):
        for e in other.entries.values():
            self.add(e.name, e.residual, e.tolerance, e.where)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def failures(self) -> list:
        return [e for e in self.entries.values() if not e.passed]

    def to_json(self) -> list:
        return [self.entries[k].to_json() for k in sorted(self.entries)]


def _tag(spec: Tau2Spec, Q=None, extra: str = "") -> str:
    s = f"N={spec.N} L={spec.L} m={spec.m} r={spec.r}"
    if Q is not None:
        s += f" Q={Q}"
    return s + (f" {extra}" if extra else "")


def _rand_c(rng, radius: float = 1.0) -> complex:
    return complex(*rng.normal(size=2)) * radius


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b, 1) / scale(a, b))


# ------------------------------------------------------------------ tau2


def suite_tau2(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    rng = np.random.default_rng(cfg.seed)
    X = spin_shift(spec)
    where = _tag(spec)
    for _ in range(10):
        t1, t2 = _rand_c(rng), _rand_c(rng)
        T1, T2 = build_tau2(spec, t1), build_tau2(spec, t2)
        rep.add("tau2.commuting_family", np.linalg.norm(T1 @ T2 - T2 @ T1, 1) / scale(T1 @ T2), 1e-9, where)
        rep.add("tau2.charge_symmetry", np.linalg.norm(T1 @ X - X @ T1, 1) / scale(T1), 1e-12, where)
    H = build_H(spec, cfg.kprimes[0])
    rep.add("tau2.H_hermitian", np.linalg.norm(H - H.conj().T, 1) / scale(H), 1e-12, where)
    A, B = 2 * build_H0(spec) / spec.N, -2 * build_H1(spec) / spec.N
    c = lambda x, y: x @ y - y @ x
    dg1 = c(A, c(A, c(A, B))) - 16 * c(A, B)
    dg2 = c(B, c(B, c(B, A))) - 16 * c(B, A)
    sc = scale(c(A, c(A, c(A, B))), c(B, c(B, c(B, A))))
    rep.add("tau2.dolan_grady", max(np.linalg.norm(dg1, 1), np.linalg.norm(dg2, 1)) / sc, 1e-8, where)
    t = _rand_c(rng)
    for branch in (0, 1):
        top = build_fusion(spec, spec.N + 1, t)
        res = fusion_boundary_residual(spec, t, cfg.kprimes[0], branch) / scale(top)
        rep.add("tau2.fusion_boundary", res, 1e-8, where)
    rep.add("tau2.fusion_seed", _rel(build_fusion(spec, 2, t), build_tau2(spec, t)), TAU_ID, where)
    J = spin_inversion(spec)
    for kp in cfg.kprimes:
        rep.add("tau2.inversion_H", _rel(J @ build_H(spec, kp) @ J.conj().T, build_H(spec, -kp)), TAU_ID, where)
    t = _rand_c(rng)
    lhs = J @ build_tau2(spec, spec.wp(spec.m) * t) @ J.conj().T
    rhs = (-t) ** spec.L * q_power(spec, -spec.L) * K_operator(spec) @ build_tau2(spec, spec.wp(spec.m - 1) / t)
    rep.add("tau2.inversion_tau2", _rel(lhs, rhs), TAU_ID, where)
    (_, Bm), (Cm, _) = monodromy(spec, t)
    rep.add("tau2.monodromy_grading", max(_rel(X @ Bm @ X.conj().T, Bm / spec.w),
                                          _rel(X @ Cm @ X.conj().T, spec.w * Cm)), TAU_ID, where)
    S = translation(spec)
    SL = np.linalg.matrix_power(S, spec.L)
    rep.add("tau2.translation_power", _rel(SL, np.linalg.matrix_power(X.conj().T, spec.r)), 1e-12, where)
    T1 = build_tau2(spec, t)
    rep.add("tau2.translation_commutes", max(_rel(S @ T1, T1 @ S), _rel(S @ X, X @ S)), TAU_ID, where)


# ------------------------------------------------------------------- cpm


def suite_cpm(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from . import cpm
    from .onsager import VectorError, direct_eigvectors, sign_vectors

    where = _tag(spec)
    for i, kp in enumerate(cfg.kprimes):
        p = cpm.superintegrable_point(spec.N, spec.m, kp)
        rep.add("cpm.curve", p.curve_residual(), 1e-12, where)
        q1 = cpm.random_rapidity(p, cfg.seed + 11 * i + 1)
        q2 = cpm.random_rapidity(p, cfg.seed + 11 * i + 2)
        T1, T2 = cpm.build_T(p, q1, spec), cpm.build_T(p, q2, spec)
        rep.add("cpm.star_triangle", np.linalg.norm(T1 @ T2 - T2 @ T1, 1) / scale(T1 @ T2), 1e-8, where)
        S = translation(spec)
        rep.add("cpm.That_translation", _rel(cpm.build_That(p, q1, spec), S @ T1), 1e-10, where)
        tq = cpm.normalized_coords(p, q1, spec.m)[2]
        tau = build_tau2(spec, tq)
        rep.add("cpm.commutes_tau2", np.linalg.norm(T1 @ tau - tau @ T1, 1) / scale(T1 @ tau), 1e-8, where)
        rep.add("cpm.weight_periodicity", cpm.periodicity_residual(p, q1), TAU_ID, where)
        Hd = cpm.hamiltonian_from_That(spec, kp)
        rep.add("cpm.hamiltonian_expansion", _rel(Hd, build_H(spec, kp)), 1e-5, where)
        if spec.L > 3:
            continue
        for Q in cfg.charges(spec):
            for sec in enumerate_sectors(spec, Q, cfg.seed):
                w = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb} k'={kp}")
                V = sec.frame_full
                try:
                    mom = cpm.momentum(sec)
                    rep.add("cpm.momentum", np.linalg.norm(S @ V - mom * V), 1e-8, w)
                except ZeroDivisionError:
                    pass
                rep.add("cpm.wbar_curve", cpm.curve_w_residual(sec, kp), TAU_ID, w)
                try:
                    vecs = direct_eigvectors(sec, kp)
                except VectorError:
                    continue
                for s in sign_vectors(sec.mE):
                    v = vecs[s]
                    rep.add("cpm.G_consistency", cpm.G_consistency(sec, q1, s), 1e-8, w)
                    for which, T in (("T", T1), ("That", S @ T1)):
                        try:
                            lam = cpm.eval_T_eigenvalue(sec, q1, s, which, p)
                        except ZeroDivisionError:
                            continue
                        rep.add(f"cpm.{which}_closed_form", np.linalg.norm(T @ v - lam * v) / abs(lam), 1e-6, w)


# --------------------------------------------------------------- sectors


def suite_sectors(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from .sectors import P_fusion

    rng = np.random.default_rng(cfg.seed + 7)
    N, L, m, r = spec.N, spec.L, spec.m, spec.r
    for Q in cfg.charges(spec):
        where = _tag(spec, Q)
        try:
            secs = enumerate_sectors(spec, Q, cfg.seed)
        except SectorError as err:
            rep.fail("sectors.completeness", where, err)
            continue
        total = sum(s.degeneracy for s in secs)
        rep.add("sectors.completeness", abs(total - N ** (L - 1)), 0, where)
        keys = {(tuple(np.round(s.F.coeffs, 8)), s.Pa, s.Pb) for s in secs}
        rep.add("sectors.unique_triples", len(secs) - len(keys), 0, where)
        for s in secs:
            w = _tag(spec, Q, f"J={s.J} Pa={s.Pa} Pb={s.Pb}")
            rep.add("sectors.bethe_residual", s.diagnostics["bethe_residual"], 1e-7, w)
            rep.add("sectors.degeneracy", abs(s.frame.shape[1] - 2**s.mE), 0, w)
            bad = 0
            bad += not (0 <= s.Pa + s.Pb <= N - 1)
            bad += (s.Pb - s.Pa - (Q + r + (1 + 2 * m) * L)) % N != 0
            bad += N * s.mE != (N - 1) * L - s.Pa - s.Pb - 2 * s.J - s.dE
            bad += (s.Pmu - r) % N != 0
            bad += not (s.Pb - m * L + s.J <= s.Pmu <= s.Pb - m * L + s.J + s.dE)
            bad += s.alpha != 2 * s.Pmu + N * s.mE - (N - 1 - 2 * m) * L
            bad += s.beta != 2 * (s.Pb - s.Pa) - s.alpha
            bad += len(s.types) == 0
            rep.add("sectors.quantum_numbers", bad, 0, w)
            roots = s.Pev.roots() if s.mE else np.zeros(0)
            neg = max([(abs(z.imag) + max(z.real, 0)) / abs(z) for z in roots], default=0.0)
            rep.add("sectors.Pev_negative_roots", neg, 1e-6, w)
            rep.add("sectors.Pev_degree", abs(s.Pev.degree - s.mE), 0, w)
            rep.add("sectors.P_polynomial_in_tN", s.diagnostics["P_remainder"], 1e-8, w)
            for _ in range(3):
                t = _rand_c(rng, 0.7)
                pf = P_fusion(spec, Q, s.F, s.Pa, s.Pb, s.frame, t)
                rep.add("sectors.P_two_routes", abs(pf - s.P(t)) / abs(s.P(t)), 1e-7, w)
            if "I+" in s.types and "I-" in s.types:
                ok = s.Pa == 0 and s.Pb == 0 and Q == r and s.alpha == 0 and s.beta == 0
                rep.add("sectors.I_plus_minus", 0 if ok else 1, 0, w)


# --------------------------------------------------------------- onsager


def _kp_list(base, sec):
    """Deterministic perturbation of k' values until the energies separate."""
    from .onsager import energy, sign_vectors

    out = []
    for kp in base:
        k = kp
        for _ in range(20):
            E = np.array([energy(sec, s, k)[0] for s in sign_vectors(sec.mE)])
            gap = np.min(np.abs(E[:, None] - E[None, :]) + np.eye(len(E)) * 1e9) if len(E) > 1 else 1.0
            if gap > 10 * TAU_GRP:
                break
            k += 0.013
        out.append(k)
    return out


def suite_onsager(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from .onsager import V_ZERO, W_INF, compare_with_direct, energy, family_sign_check, limit_basis, sector_H, sign_vectors

    H1 = build_H1(spec)
    for Q in cfg.charges(spec):
        for sec in enumerate_sectors(spec, Q, cfg.seed):
            w = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb}")
            for kp in ONSAGER_KPRIMES:
                Hs = sector_H(sec, kp)
                vals = np.sort(np.linalg.eigvalsh(Hs))
                pred = np.sort([energy(sec, s, kp)[0] for s in sign_vectors(sec.mE)])
                rep.add("onsager.spectrum", np.max(np.abs(vals - pred)) / scale(Hs), 1e-8, w)
            fams = {W_INF: limit_basis(sec, W_INF), V_ZERO: limit_basis(sec, V_ZERO)}
            for kind, fam in fams.items():
                rep.add("onsager.limit_basis_gram", fam.gram_error(), 1e-8, w)
            for s, u in fams[W_INF].vectors.items():
                rep.add("onsager.H1_levels", np.linalg.norm(H1 @ u - (sec.beta + spec.N * sum(s)) * u), TAU_GRP, w)
            kps = _kp_list(list(cfg.kprimes) + [-0.4, 3.0], sec)
            for kp in kps:
                for kind, fam in fams.items():
                    rep.add("onsager.synthesis_vs_direct", 1 - compare_with_direct(sec, fam, kp), 1e-6, f"{w} k'={kp:.3f}")
                if kp < 0:
                    rep.add("onsager.w_v_monodromy", family_sign_check(sec, fams[W_INF], kp), 1e-6, w)


# --------------------------------------------------------------- duality


def suite_duality(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from . import cpm
    from .onsager import dual_sector, duality_vectors

    rng = np.random.default_rng(cfg.seed + 3)
    N, L, r = spec.N, spec.L, spec.r
    for Q in cfg.charges(spec):
        where = _tag(spec, Q)
        dspec = spec.with_r(Q)
        Psi = duality_map(N, L, r, Q)
        Vd = sector_basis(N, L, r, Q, "difference").isometry
        Vf = sector_basis(N, L, Q, r, "fourier").isometry
        P = Vf @ Vf.conj().T
        t = _rand_c(rng)
        rep.add("duality.tau2", _rel(Psi @ build_tau2(spec, t) @ Psi.conj().T, P @ build_tau2(dspec, t) @ P), TAU_ID, where)
        R = lambda op: Vd.conj().T @ op @ Vd
        for kp in cfg.kprimes:
            lhs = R(build_H(spec, kp))
            rhs = kp * R(Psi.conj().T @ build_H(dspec, 1 / kp) @ Psi)
            rep.add("duality.hamiltonian", _rel(lhs, rhs), TAU_ID, where)
        rep.add("duality.isometry", np.abs((Psi @ Vd).conj().T @ (Psi @ Vd) - np.eye(Vd.shape[1])).max(), 1e-10, where)
        back = duality_map(N, L, Q, r)
        rep.add("duality.translation", _rel(R(back @ Psi), R(root_power(N, Q * r) * translation(spec))), TAU_ID, where)
        if L <= 3:
            for i, kp in enumerate(cfg.kprimes):
                p = cpm.superintegrable_point(N, spec.m, kp)
                q = cpm.random_rapidity(p, cfg.seed + 31 * i + 5)
                rep.add("duality.cpm_transfer", cpm.duality_residual(spec, Q, q, kp), 1e-7, where)
        for sec in enumerate_sectors(spec, Q, cfg.seed):
            w = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb}")
            try:
                d = dual_sector(sec)
            except SectorError as err:
                rep.fail("duality.quantum_numbers", w, err)
                continue
            bad = (d.J != sec.J) + (d.mE != sec.mE) + (d.Pa != sec.Pa) + (d.Pb != sec.Pb)
            bad += d.Pmu not in (sec.Pmu + sec.dE, sec.Pmu - sec.dE)
            rep.add("duality.quantum_numbers", bad, 0, w)
            if sec.mE >= 1:
                for kp in cfg.kprimes[:2]:
                    dv = duality_vectors(sec, kp)
                    rep.add("duality.vector_modulus", dv["modulus_dev"], 1e-6, w)
                    rep.add("duality.vector_sign", dv["sign_dev"], 1e-6, w)


# ------------------------------------------------------------- inversion


def suite_inversion(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from .onsager import inversion_vectors
    from .xxz import inversion_bethe_overlap

    N, L, m, r = spec.N, spec.L, spec.m, spec.r
    for Q in cfg.charges(spec):
        js = dual_spin_inversion(spec, Q)
        rp = (-(1 + 2 * m) * L - r) % N
        alt = duality_map(N, L, rp, Q).conj().T @ spin_inversion(spec.with_r(Q)) @ duality_map(N, L, r, Q)
        rep.add("inversion.dual_operator", _rel(js, alt), TAU_ID, _tag(spec, Q))
        for sec in enumerate_sectors(spec, Q, cfg.seed):
            w = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb}")
            for kind in sorted({t[0] for t in sec.types}):
                try:
                    partner = inversion_partner(sec, kind)
                except SectorError as err:
                    rep.fail("inversion.partner_found", w, err)
                    continue
                rep.add("inversion.partner_found", 0, 0, w)
                th = np.max(np.abs(np.sort(partner.theta) - np.sort(np.pi - sec.theta))) if sec.mE else 0.0
                rep.add("inversion.theta_reflection", th, 1e-6, w)
                bad = (partner.mE != sec.mE) + (sec.Pa + sec.Pb != partner.dE) + (partner.Pa + partner.Pb != sec.dE)
                rep.add("inversion.quantum_numbers", bad, 0, w)
                back = inversion_partner(partner, kind)
                rep.add("inversion.involution", 0 if back.key() == sec.key() else 1, 0, w)
                for kp in cfg.kprimes[:2]:
                    res = inversion_vectors(sec, kp, kind)
                    rep.add("inversion.vectors", 1 - res["min_overlap"], 1e-6, w)
                if kind + "+" in sec.types:
                    rep.add("inversion.bethe_states", 1 - inversion_bethe_overlap(sec, kind), 1e-6, w)


# ------------------------------------------------------------------- xxz


def suite_xxz(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from . import xxz
    from .onsager import V_ZERO, W_INF, limit_basis, overlap

    rng = np.random.default_rng(cfg.seed + 5)
    N, L, m = spec.N, spec.L, spec.m
    where = _tag(spec)
    for _ in range(3):
        s = _rand_c(rng)
        rep.add("xxz.tau_T", xxz.tauT_residual(spec, s), TAU_ID, where)
        rep.add("xxz.monodromy_entries", max(xxz.tTMon_residuals(spec, s).values()), TAU_ID, where)
        rep.add("xxz.inversion_property", max(xxz.xxz_inversion_residual(spec, s).values()), TAU_ID, where)
        rep.add("xxz.abcd", xxz.abcd_residual(spec, s, _rand_c(rng)), TAU_ID, where)
        rep.add("xxz.pseudo_vacua", max(xxz.vacuum_checks(spec, s * s).values()), 1e-12 * scale(build_tau2(spec, s * s)), where)
    rep.add("xxz.K_equals_q_H1", xxz.K_vs_H1_residual(spec), TAU_ID, where)
    cp, cm = xxz.vacuum_charges(spec)
    rep.add("xxz.vacuum_charges", (cp != (-(1 + m) * L) % N) + (cm != (-m * L) % N), 0, where)
    for which in ("B", "C"):
        for sign in (1, -1):
            ref = xxz.nilpotent_power(spec, which, sign, N)
            lim = xxz.sbq_limit(spec, which, sign)
            rep.add("xxz.nilpotent_limit", np.linalg.norm(lim - ref, 1) / scale(ref), 1e-5, f"{where} {which}{sign:+d}")
            for n in range(1, min(N + 1, (N - 1) * L) + 1):
                c, res = xxz.grading_exponent(spec, xxz.nilpotent_power(spec, which, sign, n))
                rep.add("xxz.grading_residual", res, TAU_ID, where)
                expect = (-n if which == "B" else n) % N
                rep.add("xxz.grading_exponent", 0 if c == expect else 1, 0, f"{where} {which}{sign:+d} n={n}")
    top = (N - 1) * L
    for Q in cfg.charges(spec):
        t = _rand_c(rng)
        V = sector_basis(N, L, spec.r, Q, "difference").isometry
        for fam, (c1, c2) in xxz.commuting_classes(spec, Q).items():
            for n in range(c1, top + 1, N):
                for npr in range(c2, top + 1, N):
                    op = xxz.family_operator(spec, fam, n, npr)
                    rep.add("xxz.commuting_families", xxz.family_commutator(spec, Q, op, t), TAU_ID, _tag(spec, Q, fam))
            # negative control: powers off the admissible class that act nontrivially
            worst = math.inf
            for n in range(top + 1):
                for npr in range(top + 1):
                    if n % N == npr % N:
                        continue
                    op = xxz.family_operator(spec, fam, n, npr)
                    if np.linalg.norm(op @ V) > 1e-9:
                        worst = min(worst, xxz.family_commutator(spec, Q, op, t))
            if np.isfinite(worst):
                rep.add("xxz.commuting_families_negative_control", 1e-6 / worst, 1.0, _tag(spec, Q, fam))
        for sec in enumerate_sectors(spec, Q, cfg.seed):
            w = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb}")
            for tp in sec.types:
                sign = 1 if tp[1] == "+" else -1
                st = xxz.bethe_state(sec, sign, tp[0])
                cert = xxz.bethe_certificate(sec, st)
                rep.add("xxz.bethe_in_sector", cert["out_of_sector"], TAU_GRP, f"{w} {tp}")
                rep.add("xxz.bethe_H_relation", cert["eigen_residual"], 1e-7, f"{w} {tp}")
                fam = limit_basis(sec, W_INF if tp[0] == "I" else V_ZERO)
                top_label = tuple([sign] * sec.mE)
                rep.add("xxz.bethe_vs_limit_basis", 1 - overlap(st["vector"], fam.vectors[top_label]), 1e-6, f"{w} {tp}")


# -------------------------------------------------------------- fmcurrent


def suite_fmcurrent(spec: Tau2Spec, cfg: RunConfig, rep: Report):
    from . import xxz

    rng = np.random.default_rng(cfg.seed + 9)
    N = spec.N
    where = _tag(spec)
    for which in ("B", "C"):
        rep.add("fm.s_derivative_vanishes", xxz.avg_s_residual(spec, _rand_c(rng), which), TAU_ID, where)
    for Q in cfg.charges(spec):
        for sec in enumerate_sectors(spec, Q, cfg.seed):
            if sec.mE < 1:
                continue
            base = _tag(spec, Q, f"J={sec.J} Pa={sec.Pa} Pb={sec.Pb}")
            for tp in sec.types:
                sign = 1 if tp[1] == "+" else -1
                w = f"{base} {tp}"
                for _ in range(3):
                    s, sp = xxz.phi_sample(sec, rng), _rand_c(rng)
                    rep.add("fm.commutation", xxz.fm_commutation_residual(sec, [s], sp, sign), 1e-7, w)
                if spec.L <= 3:
                    rep.add("fm.commutation_two_factors",
                            xxz.fm_commutation_residual(sec, [xxz.phi_sample(sec, rng), xxz.phi_sample(sec, rng, 1.0)], _rand_c(rng), sign), 1e-7, w)
                s = xxz.phi_sample(sec, rng)
                cur = xxz.fm_current(sec, s, sign)
                rep.add("fm.periodicity", _rel(cur, xxz.fm_current(sec, s * xxz.qpow(N, 1), sign)), TAU_ID, w)
                rep.add("fm.phi_difference", xxz.vart_residual(sec, s), 1e-8, w)
                rep.add("fm.phi_constraint", xxz.varpc_residual(sec, s, sign), 1e-8, w)
                if tp == "I-":
                    rep.add("fm.inversion_consistency", xxz.fm_inversion_residual(sec, s), TAU_ID, w)
                try:
                    lm = xxz.product_operators(sec, sign)
                except xxz.RegularizationError as err:
                    rep.fail("fm.polynomial_remainder", w, err)
                    continue
                d = lm.current.diagnostics
                rep.add("fm.polynomial_remainder", d["polynomial_remainder"], 1e-7, w)
                rep.add("fm.frame_leak", d["frame_leak"], TAU_GRP, w)
                rep.add("fm.gamma_endpoints", max(d["gamma_0_dev"], d["gamma_L_dev"]), 1e-4, w)
                rep.add("fm.gamma_end_ratio", d["gamma_end_ratio_dev"], 1e-6, w)
                rep.add("fm.Q_remainder", d["Q_remainder"], 1e-7, w)
                ld = lm.diagnostics
                rep.add("fm.loop_law", ld["loop_law"], TAU_GRP, w)
                rep.add("fm.mode_windows", ld["window_consistency"], TAU_GRP, w)
                rep.add("fm.nilpotency", ld["nilpotency"], TAU_GRP, w)
                rep.add("fm.commutativity", ld["commutativity"], TAU_GRP, w)
                fam = xxz.generate_u_basis(sec, sign, lm)
                cert = xxz.u_basis_certificate(sec, fam)
                rep.add("fm.u_basis_gram", cert["gram"], 1e-8, w)
                rep.add("fm.u_basis_tau2", cert["tau2_residual"], TAU_GRP, w)
                rep.add("fm.u_basis_overlap", 1 - cert["min_overlap"], 1e-6, w)
            pairs = [k for k in "Ii" if k + "+" in sec.types and k + "-" in sec.types]
            if pairs:
                for name, val in xxz.serre_residuals(sec).items():
                    rep.add("fm.serre", val, TAU_GRP, f"{base} {name}")


SUITE_FUNCS = {
    "tau2": suite_tau2,
    "cpm": suite_cpm,
    "sectors": suite_sectors,
    "onsager": suite_onsager,
    "duality": suite_duality,
    "inversion": suite_inversion,
    "xxz": suite_xxz,
    "fmcurrent": suite_fmcurrent,
}


def _run_point(args) -> tuple:
    spec, cfg, suite = args
    rep = Report(cfg.tolerances)
    t0 = time.perf_counter()
    try:
        SUITE_FUNCS[suite](spec, cfg, rep)
    except Exception as err:  # recorded as a failed certificate, never swallowed
        rep.fail(f"{suite}.run", _tag(spec), err)
    return suite, rep, time.perf_counter() - t0


def run_suites(cfg: RunConfig) -> dict:
    """Run the configured suites over the grid; returns {suite: Report} and timings."""
    tasks = [(spec, cfg, suite) for suite in cfg.suites for spec in cfg.specs()]
    reports = {s: Report(cfg.tolerances) for s in cfg.suites}
    timings = {s: 0.0 for s in cfg.suites}
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    for suite, rep, dt in results:
        reports[suite].merge(rep)
        timings[suite] += dt
    return {"reports": reports, "timings": timings}
