"""Chiral Potts rapidities, Boltzmann weights, transfer matrices T and That,
and the closed-form T-eigenvalues on an Onsager sector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import TAU_ID, configs, duality_map, root_power, sector_basis
from .sectors import Sector
from .tau2 import Tau2Spec

SINGULAR = 1e-6


class RapidityError(ValueError):
    pass


@dataclass(frozen=True)
class Rapidity:
    """Point (x, y, mu) on the curve k x^N = 1 - k' mu^-N, k y^N = 1 - k' mu^N.

    k is carried explicitly since both square roots of 1 - k'^2 occur.
    """

    N: int
    x: complex
    y: complex
    mu: complex
    kprime: complex
    k: complex

    @property
    def t(self) -> complex:
        return self.x * self.y

    def curve_residual(self) -> float:
        N, k, kp = self.N, self.k, self.kprime
        r1 = k * self.x**N - 1 + kp * self.mu ** (-N)
        r2 = k * self.y**N - 1 + kp * self.mu**N
        return float(max(abs(r1), abs(r2), abs(k * k + kp * kp - 1)))

    def to_json(self) -> dict:
        return {
            "x_re": float(np.real(self.x)), "x_im": float(np.imag(self.x)),
            "y_re": float(np.real(self.y)), "y_im": float(np.imag(self.y)),
            "mu_re": float(np.real(self.mu)), "mu_im": float(np.imag(self.mu)),
            "kprime": float(np.real(self.kprime)),
            "k_re": float(np.real(self.k)), "k_im": float(np.imag(self.k)),
            "N": self.N,
        }

    @classmethod
    def from_json(cls, d: dict) -> Rapidity:
        return cls(int(d["N"]), complex(d["x_re"], d["x_im"]), complex(d["y_re"], d["y_im"]),
                   complex(d["mu_re"], d["mu_im"]), d["kprime"], complex(d["k_re"], d["k_im"]))


def _check_kprime(kprime):
    if kprime == 0 or abs(kprime) == 1:
        raise RapidityError(f"k' = {kprime} is excluded (degenerate curve)")


def eta(N: int, kprime: float) -> complex:
    _check_kprime(kprime)
    return complex((1 - kprime) / (1 + kprime)) ** (1.0 / N)


def superintegrable_point(N: int, m: int, kprime: float) -> Rapidity:
    h = np.sqrt(eta(N, kprime))
    x, y = h * root_power(N, m), h
    k = (1 - kprime) / x**N
    return Rapidity(N, x, y, 1.0 + 0j, kprime, k)


def curve_point(N: int, kprime, k, mu: complex, x_hint=None, y_hint=None) -> Rapidity:
    """Point over a given mu; x, y are the N-th roots closest to the hints (principal otherwise)."""
    xN = (1 - kprime * mu ** (-N)) / k
    yN = (1 - kprime * mu**N) / k

    def root(z, hint):
        r0 = complex(z) ** (1.0 / N)
        if hint is None:
            return r0
        cands = r0 * root_power(N, 1) ** np.arange(N)
        return cands[np.argmin(np.abs(cands - hint))]

    return Rapidity(N, root(xN, x_hint), root(yN, y_hint), complex(mu), kprime, k)


def random_rapidity(p: Rapidity, seed: int, avoid: Rapidity | None = None) -> Rapidity:
    """Random point on the curve of p; mu uniform on the annulus 0.5 <= |mu| <= 2."""
    rng = np.random.default_rng(seed)
    avoid = p if avoid is None else avoid
    for _ in range(1000):
        rad = rng.uniform(0.5, 2.0)
        mu = rad * np.exp(2j * np.pi * rng.uniform())
        q = curve_point(p.N, p.kprime, p.k, mu)
        q = Rapidity(p.N, q.x * root_power(p.N, int(rng.integers(p.N))),
                     q.y * root_power(p.N, int(rng.integers(p.N))), q.mu, q.kprime, q.k)
        if weight_denominators_ok(avoid, q):
            return q
    raise RapidityError("could not sample a non-singular rapidity")


def dual_rapidity(p: Rapidity) -> Rapidity:
    """p* = (i^(1/N) x mu, i^(1/N) y / mu, 1/mu) on the 1/k' curve, with k* = i k / k'."""
    c = np.exp(1j * np.pi / (2 * p.N))
    return Rapidity(p.N, c * p.x * p.mu, c * p.y / p.mu, 1 / p.mu, 1 / p.kprime, 1j * p.k / p.kprime)


# ---------------------------------------------------------------- weights


def weight_denominators_ok(p: Rapidity, q: Rapidity, tol: float = SINGULAR) -> bool:
    w = root_power(p.N, 1) ** np.arange(1, p.N)
    return bool(np.all(np.abs(p.y - w * q.x) >= tol) and np.all(np.abs(q.y - w * p.y) >= tol))


def _weights_upto(p: Rapidity, q: Rapidity, top: int):
    N = p.N
    W = np.ones(top + 1, dtype=complex)
    Wb = np.ones(top + 1, dtype=complex)
    for j in range(1, top + 1):
        wj = root_power(N, j)
        d1, d2 = p.y - wj * q.x, q.y - wj * p.y
        if abs(d1) < SINGULAR or abs(d2) < SINGULAR:
            raise RapidityError(f"singular Boltzmann weight denominator at j={j}")
        W[j] = W[j - 1] * (p.mu / q.mu) * (q.y - wj * p.x) / d1
        Wb[j] = Wb[j - 1] * (p.mu * q.mu) * (root_power(N, 1) * p.x - wj * q.x) / d2
    return W, Wb


def boltzmann_weights(p: Rapidity, q: Rapidity):
    """(W_pq(sigma), Wbar_pq(sigma)) for sigma = 0..N-1, normalized to 1 at 0."""
    W, Wb = _weights_upto(p, q, p.N - 1)
    return W, Wb


def periodicity_residual(p: Rapidity, q: Rapidity) -> float:
    """max |X(N)/X(0) - 1| over both weights; vanishes exactly on the curve."""
    W, Wb = _weights_upto(p, q, p.N)
    return float(max(abs(W[-1] - 1), abs(Wb[-1] - 1)))


def weight_fourier(weights: np.ndarray) -> np.ndarray:
    """X^(f)(k) = N^-1/2 sum_sigma w^(k sigma) X(sigma)."""
    N = len(weights)
    s = np.arange(N)
    return np.exp(2j * np.pi * np.outer(s, s) / N) @ weights / np.sqrt(N)


# -------------------------------------------------------- transfer matrices


def _next_site(spec: Tau2Spec, sig: np.ndarray) -> np.ndarray:
    """sigma_{l+1} with the skewed boundary sigma_{L+1} = sigma_1 - r."""
    nxt = np.roll(sig, -1, axis=1)
    nxt[:, -1] = sig[:, 0] - spec.r
    return nxt


def build_T(p: Rapidity, q: Rapidity, spec: Tau2Spec) -> np.ndarray:
    N = spec.N
    W, Wb = boltzmann_weights(p, q)
    sig = configs(N, spec.L)
    nxt = _next_site(spec, sig)
    a = W[(sig[:, None, :] - sig[None, :, :]) % N]
    b = Wb[(nxt[:, None, :] - sig[None, :, :]) % N]
    return np.prod(a * b, axis=2)


def build_That(p: Rapidity, q: Rapidity, spec: Tau2Spec) -> np.ndarray:
    N = spec.N
    W, Wb = boltzmann_weights(p, q)
    sig = configs(N, spec.L)
    nxt = _next_site(spec, sig)
    a = Wb[(sig[:, None, :] - sig[None, :, :]) % N]
    b = W[(sig[:, None, :] - nxt[None, :, :]) % N]
    return np.prod(a * b, axis=2)


def normalized_coords(p: Rapidity, q: Rapidity, m: int):
    """(x, y, t) normalized by the superintegrable point p."""
    x = root_power(p.N, m) * q.x / p.x
    y = q.y / p.y
    return x, y, x * y


def near_point(p: Rapidity, m: int, eps: float) -> Rapidity:
    """Curve point with mu = 1 + 2(k'-1) eps, on the branch through p."""
    kp = p.kprime
    return curve_point(p.N, kp, p.k, 1 + 2 * (kp - 1) * eps,
                       x_hint=p.x * (1 - 2 * kp * eps), y_hint=p.y * (1 + 2 * kp * eps))


def hamiltonian_from_That(spec: Tau2Spec, kprime: float, eps: float = 1e-4) -> np.ndarray:
    """H(k') from the central difference of That at the superintegrable point."""
    p = superintegrable_point(spec.N, spec.m, kprime)
    plus = build_That(p, near_point(p, spec.m, eps), spec)
    minus = build_That(p, near_point(p, spec.m, -eps), spec)
    D = (plus - minus) / (2 * eps)
    return D - (spec.N - 1 - 2 * spec.m) * spec.L * np.eye(spec.dim)


def duality_scalar(p: Rapidity, q: Rapidity, L: int) -> complex:
    """(W^(f)_{p*q*}(0) / W^(f)_{pq}(0))^L."""
    ps, qs = dual_rapidity(p), dual_rapidity(q)
    num = weight_fourier(boltzmann_weights(ps, qs)[0])[0]
    den = weight_fourier(boltzmann_weights(p, q)[0])[0]
    return (num / den) ** L


def duality_residual(spec: Tau2Spec, Q: int, q: Rapidity, kprime: float) -> float:
    """Relative residual of the duality between T(q) on (r, Q) and T^dagger(q*) on (Q, r)."""
    p = superintegrable_point(spec.N, spec.m, kprime)
    ps, qs = dual_rapidity(p), dual_rapidity(q)
    dspec = spec.with_r(Q)
    Psi = duality_map(spec.N, spec.L, spec.r, Q)
    Vf = sector_basis(spec.N, spec.L, Q, spec.r, "fourier").isometry
    lhs = duality_scalar(p, q, spec.L) * (Vf.conj().T @ Psi @ build_T(p, q, spec) @ Psi.conj().T @ Vf)
    rhs = Vf.conj().T @ build_T(ps, qs, dspec) @ Vf
    return float(np.linalg.norm(lhs - rhs, 1) / max(1.0, np.linalg.norm(rhs, 1)))


# ------------------------------------------------------ closed-form spectrum


def R_m(N: int, m: int, z) -> complex:
    den = np.prod([1 - root_power(N, j) * z for j in range(N - m)])
    return (1 - z**N) / den


def wbar(sector: Sector, kprime: float) -> np.ndarray:
    """Branch values w_i with (1-k') w_i = +sqrt(1 + k'^2 - 2k' cos theta_i)."""
    tN = 1 / sector.a
    val = np.sqrt(((1 - kprime) ** 2 / 4 + kprime / (1 - tN)) * 4 / (1 - kprime) ** 2 + 0j)
    return np.where(np.real((1 - kprime) * val) > 0, val, -val)


def curve_w_residual(sector: Sector, kprime: float) -> float:
    w = wbar(sector, kprime)
    tN = 1 / sector.a
    res = (1 - kprime) ** 2 / 4 * w**2 - (1 - kprime) ** 2 / 4 - kprime / (1 - tN)
    return float(np.max(np.abs(res))) if len(res) else 0.0


def factor_G(sector: Sector, lam: complex, w) -> complex:
    w = np.asarray(w, dtype=complex)
    return complex(np.prod(((lam + 1) - (lam - 1) * w) / (2 * lam)))


def alpha1(sector: Sector) -> complex:
    N, L, m = sector.N, sector.L, sector.spec.m
    return (-1) ** (m * L) * root_power(N, m * (m + 1) * L // 2 + m * sector.Pa)


def momentum(sector: Sector) -> complex:
    """Predicted S_R eigenvalue of the sector."""
    N, L, m = sector.N, sector.L, sector.spec.m
    F = sector.F
    ph = root_power(N, -m * (m + 1) * L + m * (sector.Pb - sector.Pa) + sector.Pb)
    den = F(root_power(N, m))
    if abs(den) < TAU_ID:
        raise ZeroDivisionError("F(w^m) vanishes")
    return complex(ph * F(root_power(N, 1 + m)) / den)


def eval_T_eigenvalue(sector: Sector, q: Rapidity, s, which: str = "T", p: Rapidity | None = None) -> complex:
    """Closed-form T (or That) eigenvalue of v(s; k') at rapidity q."""
    N, L, m = sector.N, sector.L, sector.spec.m
    kp = q.kprime
    p = superintegrable_point(N, m, kp) if p is None else p
    x, y, t = normalized_coords(p, q, m)
    F = sector.F
    s = np.asarray(s, dtype=float)
    lam = q.mu**N
    G = factor_G(sector, lam, s * wbar(sector, kp)) if sector.mE else 1.0
    common = N**L * (R_m(N, m, x) * (1 - x) / (R_m(N, m, y) * (1 - x**N))) ** L
    common *= x ** sector.Pa * y ** sector.Pb * q.mu ** (-sector.Pmu) * F(t) * G
    if which == "T":
        den = root_power(N, sector.Pb + m * (sector.Pb + sector.Pa)) * F(root_power(N, m + 1))
        a1 = alpha1(sector)
    elif which == "That":
        den = F(root_power(N, m))
        a1 = 1 / alpha1(sector)
    else:
        raise ValueError(which)
    if abs(den) < TAU_ID:
        raise ZeroDivisionError("formula denominator F(w^m) or F(w^(m+1)) vanishes")
    return complex(a1 * common / den)


def G_consistency(sector: Sector, q: Rapidity, s) -> float:
    """Relative |G(lam) G(1/lam) - P(t)/P(w^m)| at the point q."""
    N, m = sector.N, sector.spec.m
    p = superintegrable_point(N, m, q.kprime)
    _, _, t = normalized_coords(p, q, m)
    w = np.asarray(s, dtype=float) * wbar(sector, q.kprime)
    lam = q.mu**N
    lhs = factor_G(sector, lam, w) * factor_G(sector, 1 / lam, w)
    rhs = sector.P(t) / sector.P(root_power(N, m))
    return float(abs(lhs - rhs) / max(1e-300, abs(rhs)))
