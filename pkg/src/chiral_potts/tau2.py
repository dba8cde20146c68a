"""The superintegrable tau2 model: L-operator, monodromy, transfer matrix,
fusion hierarchy, the quantum chain H(k'), translations and spin inversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    Jet,
    check_N,
    config_index,
    configs,
    half,
    root_power,
    site_lift,
    spin_shift as _spin_shift,
    weyl_ops,
)


@dataclass(frozen=True)
class Tau2Spec:
    N: int
    L: int
    m: int = 0
    r: int = 0

    def __post_init__(self):
        check_N(self.N)
        if not 0 <= self.m < self.N:
            raise ValueError(f"m must lie in 0..N-1, got {self.m}")
        if self.L < 1:
            raise ValueError("L must be positive")
        object.__setattr__(self, "r", self.r % self.N)

    @property
    def M(self) -> int:
        return (self.N - 1) // 2

    @property
    def w(self) -> complex:
        return root_power(self.N, 1)

    def wp(self, k: int) -> complex:
        return root_power(self.N, k)

    @property
    def dim(self) -> int:
        return self.N**self.L

    def with_r(self, r: int) -> Tau2Spec:
        return Tau2Spec(self.N, self.L, self.m, r)


def local_L(spec: Tau2Spec, t) -> list:
    """Single-site normalized L-operator as a 2x2 nested list of N x N matrices."""
    N, m = spec.N, spec.m
    X, Z, _, _ = weyl_ops(N)
    one = np.eye(N)
    Zi = Z.conj().T
    return [
        [one - t * X, (one - spec.wp(1 + m) * X) @ Z],
        [-t * ((one - spec.wp(m) * X) @ Zi), -t * one + spec.wp(1 + 2 * m) * X],
    ]


def general_L(N: int, t, ap, bp, a, b, c) -> list:
    """Un-normalized L-operator with generic parameters (a', b', a, b, c)."""
    X, Z, _, _ = weyl_ops(N)
    w = root_power(N, 1)
    one = np.eye(N)
    Zi = Z.conj().T
    cb = c / (bp * b)
    return [
        [one - t * cb * X, (one / b - w * a * cb * X) @ Z],
        [-t * ((one / bp - ap * cb * X) @ Zi), -t / (bp * b) * one + w * ap * a * cb * X],
    ]


def build_L(spec: Tau2Spec, t: complex, site: int) -> list:
    loc = local_L(spec, t)
    return [[site_lift(loc[i][j], site, spec.L) for j in range(2)] for i in range(2)]


def _kron(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        a, b = Jet.lift(a), Jet.lift(b)
        return Jet(np.kron(a.value, b.value), np.kron(a.ds, b.value) + np.kron(a.value, b.ds),
                   np.kron(a.dq, b.value) + np.kron(a.value, b.dq))
    return np.kron(a, b)


def chain_product(local_ops: list) -> list:
    """Ordered product L_1 L_2 ... L_L over the auxiliary space.

    local_ops[l] is the 2x2 nested list of single-site matrices (or matrix
    jets) at site l+1.  Returns the monodromy [[A, B], [C, D]] on the chain.
    """
    mono = local_ops[-1]
    for loc in reversed(local_ops[:-1]):
        mono = [[_kron(loc[i][0], mono[0][j]) + _kron(loc[i][1], mono[1][j]) for j in range(2)] for i in range(2)]
    return mono


def monodromy(spec: Tau2Spec, t: complex) -> list:
    loc = local_L(spec, t)
    return chain_product([loc] * spec.L)


def build_tau2(spec: Tau2Spec, t: complex) -> np.ndarray:
    (A, _), (_, D) = monodromy(spec, spec.w * t)
    return A + spec.wp(spec.r) * D


def fusion_z(spec: Tau2Spec, t: complex) -> complex:
    """z at normalized argument t: (w^{1+2m} (1 - w^-m t)^2)^L."""
    return (spec.wp(1 + 2 * spec.m) * (1 - spec.wp(-spec.m) * t) ** 2) ** spec.L


def build_fusion(spec: Tau2Spec, j: int, t: complex) -> np.ndarray:
    """tau^(j)(t) from the fusion recursion, 0 <= j <= N+1."""
    if not 0 <= j <= spec.N + 1:
        raise ValueError(f"fusion level {j} outside 0..{spec.N + 1}")
    X = _spin_shift(spec.N, spec.L)
    wr = spec.wp(spec.r)
    prev, cur = np.zeros((spec.dim, spec.dim), dtype=complex), np.eye(spec.dim, dtype=complex)
    if j == 0:
        return prev
    for k in range(1, j):
        w_k = spec.wp(k - 1) * t
        nxt = build_tau2(spec, w_k) @ cur - wr * fusion_z(spec, w_k) * (X @ prev)
        prev, cur = cur, nxt
    return cur


def fusion_u(spec: Tau2Spec, t: complex, kprime: float, branch: int = 0) -> complex:
    """Scalar u = alpha_q + alphabar_q for a curve point q over normalized t.

    The point is fixed by lambda = mu^N, one of the two roots of the curve
    equation at t_q^N = eta^N t^N; `branch` selects the root.
    """
    N, L = spec.N, spec.L
    k = np.sqrt(complex(1 - kprime**2))
    eta_N = (1 - kprime) / (1 + kprime)
    tN = eta_N * t**N
    # k^2 tN = 1 - k'(lam + 1/lam) + k'^2  ->  k' lam^2 - (1 + k'^2 - k^2 tN) lam + k' = 0
    lam = np.roots([kprime, -(1 + kprime**2 - k**2 * tN), kprime])[branch]
    xN = (1 - kprime / lam) / k
    yN = (1 - kprime * lam) / k
    ypN = np.sqrt(complex(eta_N))
    a = (lam * (ypN - xN) ** 2 / (kprime * ypN**2)) ** L
    ab = ((ypN - yN) ** 2 / (lam * kprime * ypN**2)) ** L
    return a + ab


def fusion_boundary_residual(spec: Tau2Spec, t: complex, kprime: float, branch: int = 0) -> float:
    X = _spin_shift(spec.N, spec.L)
    top = build_fusion(spec, spec.N + 1, t)
    rhs = spec.wp(spec.r) * fusion_z(spec, t) * (X @ build_fusion(spec, spec.N - 1, spec.w * t))
    rhs = rhs + fusion_u(spec, t, kprime, branch) * np.eye(spec.dim)
    return float(np.linalg.norm(top - rhs, 1))


# --------------------------------------------------------------- quantum chain


def _zz_pair(spec: Tau2Spec, l: int, j: int) -> np.ndarray:
    """Z_l^j Z_{l+1}^{-j} with Z_{L+1} = w^{-r} Z_1."""
    N, L = spec.N, spec.L
    _, Z, _, _ = weyl_ops(N)
    Zj = np.linalg.matrix_power(Z, j)
    Zmj = Zj.conj().T
    if l < L:
        return site_lift(Zj, l, L) @ site_lift(Zmj, l + 1, L)
    return spec.wp(spec.r * j) * (site_lift(Zj, L, L) @ site_lift(Zmj, 1, L))


def build_H0(spec: Tau2Spec) -> np.ndarray:
    N, L, m = spec.N, spec.L, spec.m
    H = np.zeros((spec.dim, spec.dim), dtype=complex)
    for j in range(1, N):
        c = -2 * spec.wp(m * j) / (1 - spec.wp(-j))
        for l in range(1, L + 1):
            H += c * _zz_pair(spec, l, j)
    return H


def build_H1(spec: Tau2Spec) -> np.ndarray:
    N, L, m = spec.N, spec.L, spec.m
    X, _, _, _ = weyl_ops(N)
    loc = sum(-2 * spec.wp(m * j) / (1 - spec.wp(-j)) * np.linalg.matrix_power(X, j) for j in range(1, N))
    return sum(site_lift(loc, l, L) for l in range(1, L + 1))


def build_H(spec: Tau2Spec, kprime: float) -> np.ndarray:
    return build_H0(spec) + kprime * build_H1(spec)


def spin_shift(spec: Tau2Spec) -> np.ndarray:
    return _spin_shift(spec.N, spec.L)


def translation(spec: Tau2Spec) -> np.ndarray:
    """S_R |s_1..s_L> = |s_2..s_L, s_1 - r>."""
    N, L = spec.N, spec.L
    S = np.zeros((spec.dim, spec.dim), dtype=complex)
    for col, sig in enumerate(configs(N, L)):
        new = list(sig[1:]) + [sig[0] - spec.r]
        S[config_index(N, new), col] = 1
    return S


def spin_inversion(spec: Tau2Spec) -> np.ndarray:
    """j|s_1..s_L> = w^{-(1+2m) sum s} |s'> with s'_{L+1-l} = -s_l."""
    N, L, m = spec.N, spec.L, spec.m
    J = np.zeros((spec.dim, spec.dim), dtype=complex)
    for col, sig in enumerate(configs(N, L)):
        new = [-s for s in reversed(sig)]
        J[config_index(N, new), col] = spec.wp(-(1 + 2 * m) * int(sum(sig)))
    return J


def K_operator(spec: Tau2Spec) -> np.ndarray:
    """K = w^{L(M-m)} (prod X)^-1."""
    return spec.wp(spec.L * (spec.M - spec.m)) * spin_shift(spec).conj().T


def q_power(spec: Tau2Spec, k: int) -> complex:
    """q**k with q = w^M; half-integer powers use q^(1/2) = q^(M+1)."""
    return spec.wp(spec.M * k)


def q_half_power(spec: Tau2Spec, k: int) -> complex:
    """q**(k/2) inside the group of N-th roots of unity."""
    return spec.wp(spec.M * half(spec.N, k))


def dual_spin_inversion(spec: Tau2Spec, Q: int) -> np.ndarray:
    """j* on the (r, Q) space: |Q; n> -> |Q; n'> with n'_l = N-1-2m-n_{L+1-l}.

    Maps into the (r', Q) space, r + r' = -(1+2m)L.  Returned as a partial
    isometry on the full space.
    """
    from .algebra import sector_basis

    N, L, m = spec.N, spec.L, spec.m
    rp = (-(1 + 2 * m) * L - spec.r) % N
    src = sector_basis(N, L, spec.r, Q, "difference")
    dst = sector_basis(N, L, rp, Q, "difference")
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for c, n in enumerate(src.labels):
        n2 = [(N - 1 - 2 * m - n[L - 1 - l]) % N for l in range(L)]
        out += np.outer(dst.isometry[:, dst.index(n2)], src.isometry[:, c].conj())
    return out
