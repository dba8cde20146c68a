"""Numerical substrate: Weyl operators, site lifting, charge-sector bases,
complex polynomials and two-direction jets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TAU_ID = 1e-9
TAU_GRP = 1e-6


def check_N(N: int) -> int:
    if not isinstance(N, (int, np.integer)) or N < 3 or N % 2 == 0:
        raise ValueError(f"N must be an odd integer >= 3, got {N!r}")
    return int(N)


def omega(N: int) -> complex:
    return np.exp(2j * np.pi / N)


def root_power(N: int, k: int) -> complex:
    """omega**k with the exponent reduced mod N (exact on the unit circle)."""
    return np.exp(2j * np.pi * (k % N) / N)


def half(N: int, k: int) -> int:
    """Exponent e with 2e = k mod N, so that omega**(k/2) := omega**e."""
    return (k * (N + 1) // 2) % N


def scale(*mats) -> float:
    """Matrix 1-norm scale used to make residuals relative."""
    return max(1.0, *(float(np.linalg.norm(m, 1)) for m in mats))


@lru_cache(maxsize=None)
def _weyl(N: int):
    w = omega(N)
    X = np.roll(np.eye(N, dtype=complex), 1, axis=0)
    Z = np.diag(w ** np.arange(N))
    F = fourier_matrix(N)
    Xh = F @ X @ F.conj().T
    Zh = F @ Z @ F.conj().T
    for a in (X, Z, Xh, Zh):
        a.setflags(write=False)
    return X, Z, Xh, Zh


def weyl_ops(N: int):
    """Return (X, Z, Xh, Zh) on C^N.

    X|s> = |s+1>, Z|s> = w^s |s>; Xh|k^> = |(k+1)^>, Zh|k^> = w^k |k^>
    on the Fourier vectors.  All four are matrices in the spin basis, and
    X = Zh, Z = Xh^-1.
    """
    return _weyl(check_N(N))


def fourier_matrix(N: int) -> np.ndarray:
    """Columns are |k^> = N^-1/2 sum_s w^{-ks} |s>."""
    s = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(s, s) / N) / np.sqrt(N)


def site_lift(op: np.ndarray, site: int, L: int) -> np.ndarray:
    """Embed a single-site operator at site 1..L (site 1 is the leading tensor factor)."""
    if not 1 <= site <= L:
        raise ValueError(f"site {site} out of range 1..{L}")
    N = op.shape[0]
    left = np.eye(N ** (site - 1))
    right = np.eye(N ** (L - site))
    return np.kron(np.kron(left, op), right)


def kron_all(ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def configs(N: int, L: int) -> np.ndarray:
    """All spin configurations, row index = sum sigma_l N^(L-l)."""
    return np.array(list(itertools.product(range(N), repeat=L)), dtype=int).reshape(-1, L)


def config_index(N: int, sigma) -> int:
    idx = 0
    for s in sigma:
        idx = idx * N + (int(s) % N)
    return idx


def spin_shift(N: int, L: int) -> np.ndarray:
    X = weyl_ops(N)[0]
    return kron_all([X] * L)


@dataclass(frozen=True)
class SectorBasisMap:
    N: int
    L: int
    r: int
    Q: int
    kind: str
    labels: tuple  # tuple of n-tuples, one per column
    isometry: np.ndarray

    @property
    def dim(self) -> int:
        return self.isometry.shape[1]

    def index(self, n) -> int:
        return self.labels.index(tuple(int(x) % self.N for x in n))


def sector_labels(N: int, L: int, total: int) -> tuple:
    """All n in Z_N^L with sum n = total mod N, in lexicographic order."""
    return tuple(n for n in itertools.product(range(N), repeat=L) if sum(n) % N == total % N)


@lru_cache(maxsize=None)
def sector_basis(N: int, L: int, r: int, Q: int, kind: str) -> SectorBasisMap:
    """Orthonormal basis of the charge-Q eigenspace of prod X_l.

    kind="difference": columns |Q; n_1..n_L> = N^-1/2 sum_{s1} w^{-Q s1} |s1..sL>
    with s_l - s_{l+1} = n_l and sum n = r.
    kind="fourier": columns are product Fourier vectors |n'_1^ .. n'_L^> with sum n' = Q.
    """
    check_N(N)
    r, Q = r % N, Q % N
    if kind == "difference":
        labels = sector_labels(N, L, r)
        V = np.zeros((N**L, len(labels)), dtype=complex)
        for c, n in enumerate(labels):
            for s1 in range(N):
                sigma = [s1]
                for l in range(L - 1):
                    sigma.append(sigma[-1] - n[l])
                V[config_index(N, sigma), c] += root_power(N, -Q * s1) / np.sqrt(N)
    elif kind == "fourier":
        labels = sector_labels(N, L, Q)
        F = fourier_matrix(N)
        V = np.zeros((N**L, len(labels)), dtype=complex)
        for c, n in enumerate(labels):
            V[:, c] = kron_all([F[:, [k]] for k in n])[:, 0]
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    V.setflags(write=False)
    return SectorBasisMap(N, L, r, Q, kind, labels, V)


# ---------------------------------------------------------------- polynomials


class CPolynomial:
    """Complex polynomial; coeffs[k] multiplies x**k."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, tol: float = 0.0):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        if tol > 0 and c.size:
            c[np.abs(c) <= tol * max(1.0, np.abs(c).max())] = 0
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __mul__(self, other):
        if isinstance(other, CPolynomial):
            return CPolynomial(np.convolve(self.coeffs, other.coeffs))
        return CPolynomial(self.coeffs * other)

    __rmul__ = __mul__

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return CPolynomial(np.pad(self.coeffs, (0, n - len(self.coeffs))) + np.pad(other.coeffs, (0, n - len(other.coeffs))))

    def __sub__(self, other):
        return self + (-1) * other

    def scaled_arg(self, c: complex) -> CPolynomial:
        """x -> p(c x)."""
        return CPolynomial(self.coeffs * c ** np.arange(len(self.coeffs)))

    def roots(self) -> np.ndarray:
        return poly_roots(self)

    def __repr__(self):
        return f"CPolynomial({np.array2string(self.coeffs, precision=6)})"

    @classmethod
    def from_roots(cls, roots, lead: complex = 1.0) -> CPolynomial:
        return cls(np.polynomial.polynomial.polyfromroots(roots) * lead) if len(roots) else cls([lead])


class FitError(ValueError):
    pass


def poly_fit(points, values, degree: int | None = None) -> CPolynomial:
    """Interpolating (or least-squares, when degree < len(points)-1) polynomial."""
    x = np.asarray(points, dtype=complex)
    y = np.asarray(values, dtype=complex)
    if len(np.unique(np.round(x, 12))) != len(x):
        raise FitError("repeated interpolation nodes")
    deg = len(x) - 1 if degree is None else degree
    V = np.vander(x, deg + 1, increasing=True)
    cond = np.linalg.cond(V)
    if cond > 1e12:
        raise FitError(f"ill-conditioned fit (cond ~ {cond:.2e})")
    c, *_ = np.linalg.lstsq(V, y, rcond=None)
    return CPolynomial(c)


def poly_roots(p: CPolynomial) -> np.ndarray:
    """Roots from the eigenvalues of the companion matrix."""
    if p.is_zero():
        raise ValueError("zero polynomial has no isolated roots")
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    return np.polynomial.polynomial.polyroots(p.coeffs)


def circle_nodes(n: int, radius: float = 1.0, phase: float = 0.37) -> np.ndarray:
    """n points on a circle, rotated off any omega-orbit of the real axis."""
    return radius * np.exp(1j * (phase + 2 * np.pi * np.arange(n) / n))


# ---------------------------------------------------------------------- jets


class Jet:
    """First-order jet in two directions: value, s*d/ds part, q*d/dq part.

    The components may be scalars or numpy arrays; `@` composes matrix jets.
    """

    __slots__ = ("value", "ds", "dq")
    __array_priority__ = 1000

    def __init__(self, value, ds=0.0, dq=0.0):
        self.value = value
        self.ds = ds
        self.dq = dq

    @classmethod
    def const(cls, value):
        z = np.zeros_like(value, dtype=complex) if isinstance(value, np.ndarray) else 0j
        return cls(value, z, z)

    @staticmethod
    def lift(x):
        return x if isinstance(x, Jet) else Jet.const(x)

    def __add__(self, o):
        o = Jet.lift(o)
        return Jet(self.value + o.value, self.ds + o.ds, self.dq + o.dq)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.ds, -self.dq)

    def __sub__(self, o):
        return self + (-Jet.lift(o))

    def __rsub__(self, o):
        return Jet.lift(o) - self

    def __mul__(self, o):
        o = Jet.lift(o)
        return Jet(self.value * o.value, self.ds * o.value + self.value * o.ds, self.dq * o.value + self.value * o.dq)

    __rmul__ = __mul__

    def __matmul__(self, o):
        o = Jet.lift(o)
        return Jet(self.value @ o.value, self.ds @ o.value + self.value @ o.ds, self.dq @ o.value + self.value @ o.dq)

    def __rmatmul__(self, o):
        return Jet.lift(o) @ self

    def __truediv__(self, o):
        o = Jet.lift(o)
        inv = 1.0 / o.value
        return Jet(self.value * inv, (self.ds - self.value * inv * o.ds) * inv, (self.dq - self.value * inv * o.dq) * inv)

    def __rtruediv__(self, o):
        return Jet.lift(o) / self

    def __pow__(self, n):
        # scalar jets only; real or integer exponent
        v = self.value ** n
        f = n * self.value ** (n - 1) if n != 0 else 0
        return Jet(v, f * self.ds, f * self.dq)

    def __repr__(self):
        return f"Jet({self.value!r}, ds={self.ds!r}, dq={self.dq!r})"


def jet_variable(value: complex, direction: str) -> Jet:
    """A coordinate with unit logarithmic derivative along `direction` ("s" or "q")."""
    if direction == "s":
        return Jet(complex(value), complex(value), 0j)
    if direction == "q":
        return Jet(complex(value), 0j, complex(value))
    raise ValueError(direction)


def duality_map(N: int, L: int, r: int, Q: int) -> np.ndarray:
    """Psi: |Q; n_1..n_L> -> |n_1^ .. n_L^> as a partial isometry on the full space.

    Its domain is the (r, Q) space and its range the charge-r subspace,
    which is read with boundary condition Q.
    """
    Vd = sector_basis(N, L, r, Q, "difference")
    Vf = sector_basis(N, L, Q, r, "fourier")
    assert Vd.labels == Vf.labels
    return Vf.isometry @ Vd.isometry.conj().T
