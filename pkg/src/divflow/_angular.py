"""Matrix-valued angular profiles on the unit sphere S^{p-1}.

A homogeneous symbol term evaluates as ``t(mu/|mu|) * |mu|^a * log^l |mu|``;
this module implements the algebra of the angular factors ``t``.  Profiles
coming out of the closed-form constructors are polynomials in the ambient
coordinates restricted to the sphere, which keeps products, tangential
derivatives and sphere integrals exact.  Arbitrary callables are supported as
a fallback; they are extended to R^p \\ {0} as degree-0 homogeneous functions
and differentiated by Richardson-extrapolated central differences.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import DimensionMismatchError

_FD_STEP = 1e-5


def _as_matrix(value, n: int) -> np.ndarray:
    m = np.asarray(value, dtype=complex)
    if m.shape == ():
        m = m.reshape(1, 1)
    if m.shape != (n, n):
        raise DimensionMismatchError(f"expected ({n},{n}) matrix, got {m.shape}")
    return m


def _canonical_expo(expo: tuple[int, ...], p: int) -> tuple[int, ...]:
    # On S^0 = {+1,-1} every power of omega collapses to omega^(e mod 2).
    if p == 1:
        return (expo[0] % 2,)
    return expo


class Profile:
    """Angular factor of a homogeneous term: S^{p-1} -> C^{n x n}.

    Exactly one of ``poly`` (monomial dict) and ``fn`` (callable) is set.
    """

    __slots__ = ("p", "n", "poly", "fn")

    def __init__(self, p: int, n: int, poly: Mapping[tuple[int, ...], np.ndarray] | None = None,
                 fn: Callable[[np.ndarray], np.ndarray] | None = None):
        if (poly is None) == (fn is None):
            raise ValueError("exactly one of poly/fn must be given")
        self.p = int(p)
        self.n = int(n)
        self.fn = fn
        if poly is not None:
            clean: dict[tuple[int, ...], np.ndarray] = {}
            for expo, mat in poly.items():
                expo = _canonical_expo(tuple(int(e) for e in expo), self.p)
                if len(expo) != self.p:
                    raise DimensionMismatchError("monomial exponent length != p")
                m = _as_matrix(mat, self.n)
                if expo in clean:
                    clean[expo] = clean[expo] + m
                else:
                    clean[expo] = m
            self.poly = {e: m for e, m in clean.items() if np.any(m != 0)}
        else:
            self.poly = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(mat, p: int) -> "Profile":
        m = np.atleast_2d(np.asarray(mat, dtype=complex))
        return Profile(p, m.shape[0], poly={(0,) * p: m})

    @staticmethod
    def monomial(mat, p: int, expo: tuple[int, ...]) -> "Profile":
        m = np.atleast_2d(np.asarray(mat, dtype=complex))
        return Profile(p, m.shape[0], poly={tuple(expo): m})

    @staticmethod
    def zero(p: int, n: int) -> "Profile":
        return Profile(p, n, poly={})

    @staticmethod
    def from_callable(fn: Callable[[np.ndarray], np.ndarray], p: int, n: int) -> "Profile":
        def normalized(v):
            v = np.asarray(v, dtype=float)
            return _as_matrix(fn(v / np.linalg.norm(v)), n)

        return Profile(p, n, fn=normalized)

    # -- evaluation --------------------------------------------------------

    def __call__(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (self.p,):
            raise DimensionMismatchError(f"expected omega of length {self.p}")
        if self.fn is not None:
            return self.fn(omega)
        out = np.zeros((self.n, self.n), dtype=complex)
        for expo, mat in self.poly.items():
            out += mat * np.prod(omega ** np.asarray(expo))
        return out

    def eval_batch(self, omegas: np.ndarray) -> np.ndarray:
        """Evaluate at many sphere points; omegas has shape (M, p)."""
        omegas = np.asarray(omegas, dtype=float)
        if self.poly is not None:
            out = np.zeros((omegas.shape[0], self.n, self.n), dtype=complex)
            for expo, mat in self.poly.items():
                scal = np.prod(omegas ** np.asarray(expo), axis=1)
                out += scal[:, None, None] * mat
            return out
        return np.stack([self.fn(w) for w in omegas])

    def _hom(self, v: np.ndarray) -> np.ndarray:
        """Degree-0 homogeneous extension, defined for any v != 0."""
        if self.fn is not None:
            return self.fn(v)
        return self(np.asarray(v, dtype=float) / np.linalg.norm(v))

    # -- algebra -----------------------------------------------------------

    def _check(self, other: "Profile"):
        if self.p != other.p or self.n != other.n:
            raise DimensionMismatchError("profile p/n mismatch")

    def __add__(self, other: "Profile") -> "Profile":
        self._check(other)
        if self.poly is not None and other.poly is not None:
            merged = dict(self.poly)
            for e, m in other.poly.items():
                merged[e] = merged[e] + m if e in merged else m
            return Profile(self.p, self.n, poly=merged)
        a, b = self, other
        return Profile(self.p, self.n, fn=lambda w: a._hom(w) + b._hom(w))

    def __matmul__(self, other: "Profile") -> "Profile":
        self._check(other)
        if self.poly is not None and other.poly is not None:
            prod: dict[tuple[int, ...], np.ndarray] = {}
            for e1, m1 in self.poly.items():
                for e2, m2 in other.poly.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    m = m1 @ m2
                    if e in prod:
                        prod[e] = prod[e] + m
                    else:
                        prod[e] = m
            return Profile(self.p, self.n, poly=prod)
        a, b = self, other
        return Profile(self.p, self.n, fn=lambda w: a._hom(w) @ b._hom(w))

    def scale(self, c: complex) -> "Profile":
        if self.poly is not None:
            return Profile(self.p, self.n, poly={e: c * m for e, m in self.poly.items()})
        f = self._hom
        return Profile(self.p, self.n, fn=lambda w: c * f(w))

    def trace(self) -> "Profile":
        if self.poly is not None:
            return Profile(self.p, 1,
                           poly={e: np.trace(m).reshape(1, 1) for e, m in self.poly.items()})
        f = self._hom
        return Profile(self.p, 1, fn=lambda w: np.trace(f(w)).reshape(1, 1))

    def times_coord(self, j: int) -> "Profile":
        """Multiply by the coordinate function omega_j (1-based axis)."""
        if self.poly is not None:
            shifted = {}
            for e, m in self.poly.items():
                ee = list(e)
                ee[j - 1] += 1
                key = _canonical_expo(tuple(ee), self.p)
                shifted[key] = shifted[key] + m if key in shifted else m
            return Profile(self.p, self.n, poly=shifted)
        f = self._hom
        return Profile(self.p, self.n,
                       fn=lambda w: (w[j - 1] / np.linalg.norm(w)) * f(w))

    def is_zero(self) -> bool:
        return self.poly is not None and not self.poly

    # -- differentiation ---------------------------------------------------

    def _ambient_partial_poly(self, j: int) -> "Profile":
        out: dict[tuple[int, ...], np.ndarray] = {}
        for e, m in self.poly.items():
            k = e[j - 1]
            if k == 0:
                continue
            ee = list(e)
            ee[j - 1] = k - 1
            key = tuple(ee)
            out[key] = out.get(key, 0) + k * m
        return Profile(self.p, self.n, poly=out)

    def tangential_partial(self, j: int) -> "Profile":
        """Tangential derivative along e_j projected onto T S^{p-1}.

        For a polynomial representative P this is the exact polynomial
        grad_j P - omega_j * (omega . grad P); the result depends only on the
        restriction of P to the sphere.
        """
        if self.p == 1:
            return Profile.zero(1, self.n)
        if self.poly is not None:
            dj = self._ambient_partial_poly(j)
            radial = Profile.zero(self.p, self.n)
            for i in range(1, self.p + 1):
                radial = radial + self._ambient_partial_poly(i).times_coord(i)
            return dj + radial.times_coord(j).scale(-1.0)
        f = self._hom  # degree-0 homogeneous extension; FD is automatically tangential

        def deriv(w):
            w = np.asarray(w, dtype=float)
            w = w / np.linalg.norm(w)  # keep the wrapper degree-0 homogeneous
            h = _FD_STEP
            e = np.zeros(self.p)
            e[j - 1] = h
            d1 = (f(w + e) - f(w - e)) / (2 * h)
            d2 = (f(w + 2 * e) - f(w - 2 * e)) / (4 * h)
            return (4 * d1 - d2) / 3.0

        return Profile(self.p, self.n, fn=deriv)
