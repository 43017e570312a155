"""Symbol-valued differential forms on R^p and their graded traces.

Omega_p = symbols tensor Lambda(R^p)* carries the exterior derivative d, the
wedge product, the regularized graded trace tr_bar (nonzero only in top
degree, where it is the regularized integral of the pointwise matrix trace)
and its boundary tr_tilde = tr_bar o d, the closed "formal" trace of degree
p-1.  tr_tilde depends only on the symbol expansion: the default evaluation
reads off the degree (1-p), log-free component of the trace on the sphere at
infinity, with the defining composition kept as a cross-check.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import (DimensionMismatchError, DivflowError,
                     InsufficientExpansionError)
from .regint import DEFAULT_CFG, QuadConfig, reg_integral, sphere_integral_profile
from .symbols import (NEG_INF, ParamSymbol, sym_add, sym_mul, sym_scale,
                      sym_trace, zero_symbol)


class OperatorForm:
    """A differential form with ParamSymbol coefficients.

    coeffs maps strictly increasing 1-based multi-indices of length ``degree``
    to symbols; absent indices are zero.  Forms of degree > p are identically
    zero and normalize to an empty coefficient map.
    """

    __slots__ = ("p", "N", "degree", "coeffs")

    def __init__(self, p: int, N: int, degree: int,
                 coeffs: Mapping[tuple[int, ...], ParamSymbol] | None = None):
        self.p = int(p)
        self.N = int(N)
        self.degree = int(degree)
        clean = {}
        if degree <= p:
            for idx, sym in (coeffs or {}).items():
                idx = tuple(int(i) for i in idx)
                if len(idx) != degree or list(idx) != sorted(set(idx)):
                    raise DivflowError(f"bad multi-index {idx} for degree {degree}")
                if any(not 1 <= i <= p for i in idx):
                    raise DimensionMismatchError(f"index {idx} outside 1..{p}")
                if sym.p != p or sym.N != N:
                    raise DimensionMismatchError("coefficient symbol mismatch")
                clean[idx] = sym
        self.coeffs = clean

    @staticmethod
    def from_symbol(a: ParamSymbol) -> "OperatorForm":
        return OperatorForm(a.p, a.N, 0, {(): a})

    def coeff(self, idx: tuple[int, ...]) -> ParamSymbol:
        return self.coeffs.get(tuple(idx)) or zero_symbol(self.p, self.N)

    def __add__(self, other: "OperatorForm") -> "OperatorForm":
        if (self.p, self.N, self.degree) != (other.p, other.N, other.degree):
            raise DimensionMismatchError("form mismatch in +")
        out = dict(self.coeffs)
        for idx, sym in other.coeffs.items():
            out[idx] = sym_add(out[idx], sym) if idx in out else sym
        return OperatorForm(self.p, self.N, self.degree, out)

    def scale(self, c: complex) -> "OperatorForm":
        return OperatorForm(self.p, self.N, self.degree,
                            {i: sym_scale(s, c) for i, s in self.coeffs.items()})

    def __repr__(self):
        return (f"OperatorForm(p={self.p}, N={self.N}, degree={self.degree}, "
                f"indices={sorted(self.coeffs)})")


def _merge_sign(i_left: Sequence[int], i_right: Sequence[int]):
    """Sorted merge of disjoint index tuples with the permutation sign."""
    merged = list(i_left) + list(i_right)
    sign = 1
    # insertion sort, counting transpositions; index tuples are tiny
    for a in range(1, len(merged)):
        b = a
        while b > 0 and merged[b - 1] > merged[b]:
            merged[b - 1], merged[b] = merged[b], merged[b - 1]
            sign = -sign
            b -= 1
    return tuple(merged), sign


def wedge(w: OperatorForm, e: OperatorForm) -> OperatorForm:
    """Graded product with matrix-product coefficients."""
    if w.p != e.p or w.N != e.N:
        raise DimensionMismatchError("form mismatch in wedge")
    degree = w.degree + e.degree
    if degree > w.p:
        return OperatorForm(w.p, w.N, degree)
    out: dict[tuple[int, ...], ParamSymbol] = {}
    for i1, a in w.coeffs.items():
        for i2, b in e.coeffs.items():
            if set(i1) & set(i2):
                continue
            idx, sign = _merge_sign(i1, i2)
            term = sym_mul(a, b)
            if sign < 0:
                term = sym_scale(term, -1.0)
            out[idx] = sym_add(out[idx], term) if idx in out else term
    return OperatorForm(w.p, w.N, degree, out)


def ext_d(w: OperatorForm) -> OperatorForm:
    """Exterior derivative; satisfies d^2 = 0 and the graded Leibniz rule."""
    degree = w.degree + 1
    if degree > w.p:
        return OperatorForm(w.p, w.N, degree)
    out: dict[tuple[int, ...], ParamSymbol] = {}
    for idx, a in w.coeffs.items():
        for j in range(1, w.p + 1):
            if j in idx:
                continue
            pos = sum(1 for i in idx if i < j)
            sign = -1.0 if pos % 2 else 1.0
            key = tuple(sorted(idx + (j,)))
            term = a.partial(j)
            if sign < 0:
                term = sym_scale(term, sign)
            out[key] = sym_add(out[key], term) if key in out else term
    return OperatorForm(w.p, w.N, degree, out)


def d_of(a: ParamSymbol) -> OperatorForm:
    """da as a 1-form; shorthand for ext_d of the 0-form a."""
    return ext_d(OperatorForm.from_symbol(a))


def wedge_power(w: OperatorForm, n: int) -> OperatorForm:
    if n < 1:
        raise DivflowError("wedge_power needs n >= 1")
    out = w
    for _ in range(n - 1):
        out = wedge(out, w)
    return out


TOP = None  # sentinel documented: top coefficient index is (1, 2, ..., p)


def tr_bar(w: OperatorForm, cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """Regularized graded trace: 0 below top degree, else the regularized
    integral of the pointwise matrix trace of the top coefficient."""
    if w.degree < w.p:
        return 0.0 + 0.0j
    if w.degree > w.p:
        return 0.0 + 0.0j
    top = w.coeffs.get(tuple(range(1, w.p + 1)))
    if top is None:
        return 0.0 + 0.0j
    return reg_integral(sym_trace(top), cfg)


def tr_tilde_sphere(eta: OperatorForm, cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """Formal trace via the sphere at infinity.

    For eta of degree p-1, tr_bar(d eta) picks up exactly the flux of the
    degree (1-p), log-power-0 homogeneous component through the unit sphere:
    tr_tilde(eta) = sum_j (-1)^(j-1) int_{S^(p-1)} omega_j tr(eta_{I_j}).
    """
    p = eta.p
    if eta.degree != p - 1:
        raise DivflowError(f"tr_tilde expects degree {p - 1}, got {eta.degree}")
    total = 0.0 + 0.0j
    for idx, sym in eta.coeffs.items():
        missing = [j for j in range(1, p + 1) if j not in idx]
        j = missing[0]
        sign = -1.0 if (j - 1) % 2 else 1.0
        tr = sym_trace(sym)
        if not tr.remainder_order < -(p - 1):
            raise InsufficientExpansionError(
                f"tr_tilde needs expansion below degree {1 - p}; "
                f"coefficient {idx} stops at {tr.remainder_order}")
        prof = tr._tbl.data.get((float(1 - p), 0))
        if prof is None:
            continue
        flux = sphere_integral_profile(prof.times_coord(j), p, cfg)[0, 0]
        total += sign * complex(flux)
    return total


def tr_tilde(eta: OperatorForm, cfg: QuadConfig = DEFAULT_CFG,
             method: str = "sphere") -> complex:
    """Formal trace tr_bar o d; symbolic, hence computable from expansions.

    method="sphere" (default) uses the sphere-at-infinity formula;
    method="definition" evaluates tr_bar(ext_d(eta)) as a cross-check.
    """
    if method == "sphere":
        return tr_tilde_sphere(eta, cfg)
    if method == "definition":
        return tr_bar(ext_d(eta), cfg)
    raise DivflowError(f"unknown tr_tilde method {method!r}")


# ---------------------------------------------------------------------------
# characters of the regularized cycle
# ---------------------------------------------------------------------------

class CycleCharacter:
    """Multilinear functional (1/k!) * trace(a0 da1 ... dak) of fixed degree.

    side="bulk" uses the regularized trace tr_bar (degree k = p); the word
    letters are full symbols.  side="boundary" uses the formal trace tr_tilde
    (degree k = p-1); the letters are symbol classes (expansion-backed).
    """

    def __init__(self, p: int, degree: int, side: str,
                 cfg: QuadConfig = DEFAULT_CFG):
        if side not in ("bulk", "boundary"):
            raise DivflowError("side must be 'bulk' or 'boundary'")
        if side == "bulk" and degree != p:
            raise DivflowError("bulk character degree must equal p")
        if side == "boundary" and degree != p - 1:
            raise DivflowError("boundary character degree must be p-1")
        self.p = p
        self.degree = degree
        self.side = side
        self.cfg = cfg

    def of_word(self, word: Sequence[ParamSymbol]) -> complex:
        if len(word) != self.degree + 1:
            raise DimensionMismatchError(
                f"character of degree {self.degree} takes {self.degree + 1} letters")
        form = OperatorForm.from_symbol(word[0])
        for a in word[1:]:
            form = wedge(form, d_of(a))
        norm = 1.0 / math.factorial(self.degree)
        if self.side == "bulk":
            return norm * tr_bar(form, self.cfg)
        return norm * tr_tilde(form, self.cfg)

    def __call__(self, *word: ParamSymbol) -> complex:
        return self.of_word(word)


def character(k: int, words: Sequence[ParamSymbol],
              cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """phi_k(a0,...,ak) = (1/k!) tr_bar(a0 da1 ... dak); requires k = p."""
    p = words[0].p
    return CycleCharacter(p, k, "bulk", cfg).of_word(words)


def boundary_character(k: int, words: Sequence[ParamSymbol],
                       cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """psi_k(b0,...,bk) = (1/k!) tr_tilde(b0 db1 ... dbk); requires k = p-1."""
    p = words[0].p
    return CycleCharacter(p, k, "boundary", cfg).of_word(words)
