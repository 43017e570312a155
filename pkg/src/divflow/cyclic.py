"""Tensor chains over the symbol algebra, b/B operators, Chern characters.

Chains are formal sums of tensor words; all numerics happen at pairing time
through the regularized/formal trace characters, so the boundary operators
stay exact.  We work in the normalized cyclic complex: words carrying the
unit symbol in a slot past the first pair to zero against every character
(d(1) = 0) and are dropped from the normal form, which is what makes
b^2 = B^2 = bB + Bb = 0 hold on the nose.

Chain-side b and B are the adjoints of the standard cochain formulas

  (b phi)(a0..a_{k+1}) = sum_j (-1)^j phi(..a_j a_{j+1}..)
                         + (-1)^{k+1} phi(a_{k+1} a0, a1, .., a_k)
  (B phi)(a0..a_{k-1}) = sum_j (-1)^{(k-1)j} [phi(1, a_j,.., a_{j-1})
                         - phi(a_j, 1, a_{j+1},.., a_{j-1})]

with the duality <phi, a0 x..x ak> = phi(a0,..,ak).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatchError, DivflowError, NotInvertibleError
from .forms import CycleCharacter
from .regint import DEFAULT_CFG, QuadConfig
from .symbols import (ParamSymbol, SymbolPath, sigma, sym_inv, sym_mul,
                      sym_scale, unit_symbol)

Word = tuple[ParamSymbol, ...]


def _word_key(word: Word):
    return tuple(id(a) for a in word)


class TensorChain:
    """Formal sum of tensor words of symbols, graded by degree = letters - 1."""

    __slots__ = ("p", "N", "components")

    def __init__(self, p: int, N: int):
        self.p = p
        self.N = N
        # degree -> {word_key: [coeff, word]}
        self.components: dict[int, dict] = {}

    def add_word(self, coeff: complex, word: Sequence[ParamSymbol]):
        word = tuple(word)
        if coeff == 0:
            return self
        for a in word:
            if a.p != self.p or a.N != self.N:
                raise DimensionMismatchError("chain letter has wrong p/N")
        if any(a.is_unit for a in word[1:]):
            return self  # degenerate word: normalized complex drops it
        deg = len(word) - 1
        bucket = self.components.setdefault(deg, {})
        key = _word_key(word)
        if key in bucket:
            bucket[key][0] += coeff
            if bucket[key][0] == 0:
                del bucket[key]
        else:
            bucket[key] = [complex(coeff), word]
        if not bucket:
            del self.components[deg]
        return self

    def words(self, degree: int):
        """(coeff, word) pairs of the given degree."""
        return [(c, w) for c, w in self.components.get(degree, {}).values()]

    def degrees(self):
        return sorted(self.components)

    def __add__(self, other: "TensorChain") -> "TensorChain":
        if (self.p, self.N) != (other.p, other.N):
            raise DimensionMismatchError("chain mismatch in +")
        out = TensorChain(self.p, self.N)
        for ch in (self, other):
            for deg in ch.degrees():
                for c, w in ch.words(deg):
                    out.add_word(c, w)
        return out

    def scale(self, c: complex) -> "TensorChain":
        out = TensorChain(self.p, self.N)
        for deg in self.degrees():
            for coeff, w in self.words(deg):
                out.add_word(c * coeff, w)
        return out

    def __repr__(self):
        sizes = {d: len(b) for d, b in self.components.items()}
        return f"TensorChain(p={self.p}, N={self.N}, words_by_degree={sizes})"


class RelativeChain:
    """Pair (bulk chain over the symbol algebra, boundary chain over classes)."""

    __slots__ = ("bulk", "boundary")

    def __init__(self, bulk: TensorChain, boundary: TensorChain):
        self.bulk = bulk
        self.boundary = boundary


# ---------------------------------------------------------------------------
# chain-side boundary operators
# ---------------------------------------------------------------------------

def b_chain(c: TensorChain) -> TensorChain:
    """Hochschild boundary: fold adjacent letters, wrap last onto first."""
    out = TensorChain(c.p, c.N)
    for deg in c.degrees():
        if deg == 0:
            continue
        for coeff, w in c.words(deg):
            n = len(w) - 1
            for j in range(n):
                folded = w[:j] + (sym_mul(w[j], w[j + 1]),) + w[j + 2:]
                out.add_word(coeff * (-1) ** j, folded)
            wrapped = (sym_mul(w[-1], w[0]),) + w[1:-1]
            out.add_word(coeff * (-1) ** n, wrapped)
    return out


def B_chain(c: TensorChain) -> TensorChain:
    """Connes boundary (adjoint of the cochain B, normalized complex).

    On a word of k letters: sum_j (-1)^((k-1) j) [unit insertion in front of
    the j-th cyclic rotation, minus the degenerate second family, which dies
    in the normalized complex].
    """
    one = unit_symbol(c.p, c.N)
    out = TensorChain(c.p, c.N)
    for deg in c.degrees():
        for coeff, w in c.words(deg):
            k = len(w)
            for j in range(k):
                rot = w[j:] + w[:j]
                sign = (-1) ** ((k - 1) * j)
                out.add_word(coeff * sign, (one,) + rot)
                # the second cochain sum pulls back to words with the unit in
                # slot 1; they are degenerate and add_word drops them
                out.add_word(-coeff * sign, (rot[0], one) + rot[1:])
    return out


# ---------------------------------------------------------------------------
# cochain-side operators (for cocycle identities on characters)
# ---------------------------------------------------------------------------

def cochain_b(phi: Callable[..., complex], k: int, unit: ParamSymbol):
    """b of a degree-k cochain; the result takes k+2 arguments."""

    def bphi(*a):
        if len(a) != k + 2:
            raise DimensionMismatchError(f"b phi takes {k + 2} arguments")
        total = 0.0 + 0.0j
        for j in range(k + 1):
            word = a[:j] + (sym_mul(a[j], a[j + 1]),) + a[j + 2:]
            total += (-1) ** j * phi(*word)
        total += (-1) ** (k + 1) * phi(sym_mul(a[-1], a[0]), *a[1:-1])
        return total

    return bphi


def cochain_B(phi: Callable[..., complex], k: int, unit: ParamSymbol):
    """B of a degree-k cochain; the result takes k arguments."""

    def Bphi(*a):
        if len(a) != k:
            raise DimensionMismatchError(f"B phi takes {k} arguments")
        total = 0.0 + 0.0j
        for j in range(k):
            rot = a[j:] + a[:j]
            sign = (-1) ** ((k - 1) * j)
            total += sign * phi(unit, *rot)
            total -= sign * phi(rot[0], unit, *rot[1:])
        return total

    return Bphi


# ---------------------------------------------------------------------------
# Chern characters
# ---------------------------------------------------------------------------

def ch_odd(g: ParamSymbol, K: int, g_inv: ParamSymbol | None = None) -> TensorChain:
    """Odd Chern character: degree 2k+1 component (-1)^k k! (g^-1 x g)^(k+1)."""
    gi = g_inv if g_inv is not None else sym_inv(g)
    out = TensorChain(g.p, g.N)
    for k in range(K + 1):
        coeff = (-1) ** k * math.factorial(k)
        out.add_word(coeff, (gi, g) * (k + 1))
    return out


def ch_sec_odd(g: ParamSymbol, h: ParamSymbol, K: int,
               g_inv: ParamSymbol | None = None) -> TensorChain:
    """Transgression character: even-degree chain with degree-0 term g^-1 h."""
    gi = g_inv if g_inv is not None else sym_inv(g)
    gih = sym_mul(gi, h)
    out = TensorChain(g.p, g.N)
    out.add_word(1.0, (gih,))
    for k in range(K + 1):
        coeff = (-1) ** (k + 1) * math.factorial(k)
        for j in range(k + 1):
            word = (gi, g) * (j + 1) + (gih,) + (gi, g) * (k - j)
            out.add_word(coeff, word)
    return out


def ch_sec2_odd(g: ParamSymbol, h1: ParamSymbol, h2: ParamSymbol, K: int,
                g_inv: ParamSymbol | None = None) -> TensorChain:
    """Second transgression character; antisymmetric in (h1, h2) under
    pairing with cyclic cocycles."""
    gi = g_inv if g_inv is not None else sym_inv(g)
    u1 = sym_mul(gi, h1)
    u2 = sym_mul(gi, h2)
    out = TensorChain(g.p, g.N)
    out.add_word(-1.0, (u1, u2))
    for k in range(K + 1):
        coeff = (-1) ** k * math.factorial(k)
        for j1 in range(k + 1):
            for j2 in range(k + 1 - j1):
                j3 = k - j1 - j2
                base = (gi, g) * (j1 + 1)
                mid = (gi, g) * j2
                tail = (gi, g) * j3
                out.add_word(-coeff, base + (u1,) + mid + (u2,) + tail)
                out.add_word(coeff, base + (u2,) + mid + (u1,) + tail)
    return out


def ch_even(e: ParamSymbol, K: int, idem_tol: float = 1e-9) -> TensorChain:
    """Even Chern character of an idempotent.

    Degree-2k component (-1)^k (2k)!/k! (e - 1/2) x e^(2k) for k >= 1; the
    degree-0 component is e itself, the convention consistent with the
    displayed transgression pairings (it only differs from the unit by a
    class that every character kills in degree 0).
    """
    _check_idempotent(e, idem_tol)
    out = TensorChain(e.p, e.N)
    out.add_word(1.0, (e,))
    half = sym_scale(unit_symbol(e.p, e.N), 0.5)
    e_half = e + sym_scale(half, -1.0)
    for k in range(1, K + 1):
        coeff = (-1) ** k * math.factorial(2 * k) / math.factorial(k)
        out.add_word(coeff, (e_half,) + (e,) * (2 * k))
    return out


def _check_idempotent(e: ParamSymbol, tol: float):
    rng = np.random.default_rng(0)
    for _ in range(4):
        mu = rng.normal(size=e.p)
        m = e(mu)
        if np.max(np.abs(m @ m - m)) > tol:
            raise DivflowError(
                f"symbol is not idempotent at mu={mu} (tol {tol})")


def iota(h: ParamSymbol, c: TensorChain) -> TensorChain:
    """Insertion map: sum over slots of (-1)^i (a0 x..x a_i x h x..x a_l)."""
    out = TensorChain(c.p, c.N)
    for deg in c.degrees():
        for coeff, w in c.words(deg):
            for i in range(len(w)):
                out.add_word(coeff * (-1) ** i, w[:i + 1] + (h,) + w[i + 1:])
    return out


def ch_sec_even(e: ParamSymbol, h: ParamSymbol, K: int) -> TensorChain:
    """Even transgression character iota(h) ch(e), h = (2e-1) de/ds."""
    return iota(h, ch_even(e, K))


# ---------------------------------------------------------------------------
# relative Chern character of admissible paths
# ---------------------------------------------------------------------------

def _gauss_nodes(n: int, breakpoints=()):
    """Composite Gauss-Legendre nodes/weights on [0,1] split at breakpoints."""
    cuts = [0.0, *sorted(b for b in breakpoints if 0.0 < b < 1.0), 1.0]
    x, w = np.polynomial.legendre.leggauss(max(4, n // (len(cuts) - 1)))
    nodes, weights = [], []
    for a, b in zip(cuts, cuts[1:]):
        mid, half = (a + b) / 2, (b - a) / 2
        nodes.extend(mid + half * x)
        weights.extend(half * w)
    return np.asarray(nodes), np.asarray(weights)


def relative_ch_path(path: SymbolPath, K: int, n_s: int = 32,
                     even: bool = False) -> RelativeChain:
    """Relative Chern character of an admissible path.

    Bulk: difference of endpoint characters.  Boundary: minus the s-integral
    of the transgression character of the symbol classes, using
    ch_sec_odd(sigma(a_s), sigma(da_s/ds)) in the odd case and
    iota(sigma((2f_s-1) df_s/ds)) ch_even(sigma(f_s)) in the even case.
    """
    path.validate()
    a1 = path(1.0)
    a0 = path(0.0)
    if even:
        bulk = ch_even(a1, K) + ch_even(a0, K).scale(-1.0)
    else:
        bulk = ch_odd(a1, K) + ch_odd(a0, K).scale(-1.0)
    nodes, weights = _gauss_nodes(n_s, path.breakpoints)
    boundary = TensorChain(path.p, path.N)
    for s, w in zip(nodes, weights):
        fs = sigma(path(float(s)))
        dfs = sigma(path.s_derivative(float(s)))
        if even:
            two_fs = sym_scale(fs, 2.0) + sym_scale(unit_symbol(path.p, path.N), -1.0)
            piece = ch_sec_even(fs, sym_mul(two_fs, dfs), K)
        else:
            piece = ch_sec_odd(fs, dfs, K, g_inv=sym_inv(fs, check_domain=False))
        boundary = boundary + piece.scale(-w)
    return RelativeChain(bulk, boundary)


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------

def chain_fingerprint(c: TensorChain, mu=None) -> dict[int, np.ndarray]:
    """Faithful multilinear evaluation: per degree, sum of coeff * kron(letters).

    Evaluating each letter at mu embeds the degree-n component into the
    Kronecker tensor power of the matrix algebra, where formal cancellations
    become numeric ones; a chain that vanishes identically has zero
    fingerprint at every mu.  Intended for identity tests (b^2 = 0 etc.).
    """
    mu = np.zeros(c.p) if mu is None else np.asarray(mu, dtype=float)
    out = {}
    for deg in c.degrees():
        acc = None
        for coeff, w in c.words(deg):
            k = np.eye(1, dtype=complex)
            for a in w:
                k = np.kron(k, a(mu))
            acc = coeff * k if acc is None else acc + coeff * k
        out[deg] = acc
    return out


def pair(cochain, chain, cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """Pairing of character data with a chain.

    cochain is a CycleCharacter (paired against a TensorChain, picking the
    component of the character's degree) or a (bulk, boundary) pair of
    CycleCharacters paired against a RelativeChain as
    <(phi, psi), (a, b)> = <phi, a> + <psi, b>.
    """
    if isinstance(chain, RelativeChain):
        phi, psi = cochain
        return pair(phi, chain.bulk, cfg) + pair(psi, chain.boundary, cfg)
    if not isinstance(cochain, CycleCharacter):
        raise DivflowError("cochain must be a CycleCharacter or a pair of them")
    total = 0.0 + 0.0j
    for coeff, word in chain.words(cochain.degree):
        total += coeff * cochain.of_word(word)
    return total


def character_pair(p: int, cfg: QuadConfig = DEFAULT_CFG):
    """The character (phi_p, psi_{p-1}) of the regularized relative cycle."""
    return (CycleCharacter(p, p, "bulk", cfg),
            CycleCharacter(p, p - 1, "boundary", cfg))
