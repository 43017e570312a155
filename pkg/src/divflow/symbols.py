"""Matrix-valued parametric symbols on R^p with log-polyhomogeneous expansions.

A ParamSymbol carries both an exact pointwise evaluator and a finite list of
homogeneous expansion terms valid for |mu| >= 1, together with a remainder
order rho guaranteeing  eval(mu) - sum(terms)(mu) = O(|mu|^rho).  All algebra
(sum, product, inverse, derivative) acts on both layers and keeps the
remainder-order bookkeeping honest: a product is only trusted down to
max(rho_a + top_b, top_a + rho_b).
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from ._angular import Profile
from .errors import (DimensionMismatchError, DivflowError,
                     InsufficientExpansionError, NotEllipticError,
                     NotInvertibleError)

NEG_INF = float("-inf")

FD_REL_STEP = 1e-5          # central-difference step is FD_REL_STEP*(1+|mu|)
DEFAULT_EXTRA_DEPTH = 5     # inverse expansions reach leading degree minus this


def _akey(alpha: float) -> float:
    return round(float(alpha), 9)


def _gbinom(z: float, j: int) -> float:
    # generalized binomial via the falling factorial; robust at negative
    # integer z where the gamma-function route hits poles
    out = 1.0
    for i in range(j):
        out *= (z - i) / (i + 1)
    return out


# ---------------------------------------------------------------------------
# homogeneous terms and term tables
# ---------------------------------------------------------------------------

class HomogTerm:
    """One term t(mu/|mu|) |mu|^degree log^l |mu| of an asymptotic expansion."""

    __slots__ = ("degree", "log_power", "angular")

    def __init__(self, degree: float, log_power: int, angular: Profile):
        if log_power < 0:
            raise DivflowError("log power must be nonnegative")
        self.degree = float(degree)
        self.log_power = int(log_power)
        self.angular = angular

    def __call__(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        r = np.linalg.norm(mu)
        if r == 0:
            raise DivflowError("homogeneous term undefined at mu = 0")
        val = self.angular(mu / r) * r ** self.degree
        if self.log_power:
            val = val * math.log(r) ** self.log_power
        return val


class _Tbl:
    """Term table {(degree, log_power): Profile} with a validity floor rho.

    Entries with degree <= rho are never stored; rho = -inf means the table
    is the complete expansion (exact symbol).
    """

    __slots__ = ("p", "n", "data", "rho")

    def __init__(self, p: int, n: int, data=None, rho: float = NEG_INF):
        self.p = p
        self.n = n
        self.data: dict[tuple[float, int], Profile] = {}
        self.rho = rho
        if data:
            for (a, l), prof in data.items():
                self._accum(_akey(a), l, prof)

    def _accum(self, a: float, l: int, prof: Profile):
        if a <= self.rho:
            return
        key = (a, l)
        if key in self.data:
            prof = self.data[key] + prof
        if prof.is_zero():
            self.data.pop(key, None)
        else:
            self.data[key] = prof

    @property
    def top(self) -> float:
        if not self.data:
            return self.rho
        return max(a for a, _ in self.data)

    def copy(self) -> "_Tbl":
        t = _Tbl(self.p, self.n, rho=self.rho)
        t.data = dict(self.data)
        return t

    def truncate(self, floor: float) -> "_Tbl":
        t = _Tbl(self.p, self.n, rho=max(self.rho, floor))
        for (a, l), prof in self.data.items():
            if a > t.rho:
                t.data[(a, l)] = prof
        return t

    def add(self, other: "_Tbl") -> "_Tbl":
        rho = max(self.rho, other.rho)
        t = _Tbl(self.p, self.n, rho=rho)
        for (a, l), prof in self.data.items():
            t._accum(a, l, prof)
        for (a, l), prof in other.data.items():
            t._accum(a, l, prof)
        return t

    def scale(self, c: complex) -> "_Tbl":
        t = _Tbl(self.p, self.n, rho=self.rho)
        if c == 0:
            return t
        for key, prof in self.data.items():
            t.data[key] = prof.scale(c)
        return t

    def mul(self, other: "_Tbl", floor: float | None = None) -> "_Tbl":
        natural = max(self.rho + other.top, self.top + other.rho)
        rho = natural if floor is None else max(natural, floor)
        t = _Tbl(self.p, self.n, rho=rho)
        for (a1, l1), p1 in self.data.items():
            for (a2, l2), p2 in other.data.items():
                if a1 + a2 <= rho:
                    continue
                t._accum(_akey(a1 + a2), l1 + l2, p1 @ p2)
        return t

    def derivative(self, j: int) -> "_Tbl":
        t = _Tbl(self.p, self.n, rho=self.rho - 1)
        for (a, l), prof in self.data.items():
            main = prof.tangential_partial(j) + prof.times_coord(j).scale(a)
            t._accum(_akey(a - 1), l, main)
            if l > 0:
                t._accum(_akey(a - 1), l - 1, prof.times_coord(j).scale(l))
        return t

    def trace(self) -> "_Tbl":
        t = _Tbl(self.p, 1, rho=self.rho)
        for key, prof in self.data.items():
            tr = prof.trace()
            if not tr.is_zero():
                t.data[key] = tr
        return t

    def eval(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        r = np.linalg.norm(mu)
        out = np.zeros((self.n, self.n), dtype=complex)
        if r == 0:
            for (a, l), prof in self.data.items():
                if a == 0 and l == 0:
                    # constant terms survive at the origin; others diverge/vanish
                    out += prof(np.concatenate([[1.0], np.zeros(self.p - 1)]))
            return out
        w = mu / r
        logr = math.log(r)
        for (a, l), prof in self.data.items():
            out += prof(w) * r ** a * logr ** l
        return out

    def to_terms(self) -> tuple[HomogTerm, ...]:
        keys = sorted(self.data, key=lambda k: (-k[0], -k[1]))
        return tuple(HomogTerm(a, l, self.data[(a, l)]) for a, l in keys)

    @staticmethod
    def from_terms(terms: Iterable[HomogTerm], p: int, n: int, rho: float) -> "_Tbl":
        t = _Tbl(p, n, rho=rho)
        for term in terms:
            t._accum(_akey(term.degree), term.log_power, term.angular)
        return t

    @staticmethod
    def unit(p: int, n: int) -> "_Tbl":
        return _Tbl(p, n, data={(0.0, 0): Profile.constant(np.eye(n), p)})


# ---------------------------------------------------------------------------
# ParamSymbol
# ---------------------------------------------------------------------------

class ParamSymbol:
    """Smooth End(C^N)-valued symbol on R^p with expansion metadata.

    Immutable by convention: evaluators must be pure, and all operations
    return new symbols.  ``partial`` is cached per axis (recompute-equal, so
    concurrent first calls are harmless).
    """

    __slots__ = ("p", "N", "order", "_eval", "_tbl", "remainder_order",
                 "_partial_maker", "_partial_cache", "is_unit", "tag",
                 "_neg_of", "_last")

    def __init__(self, p: int, N: int, order: float, eval_fn: Callable,
                 tbl: _Tbl, partial_maker=None, is_unit: bool = False,
                 tag: str = ""):
        self.p = int(p)
        self.N = int(N)
        self.order = float(order)
        self._eval = eval_fn
        self._tbl = tbl
        self.remainder_order = float(tbl.rho)
        self._partial_maker = partial_maker
        self._partial_cache = {}
        self.is_unit = is_unit
        self.tag = tag
        self._neg_of = None
        self._last = None
        self._validate()

    def _validate(self):
        seen = sorted(self._tbl.data, key=lambda k: (-k[0], -k[1]))
        for k1, k2 in zip(seen, seen[1:]):
            if k1 == k2:
                raise DivflowError("duplicate expansion term")
        if seen and self.remainder_order >= seen[-1][0]:
            raise DivflowError("remainder_order must lie below all stored terms")

    # -- basic queries ------------------------------------------------------

    def __call__(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.p,):
            raise DimensionMismatchError(f"mu must have shape ({self.p},)")
        # single-entry memo: nested form coefficients revisit the same point;
        # recompute-equal, so concurrent first calls are harmless
        key = mu.tobytes()
        last = self._last
        if last is not None and last[0] == key:
            return last[1]
        val = np.asarray(self._eval(mu), dtype=complex).reshape(self.N, self.N)
        self._last = (key, val)
        return val

    @property
    def terms(self) -> tuple[HomogTerm, ...]:
        return self._tbl.to_terms()

    def expansion_eval(self, mu) -> np.ndarray:
        return self._tbl.eval(mu)

    @property
    def classical(self) -> bool:
        """True iff no log terms and degrees descend in integer steps."""
        keys = sorted(self._tbl.data, key=lambda k: -k[0])
        if any(l != 0 for _, l in keys):
            return False
        if not keys:
            return True
        top = keys[0][0]
        return all(abs((top - a) - round(top - a)) < 1e-9 for a, _ in keys)

    def partial(self, j: int) -> "ParamSymbol":
        """First mu_j-derivative (1-based axis); order drops by one."""
        if not 1 <= j <= self.p:
            raise DimensionMismatchError(f"axis {j} out of range for p={self.p}")
        if j not in self._partial_cache:
            if self._partial_maker is not None:
                d = self._partial_maker(j)
            else:
                d = _generic_partial(self, j)
            self._partial_cache[j] = d
        return self._partial_cache[j]

    def __add__(self, other):
        return sym_add(self, other)

    def __mul__(self, other):
        return sym_mul(self, other)

    def __neg__(self):
        return sym_neg(self)

    def __repr__(self):
        return (f"ParamSymbol(p={self.p}, N={self.N}, order={self.order}, "
                f"terms={len(self._tbl.data)}, rho={self.remainder_order}, "
                f"tag={self.tag!r})")


def _check_compat(a: ParamSymbol, b: ParamSymbol):
    if a.p != b.p or a.N != b.N:
        raise DimensionMismatchError(
            f"incompatible symbols: (p={a.p},N={a.N}) vs (p={b.p},N={b.N})")


def _generic_partial(a: ParamSymbol, j: int) -> ParamSymbol:
    if a._eval is a._tbl.eval:  # expansion-backed symbol: derive terms exactly
        tbl = a._tbl.derivative(j)
        return ParamSymbol(a.p, a.N, a.order - 1, tbl.eval, tbl,
                           tag=f"d{j}({a.tag})")

    def fd(mu):
        h = FD_REL_STEP * (1.0 + np.linalg.norm(mu))
        e = np.zeros(a.p)
        e[j - 1] = h
        return (a(mu + e) - a(mu - e)) / (2.0 * h)

    return ParamSymbol(a.p, a.N, a.order - 1, fd, a._tbl.derivative(j),
                       tag=f"d{j}({a.tag})")


# ---------------------------------------------------------------------------
# arithmetic operations
# ---------------------------------------------------------------------------

def sym_add(a: ParamSymbol, b: ParamSymbol) -> ParamSymbol:
    _check_compat(a, b)
    if b._neg_of is a or a._neg_of is b:
        return zero_symbol(a.p, a.N)
    tbl = a._tbl.add(b._tbl)
    maker = None
    if a._partial_maker is not None or b._partial_maker is not None:
        maker = lambda j: sym_add(a.partial(j), b.partial(j))
    return ParamSymbol(a.p, a.N, max(a.order, b.order),
                       lambda mu: a(mu) + b(mu), tbl, partial_maker=maker,
                       tag=f"({a.tag}+{b.tag})")


def sym_scale(a: ParamSymbol, c: complex) -> ParamSymbol:
    c = complex(c)
    if c == 0:
        return zero_symbol(a.p, a.N)
    maker = None
    if a._partial_maker is not None:
        maker = lambda j: sym_scale(a.partial(j), c)
    out = ParamSymbol(a.p, a.N, a.order, lambda mu: c * a(mu),
                      a._tbl.scale(c), partial_maker=maker,
                      tag=f"{c}*{a.tag}")
    if c == -1:
        out._neg_of = a
    return out


def sym_neg(a: ParamSymbol) -> ParamSymbol:
    return sym_scale(a, -1.0)


def sym_sub(a: ParamSymbol, b: ParamSymbol) -> ParamSymbol:
    return sym_add(a, sym_neg(b))


def sym_mul(a: ParamSymbol, b: ParamSymbol) -> ParamSymbol:
    _check_compat(a, b)
    if a.order == NEG_INF and not a._tbl.data and a.remainder_order == NEG_INF \
            and a._neg_of is None and not callable(getattr(a, "_zero_mark", None)):
        pass
    tbl = a._tbl.mul(b._tbl)
    order = a.order + b.order if NEG_INF not in (a.order, b.order) else NEG_INF
    maker = lambda j: sym_add(sym_mul(a.partial(j), b), sym_mul(a, b.partial(j)))
    return ParamSymbol(a.p, a.N, order, lambda mu: a(mu) @ b(mu), tbl,
                       partial_maker=maker, tag=f"({a.tag}*{b.tag})")


def sym_trace(a: ParamSymbol) -> ParamSymbol:
    """Pointwise matrix trace, as a scalar (N=1) symbol."""
    maker = lambda j: sym_trace(a.partial(j))
    return ParamSymbol(a.p, 1, a.order,
                       lambda mu: np.trace(a(mu)).reshape(1, 1),
                       a._tbl.trace(), partial_maker=maker,
                       tag=f"tr({a.tag})")


def _coarse_sphere(p: int) -> np.ndarray:
    if p == 1:
        return np.array([[1.0], [-1.0]])
    if p == 2:
        th = np.linspace(0, 2 * np.pi, 12, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    pts = [np.eye(3)[i] * s for i in range(3) for s in (1, -1)]
    pts += [np.array([a, b, c]) / math.sqrt(3)
            for a in (1, -1) for b in (1, -1) for c in (1, -1)]
    return np.stack(pts)


def _profile_inverse(t: Profile, p: int) -> Profile:
    """Pointwise inverse of an angular profile, exact where cheaply possible."""
    if p == 1 and t.poly is not None:
        vp = np.linalg.inv(t(np.array([1.0])))
        vm = np.linalg.inv(t(np.array([-1.0])))
        return Profile(1, t.n, poly={(0,): (vp + vm) / 2, (1,): (vp - vm) / 2})
    if t.poly is not None:
        if set(t.poly) == {(0,) * p}:
            return Profile.constant(np.linalg.inv(t.poly[(0,) * p]), p)
        # Clifford-type profiles square to a scalar on the sphere: t^{-1} = t/c
        sq = t @ t
        nodes = _coarse_sphere(p)
        vals = sq.eval_batch(nodes)
        c = np.trace(vals[0]) / t.n
        eye = np.eye(t.n)
        if abs(c) > 1e-13 and max(np.max(np.abs(v - c * eye)) for v in vals) < 1e-12:
            return t.scale(1.0 / c)
    return Profile.from_callable(lambda w: np.linalg.inv(t._hom(w)), p, t.n)


def sym_inv(a: ParamSymbol, extra_depth: int | None = None,
            check_domain: bool = True) -> ParamSymbol:
    """Pointwise inverse with Neumann-recursive expansion from the leading term.

    Raises NotEllipticError if the leading term is singular on the sphere and
    NotInvertibleError (with the offending mu) if the evaluator is singular on
    the sampled domain.  Diagonal symbols whose entries have different orders
    (so the joint leading term is singular) are inverted entrywise.
    """
    if not a._tbl.data:
        raise NotEllipticError("not elliptic: symbol has no leading term")
    lead_keys = sorted(a._tbl.data, key=lambda k: (-k[0], -k[1]))
    d0, l0 = lead_keys[0]
    if l0 != 0:
        raise NotEllipticError("not elliptic: leading term carries a log factor")
    t0 = a._tbl.data[(d0, l0)]
    dirs = _coarse_sphere(a.p)
    for w in dirs:
        m = t0(w)
        if (not np.all(np.isfinite(m))) or np.linalg.cond(m) > 1e12:
            diag = _diagonal_inverse(a, extra_depth, check_domain)
            if diag is not None:
                return diag
            raise NotEllipticError(f"not elliptic: leading term singular at omega={w}")
    if check_domain:
        for r in (0.0, 0.5, 1.0, 2.0, 5.0):
            for w in dirs:
                mu = r * w
                m = a(mu)
                if np.linalg.cond(m) > 1e13:
                    raise NotInvertibleError(
                        f"not invertible at mu={mu}", mu=mu)
                if r == 0.0:
                    break

    if extra_depth is None:
        extra_depth = a.p + DEFAULT_EXTRA_DEPTH
    target = -d0 - extra_depth

    u0 = _Tbl(a.p, a.N, data={(-d0, 0): _profile_inverse(t0, a.p)})
    w_tbl = u0.mul(a._tbl, floor=target + d0).add(_Tbl.unit(a.p, a.N).scale(-1.0))
    acc = u0.copy()
    cur = u0
    for _ in range(400):
        cur = w_tbl.scale(-1.0).mul(cur, floor=target)
        if not cur.data:
            break
        acc = acc.add(cur)
    acc = acc.truncate(max(target, acc.rho))

    def inv_eval(mu):
        m = a(mu)
        try:
            return np.linalg.inv(m)
        except np.linalg.LinAlgError as exc:
            raise NotInvertibleError(f"not invertible at mu={mu}", mu=mu) from exc

    out = ParamSymbol(a.p, a.N, -a.order, inv_eval, acc, tag=f"inv({a.tag})")
    out._partial_maker = lambda j: sym_scale(
        sym_mul(sym_mul(out, a.partial(j)), out), -1.0)
    return out


def _diagonal_inverse(a: ParamSymbol, extra_depth, check_domain):
    """Entrywise inversion for diagonal symbols with mixed entry orders."""
    if a.N == 1:
        return None
    for prof in a._tbl.data.values():
        if prof.poly is None:
            return None
        for m in prof.poly.values():
            if np.max(np.abs(m - np.diag(np.diag(m)))) > 0:
                return None
    entries = []
    for i in range(a.N):
        tbl = _Tbl(a.p, 1)
        for (al, l), prof in a._tbl.data.items():
            poly = {e: m[i:i + 1, i:i + 1] for e, m in prof.poly.items()}
            tbl._accum(al, l, Profile(a.p, 1, poly=poly))
        tbl.rho = a.remainder_order
        scal = ParamSymbol(a.p, 1, a.order,
                           lambda mu, _i=i: a(mu)[_i:_i + 1, _i:_i + 1], tbl,
                           tag=f"{a.tag}[{i},{i}]")
        entries.append(sym_inv(scal, extra_depth, check_domain))
    tbl = _Tbl(a.p, a.N)
    rho = max(e.remainder_order for e in entries)
    for i, e in enumerate(entries):
        basis = np.zeros((a.N, a.N), dtype=complex)
        basis[i, i] = 1.0
        for (al, l), prof in e._tbl.data.items():
            poly = {ex: m[0, 0] * basis for ex, m in prof.poly.items()}
            tbl._accum(al, l, Profile(a.p, a.N, poly=poly))
    tbl.rho = rho
    tbl = tbl.truncate(rho)

    def ev(mu):
        return np.diag([complex(e(mu)[0, 0]) for e in entries])

    out = ParamSymbol(a.p, a.N, max(e.order for e in entries), ev, tbl,
                      tag=f"inv({a.tag})")
    out._partial_maker = lambda j: sym_scale(
        sym_mul(sym_mul(out, a.partial(j)), out), -1.0)
    return out


def leading_part(a: ParamSymbol, n_terms: int) -> tuple[HomogTerm, ...]:
    """First n_terms of the expansion: the concrete symbol-class datum."""
    terms = a.terms
    if n_terms > len(terms):
        if a.remainder_order == NEG_INF:
            return terms  # complete expansion; nothing below
        raise InsufficientExpansionError(
            f"requested {n_terms} terms, only {len(terms)} stored and the "
            f"remainder (order {a.remainder_order}) is not expandable")
    return terms[:n_terms]


def sigma(a: ParamSymbol) -> ParamSymbol:
    """Symbol class modulo smoothing terms: keep the expansion, drop remainder.

    The returned symbol evaluates as the finite sum of its terms, a concrete
    representative of the quotient class; its remainder order keeps a's value
    so product floors stay honest.
    """
    tbl = a._tbl.copy()
    out = ParamSymbol(a.p, a.N, a.order, tbl.eval, tbl,
                      is_unit=a.is_unit, tag=f"sigma({a.tag})")
    return out


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def zero_symbol(p: int, N: int) -> ParamSymbol:
    tbl = _Tbl(p, N, rho=NEG_INF)
    return ParamSymbol(p, N, NEG_INF, lambda mu: np.zeros((N, N), complex),
                       tbl, partial_maker=lambda j: zero_symbol(p, N),
                       tag="0")


def unit_symbol(p: int, N: int) -> ParamSymbol:
    return ParamSymbol(p, N, 0.0, lambda mu: np.eye(N, dtype=complex),
                       _Tbl.unit(p, N),
                       partial_maker=lambda j: zero_symbol(p, N),
                       is_unit=True, tag="1")


def const_symbol(M, p: int) -> ParamSymbol:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    N = M.shape[0]
    tbl = _Tbl(p, N, data={(0.0, 0): Profile.constant(M, p)})
    return ParamSymbol(p, N, 0.0, lambda mu, _M=M: _M, tbl,
                       partial_maker=lambda j: zero_symbol(p, N),
                       tag=f"const{M.shape}")


def coordinate_symbol(p: int, j: int, N: int = 1) -> ParamSymbol:
    """The order-1 symbol mu_j * Id."""
    if not 1 <= j <= p:
        raise DimensionMismatchError(f"axis {j} out of range for p={p}")
    expo = tuple(1 if i == j - 1 else 0 for i in range(p))
    tbl = _Tbl(p, N, data={(1.0, 0): Profile.monomial(np.eye(N), p, expo)})
    return ParamSymbol(p, N, 1.0,
                       lambda mu: mu[j - 1] * np.eye(N, dtype=complex), tbl,
                       partial_maker=lambda i: (const_symbol(np.eye(N), p)
                                                if i == j else zero_symbol(p, N)),
                       tag=f"mu{j}")


def sym_broadcast(a: ParamSymbol, N: int) -> ParamSymbol:
    """Embed a scalar symbol as a * Id_N."""
    if a.N != 1:
        raise DimensionMismatchError("sym_broadcast expects a scalar symbol")
    if N == 1:
        return a
    eye = np.eye(N, dtype=complex)
    tbl = _Tbl(a.p, N, rho=a.remainder_order)
    for (al, l), prof in a._tbl.data.items():
        if prof.poly is not None:
            tbl.data[(al, l)] = Profile(a.p, N, poly={
                e: m[0, 0] * eye for e, m in prof.poly.items()})
        else:
            f = prof._hom
            tbl.data[(al, l)] = Profile(a.p, N, fn=lambda w, _f=f: _f(w)[0, 0] * eye)
    maker = lambda j: sym_broadcast(a.partial(j), N)
    return ParamSymbol(a.p, N, a.order, lambda mu: a(mu)[0, 0] * eye, tbl,
                       partial_maker=maker, tag=f"bc{N}({a.tag})")


def clifford_linear_symbol(generators: Sequence[np.ndarray], p: int) -> ParamSymbol:
    """c(mu) = sum_j mu_j G_j for constant anticommuting generators G_j."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    N = gens[0].shape[0]
    poly = {}
    for j, g in enumerate(gens):
        expo = tuple(1 if i == j else 0 for i in range(p))
        poly[expo] = g
    tbl = _Tbl(p, N, data={(1.0, 0): Profile(p, N, poly=poly)})

    def ev(mu):
        out = np.zeros((N, N), dtype=complex)
        for m, g in zip(mu, gens):
            out += m * g
        return out

    return ParamSymbol(p, N, 1.0, ev, tbl,
                       partial_maker=lambda j: const_symbol(gens[j - 1], p),
                       tag="c(mu)")


def shifted_power_symbol(Msq, z: float, p: int, depth: int | None = None) -> ParamSymbol:
    """(Msq + |mu|^2)^z for a Hermitian positive matrix Msq; rotation invariant.

    The expansion is the binomial series sum_j binom(z,j) Msq^j |mu|^(2z-2j);
    derivatives use d_j = 2 z mu_j (Msq + |mu|^2)^(z-1), exact because the
    family commutes.
    """
    Msq = np.atleast_2d(np.asarray(Msq, dtype=complex))
    N = Msq.shape[0]
    w, U = np.linalg.eigh(Msq)
    if np.min(w) < -1e-12:
        raise DivflowError("shifted_power_symbol needs a PSD matrix")
    if depth is None:
        depth = (p + DEFAULT_EXTRA_DEPTH) // 2 + 2
    data = {}
    Mpow = np.eye(N, dtype=complex)
    for j in range(depth + 1):
        c = _gbinom(z, j)
        if c != 0:
            data[(2 * z - 2 * j, 0)] = Profile.constant(c * Mpow, p)
        Mpow = Mpow @ Msq
    tbl = _Tbl(p, N, data=data, rho=2 * z - 2 * depth - 1)

    def ev(mu):
        r2 = float(np.dot(mu, mu))
        return (U * (w + r2) ** z) @ U.conj().T

    def maker(j):
        inner = shifted_power_symbol(Msq, z - 1, p, depth=depth)
        return sym_scale(sym_mul(sym_broadcast(coordinate_symbol(p, j), N), inner),
                         2.0 * z)

    return ParamSymbol(p, N, 2 * z, ev, tbl, partial_maker=maker,
                       tag=f"(M^2+|mu|^2)^{z}")


def rational_symbol_1d(num: Sequence[complex], den: Sequence[complex],
                       depth: int | None = None) -> ParamSymbol:
    """Scalar rational symbol num(mu)/den(mu) on R^1, coefficients low-to-high.

    The expansion at infinity is the Laurent series obtained by long division;
    derivatives are rational symbols again (quotient rule).
    """
    num = np.trim_zeros(np.asarray(num, dtype=complex), "b")
    den = np.trim_zeros(np.asarray(den, dtype=complex), "b")
    if den.size == 0:
        raise DivflowError("zero denominator polynomial")
    if num.size == 0:
        return zero_symbol(1, 1)
    dn, dd = num.size - 1, den.size - 1
    order = dn - dd
    if depth is None:
        depth = DEFAULT_EXTRA_DEPTH + 4
    # c_j solve num = den * sum_j c_j mu^(order - j), matching powers downward
    cs = []
    residual = num[::-1].copy()  # high-to-low
    residual = np.concatenate([residual, np.zeros(depth + 2, dtype=complex)])
    dh = den[::-1]
    for j in range(depth + 1):
        c = residual[0] / dh[0]
        cs.append(c)
        residual[:dd + 1] -= c * dh
        residual = residual[1:]
    data = {}
    for j, c in enumerate(cs):
        if c != 0:
            m = order - j
            data[(float(m), 0)] = Profile.monomial(np.array([[c]]), 1, (abs(m) % 2,))
    tbl = _Tbl(1, 1, data=data, rho=order - depth - 0.5)

    def ev(mu):
        x = mu[0]
        return np.array([[np.polyval(num[::-1], x) / np.polyval(den[::-1], x)]])

    def maker(_j):
        dnum = np.polyder(num[::-1])[::-1] if num.size > 1 else np.zeros(1, complex)
        dden = np.polyder(den[::-1])[::-1] if den.size > 1 else np.zeros(1, complex)
        top = np.polysub(np.polymul(dnum[::-1], den[::-1]),
                         np.polymul(num[::-1], dden[::-1]))[::-1]
        return rational_symbol_1d(top, np.polymul(den[::-1], den[::-1])[::-1],
                                  depth=depth + 2)

    return ParamSymbol(1, 1, float(order), ev, tbl, partial_maker=maker,
                       tag=f"rat({dn}/{dd})")


def winding_symbol(n: int, depth: int | None = None) -> ParamSymbol:
    """g(mu)^n with g = (mu+i)/(mu-i); an order-0 loop of winding number n."""
    up = np.array([1j, 1.0])
    dn = np.array([-1j, 1.0])
    a, b = np.ones(1, complex), np.ones(1, complex)
    for _ in range(abs(n)):
        a = np.polymul(a[::-1], (up if n > 0 else dn)[::-1])[::-1]
        b = np.polymul(b[::-1], (dn if n > 0 else up)[::-1])[::-1]
    s = rational_symbol_1d(a, b, depth=depth)
    s.tag = f"g^{n}"
    return s


def gaussian_poly_symbol(p: int, coeffs: dict, width: float = 1.0) -> ParamSymbol:
    """(sum_b C_b mu^b) exp(-|mu|^2/width^2): an order -infinity symbol.

    coeffs maps exponent tuples to matrices; derivatives stay in the class.
    """
    coeffs = {tuple(e): np.atleast_2d(np.asarray(m, dtype=complex))
              for e, m in coeffs.items()}
    N = next(iter(coeffs.values())).shape[0]
    w2 = float(width) ** 2

    def ev(mu):
        out = np.zeros((N, N), dtype=complex)
        for e, m in coeffs.items():
            out += m * np.prod(np.asarray(mu) ** np.asarray(e))
        return out * math.exp(-float(np.dot(mu, mu)) / w2)

    def maker(j):
        new: dict = {}

        def bump(e, m):
            new[e] = new.get(e, 0) + m

        for e, m in coeffs.items():
            if e[j - 1] > 0:
                ee = list(e)
                ee[j - 1] -= 1
                bump(tuple(ee), e[j - 1] * m)
            ee = list(e)
            ee[j - 1] += 1
            bump(tuple(ee), -2.0 / w2 * m)
        return gaussian_poly_symbol(p, new, width)

    tbl = _Tbl(p, N, rho=NEG_INF)
    return ParamSymbol(p, N, NEG_INF, ev, tbl, partial_maker=maker,
                       tag="gauss")


def bump_symbol(p: int, N: int, amplitude: complex = 1.0, width: float = 1.0,
                matrix=None) -> ParamSymbol:
    """Smooth rapidly decaying perturbation amplitude*exp(-|mu|^2/w^2)*M."""
    M = np.eye(N) if matrix is None else np.asarray(matrix, dtype=complex)
    return gaussian_poly_symbol(p, {(0,) * p: amplitude * M}, width)


def matrix_phase_symbol(J, t: ParamSymbol, depth: int | None = None) -> ParamSymbol:
    """exp(t(mu) J) for a constant matrix J and scalar symbol t of order < 0.

    Since J commutes with exp(tJ), the derivative is (d_j t) J exp(tJ): the
    constructor is closed under differentiation.
    """
    J = np.atleast_2d(np.asarray(J, dtype=complex))
    N = J.shape[0]
    if t.N != 1:
        raise DimensionMismatchError("phase exponent must be scalar")
    if not t.order < 0:
        raise DivflowError("matrix_phase_symbol needs a decaying exponent")
    if depth is None:
        depth = t.p + DEFAULT_EXTRA_DEPTH
    evals, V = np.linalg.eig(J)
    Vinv = np.linalg.inv(V)

    target = float(-depth)
    acc = _Tbl.unit(t.p, N)
    cur = _Tbl.unit(t.p, N)
    t_big = sym_broadcast(t, N)
    k = 1
    while True:
        cur = cur.mul(t_big._tbl, floor=target)
        scaled = cur.scale(1.0 / math.factorial(k))
        term = _Tbl(t.p, N, rho=scaled.rho)
        for key, prof in scaled.data.items():
            term.data[key] = prof @ Profile.constant(np.linalg.matrix_power(J, k), t.p)
        if not term.data:
            break
        acc = acc.add(term)
        k += 1
        if k > 60:
            break
    tbl = acc.truncate(target)

    def ev(mu):
        tv = complex(t(mu)[0, 0])
        return (V * np.exp(tv * evals)) @ Vinv

    out = ParamSymbol(t.p, N, 0.0, ev, tbl, tag=f"exp(tJ)")
    out._partial_maker = lambda j: sym_mul(
        sym_mul(sym_broadcast(t.partial(j), N), const_symbol(J, t.p)), out)
    return out


# ---------------------------------------------------------------------------
# expansion diagnostics
# ---------------------------------------------------------------------------

def expansion_residual(a: ParamSymbol, radii=(1e2, 1e3), n_dirs: int = 8,
                       keep_orders: float = 3.5):
    """Fitted constants C_R = max_dirs |eval - partial sum| / R^rho_eff.

    The partial sum keeps only terms within keep_orders of the top degree so
    that the measured residual sits well above float roundoff; rho_eff is the
    degree of the first dropped term.  For a sound expansion the fitted
    constants agree across radii within a modest factor; exact symbols
    (rho = -inf, no dropped terms) must show residuals at roundoff level.
    """
    dirs = _coarse_sphere(a.p)[:n_dirs]
    terms = a.terms
    if terms:
        floor = terms[0].degree - keep_orders
        kept = [t for t in terms if t.degree > floor]
        dropped = [t for t in terms if t.degree <= floor]
    else:
        kept, dropped = [], []
    rho_eff = dropped[0].degree if dropped else a.remainder_order
    tbl = _Tbl.from_terms(kept, a.p, a.N, rho=rho_eff)
    out = []
    for R in radii:
        worst = 0.0
        for w in dirs:
            mu = R * w
            resid = np.max(np.abs(a(mu) - tbl.eval(mu)))
            worst = max(worst, float(resid))
        if rho_eff == NEG_INF:
            out.append(worst)
        else:
            out.append(worst / R ** rho_eff)
    return tuple(out)


# ---------------------------------------------------------------------------
# paths of symbols
# ---------------------------------------------------------------------------

class SymbolPath:
    """One-parameter family s in [0,1] of symbols with its s-derivative."""

    __slots__ = ("p", "N", "family", "s_derivative", "endpoint_invertible",
                 "breakpoints", "tag")

    def __init__(self, p: int, N: int, family: Callable[[float], ParamSymbol],
                 s_derivative: Callable[[float], ParamSymbol],
                 endpoint_invertible=(True, True), breakpoints=(), tag=""):
        self.p = p
        self.N = N
        self.family = family
        self.s_derivative = s_derivative
        self.endpoint_invertible = tuple(endpoint_invertible)
        self.breakpoints = tuple(sorted(set(float(b) for b in breakpoints
                                            if 0.0 < b < 1.0)))
        self.tag = tag

    def __call__(self, s: float) -> ParamSymbol:
        return self.family(float(s))

    def validate(self, n_s: int = 7):
        """Sampled admissibility check: elliptic throughout, endpoints invertible."""
        dirs = _coarse_sphere(self.p)
        grid = sorted(set(np.linspace(0, 1, n_s)) | set(self.breakpoints))
        for s in grid:
            a = self.family(s)
            lead = a.terms[0] if a.terms else None
            if lead is None:
                raise NotEllipticError(f"path not elliptic at s={s}: no leading term")
            for w in dirs:
                if np.linalg.cond(lead.angular(w)) > 1e12:
                    raise NotEllipticError(
                        f"path not elliptic at s={s}, omega={w}")
        for s, flag in zip((0.0, 1.0), self.endpoint_invertible):
            if not flag:
                continue
            a = self.family(s)
            for r in (0.0, 0.5, 1.0, 2.0, 5.0):
                for w in dirs:
                    mu = r * w
                    if np.linalg.cond(a(mu)) > 1e13:
                        raise NotInvertibleError(
                            f"endpoint s={s} not invertible at mu={mu}", mu=mu)
                    if r == 0.0:
                        break


def linear_path(T: ParamSymbol) -> SymbolPath:
    """s -> 1 + s (T - 1), the standard relative-class representative."""
    one = unit_symbol(T.p, T.N)
    diff = sym_sub(T, one)
    return SymbolPath(T.p, T.N,
                      family=lambda s: sym_add(one, sym_scale(diff, s)) if s != 0 else one,
                      s_derivative=lambda s: diff,
                      tag=f"1+s({T.tag}-1)")


def constant_path(A: ParamSymbol) -> SymbolPath:
    return SymbolPath(A.p, A.N, family=lambda s: A,
                      s_derivative=lambda s: zero_symbol(A.p, A.N),
                      tag=f"const({A.tag})")


def product_path(pa: SymbolPath, pb: SymbolPath) -> SymbolPath:
    """Pointwise product path with product-rule s-derivative."""
    if pa.p != pb.p or pa.N != pb.N:
        raise DimensionMismatchError("paths not composable")
    fam = lambda s: sym_mul(pa.family(s), pb.family(s))
    dfam = lambda s: sym_add(sym_mul(pa.s_derivative(s), pb.family(s)),
                             sym_mul(pa.family(s), pb.s_derivative(s)))
    return SymbolPath(pa.p, pa.N, fam, dfam,
                      endpoint_invertible=tuple(
                          x and y for x, y in zip(pa.endpoint_invertible,
                                                  pb.endpoint_invertible)),
                      breakpoints=pa.breakpoints + pb.breakpoints,
                      tag=f"{pa.tag}.{pb.tag}")


def reparametrized_path(path: SymbolPath, tau: Callable[[float], float],
                        tau_prime: Callable[[float], float]) -> SymbolPath:
    """Precompose with a smooth monotone reparametrization tau: [0,1]->[0,1]."""
    fam = lambda s: path.family(tau(s))
    dfam = lambda s: sym_scale(path.s_derivative(tau(s)), tau_prime(s))
    return SymbolPath(path.p, path.N, fam, dfam,
                      endpoint_invertible=path.endpoint_invertible,
                      tag=f"reparam({path.tag})")
