"""Spectral flow, eta invariants, Clifford suspensions and divisor flows.

The finite-dimensional dictionary: a Hermitian path D_s stands in for a path
of self-adjoint elliptic operators; its odd suspension D_s x I +/- c(mu) and
even suspension gamma (D_s x I + c(mu)) are elliptic parametric symbols whose
divisor flows recover the spectral flow of D_s.  The eta invariant of a
Hermitian matrix is its signature; the parametric formula recovers it through
a regularized trace, in every dimension p <= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clifford import build_clifford
from .cyclic import _gauss_nodes, character_pair, pair, relative_ch_path
from .errors import (DimensionMismatchError, DivflowError,
                     NonConvergenceError, NotInvertibleError)
from .forms import OperatorForm, d_of, tr_bar, tr_tilde, wedge, wedge_power
from .regint import DEFAULT_CFG, QuadConfig, reg_integral, reg_integral_radial
from .symbols import (ParamSymbol, SymbolPath, _gbinom,
                      clifford_linear_symbol, const_symbol,
                      shifted_power_symbol, sigma, sym_add, sym_inv, sym_mul,
                      sym_scale, sym_sub, sym_trace, unit_symbol, zero_symbol)

ENDPOINT_KERNEL_TOL = 1e-10
PATH_NODES = 32
PATH_TOL = 1e-7


# ---------------------------------------------------------------------------
# Hermitian paths and flow results
# ---------------------------------------------------------------------------

class HermitianPath:
    """Piecewise-linear path of Hermitian matrices with invertible endpoints."""

    __slots__ = ("knots",)

    def __init__(self, knots: Sequence[tuple[float, np.ndarray]]):
        ks = []
        for s, m in knots:
            m = np.atleast_2d(np.asarray(m, dtype=complex))
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise DivflowError(f"knot at s={s} is not Hermitian")
            ks.append((float(s), m))
        if len(ks) < 2:
            raise DivflowError("need at least the two endpoint knots")
        svals = [s for s, _ in ks]
        if svals != sorted(set(svals)) or svals[0] != 0.0 or svals[-1] != 1.0:
            raise DivflowError("knot parameters must strictly increase from 0 to 1")
        for s in (0.0, 1.0):
            m = dict(ks)[s]
            if np.min(np.abs(np.linalg.eigvalsh(m))) <= 1e-8:
                raise DivflowError(f"endpoint s={s} has an eigenvalue within 1e-8 of 0")
        self.knots = tuple(ks)

    @property
    def N(self) -> int:
        return self.knots[0][1].shape[0]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s for s, _ in self.knots[1:-1])

    def _segment(self, s: float) -> int:
        for i in range(len(self.knots) - 1):
            if s <= self.knots[i + 1][0]:
                return i
        return len(self.knots) - 2

    def __call__(self, s: float) -> np.ndarray:
        s = float(min(max(s, 0.0), 1.0))
        i = self._segment(s)
        s0, m0 = self.knots[i]
        s1, m1 = self.knots[i + 1]
        t = (s - s0) / (s1 - s0)
        return (1 - t) * m0 + t * m1

    def derivative(self, s: float) -> np.ndarray:
        i = self._segment(float(s))
        s0, m0 = self.knots[i]
        s1, m1 = self.knots[i + 1]
        return (m1 - m0) / (s1 - s0)


@dataclass(frozen=True)
class FlowResult:
    """A flow value with its integer snap and the terms that built it."""

    value: complex
    snapped: int
    residual: float
    parts: dict
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.parts.values())
        if abs(total - self.value) > 1e-12 * (1.0 + abs(self.value)):
            raise DivflowError("flow parts do not sum to the value")


def _snap(value: complex, parts: dict, diagnostics: dict) -> FlowResult:
    snapped = int(round(value.real))
    residual = abs(value - snapped)
    return FlowResult(value=value, snapped=snapped, residual=residual,
                      parts=parts, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# spectral flow and spectral eta
# ---------------------------------------------------------------------------

def _eigs_on_grid(path: HermitianPath, grid: np.ndarray) -> np.ndarray:
    out = np.empty((len(grid), path.N))
    for i, s in enumerate(grid):
        out[i] = np.linalg.eigvalsh(path(s))
    return out


def spectral_flow(path: HermitianPath, n_s: int = 33) -> int:
    """Net signed count of eigenvalue crossings through zero.

    Sorted eigenvalue branches are tracked on an s-grid which is refined
    (doubled) until the crossing count agrees on two consecutive levels.
    Interior grid points that land on a crossing are perturbed; the operator
    itself is never modified.
    """
    for s in (0.0, 1.0):
        if np.min(np.abs(np.linalg.eigvalsh(path(s)))) < ENDPOINT_KERNEL_TOL:
            raise DivflowError(
                f"eigenvalue within {ENDPOINT_KERNEL_TOL} of 0 at endpoint s={s}")

    def count(n: int) -> int:
        grid = np.unique(np.concatenate([
            np.linspace(0.0, 1.0, n), np.asarray(path.breakpoints, dtype=float)]))
        eigs = _eigs_on_grid(path, grid)
        # jitter interior nodes sitting on a crossing
        for i in range(1, len(grid) - 1):
            tries = 0
            while np.min(np.abs(eigs[i])) < 1e-9 and tries < 8:
                grid[i] += (grid[i + 1] - grid[i]) * 1e-3
                eigs[i] = np.linalg.eigvalsh(path(grid[i]))
                tries += 1
        total = 0
        for i in range(len(grid) - 1):
            before, after = eigs[i], eigs[i + 1]
            total += int(np.sum((before < 0) & (after > 0)))
            total -= int(np.sum((before > 0) & (after < 0)))
        return total

    prev = count(n_s)
    for level in range(1, 6):
        cur = count(n_s * 2 ** level)
        if cur == prev:
            return cur
        prev = cur
    raise NonConvergenceError("crossing count did not stabilize under refinement")


def eta_spectral(D, zero_tol: float = 1e-10) -> float:
    """Finite-dimensional eta: sum of eigenvalue signs (the signature)."""
    lam = np.linalg.eigvalsh(np.atleast_2d(np.asarray(D, dtype=complex)))
    return float(np.sum(np.sign(lam[np.abs(lam) > zero_tol])))


def eta_reduced(D, zero_tol: float = 1e-10) -> float:
    """Reduced eta: (eta + dim ker)/2."""
    lam = np.linalg.eigvalsh(np.atleast_2d(np.asarray(D, dtype=complex)))
    ker = int(np.sum(np.abs(lam) <= zero_tol))
    return 0.5 * (float(np.sum(np.sign(lam[np.abs(lam) > zero_tol]))) + ker)


# ---------------------------------------------------------------------------
# parametric eta
# ---------------------------------------------------------------------------

def _check_invertible_matrix(D) -> np.ndarray:
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    if np.min(np.abs(np.linalg.eigvalsh(D))) < 1e-12:
        raise NotInvertibleError("D is singular")
    return D


def eta_parametric(D, p: int, cfg: QuadConfig = DEFAULT_CFG) -> float:
    """Eta via the regularized trace of D (D^2 + |mu|^2)^(-(p+1)/2) over R^p.

    Recovers the signature of an invertible Hermitian D for every p; the
    prefactor is Gamma((p+1)/2) / pi^((p+1)/2).
    """
    D = _check_invertible_matrix(D)
    z = -(p + 1) / 2.0
    sym = sym_mul(const_symbol(D, p), shifted_power_symbol(D @ D, z, p))
    val = reg_integral(sym_trace(sym), cfg)
    pref = math.gamma((p + 1) / 2.0) / math.pi ** ((p + 1) / 2.0)
    return float((pref * val).real)


def eta_parametric_radial(D, p: int, cfg: QuadConfig = DEFAULT_CFG) -> float:
    """Radial cross-check of eta at z = (p+1)/2.

    eta = 2 Gamma(z) / (sqrt(pi) Gamma(z - 1/2)) *
          regint_0^inf r^(2z-2) tr(D (D^2 + r^2)^(-z)) dr.
    """
    D = _check_invertible_matrix(D)
    z = (p + 1) / 2.0
    w = np.linalg.eigvalsh(D)

    def g(r: float) -> complex:
        return complex(np.sum(w * (w ** 2 + r * r) ** (-z)) * r ** (2 * z - 2))

    terms = []
    for j in range(5):
        coeff = _gbinom(-z, j) * float(np.sum(w ** (2 * j + 1)))
        terms.append((-2.0 - 2 * j, 0, coeff))
    val = reg_integral_radial(g, terms_infinity=terms, cfg=cfg)
    pref = 2 * math.gamma(z) / (math.sqrt(math.pi) * math.gamma(z - 0.5))
    return float((pref * val).real)


# ---------------------------------------------------------------------------
# suspensions
# ---------------------------------------------------------------------------

def _suspension_generators(N: int, p: int):
    rep = build_clifford(p)
    gens = [np.kron(np.eye(N), g) for g in rep.generators]
    grading = None if rep.grading is None else np.kron(np.eye(N), rep.grading)
    return rep, gens, grading


def suspend_odd(path: HermitianPath, p: int, sign: int = +1) -> SymbolPath:
    """Odd Clifford suspension D_s x I +/- c(mu) as a path of order-1 symbols.

    Elliptic for all s, invertible exactly where D_s is, since
    (D +/- c)*(D +/- c) = (D^2 + |mu|^2) x I.
    """
    if p % 2 != 1:
        raise DivflowError("odd suspension needs odd p")
    if sign not in (+1, -1):
        raise DivflowError("sign must be +1 or -1")
    N = path.N
    _, gens, _ = _suspension_generators(N, p)
    cmu = clifford_linear_symbol([sign * g for g in gens], p)
    eye = np.eye(2 ** (p // 2))

    def fam(s: float) -> ParamSymbol:
        return sym_add(const_symbol(np.kron(path(s), eye), p), cmu)

    def dfam(s: float) -> ParamSymbol:
        return const_symbol(np.kron(path.derivative(s), eye), p)

    return SymbolPath(p, N * eye.shape[0], fam, dfam,
                      breakpoints=path.breakpoints,
                      tag=f"susp{p}{'+' if sign > 0 else '-'}")


def suspend_even(D, k: int) -> ParamSymbol:
    """Even suspension gamma (D x I + c(mu)), a Hermitian-valued order-1 symbol."""
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    p = 2 * k
    _, gens, grading = _suspension_generators(D.shape[0], p)
    eye = np.eye(2 ** k)
    const_part = const_symbol(grading @ np.kron(D, eye), p)
    lin_part = clifford_linear_symbol([grading @ g for g in gens], p)
    return sym_add(const_part, lin_part)


def idempotent_from_D(D, k: int) -> ParamSymbol:
    """P = (I - Q^-1 D_2k)/2 with Q = (D^2 + |mu|^2)^(1/2) x I; exact idempotent."""
    D = _check_invertible_matrix(D)
    p = 2 * k
    eye = np.eye(2 ** k)
    Msq = np.kron(D @ D, eye)
    qinv = shifted_power_symbol(Msq, -0.5, p)
    d2 = suspend_even(D, k)
    half = 0.5
    return sym_add(sym_scale(unit_symbol(p, Msq.shape[0]), half),
                   sym_scale(sym_mul(qinv, d2), -half))


# -- the cutoff used to keep Q_s invertible through kernel crossings --------

def _phi(r: float) -> float:
    if abs(r) >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - r * r))


def _dphi(r: float) -> float:
    if abs(r) >= 1.0:
        return 0.0
    u = 1.0 - r * r
    return _phi(r) * (-2.0 * r / (u * u))


def _herm_fun_frechet(X: np.ndarray, Xdot: np.ndarray, f, fprime) -> np.ndarray:
    """Daleckii-Krein derivative of f(X) along Xdot for Hermitian X."""
    w, U = np.linalg.eigh(X)
    A = U.conj().T @ Xdot @ U
    F = np.empty((len(w), len(w)))
    for i in range(len(w)):
        for j in range(len(w)):
            if abs(w[i] - w[j]) > 1e-12:
                F[i, j] = (f(w[i]) - f(w[j])) / (w[i] - w[j])
            else:
                F[i, j] = fprime(0.5 * (w[i] + w[j]))
    return U @ (F * A) @ U.conj().T


def almost_idempotent_path(path: HermitianPath, k: int,
                           cutoff=None) -> SymbolPath:
    """Path of almost idempotents over the even suspension of a Hermitian path.

    The lift uses Q_s = (D_s^2 x I + |mu|^2 + phi(|mu|) phi(D_s^2 x I))^(1/2)
    with an even compactly supported cutoff phi, phi(0) = 1, which keeps Q_s
    invertible while leaving the symbol expansion untouched; endpoints are
    matched to the exact idempotents by the affine correction
    P_s = P~_s + s (P_1 - P~_1) + (1 - s)(P_0 - P~_0).

    cutoff, if given, is a (phi, phi') pair replacing the built-in bump.
    """
    phi, dphi = (_phi, _dphi) if cutoff is None else cutoff
    p = 2 * k
    N = path.N
    eye = np.eye(2 ** k)
    NF = N * eye.shape[0]
    _, _, grading = _suspension_generators(N, p)

    from ._angular import Profile
    from .symbols import _Tbl

    def build_tilde(s: float, with_s_derivative: bool = False):
        D = path(s)
        Msq = np.kron(D @ D, eye)
        w, U = np.linalg.eigh(Msq)
        phw = np.array([phi(x) for x in w])
        phi_mat = (U * phw) @ U.conj().T

        def m_pow(mu, z):
            r = float(np.linalg.norm(mu))
            vals = (w + r * r + phi(r) * phw) ** z
            return (U * vals) @ U.conj().T

        exact = shifted_power_symbol(Msq, -0.5, p)

        def qinv_partial(j):
            def dj(mu):
                r = float(np.linalg.norm(mu))
                dm = 2.0 * mu[j - 1] * np.eye(NF, dtype=complex)
                if 0.0 < r < 1.0:
                    dm = dm + dphi(r) * (mu[j - 1] / r) * phi_mat
                return -0.5 * m_pow(mu, -1.5) @ dm

            return ParamSymbol(p, NF, -2.0, dj, exact.partial(j)._tbl,
                               tag=f"dQinv{j}")

        qinv = ParamSymbol(p, NF, -1.0, lambda mu: m_pow(mu, -0.5),
                           exact._tbl, partial_maker=qinv_partial,
                           tag=f"Qinv(s={s})")
        d2 = suspend_even(D, k)
        half_unit = sym_scale(unit_symbol(p, NF), 0.5)
        p_tilde = sym_sub(half_unit, sym_scale(sym_mul(qinv, d2), 0.5))
        if not with_s_derivative:
            return p_tilde

        Dd = path.derivative(s)
        Msq_dot = np.kron(Dd @ D + D @ Dd, eye)

        def dqinv_eval(mu):
            r = float(np.linalg.norm(mu))
            c = r * r
            pr = phi(r)
            f = lambda x: (x + c + pr * phi(x)) ** -0.5
            fp = lambda x: (-0.5 * (x + c + pr * phi(x)) ** -1.5
                            * (1.0 + pr * dphi(x)))
            return _herm_fun_frechet(Msq, Msq_dot, f, fp)

        # expansion: termwise d/ds of binom(-1/2, j) Msq^j |mu|^(-1-2j)
        dtbl = _Tbl(p, NF, rho=exact.remainder_order)
        depth = 0
        while -1.0 - 2 * (depth + 1) > exact.remainder_order:
            depth += 1
        Mpows = [np.eye(NF, dtype=complex)]
        for _ in range(depth):
            Mpows.append(Mpows[-1] @ Msq)
        for j in range(1, depth + 1):
            S = np.zeros((NF, NF), dtype=complex)
            for m in range(j):
                S += Mpows[m] @ Msq_dot @ Mpows[j - 1 - m]
            c = _gbinom(-0.5, j)
            if c != 0:
                dtbl._accum(-1.0 - 2 * j, 0, Profile.constant(c * S, p))
        dqinv = ParamSymbol(p, NF, -2.0, dqinv_eval, dtbl, tag="dsQinv")
        d2_dot = const_symbol(grading @ np.kron(Dd, eye), p)
        p_tilde_dot = sym_scale(
            sym_add(sym_mul(dqinv, d2), sym_mul(qinv, d2_dot)), -0.5)
        return p_tilde, p_tilde_dot

    P0 = idempotent_from_D(path(0.0), k)
    P1 = idempotent_from_D(path(1.0), k)
    corr0 = sym_sub(P0, build_tilde(0.0))  # order -infinity: same expansion
    corr1 = sym_sub(P1, build_tilde(1.0))

    def fam(s: float) -> ParamSymbol:
        if s == 0.0:
            return P0
        if s == 1.0:
            return P1
        pt = build_tilde(s)
        return sym_add(pt, sym_add(sym_scale(corr1, s), sym_scale(corr0, 1.0 - s)))

    def dfam(s: float) -> ParamSymbol:
        _, ptdot = build_tilde(s, with_s_derivative=True)
        return sym_add(ptdot, sym_sub(corr1, corr0))

    return SymbolPath(p, NF, fam, dfam, breakpoints=path.breakpoints,
                      tag=f"almost_idem(k={k})")


# ---------------------------------------------------------------------------
# divisor flows
# ---------------------------------------------------------------------------

def _path_integral(fn, breakpoints, n0: int, tol: float):
    prev = None
    n = n0
    for _ in range(4):
        nodes, weights = _gauss_nodes(n, breakpoints)
        val = sum(w * fn(float(s)) for s, w in zip(nodes, weights))
        if prev is not None and abs(val - prev) < tol:
            return val, {"s_nodes": len(nodes), "s_increment": abs(val - prev)}
        prev = val
        n *= 2
    raise NonConvergenceError(
        f"path quadrature did not reach {tol} (last increment above tolerance)")


def _maurer_cartan_form(a: ParamSymbol, a_inv: ParamSymbol) -> OperatorForm:
    """a^-1 da as a 1-form."""
    return wedge(OperatorForm.from_symbol(a_inv), d_of(a))


def divisor_flow_odd(path: SymbolPath, k: int, cfg: QuadConfig = DEFAULT_CFG,
                     s_nodes: int = PATH_NODES, s_tol: float = PATH_TOL) -> FlowResult:
    """Odd divisor flow of an admissible path in dimension p = 2k+1.

    Endpoint terms tr_bar((A^-1 dA)^(2k+1)) at s = 1, 0, and the symbolic
    correction integral of
    tr_tilde(sigma(A)^-1 sigma(dA/ds) (sigma(A)^-1 d sigma(A))^(2k)).
    """
    p = 2 * k + 1
    if path.p != p:
        raise DimensionMismatchError(f"path lives on R^{path.p}, DF_{p} needs p={p}")
    path.validate()

    def endpoint(s: float) -> complex:
        a = path(s)
        omega = _maurer_cartan_form(a, sym_inv(a))
        return tr_bar(wedge_power(omega, 2 * k + 1), cfg)

    t1 = endpoint(1.0)
    t0 = endpoint(0.0)

    def corr(s: float) -> complex:
        fs = sigma(path(s))
        dfs = sigma(path.s_derivative(s))
        fs_inv = sym_inv(fs, check_domain=False)
        eta = OperatorForm.from_symbol(sym_mul(fs_inv, dfs))
        if k > 0:
            eta = wedge(eta, wedge_power(_maurer_cartan_form(fs, fs_inv), 2 * k))
        return tr_tilde(eta, cfg)

    integral, diag = _path_integral(corr, path.breakpoints, s_nodes, s_tol)
    c_end = math.factorial(k) / ((-2j * math.pi) ** (k + 1) * math.factorial(2 * k + 1))
    c_corr = math.factorial(k) / ((-2j * math.pi) ** (k + 1) * math.factorial(2 * k))
    parts = {"endpoint_s1": c_end * t1,
             "endpoint_s0": -c_end * t0,
             "symbolic_correction": -c_corr * integral}
    return _snap(sum(parts.values()), parts, diag)


def df_via_pairing(path: SymbolPath, k: int, cfg: QuadConfig = DEFAULT_CFG,
                   n_s: int = PATH_NODES) -> complex:
    """Odd divisor flow through the relative pairing with the cycle character.

    DF = (1/(-2 pi i)^(k+1)) <(phi_{2k+1}, psi_{2k}), ch(path)>; must agree
    with divisor_flow_odd, which evaluates the same pairing in closed form.
    """
    p = 2 * k + 1
    if path.p != p:
        raise DimensionMismatchError(f"path lives on R^{path.p}, need p={p}")
    rc = relative_ch_path(path, K=k, n_s=n_s)
    chars = character_pair(p, cfg)
    return pair(chars, rc, cfg) / (-2j * math.pi) ** (k + 1)


def _class_idempotency_residual(fs: ParamSymbol) -> float:
    """Degreewise residual of sigma(f)^2 - sigma(f) above the validity floor."""
    from .symbols import _coarse_sphere
    t = fs._tbl
    q = t.mul(t).add(t.scale(-1.0))
    worst = 0.0
    dirs = _coarse_sphere(fs.p)
    for (a, _l), prof in q.data.items():
        if a <= q.rho + 1e-9:
            continue
        for w in dirs:
            worst = max(worst, float(np.max(np.abs(prof(w)))))
    return worst


def eta_even(P: ParamSymbol, k: int, cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """Even eta of an idempotent symbol:
    eta_2k(P) = -2/((2 pi i)^k k!) tr_bar((P - 1/2)(dP)^(2k))."""
    p = 2 * k
    half = sym_scale(unit_symbol(P.p, P.N), 0.5)
    form = wedge(OperatorForm.from_symbol(sym_sub(P, half)),
                 wedge_power(d_of(P), 2 * k))
    val = tr_bar(form, cfg)
    return -2.0 / ((2j * math.pi) ** k * math.factorial(k)) * val


def divisor_flow_even(path: SymbolPath, k: int, cfg: QuadConfig = DEFAULT_CFG,
                      s_nodes: int = PATH_NODES, s_tol: float = PATH_TOL,
                      idem_tol: float = 1e-6) -> FlowResult:
    """Even divisor flow of a path of almost idempotents in dimension p = 2k.

    Endpoint pairings <phi_2k, ch(f)> = ((-1)^k / k!) tr_bar((f-1/2)(df)^2k)
    and the boundary correction
    <psi_{2k-1}, /ch> = ((-1)^k/(k-1)!) tr_tilde(sigma((2f-1) f') (d sigma f)^(2k-1)),
    assembled with the prefactor (-1)^(k+1) / (2 pi i)^k.
    """
    p = 2 * k
    if path.p != p:
        raise DimensionMismatchError(f"path lives on R^{path.p}, DF_{p} needs p={p}")
    # endpoints must be exact idempotents, leading parts idempotent throughout
    rng = np.random.default_rng(1)
    for s in (0.0, 1.0):
        f = path(s)
        for _ in range(3):
            mu = rng.normal(size=p)
            m = f(mu)
            if np.max(np.abs(m @ m - m)) > 1e-10:
                raise DivflowError(f"endpoint s={s} is not exactly idempotent")
    for s in np.linspace(0.0, 1.0, 5):
        resid = _class_idempotency_residual(sigma(path(float(s))))
        if resid > idem_tol:
            raise DivflowError(
                f"leading part not idempotent at s={s}: residual {resid:.2e} "
                f"(tol {idem_tol})")

    half = sym_scale(unit_symbol(path.p, path.N), 0.5)

    def endpoint(s: float) -> complex:
        f = path(s)
        form = wedge(OperatorForm.from_symbol(sym_sub(f, half)),
                     wedge_power(d_of(f), 2 * k))
        return (-1) ** k / math.factorial(k) * tr_bar(form, cfg)

    e1 = endpoint(1.0)
    e0 = endpoint(0.0)

    def corr(s: float) -> complex:
        fs = sigma(path(s))
        dfs = sigma(path.s_derivative(s))
        two_fs = sym_sub(sym_scale(fs, 2.0), unit_symbol(path.p, path.N))
        lead = sym_mul(two_fs, dfs)
        eta = wedge(OperatorForm.from_symbol(lead),
                    wedge_power(d_of(fs), 2 * k - 1))
        return (-1) ** k / math.factorial(k - 1) * tr_tilde(eta, cfg)

    integral, diag = _path_integral(corr, path.breakpoints, s_nodes, s_tol)
    pref = (-1) ** (k + 1) / (2j * math.pi) ** k
    parts = {"endpoint_s1": pref * e1,
             "endpoint_s0": -pref * e0,
             "symbolic_correction": -pref * integral}
    return _snap(sum(parts.values()), parts, diag)
