"""The regularized integral: constant term of int_{|mu|<=R} as R -> infinity.

For a log-polyhomogeneous scalar symbol f the ball integral expands as
sum_a p_a(log R) R^a and the regularized integral is the R^0 log^0
coefficient.  We never fit that constant from samples: the symbol's stored
homogeneous terms contribute exactly through -F(R0) where F is the closed-form
antiderivative of r^(a+p-1) log^l r, and the leftover remainder (absolutely
integrable by the precondition rho < -p) is integrated numerically.  The split
radius R0 drops out of the sum, which is the defining property and is tested.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import roots_legendre

from .errors import (DimensionMismatchError, DivflowError,
                     InsufficientExpansionError, NonConvergenceError)
from .symbols import NEG_INF, ParamSymbol


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature configuration for regularized integrals.

    split_radius: where the ball/tail decomposition is made (result must not
    depend on it); radial_abs_tol drives the adaptive radial rule; the sphere
    rules are the two-point set on S^0, an even-count trapezoid on S^1 and a
    Gauss(polar) x trapezoid(azimuth) product grid on S^2.  The remainder tail
    over [R0, inf) is integrated after the inversion u = 1/r, refined
    adaptively until the increment estimate is below tail_tol.
    """

    split_radius: float = 1.0
    radial_abs_tol: float = 1e-9
    sphere_n_theta: int = 256
    sphere_n_polar: int = 17
    sphere_n_azimuth: int = 36
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.split_radius <= 0:
            raise DivflowError("split_radius must be positive")
        for name in ("radial_abs_tol", "tail_tol"):
            if getattr(self, name) <= 0:
                raise DivflowError(f"{name} must be positive")
        if self.sphere_n_theta % 2 or self.sphere_n_azimuth % 2:
            raise DivflowError("trapezoid node counts must be even")

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_CFG = QuadConfig()


# ---------------------------------------------------------------------------
# sphere rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _sphere_rule_cached(p: int, n_theta: int, n_polar: int, n_az: int):
    if p == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if p == 2:
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        nodes = np.stack([np.cos(th), np.sin(th)], axis=1)
        return nodes, np.full(n_theta, 2 * np.pi / n_theta)
    if p == 3:
        z, wz = roots_legendre(n_polar)
        phi = 2 * np.pi * np.arange(n_az) / n_az
        sin_t = np.sqrt(1 - z ** 2)
        nodes = []
        weights = []
        for zi, wi in zip(z, wz):
            st = math.sqrt(max(0.0, 1 - zi * zi))
            for ph in phi:
                nodes.append([st * math.cos(ph), st * math.sin(ph), zi])
                weights.append(wi * 2 * np.pi / n_az)
        return np.asarray(nodes), np.asarray(weights)
    raise DivflowError(f"sphere quadrature implemented for p <= 3, got p={p}")


def sphere_rule(p: int, cfg: QuadConfig = DEFAULT_CFG):
    """Nodes (M,p) and weights (M,) for integration over S^{p-1}."""
    return _sphere_rule_cached(p, cfg.sphere_n_theta, cfg.sphere_n_polar,
                               cfg.sphere_n_azimuth)


def sphere_integral_profile(profile, p: int, cfg: QuadConfig = DEFAULT_CFG) -> np.ndarray:
    """Integral of an angular profile over the sphere (matrix-valued)."""
    nodes, weights = sphere_rule(p, cfg)
    vals = profile.eval_batch(nodes)
    return np.einsum("m,mij->ij", weights, vals)


# ---------------------------------------------------------------------------
# closed-form antiderivatives of r^(beta-1) log^l r
# ---------------------------------------------------------------------------

def _log_poly_antiderivative(r: float, beta: float, l: int) -> float:
    """F(r) with F'(r) = r^(beta-1) log^l r, of the canonical polynomial form."""
    lr = math.log(r)
    if abs(beta) < 1e-14:
        return lr ** (l + 1) / (l + 1)
    # F = r^beta sum_j d_j log^j r, d_l = 1/beta, d_j = -(j+1) d_{j+1} / beta
    ds = [0.0] * (l + 1)
    ds[l] = 1.0 / beta
    for j in range(l - 1, -1, -1):
        ds[j] = -(j + 1) * ds[j + 1] / beta
    return r ** beta * sum(d * lr ** j for j, d in enumerate(ds))


def _constant_coefficient_at_one(beta: float, l: int) -> float:
    """log^0 coefficient of the canonical antiderivative at r = 1."""
    if abs(beta) < 1e-14:
        return 0.0
    return (-1.0) ** l * math.factorial(l) / beta ** (l + 1)


def tail_constant_term(alpha: float, l: int, sphere_integral: complex,
                       R0: float, p: int) -> complex:
    """R^0 log^0 coefficient of int_{R0<=|mu|<=R} of one homogeneous term.

    The term t(omega)|mu|^alpha log^l|mu| integrates radially to F(R)-F(R0)
    with F the canonical antiderivative of r^(alpha+p-1) log^l r; F(R) carries
    no constant term in the (R^a log^j) scale, so the constant is -F(R0) times
    the sphere integral of t.
    """
    if R0 <= 0:
        raise DivflowError("R0 must be positive")
    beta = alpha + p
    return -_log_poly_antiderivative(R0, beta, l) * sphere_integral


# ---------------------------------------------------------------------------
# adaptive complex quadrature helpers
# ---------------------------------------------------------------------------

def _cquad(fn: Callable[[float], complex], a: float, b: float,
           abs_tol: float) -> complex:
    parts = []
    for pick in (lambda x: fn(x).real, lambda x: fn(x).imag):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(pick, a, b, epsabs=abs_tol, epsrel=1e-10,
                            limit=300)
        if not math.isfinite(val):
            raise NonConvergenceError(f"quadrature diverged on [{a},{b}]")
        # quadpack's estimate may sit above epsabs from pure roundoff; only
        # a genuinely large estimate means the rule failed to converge
        if err > max(100 * abs_tol, 1e-8 * (1.0 + abs(val))):
            raise NonConvergenceError(
                f"quadrature error estimate {err:.2e} on [{a},{b}] exceeds "
                f"tolerance {abs_tol:.2e}")
        parts.append(val)
    return complex(parts[0], parts[1])


def _sphere_average(f: ParamSymbol, r: float, nodes: np.ndarray,
                    weights: np.ndarray) -> complex:
    total = 0.0 + 0.0j
    for w, node in zip(weights, nodes):
        total += w * complex(f(r * node)[0, 0])
    return total


def _sphere_average_fn(fn: Callable[[np.ndarray], complex], r: float,
                       nodes: np.ndarray, weights: np.ndarray) -> complex:
    total = 0.0 + 0.0j
    for w, node in zip(weights, nodes):
        total += w * fn(r * node)
    return total


# ---------------------------------------------------------------------------
# the regularized integral on R^p
# ---------------------------------------------------------------------------

def reg_integral(f: ParamSymbol, cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """Regularized integral of a scalar symbol over R^p.

    Decomposes as (numeric ball integral up to R0) + (exact constant terms of
    the expansion tails) + (numeric absolutely convergent remainder).  The
    precondition remainder_order < -p guarantees the last piece converges; an
    InsufficientExpansionError is raised otherwise rather than returning a
    silently truncated number.
    """
    if f.N != 1:
        raise DimensionMismatchError("reg_integral expects a scalar (N=1) symbol")
    p = f.p
    if not f.remainder_order < -p:
        raise InsufficientExpansionError(
            f"remainder order {f.remainder_order} >= -p = {-p}: expand deeper")
    R0 = cfg.split_radius
    nodes, weights = sphere_rule(p, cfg)

    if p == 1:
        inner = _cquad(lambda x: complex(f(np.array([x]))[0, 0]),
                       -R0, R0, cfg.radial_abs_tol)
    else:
        inner = _cquad(lambda r: r ** (p - 1) * _sphere_average(f, r, nodes, weights)
                       if r > 0 else 0.0j,
                       0.0, R0, cfg.radial_abs_tol)

    tails = 0.0 + 0.0j
    for term in f.terms:
        s_int = complex(sphere_integral_profile(term.angular, p, cfg)[0, 0])
        tails += tail_constant_term(term.degree, term.log_power, s_int, R0, p)

    def rem(mu):
        return complex((f(mu) - f.expansion_eval(mu))[0, 0])

    def tail_integrand(u):
        # beyond r = 1e12 the remainder (o(r^-p)) is far below any tolerance
        if u <= 1e-12:
            return 0.0j
        r = 1.0 / u
        return r ** (p + 1) * _sphere_average_fn(rem, r, nodes, weights)

    remainder = _cquad(tail_integrand, 0.0, 1.0 / R0, cfg.tail_tol)
    return inner + tails + remainder


# ---------------------------------------------------------------------------
# the one-dimensional regularized integral on (0, infinity)
# ---------------------------------------------------------------------------

def reg_integral_radial(g: Callable[[float], complex],
                        terms_infinity: Sequence[tuple[float, int, complex]] = (),
                        terms_zero: Sequence[tuple[float, int, complex]] = (),
                        cfg: QuadConfig = DEFAULT_CFG) -> complex:
    """LIM_{eps->0} int_eps^1 g + LIM_{R->inf} int_1^R g.

    terms_infinity / terms_zero list the log-polyhomogeneous data of g at the
    two ends as (alpha, l, coeff) triples meaning coeff * r^alpha * log^l r.
    Terms with alpha <= -1 at infinity (alpha >= -1 at zero) are mandatory for
    the limits to exist; supplying convergent terms as well is harmless.
    """
    total = 0.0 + 0.0j

    def term_val(r, alpha, l, c):
        return c * r ** alpha * (math.log(r) ** l if l else 1.0)

    # zero side: LIM int_eps^1 = int_0^1 (g - sing) + sum c * F(1)|_const
    def g0(r):
        val = complex(g(r))
        for alpha, l, c in terms_zero:
            val -= term_val(r, alpha, l, c)
        return val

    try:
        total += _cquad(g0, 0.0, 1.0, cfg.radial_abs_tol)
    except NonConvergenceError as exc:
        raise NonConvergenceError(
            "non-integrable behavior at 0 not covered by terms_zero") from exc
    for alpha, l, c in terms_zero:
        total += c * _constant_coefficient_at_one(alpha + 1, l)

    # infinity side: LIM int_1^R = int_1^inf (g - terms) - sum c * F(1)|_const
    def ginf(r):
        val = complex(g(r))
        for alpha, l, c in terms_infinity:
            val -= term_val(r, alpha, l, c)
        return val

    def inv_integrand(u):
        if u <= 0.0:
            return 0.0j
        r = 1.0 / u
        return ginf(r) * r * r

    try:
        total += _cquad(inv_integrand, 0.0, 1.0, cfg.tail_tol)
    except NonConvergenceError as exc:
        raise NonConvergenceError(
            "non-integrable behavior at infinity not covered by terms_infinity"
        ) from exc
    for alpha, l, c in terms_infinity:
        total -= c * _constant_coefficient_at_one(alpha + 1, l)

    return total
