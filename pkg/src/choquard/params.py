"""Model parameters and exponent algebra.

The model is the focusing equation

    i u_t + Lap(u) + (I_alpha * |.|^b |u|^p) |x|^b |u|^{p-2} u = 0

on R^N with N >= 3, b < 0, Riesz order 0 < alpha < N.  Everything in this
module is closed-form arithmetic on (N, alpha, b, p):

    B   = N p - N - alpha - 2 b
    A   = 2 p - B                  (so A + B = 2p)
    s_c = N/2 - (2 + 2b + alpha)/(2(p-1)) = (B - 2)/(2(p-1))
    p_* = 1 + (2 + 2b + alpha)/N        (s_c = 0)
    p^* = 1 + (2 + 2b + alpha)/(N - 2)  (s_c = 1)

Exact rational arithmetic (fractions.Fraction) is used whenever the inputs
are rational so the benchmark values are exact, not approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Real = Union[int, float, Fraction]

#: structural validity conditions, in the order they are reported
_CONDITION_NAMES = ("-b > 0", "alpha > 0", "N - alpha > 0", "N + b > 0",
                    "4 + alpha + 2b - N > 0", "p - 1 > 0")


def _exactify(x: Real) -> Real:
    """Return a Fraction when x is exactly representable as one, else float."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float) and x == int(x):
        return Fraction(int(x))
    if isinstance(x, float):
        f = Fraction(x).limit_denominator(10 ** 6)
        return f if float(f) == x else x
    raise TypeError(f"not a real number: {x!r}")


@dataclass(frozen=True)
class ModelParams:
    """The four model parameters (N, alpha, b, p)."""

    N: int
    alpha: Real
    b: Real
    p: Real

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 3):
            raise ValueError(f"N must be an integer >= 3, got {self.N}")
        object.__setattr__(self, "alpha", _exactify(self.alpha))
        object.__setattr__(self, "b", _exactify(self.b))
        object.__setattr__(self, "p", _exactify(self.p))


@dataclass(frozen=True)
class DerivedExponents:
    s_c: Real
    p_star: Real
    p_sup: Real
    A: Real
    B: Real

    def as_floats(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("s_c", "p_star", "p_sup", "A", "B")}


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    structural_ok: bool
    violations: tuple


BENCHMARK = ModelParams(N=3, alpha=2, b=Fraction(-1, 2), p=Fraction(5, 2))


def structural_conditions(params: ModelParams):
    """The six members of the positivity condition, with names."""
    N, alpha, b, p = params.N, params.alpha, params.b, params.p
    values = (-b, alpha, N - alpha, N + b, 4 + alpha + 2 * b - N, p - 1)
    return tuple(zip(_CONDITION_NAMES, values))


def validate_params(params: ModelParams) -> ValidityReport:
    """Check the structural conditions plus the dynamics window p>=2, p_*<p<p^*.

    Always returns a report; never raises.
    """
    violations = [name for name, v in structural_conditions(params) if not v > 0]
    structural_ok = not violations
    if structural_ok:
        d = derived_exponents(params)
        if not params.p >= 2:
            violations.append("p >= 2")
        if not d.p_star < params.p:
            violations.append("p > p_*")
        if not params.p < d.p_sup:
            violations.append("p < p^*")
    return ValidityReport(valid=not violations, structural_ok=structural_ok,
                          violations=tuple(violations))


def derived_exponents(params: ModelParams) -> DerivedExponents:
    """Compute s_c, p_*, p^*, A, B.

    Requires only the structural conditions (so the critical endpoints
    p = p_* and p = p^* themselves are evaluable); rejects parameters that
    fail those.
    """
    rep_violations = [name for name, v in structural_conditions(params) if not v > 0]
    if rep_violations:
        raise ValueError(f"invalid params, violated: {', '.join(rep_violations)}")
    N, alpha, b, p = params.N, params.alpha, params.b, params.p
    sigma = 2 + 2 * b + alpha
    B = N * p - N - alpha - 2 * b
    A = 2 * p - B
    s_c = N / Fraction(2) - sigma / (2 * (p - 1)) if _is_exact(alpha, b, p) \
        else N / 2 - sigma / (2 * (p - 1))
    p_star = 1 + sigma / N
    p_sup = 1 + sigma / (N - 2)
    return DerivedExponents(s_c=s_c, p_star=p_star, p_sup=p_sup, A=A, B=B)


def _is_exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


def is_admissible(q, r, s, N) -> bool:
    """s-admissibility of the pair (q, r): N(1/2 - 1/r) = 2/q + s plus the
    window 2N/(N-2s) <= r < 2N/(N-2).  q may be math.inf.  Exact on rational
    inputs."""
    if not (q >= 2 and r >= 2 and N >= 3 and 0 <= s < 1):
        raise ValueError("need q, r >= 2, N >= 3, 0 <= s < 1")
    if q == math.inf:
        two_over_q = 0
    else:
        q = _exactify(q)
        two_over_q = 2 / q
    r = _exactify(r)
    s = _exactify(s)
    scaling = N * (Fraction(1, 2) - 1 / r) == two_over_q + s \
        if _is_exact(r, s) and not isinstance(two_over_q, float) \
        else math.isclose(N * (0.5 - 1 / float(r)), float(two_over_q) + float(s),
                          rel_tol=0, abs_tol=1e-12)
    window = Fraction(2 * N, 1) / (N - 2 * s) <= r < Fraction(2 * N, 1) / (N - 2) \
        if _is_exact(r, s) else 2 * N / (N - 2 * float(s)) <= float(r) < 2 * N / (N - 2)
    return bool(scaling and window)


@dataclass(frozen=True)
class SmallThetaSystem:
    """Exponent bookkeeping for the small-theta Strichartz splitting.

    a = (2p - theta)/(1 - s_c), d = (2p - theta)/(1 + (2p-1-theta) s_c),
    r = 2N(2p - theta)/((N - 2 s_c)(2p - theta) - 4(1 - s_c)), and mu from
    1 + alpha/N = 2/mu + theta/r1 + (2p - theta)/r  with r1 = 2N/(N-2).
    """

    theta: float
    a: float
    d: float
    r: float
    mu: float
    mu_outer: float

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("theta", "a", "d", "r", "mu", "mu_outer")}


def small_theta_system(params: ModelParams, theta: float = 0.01,
                       tol: float = 1e-12) -> SmallThetaSystem:
    """Build and re-verify the exponent system for a given small theta > 0."""
    d_ = derived_exponents(params)
    N, alpha, b, p = params.N, float(params.alpha), float(params.b), float(params.p)
    s_c = float(d_.s_c)
    if not 0 < theta < 2 * p - 1:
        raise ValueError(f"theta must lie in (0, 2p-1), got {theta}")
    a = (2 * p - theta) / (1 - s_c)
    d = (2 * p - theta) / (1 + (2 * p - 1 - theta) * s_c)
    r = 2 * N * (2 * p - theta) / ((N - 2 * s_c) * (2 * p - theta) - 4 * (1 - s_c))
    r1 = 2 * N / (N - 2)
    # 1 + alpha/N = 2/mu + theta/r1 + (2p - theta)/r, inner-ball branch
    mu = 2 / (1 + alpha / N - theta / r1 - (2 * p - theta) / r)
    # outer branch replaces r1 by 2
    mu_outer = 2 / (1 + alpha / N - theta / 2 - (2 * p - theta) / r)
    sys = SmallThetaSystem(theta=theta, a=a, d=d, r=r, mu=mu, mu_outer=mu_outer)

    # duality identity (2p-1-theta) d' = a with 1/d' = 1 - 1/d
    dprime = d / (d - 1)
    checks = [
        ("(2p-1-theta) d' = a", (2 * p - 1 - theta) * dprime, a),
    ]
    for name, lhs, rhs in checks:
        if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
            raise ValueError(f"small-theta identity broken: {name}: {lhs} != {rhs}")
    if not is_admissible(a, r, s_c, N):
        raise ValueError(f"(a, r) = ({a}, {r}) not s_c-admissible")
    # (d, r) satisfies the same scaling identity with s = -s_c (window not
    # meaningful at negative s; only the identity is checked)
    if abs(N * (0.5 - 1 / r) - (2 / d - s_c)) > tol:
        raise ValueError(f"(d, r) = ({d}, {r}) fails the -s_c scaling identity")
    # sign structure: |x|^b integrability needs 2N/mu + 2b > 0 inside the
    # unit ball and < 0 outside
    if not 2 * N / mu + 2 * b > 0:
        raise ValueError(f"inner-ball sign check failed: 2N/mu + 2b = {2*N/mu + 2*b}")
    if not 2 * N / mu_outer + 2 * b < 0:
        raise ValueError(f"outer sign check failed: 2N/mu' + 2b = {2*N/mu_outer + 2*b}")
    return sys


@dataclass(frozen=True)
class AuxiliaryPairSystem:
    """The two auxiliary exponent groups used for the nonlinear estimates.

    Group 1: mu1 just below N/(-b), r1 = 2Np/(alpha + N - 2N/mu1), theta1 = q1 - 2
    with q1 from (1 + theta1) q1' = q1, i.e. q1 = 2 + theta1 free and the pair
    (q1, r1) 0-admissible, which pins q1.
    Group 2: r2 just above 2Np/(N + alpha + 2b), rho solving
    1 + alpha/N = 1/rho + (2p - 1)/r2 + 1/r2 - 1/N exactly, theta2 = q2 - 2 with
    (q2, r2) 0-admissible.
    """

    eps: float
    mu1: float
    q1: float
    r1: float
    theta1: float
    q2: float
    r2: float
    theta2: float
    rho: float

    def as_dict(self) -> dict:
        keys = ("eps", "mu1", "q1", "r1", "theta1", "q2", "r2", "theta2", "rho")
        return {k: float(getattr(self, k)) for k in keys}


def auxiliary_pair_system(params: ModelParams, eps: float = 1e-3,
                          tol: float = 1e-9) -> AuxiliaryPairSystem:
    """Build the auxiliary exponent systems with one-sided offsets of size eps.

    The one-sided values x^-/x^+ are realized as x(1 -+ eps) on the free
    quantities (mu1, r2); every dependent quantity is then solved exactly from
    its defining identity, so the identities hold to roundoff by construction
    and only the windows need eps to be small.
    """
    d_ = derived_exponents(params)
    rep = validate_params(params)
    if not rep.valid:
        raise ValueError(f"invalid params: {rep.violations}")
    N, alpha, b, p = params.N, float(params.alpha), float(params.b), float(params.p)

    mu1 = (N / -b) * (1 - eps)                 # (N/(-b))^-
    r1 = 2 * N * p / (alpha + N - 2 * N / mu1)
    # 0-admissibility pins q1: 2/q1 = N(1/2 - 1/r1)
    q1 = 2 / (N * (0.5 - 1 / r1))
    theta1 = q1 - 2

    r2 = (2 * N * p / (N + alpha + 2 * b)) * (1 + eps)   # (...)^+
    rho = 1 / (1 + alpha / N - (2 * p - 1) / r2 - 1 / r2 + 1 / N)
    q2 = 2 / (N * (0.5 - 1 / r2))
    theta2 = q2 - 2

    sys = AuxiliaryPairSystem(eps=eps, mu1=mu1, q1=q1, r1=r1, theta1=theta1,
                           q2=q2, r2=r2, theta2=theta2, rho=rho)

    r_upper = 2 * N / (N - 2)
    for name, r_ in (("r1", r1), ("r2", r2)):
        if not 2 < r_ < r_upper:
            raise ValueError(f"{name} = {r_} outside (2, 2N/(N-2))")
    for name, th in (("theta1", theta1), ("theta2", theta2)):
        if not 0 < th < 2 * (p - 1):
            raise ValueError(f"{name} = {th} outside (0, 2(p-1))")
    for q_, r_ in ((q1, r1), (q2, r2)):
        if abs(N * (0.5 - 1 / r_) - 2 / q_) > tol:
            raise ValueError(f"({q_}, {r_}) fails 0-admissibility")
        # duality form (1 + theta) q' = q with theta = q - 2 is an identity:
        # q' = q/(q-1) so (q-1) q' = q always; kept as a consistency guard
        qp = q_ / (q_ - 1)
        if abs((1 + (q_ - 2)) * qp - q_) > tol:
            raise ValueError("duality bookkeeping broken")
    # group-2 defining identity re-check
    lhs = 1 / rho + (2 * p - 1) / r2 + 1 / r2 - 1 / N
    if abs(lhs - (1 + alpha / N)) > tol:
        raise ValueError(f"rho identity broken: {lhs} != {1 + alpha/N}")
    return sys


def bootstrap_bound(a: float, bcoef: float, theta: float, X0: float) -> dict:
    """Continuity-argument bound for X <= a + b X^theta.

    If a < (1 - 1/theta)(theta b)^{1/(1-theta)} and X0 <= (theta b)^{1/(1-theta)}
    then any continuous X obeying the inequality stays <= theta a/(theta - 1).
    """
    if theta <= 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    if a <= 0 or bcoef <= 0:
        raise ValueError("need a, b > 0")
    xi = (theta * bcoef) ** (1 / (1 - theta))
    applies = a < (1 - 1 / theta) * xi and X0 <= xi
    return {"applies": bool(applies),
            "bound": theta * a / (theta - 1) if applies else None,
            "barrier": xi}
