"""Exact-arithmetic engines: the exponent recursion s -> 2ns/(ns + 2(n-p)), the
geometric decay iteration a_{k+1} = lam a_k + Lam^k K, and the absorption lemma
on tables of ball quantities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

import mpmath

PRECISION_BITS = 128
MP = mpmath.MPContext()
MP.prec = PRECISION_BITS


def to_number(x):
    """Fraction for ints, Fractions and decimal strings; a 128-bit mpf otherwise."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (Rational, str)):
        return Fraction(x)
    return MP.mpf(x)


def _mp(x):
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return MP.mpf(x)


@dataclass(frozen=True)
class BootstrapParams:
    """Exponent p in (n/2, n); gamma = 2 - n/p and s_limit = 2p/n follow."""
    n: int
    p: object  # int, Fraction, decimal string or float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        p = to_number(self.p)
        if not _mp(Fraction(self.n, 2)) < _mp(p) < self.n:
            raise ValueError(f"p must lie in (n/2, n) = ({self.n / 2}, {self.n}), got {float(p)}")
        object.__setattr__(self, "p", p)

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    @property
    def gamma(self):
        return 2 - self.n / self.p

    @property
    def s_limit(self):
        return 2 * self.p / self.n

    def contraction(self):
        """Derivative of the map at its fixed point, (n - p)/n."""
        return (self.n - self.p) / self.n

    def step(self, s):
        n, p = self.n, self.p
        if not (self.exact and isinstance(s, Fraction)):
            s, p = _mp(s), _mp(p)
        return 2 * n * s / (n * s + 2 * (n - p))


@dataclass
class RecursionState:
    sequence: list
    params: object
    monotone: bool = True
    gaps: list = field(default_factory=list)
    bounds: list = field(default_factory=list)

    def floats(self) -> list[float]:
        return [float(x) for x in self.sequence]


def exponent_iterate(s1, params: BootstrapParams, k_max: int = 200,
                     stop_gap: float | None = None) -> RecursionState:
    """s_{k+1} = 2 n s_k / (n s_k + 2(n - p)) from s_1 in (1, 2p/n).

    Rational inputs stay in exact arithmetic; anything else runs at 128 bits.
    ``stop_gap`` ends the iteration once s_limit - s_k drops below it.
    """
    s = to_number(s1)
    limit = params.s_limit
    if not (params.exact and isinstance(s, Fraction)):
        s, limit = _mp(s), _mp(limit)
    if not 1 < s < limit:
        raise ValueError(f"s1 must lie in (1, 2p/n) = (1, {float(limit)}), got {float(s)}")
    seq, gaps = [s], [limit - s]
    monotone = True
    floor = 0 if isinstance(limit, Fraction) else MP.mpf(2) ** (8 - PRECISION_BITS) * limit
    for _ in range(k_max - 1):
        if stop_gap is not None and gaps[-1] < stop_gap:
            break
        nxt = params.step(seq[-1])
        # at 128 bits the iterate can land on the limit; from then on it may only stay put
        converged = not isinstance(nxt, Fraction) and gaps[-1] <= floor
        monotone = monotone and (nxt > seq[-1] or (converged and nxt >= seq[-1]))
        seq.append(nxt)
        gaps.append(limit - nxt)
    exact = isinstance(limit, Fraction)
    bounded = all(g > 0 for g in gaps) if exact else all(g >= 0 for g in gaps)
    return RecursionState(seq, params, monotone and bounded, gaps)


def steps_to_gap(s1, params: BootstrapParams, gap: float = 1e-12, k_max: int = 200) -> int:
    """Number of iterates until s_limit - s_k < gap (k_max + 1 if never)."""
    st = exponent_iterate(s1, params, k_max, stop_gap=gap)
    for k, g in enumerate(st.gaps, start=1):
        if g < gap:
            return k
    return k_max + 1


# -- decay iteration ------------------------------------------------------------

def check_lambda_regime(lam, Lam) -> None:
    if not 0 < lam < Lam < 1:
        raise ValueError(f"need 0 < lambda < Lambda < 1 (lambda = (1+delta)/2^n < 2^-(n-2+2gamma)), "
                         f"got lambda = {lam}, Lambda = {Lam}")


def decay_closed_form(k: int, a1, lam, Lam, K):
    """lam^(k-1) a1 + K Lam (Lam^(k-1) - lam^(k-1)) / (Lam - lam): the bound for a_k.

    The difference quotient is evaluated as Lam^(k-2) (1 - rho^(k-1)) / (1 - rho),
    rho = lam/Lam, to avoid cancellation for large k.
    """
    if k < 1:
        raise ValueError("k starts at 1")
    if isinstance(lam, Fraction) and isinstance(Lam, Fraction):
        return lam ** (k - 1) * a1 + K * Lam * (Lam ** (k - 1) - lam ** (k - 1)) / (Lam - lam)
    m = k - 1
    if m == 0:
        return float(a1)
    rho = lam / Lam
    ratio = -math.expm1(m * math.log(rho)) / -math.expm1(math.log(rho))  # (1 - rho^m)/(1 - rho)
    return lam ** m * a1 + K * Lam ** m * ratio


def decay_iterate(a1, lam, Lam, K, k_max: int = 50) -> RecursionState:
    """a_{k+1} = lam a_k + Lam^k K (the equality case) with the closed-form bound per k."""
    check_lambda_regime(lam, Lam)
    seq = [a1]
    for k in range(1, k_max):
        seq.append(lam * seq[-1] + Lam ** k * K)
    bounds = [decay_closed_form(k, a1, lam, Lam, K) for k in range(1, k_max + 1)]
    ok = all(a <= b * (1 + 1e-12) + 1e-300 for a, b in zip(seq, bounds))
    return RecursionState(seq, {"lambda": lam, "Lambda": Lam, "K": K}, ok, [], bounds)


def decay_constant(a1, lam, Lam, K):
    """C = a1 + K Lam/(Lam - lam), so that a_{k+1} <= C Lam^k."""
    return a1 + K * Lam / (Lam - lam)


def decay_lambda(n: int, delta: float) -> float:
    return (1 + delta) / 2 ** n


def decay_Lambda(n: int, gamma: float) -> float:
    return 2.0 ** -(n - 2 + 2 * gamma)


def max_delta(n: int, gamma: float) -> float:
    """Largest delta with (1 + delta)/2^n < 2^-(n-2+2gamma): 2^(2-2gamma) - 1."""
    return 2.0 ** (2 - 2 * gamma) - 1


# -- absorption lemma ------------------------------------------------------------

Ball2 = tuple  # (center tuple, radius)


@dataclass
class AbsorptionVerdict:
    hypothesis_holds: bool
    violations: list
    conclusion_ratio: float
    subadditive: bool


def subadditivity_screen(table: Mapping[Ball2, float], tol: float = 1e-12) -> list:
    """Monotonicity under inclusion: phi(A) <= phi(B) whenever A ⊂ B (both in the table).

    Returns the offending pairs."""
    bad = []
    items = list(table.items())
    for (ca, ra), va in items:
        if va < 0:
            bad.append(((ca, ra), None))
            continue
        for (cb, rb), vb in items:
            if rb > ra and math.dist(ca, cb) + ra <= rb + 1e-12 and va > vb * (1 + tol) + tol:
                bad.append(((ca, ra), (cb, rb)))
    return bad


def absorption_check(phi: Mapping[Ball2, float], k: float, Gamma: float, eps0: float,
                     tol: float = 1e-12) -> AbsorptionVerdict:
    """Check sigma^k phi(B_{sigma/2}(z)) <= eps0 sigma^k phi(B_sigma(z)) + Gamma over every
    table pair (B_sigma(z), B_{sigma/2}(z)), and report max rho^k phi(B_{rho/2}(y)) / Gamma."""
    if Gamma < 0 or eps0 < 0:
        raise ValueError("Gamma and eps0 must be non-negative")
    bad = subadditivity_screen(phi, tol)
    if bad:
        raise ValueError(f"table fails the subadditivity screen at {bad[0]}")
    violations = []
    best = 0.0
    for (z, sigma), v in phi.items():
        half = (z, sigma / 2)
        if half not in phi:
            continue
        lhs = sigma ** k * phi[half]
        rhs = eps0 * sigma ** k * v + Gamma
        if lhs > rhs * (1 + tol) + tol:
            violations.append((z, sigma, lhs, rhs))
        best = max(best, lhs)
    if best == 0:
        ratio = 0.0
    else:
        ratio = best / Gamma if Gamma > 0 else math.inf
    return AbsorptionVerdict(not violations, violations, ratio, True)


def minimal_gamma(phi: Mapping[Ball2, float], k: float, eps0: float) -> float:
    """Smallest Gamma for which the hypothesis holds on the table."""
    g = 0.0
    for (z, sigma), v in phi.items():
        half = (z, sigma / 2)
        if half in phi:
            g = max(g, sigma ** k * (phi[half] - eps0 * v))
    return g


def power_table(centers: Sequence[tuple], radii: Sequence[float], power: float,
                scale: float = 1.0) -> dict:
    """phi(B_sigma(z)) = scale * sigma^power on a dyadic ball family."""
    return {(tuple(c), float(r)): scale * r ** power for c in centers for r in radii}


def morrey_table(g, p: float, beta: float, centers: Sequence[tuple], radii: Sequence[float],
                 scan_levels: int = 4) -> dict:
    """phi(B) = ||g||^p_{M^{p,beta}(B)} for each ball of the family (radii scanned inside B)."""
    from .field import Ball
    from .norms import MorreyParams, morrey_norm

    out = {}
    for c in centers:
        for r in radii:
            B = Ball(c, r)
            rep = morrey_norm(g, MorreyParams(p, beta, MorreyParams.dyadic(scan_levels, r)), B)
            out[(tuple(c), float(r))] = rep.value ** p
    return out


def exact_fixed_point_check(params: BootstrapParams) -> bool:
    """True when the map fixes s_limit exactly (rational inputs only)."""
    if not params.exact:
        raise ValueError("exact check needs a rational p")
    s = params.s_limit
    return params.step(s) == s
