"""The grand-canonical measure Q_z^r on convex lattice polygonal lines.

Each coprime direction x carries an independent negative-binomial multiplicity
nu(x) with Q_z^r{nu(x)=k} = b_k^r z^{k x} (1-z^x)^r.  This module calibrates z
to a target endpoint n, evaluates the moment/covariance lattice sums two
independent ways (direct over coprime directions, and via Moebius inversion as
a signed double series), and provides the Gaussian density the local CLT
compares against.

All infinite sums are truncated with explicit geometric tail bounds; the bound
is carried in the returned TruncationWindow so callers can subtract it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import (
    CalibrationDomainError,
    InvalidArgumentError,
    MatrixDomainError,
    SieveLimitError,
    UnsupportedOrderError,
    WindowError,
)
from .lattice import DEFAULT_SIEVE_LIMIT, Direction, coprime_window_arrays, mobius_upto

ZETA2 = math.pi**2 / 6
#: zeta(3), pinned to 20 significant digits and bracket-checked at import.
ZETA3 = 1.2020569031595942854
KAPPA = (ZETA3 / ZETA2) ** (1.0 / 3.0)

MAX_MOMENT_ORDER = 8


def _check_zeta3(n_terms: int = 500) -> None:
    # integral bracket: 1/(2(N+1)^2) < sum_{k>N} k^-3 < 1/(2N^2)
    partial = math.fsum(k**-3 for k in range(1, n_terms + 1))
    low = partial + 1.0 / (2 * (n_terms + 1) ** 2)
    high = partial + 1.0 / (2 * n_terms**2)
    if not (low - 1e-13 <= ZETA3 <= high + 1e-13):
        raise AssertionError("pinned zeta(3) failed its startup bracket check")


_check_zeta3()


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class GCParams:
    """Calibrated parameter bundle for Q_z^r.

    z_j = exp(-alpha_j) with alpha_j = delta_j n_j^(-1/3).  For calibrate()
    output the deltas follow the kappa formulas, which makes E xi ~ n; the
    with_z() override keeps the bundle consistent but deliberately breaks
    calibration (the conditional law P_n^r does not care).
    """

    n: tuple[int, int]
    r: float
    kappa: float
    delta: tuple[float, float]
    alpha: tuple[float, float]
    z: tuple[float, float]
    aspect: float
    calibrated: bool = True

    def __post_init__(self) -> None:
        n1, n2 = self.n
        if n1 < 1 or n2 < 1:
            raise InvalidArgumentError("target endpoint must have positive coordinates")
        if not self.r > 0:
            raise InvalidArgumentError("r must be positive")
        if not 0.1 <= self.aspect <= 10.0:
            raise CalibrationDomainError(
                f"aspect n2/n1 = {self.aspect:g} outside [0.1, 10]; "
                "the comparable-coordinates assumption n1 ~ n2 fails"
            )
        for j in range(2):
            a, d, zj, nj = self.alpha[j], self.delta[j], self.z[j], self.n[j]
            if not 0.0 < zj < 1.0:
                raise InvalidArgumentError("z components must lie in (0,1)")
            if abs(zj - math.exp(-a)) > 1e-12 * zj:
                raise InvalidArgumentError("z must equal exp(-alpha) componentwise")
            if abs(d - a * nj ** (1.0 / 3.0)) > 1e-12 * d:
                raise InvalidArgumentError("delta must equal alpha * n^(1/3) componentwise")

    def with_z(self, z: tuple[float, float]) -> "GCParams":
        """Same target, overridden z; the executable witness that P_n^r is z-free."""
        z1, z2 = float(z[0]), float(z[1])
        if not (0.0 < z1 < 1.0 and 0.0 < z2 < 1.0):
            raise InvalidArgumentError("overridden z must lie in (0,1)^2")
        a = (-math.log(z1), -math.log(z2))
        d = (a[0] * self.n[0] ** (1.0 / 3.0), a[1] * self.n[1] ** (1.0 / 3.0))
        return replace(self, z=(z1, z2), alpha=a, delta=d, calibrated=False)

    @property
    def alpha_min(self) -> float:
        return min(self.alpha)

    def calibration_residuals(self) -> tuple[float, float, float]:
        """Relative residuals of the three calibration identities."""
        a1, a2 = self.alpha
        n1, n2 = self.n
        k3 = self.r * self.kappa**3
        return (
            abs(a1 * a1 * a2 - k3 / n1) / (k3 / n1),
            abs(a1 * a2 * a2 - k3 / n2) / (k3 / n2),
            abs(a1 * n1 - a2 * n2) / (a1 * n1),
        )


def calibrate(n: tuple[int, int], r: float) -> GCParams:
    """Choose z so that the free measure's expected endpoint tracks n.

    delta_1 = kappa r^(1/3) (n2/n1)^(1/3), delta_2 symmetric,
    kappa = (zeta(3)/zeta(2))^(1/3).
    """
    n1, n2 = int(n[0]), int(n[1])
    if n1 < 1 or n2 < 1:
        raise InvalidArgumentError("target endpoint must have positive coordinates")
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    aspect = n2 / n1
    if not 0.1 <= aspect <= 10.0:
        raise CalibrationDomainError(
            f"aspect n2/n1 = {aspect:g} outside [0.1, 10]; "
            "the comparable-coordinates assumption n1 ~ n2 fails"
        )
    rc = float(r) ** (1.0 / 3.0)
    d1 = KAPPA * rc * (n2 / n1) ** (1.0 / 3.0)
    d2 = KAPPA * rc * (n1 / n2) ** (1.0 / 3.0)
    a1 = d1 * n1 ** (-1.0 / 3.0)
    a2 = d2 * n2 ** (-1.0 / 3.0)
    params = GCParams(
        n=(n1, n2),
        r=float(r),
        kappa=KAPPA,
        delta=(d1, d2),
        alpha=(a1, a2),
        z=(math.exp(-a1), math.exp(-a2)),
        aspect=aspect,
    )
    assert max(params.calibration_residuals()) < 1e-12
    return params


# ---------------------------------------------------------------------------
# per-direction negative-binomial law


def weight_bk(r: float, k: int) -> float:
    """b_k^r = r(r+1)...(r+k-1)/k!, by the running product; b_0 = 1."""
    if not r > 0:
        raise InvalidArgumentError("r must be positive")
    if k < 0:
        raise InvalidArgumentError("k must be non-negative")
    b = 1.0
    for i in range(k):
        b *= (r + i) / (i + 1)
    return b


def log_weight_bk(r: float, k: int) -> float:
    """log b_k^r via lgamma; stable for huge r and large k."""
    if k == 0:
        return 0.0
    return math.lgamma(r + k) - math.lgamma(r) - math.lgamma(k + 1)


def direction_weight(params: GCParams, x: Direction) -> float:
    """z^x = z1^x1 z2^x2 = exp(-<alpha, x>)."""
    return math.exp(-(params.alpha[0] * x.x1 + params.alpha[1] * x.x2))


def nu_pmf(params: GCParams, x: Direction, k: int) -> float:
    """Q_z^r{nu(x)=k} = b_k^r z^{kx} (1-z^x)^r."""
    if k < 0:
        raise InvalidArgumentError("k must be non-negative")
    zx = direction_weight(params, x)
    return math.exp(log_weight_bk(params.r, k) + k * math.log(zx) + params.r * math.log1p(-zx))


def nu_moments(params: GCParams, x: Direction) -> tuple[float, float]:
    """(mean, variance) of nu(x): r z^x/(1-z^x) and r z^x/(1-z^x)^2."""
    zx = direction_weight(params, x)
    return params.r * zx / (1 - zx), params.r * zx / (1 - zx) ** 2


@lru_cache(maxsize=64)
def _moment_coeffs(r: float) -> tuple[tuple[float, ...], ...]:
    """c_{j,k} for the raw-moment expansion m_k = sum_j c_{j,k} u^j, u = z^x/(1-z^x).

    Recursion: c_{1,1} = r; c_{j,k+1} = j c_{j,k} + (r+j-1) c_{j-1,k};
    c_{k+1,k+1} = (r+k) c_{k,k}.  Row k is indexed 1..k.
    """
    rows: list[tuple[float, ...]] = [(r,)]
    for k in range(1, MAX_MOMENT_ORDER):
        prev = rows[-1]
        nxt = []
        for j in range(1, k + 2):
            cj = (j * prev[j - 1] if j <= k else 0.0) + ((r + j - 1) * prev[j - 2] if j >= 2 else 0.0)
            nxt.append(cj)
        rows.append(tuple(nxt))
    return tuple(rows)


def raw_moment(params: GCParams, x: Direction, k: int) -> float:
    """E nu(x)^k for 1 <= k <= 8 via the c_{j,k} recursion; k=0 returns 1."""
    if k < 0:
        raise InvalidArgumentError("moment order must be non-negative")
    if k == 0:
        return 1.0
    if k > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(f"moment order {k} beyond supported {MAX_MOMENT_ORDER}")
    zx = direction_weight(params, x)
    u = zx / (1 - zx)
    coeffs = _moment_coeffs(params.r)[k - 1]
    return math.fsum(c * u**j for j, c in enumerate(coeffs, start=1))


def central_abs_moment(params: GCParams, x: Direction, k: int, tol: float) -> float:
    """mu_k(x) = E|nu(x) - E nu(x)|^k, summed until the geometric tail is below tol."""
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if k < 1:
        raise InvalidArgumentError("moment order must be >= 1")
    if k > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(f"moment order {k} beyond supported {MAX_MOMENT_ORDER}")
    r = params.r
    zx = direction_weight(params, x)
    mean = r * zx / (1 - zx)
    pmf = math.exp(r * math.log1p(-zx))
    total = 0.0
    j = 0
    while True:
        total += pmf * abs(j - mean) ** k
        # pmf(j+1) = pmf(j) * z^x (r+j)/(j+1)
        nxt = pmf * zx * (r + j) / (j + 1)
        j += 1
        if j > 2 * mean + r + 8:
            # past the mode: ratio of consecutive summed terms is below rho < 1
            rho = zx * (r + j) / (j + 1) * (1 + 1.0 / max(j - mean, 1.0)) ** k
            if 0 < rho < 1 and nxt * abs(j - mean) ** k * rho / (1 - rho) < tol and nxt * abs(j - mean) ** k < tol:
                total += nxt * abs(j - mean) ** k
                break
        pmf = nxt
        if j > 10**7:
            raise WindowError("central moment series failed to converge")
    return total


# ---------------------------------------------------------------------------
# truncation windows


@dataclass(frozen=True)
class TruncationWindow:
    """Degree bound M plus the rigorous bound on everything outside it."""

    degree_bound: int
    tail_bound: float


def select_window(params: GCParams, tol: float) -> TruncationWindow:
    """Smallest M with r * sum_{s>M} (s+1) e^{-alpha_min s} / (1-e^{-alpha_min}) < tol.

    The bound dominates both the neglected log-partition mass and the
    probability that any nu(x) != 0 outside the window, since the number of
    lattice points at degree s is s+1 and z^x <= e^{-alpha_min s}.
    """
    if not 0 < tol < 1:
        raise InvalidArgumentError("tol must lie in (0,1)")
    q = math.exp(-params.alpha_min)
    r = params.r

    def bound(m: int) -> float:
        # sum_{s>m} (s+1) q^s = q^(m+1) ((m+2) - (m+1) q) / (1-q)^2
        return r * q ** (m + 1) * ((m + 2) - (m + 1) * q) / (1 - q) ** 3

    hi = 1
    while bound(hi) >= tol:
        hi *= 2
        if hi > 10**9:
            raise WindowError("no finite window meets the tolerance")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if bound(mid) < tol:
            hi = mid
        else:
            lo = mid
    return TruncationWindow(degree_bound=hi, tail_bound=bound(hi))


def _tail_power(q: float, p: int, m_from: int, atol: float) -> float:
    """Numeric sum_{s>m_from} (s+1)^p q^s, safe for the tolerances used here."""
    total = 0.0
    s = m_from + 1
    while True:
        term = (s + 1) ** p * q**s
        total += term
        # past the peak the series is dominated by a geometric with this ratio
        rho = q * (1 + 1.0 / (s + 1)) ** p
        if rho < 1 and term * rho / (1 - rho) < min(atol, 1e-6 * total + atol):
            return total + term * rho / (1 - rho)
        s += 1
        if s - m_from > 10**7:
            raise WindowError("tail series failed to converge")


def _moment_window(params: GCParams, tol: float, power: int, inv_pow: int) -> TruncationWindow:
    """Smallest M with r * sum_{s>M}(s+1)^power q^s / (1-q)^inv_pow < tol.

    Majorant for degree-graded moment sums: at degree s there are at most s+1
    directions, each with |x|-type factors at most s^(power-1) and
    1/(1-z^x) <= 1/(1-q).
    """
    if not 0 < tol < 1:
        raise InvalidArgumentError("tol must lie in (0,1)")
    q = math.exp(-params.alpha_min)
    scale = params.r / (1 - q) ** inv_pow

    def bound(m: int) -> float:
        return scale * _tail_power(q, power, m, tol * 1e-3 / scale)

    hi = 1
    while bound(hi) >= tol:
        hi *= 2
        if hi > 10**7:
            raise WindowError("no finite window meets the tolerance")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if bound(mid) < tol:
            hi = mid
        else:
            lo = mid
    return TruncationWindow(degree_bound=hi, tail_bound=bound(hi))


def _window_exponents(params: GCParams, degree_bound: int) -> np.ndarray:
    """exp(-<alpha, x>) over the canonical coprime window arrays."""
    x1, x2 = coprime_window_arrays(degree_bound)
    return np.exp(-(params.alpha[0] * x1 + params.alpha[1] * x2))


# ---------------------------------------------------------------------------
# partition function and direct lattice sums


def log_partition(params: GCParams, tol: float = 1e-12) -> float:
    """log beta^r(z) = -r sum_x log(1-z^x), truncated with tail below tol."""
    win = select_window(params, tol)
    e = _window_exponents(params, win.degree_bound)
    return -params.r * math.fsum(np.log1p(-e))


def expected_endpoint(params: GCParams, method: str = "direct", tol: float = 1e-10) -> np.ndarray:
    """E xi under Q_z^r, as a 2-vector.

    direct: sum r x z^x/(1-z^x) over coprime directions in a moment window.
    moebius: signed double series over (k, m) with mu(m); independent route,
    agreement with direct is the series-correctness oracle.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if method == "direct":
        win = _moment_window(params, tol, power=2, inv_pow=1)
        x1, x2 = coprime_window_arrays(win.degree_bound)
        e = np.exp(-(params.alpha[0] * x1 + params.alpha[1] * x2))
        t = params.r * e / (1 - e)
        return np.array([math.fsum(x1 * t), math.fsum(x2 * t)])
    if method == "moebius":
        a1, a2 = params.alpha
        return np.array(
            [
                _mobius_endpoint_series(params.r, a1, a2, tol / 2),
                _mobius_endpoint_series(params.r, a2, a1, tol / 2),
            ]
        )
    raise InvalidArgumentError(f"unknown method {method!r}")


def expected_profile(params: GCParams, t, tol: float = 1e-10) -> np.ndarray:
    """E xi(t): the endpoint sum restricted to slopes x2/x1 <= t * n2/n1.

    The slope test is exact (integer cross products) for integral or Fraction
    t; float t compares in floating point.  t = inf reproduces the full
    expected endpoint.
    """
    win = _moment_window(params, tol, power=2, inv_pow=1)
    x1, x2 = coprime_window_arrays(win.degree_bound)
    n1, n2 = params.n
    if t == math.inf:
        keep = np.ones(len(x1), dtype=bool)
    else:
        num, den = _as_ratio(t)
        if den > 0:
            keep = x2 * (n1 * den) <= x1 * (n2 * num)
        else:  # non-rational float: floating comparison
            keep = x2 * float(n1) <= float(t) * x1 * float(n2)
    e = np.exp(-(params.alpha[0] * x1[keep] + params.alpha[1] * x2[keep]))
    tt = params.r * e / (1 - e)
    return np.array([math.fsum(x1[keep] * tt), math.fsum(x2[keep] * tt)])


def _as_ratio(t) -> tuple[int, int]:
    """(num, den) with den > 0 when t is exactly rational; (0, 0) otherwise."""
    if isinstance(t, int):
        return t, 1
    num = getattr(t, "numerator", None)
    den = getattr(t, "denominator", None)
    if isinstance(num, int) and isinstance(den, int) and den > 0:
        return num, den
    if isinstance(t, float) and t >= 0 and float(t).is_integer():
        return int(t), 1
    return 0, 0


def covariance(params: GCParams, method: str = "direct", tol: float = 1e-10) -> np.ndarray:
    """K_z(i,j) = Cov(xi_i, xi_j) = sum_x x_i x_j r z^x/(1-z^x)^2, SPD 2x2."""
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if method == "direct":
        win = _moment_window(params, tol, power=3, inv_pow=2)
        x1, x2 = coprime_window_arrays(win.degree_bound)
        e = np.exp(-(params.alpha[0] * x1 + params.alpha[1] * x2))
        t = params.r * e / (1 - e) ** 2
        k11 = math.fsum(x1 * x1 * t)
        k22 = math.fsum(x2 * x2 * t)
        k12 = math.fsum(x1 * x2 * t)
        return np.array([[k11, k12], [k12, k22]])
    if method == "moebius":
        a1, a2 = params.alpha
        k11 = _mobius_cov_diag_series(params.r, a1, a2, tol / 3)
        k22 = _mobius_cov_diag_series(params.r, a2, a1, tol / 3)
        k12 = _mobius_cov_offdiag_series(params.r, a1, a2, tol / 3)
        return np.array([[k11, k12], [k12, k22]])
    raise InvalidArgumentError(f"unknown method {method!r}")


def covariance_asymptotic(n: tuple[int, int], r: float) -> tuple[np.ndarray, float]:
    """Leading-order K_z and det: (n1 n2)^(2/3)/(r^(1/3) kappa) * [[2n1/n2,1],[1,2n2/n1]]."""
    n1, n2 = n
    scale = (n1 * n2) ** (2.0 / 3.0) / (r ** (1.0 / 3.0) * KAPPA)
    mat = scale * np.array([[2 * n1 / n2, 1.0], [1.0, 2 * n2 / n1]])
    det = 3.0 * (n1 * n2) ** (4.0 / 3.0) / (r ** (2.0 / 3.0) * KAPPA**2)
    return mat, det


# ---------------------------------------------------------------------------
# Moebius-inverted series (the independent evaluation route)
#
# For absolutely convergent f, sum over coprime x equals
# sum_m mu(m) sum over all nonzero lattice y of f(m y).  With
# z^x/(1-z^x)^c expanded through sum_k k^(c-1)-type weights this turns each
# statistic into a signed double series in (k, m) built from the closed forms
#   sum_{j>=1} e^{-h j}         = E/(1-E)
#   sum_{j>=1} j e^{-h j}       = E/(1-E)^2
#   sum_{j>=0} e^{-h j}         = 1/(1-E)
#   sum_{j>=1} j^2 e^{-h j}     = E(1+E)/(1-E)^3,     E = e^{-h}.
# Tails in k and m are bounded by the same closed forms evaluated one step
# beyond the cutoff (the 1/(1-E) factors are decreasing in k and m).


def _mobius_budget(tol: float) -> tuple[float, float]:
    # spend at most tol/2 on k-tails (allocated 1/m^2) and tol/2 on the m-tail
    return tol / (2 * ZETA2), tol / 2


def _mu_iter(limit_hint: int = 1 << 10):
    """Yields (m, mu(m)) growing the cached sieve on demand."""
    table = mobius_upto(limit_hint)
    m = 0
    while True:
        m += 1
        if m > table.limit:
            if table.limit >= DEFAULT_SIEVE_LIMIT:
                raise SieveLimitError(
                    f"Moebius series needs m > sieve limit {DEFAULT_SIEVE_LIMIT}"
                )
            table = mobius_upto(table.limit * 2)
        yield m, table[m]


def _mobius_endpoint_series(r: float, a1: float, a2: float, tol: float) -> float:
    """sum_{k,m} r m mu(m) E1 / ((1-E1)^2 (1-E2)), E_i = e^{-k m a_i}."""
    per_m, m_budget = _mobius_budget(tol)
    terms: list[float] = []
    err = 0.0
    for m, mu in _mu_iter():
        q1 = math.exp(-m * a1)
        # all-k majorant for every m' >= m:  r m' q1^m'/(1-q1^m')^3/(1-q2^m')
        denom = (1 - q1) ** 3 * (1 - math.exp(-m * a2))
        m_tail = r / denom * _tail_power(math.exp(-a1), 1, m - 1, m_budget * 1e-3)
        if m_tail < m_budget:
            err += m_tail
            break
        if mu != 0:
            k = 1
            while True:
                e1 = math.exp(-k * m * a1)
                e2 = math.exp(-k * m * a2)
                terms.append(r * m * mu * e1 / ((1 - e1) ** 2 * (1 - e2)))
                # geometric k-tail bound, factors frozen at k+1
                e1n = math.exp(-(k + 1) * m * a1)
                e2n = math.exp(-(k + 1) * m * a2)
                k_tail = r * m * (e1n / (1 - e1n)) / ((1 - e1n) ** 2 * (1 - e2n))
                if k_tail < per_m / m**2:
                    err += k_tail
                    break
                k += 1
    assert err < tol
    return math.fsum(terms)


def _mobius_cov_diag_series(r: float, a1: float, a2: float, tol: float) -> float:
    """sum_{k,m} r k m^2 mu(m) E1(1+E1) / ((1-E1)^3 (1-E2)) -> K(1,1) with a1 first."""
    per_m, m_budget = _mobius_budget(tol)
    terms: list[float] = []
    err = 0.0
    for m, mu in _mu_iter():
        q1 = math.exp(-m * a1)
        denom = (1 - q1) ** 5 * (1 - math.exp(-m * a2))
        m_tail = 2 * r / denom * _tail_power(math.exp(-a1), 2, m - 1, m_budget * 1e-3)
        if m_tail < m_budget:
            err += m_tail
            break
        if mu != 0:
            k = 1
            while True:
                e1 = math.exp(-k * m * a1)
                e2 = math.exp(-k * m * a2)
                terms.append(r * k * m * m * mu * e1 * (1 + e1) / ((1 - e1) ** 3 * (1 - e2)))
                e1n = math.exp(-(k + 1) * m * a1)
                e2n = math.exp(-(k + 1) * m * a2)
                # sum_{k'>k} k' E1^k' = e1n (k+1 - k e1') closed form, bounded:
                geo = e1n * ((k + 1) - k * math.exp(-m * a1)) / (1 - math.exp(-m * a1)) ** 2
                k_tail = r * m * m * geo * (1 + e1n) / ((1 - e1n) ** 3 * (1 - e2n))
                if k_tail < per_m / m**2:
                    err += k_tail
                    break
                k += 1
    assert err < tol
    return math.fsum(terms)


def _mobius_cov_offdiag_series(r: float, a1: float, a2: float, tol: float) -> float:
    """sum_{k,m} r k m^2 mu(m) E1 E2 / ((1-E1)^2 (1-E2)^2) -> K(1,2)."""
    per_m, m_budget = _mobius_budget(tol)
    terms: list[float] = []
    err = 0.0
    a12 = a1 + a2
    for m, mu in _mu_iter():
        q1 = math.exp(-m * a1)
        q2 = math.exp(-m * a2)
        denom = (1 - q1) ** 3 * (1 - q2) ** 3
        m_tail = r / denom * _tail_power(math.exp(-a12), 2, m - 1, m_budget * 1e-3)
        if m_tail < m_budget:
            err += m_tail
            break
        if mu != 0:
            k = 1
            while True:
                e1 = math.exp(-k * m * a1)
                e2 = math.exp(-k * m * a2)
                terms.append(r * k * m * m * mu * e1 * e2 / ((1 - e1) ** 2 * (1 - e2) ** 2))
                e12 = math.exp(-(k + 1) * m * a12)
                geo = e12 * ((k + 1) - k * math.exp(-m * a12)) / (1 - math.exp(-m * a12)) ** 2
                e1n = math.exp(-(k + 1) * m * a1)
                e2n = math.exp(-(k + 1) * m * a2)
                k_tail = r * m * m * geo / ((1 - e1n) ** 2 * (1 - e2n) ** 2)
                if k_tail < per_m / m**2:
                    err += k_tail
                    break
                k += 1
    assert err < tol
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# matrices, Lyapunov coefficient, Gaussian density


def spectral_norm_sym2(a: np.ndarray) -> float:
    """Largest |eigenvalue| of a symmetric 2x2 matrix, closed form."""
    tr = a[0, 0] + a[1, 1]
    disc = math.sqrt((a[0, 0] - a[1, 1]) ** 2 + 4.0 * a[0, 1] ** 2)
    return max(abs((tr + disc) / 2), abs((tr - disc) / 2))


def inverse_sqrt_spd(k: np.ndarray) -> np.ndarray:
    """The unique SPD V with V K V = I, closed form for 2x2.

    sqrt(K) = (K + s I)/t with s = sqrt(det K), t = sqrt(tr K + 2 s);
    inverting: V = adj(K + s I) / (s t).
    """
    _require_spd(k)
    s = math.sqrt(k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0])
    t = math.sqrt(k[0, 0] + k[1, 1] + 2 * s)
    return np.array([[k[1, 1] + s, -k[0, 1]], [-k[1, 0], k[0, 0] + s]]) / (s * t)


def _require_spd(k: np.ndarray) -> None:
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        raise MatrixDomainError("expected a 2x2 matrix")
    if abs(k[0, 1] - k[1, 0]) > 1e-9 * (1 + abs(k[0, 1])):
        raise MatrixDomainError("matrix not symmetric")
    det = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    if k[0, 0] <= 0 or det <= 0:
        raise MatrixDomainError("matrix not positive definite")


def gaussian_density(a, k: np.ndarray, m) -> float:
    """f_{a,K}(m) = (det K)^(-1/2) (2 pi)^(-1) exp(-|(m-a) K^(-1/2)|^2 / 2)."""
    k = np.asarray(k, dtype=float)
    _require_spd(k)
    v = inverse_sqrt_spd(k)
    w = (np.asarray(m, dtype=float) - np.asarray(a, dtype=float)) @ v
    det = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    return math.exp(-0.5 * float(w @ w)) / (2 * math.pi * math.sqrt(det))


def lyapunov_coefficient(params: GCParams, v: np.ndarray, tol: float = 1e-8) -> float:
    """L_z = |V_z|^3 * sum_x |x|^3 mu_3(x) over a third-moment window."""
    win = _moment_window(params, tol, power=4, inv_pow=3)
    x1a, x2a = coprime_window_arrays(win.degree_bound)
    total = []
    for x1, x2 in zip(x1a.tolist(), x2a.tolist()):
        mu3 = central_abs_moment(params, Direction(x1, x2), 3, tol / max(1, len(x1a)))
        total.append((x1 * x1 + x2 * x2) ** 1.5 * mu3)
    return spectral_norm_sym2(v) ** 3 * math.fsum(total)


@dataclass(frozen=True)
class MomentSummary:
    """a_z, K_z, V_z = K_z^(-1/2), det K_z, Lyapunov L_z, and the tail bound used."""

    a_z: np.ndarray
    K_z: np.ndarray
    V_z: np.ndarray
    det_K: float
    L_z: float
    truncation_tail: float


def moment_summary(params: GCParams, tol: float = 1e-9) -> MomentSummary:
    """Bundle the direct-route moments with the closed-form matrix pieces."""
    a = expected_endpoint(params, "direct", tol)
    k = covariance(params, "direct", tol)
    v = inverse_sqrt_spd(k)
    det = float(k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0])
    lz = lyapunov_coefficient(params, v)
    summary = MomentSummary(a_z=a, K_z=k, V_z=v, det_K=det, L_z=lz, truncation_tail=2 * tol)
    res = v @ k @ v - np.eye(2)
    assert float(np.abs(res).max()) < 1e-8
    return summary
