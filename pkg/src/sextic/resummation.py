"""Padé and Borel-Padé summation, plus the leading-term Borel closed form."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from gmpy2 import mpq
from scipy import linalg

from .errors import DomainError, NonSummableError, PadeDegeneracyError, PoleError

EULER_GAMMA = 0.57721566490153286060651209
#: leading large-order amplitude of the ground-state <x^2> series
F0 = 0.450158158079

QUADRATURE = "quadrature-borel-pade"
CLOSED_FORM = "closed-form-leading"


# --------------------------------------------------------------------------
# Padé approximants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PadeApproximant:
    """[M/N] rational function; ``denominator[0] == 1``."""

    M: int
    N: int
    numerator: np.ndarray
    denominator: np.ndarray
    condition: float = 1.0

    def __call__(self, lam):
        return pade_eval(self, lam)

    def poles(self) -> np.ndarray:
        q = np.trim_zeros(self.denominator, "b")
        if len(q) <= 1:
            return np.empty(0, dtype=complex)
        return np.roots(q[::-1])

    def taylor(self, order: int) -> np.ndarray:
        """Power-series coefficients of P/Q through ``order``.

        The recursion runs in exact rational arithmetic on the stored float
        coefficients, so the result is the expansion of this very function.
        """
        p = [mpq(float(v)) for v in self.numerator[: order + 1]]
        p += [mpq(0)] * (order + 1 - len(p))
        q = [mpq(float(v)) for v in self.denominator]
        out = []
        for i in range(order + 1):
            out.append(p[i] - sum((q[k] * out[i - k] for k in range(1, min(i, self.N) + 1)), mpq(0)))
        return np.array([float(v) for v in out])


def _as_mpq(v):
    if isinstance(v, (int, Fraction)) or type(v) is type(mpq()):
        return mpq(v)
    return mpq(float(v))


def _exact_solve(A, b):
    """Gaussian elimination over the rationals; None if A is singular."""
    n = len(b)
    rows = [list(A[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for r in range(col + 1, n):
            f = rows[r][col] / rows[col][col]
            if f:
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    x = [mpq(0)] * n
    for i in reversed(range(n)):
        x[i] = (rows[i][n] - sum((rows[i][k] * x[k] for k in range(i + 1, n)), mpq(0))) / rows[i][i]
    return x


def _scale_for(c, M, N):
    # lam -> s lam balances |c_j s^j| so the linear system is well scaled;
    # s is a power of two so scaling and unscaling are exact
    nz = [(j, abs(v)) for j, v in enumerate(c[: M + N + 1]) if v != 0]
    if len(nz) < 2:
        return 1.0
    (j0, a0), (j1, a1) = nz[0], nz[-1]
    if j1 == j0:
        return 1.0
    return float(2.0 ** round(math.log2(a0 / a1) / (j1 - j0)))


#: relative accuracy to which an accepted [M/N] re-expands into its input
REPRODUCTION_TOL = 1e-10


def pade(coeffs: Sequence[float], M: int, N: int, max_condition: float = 1e12) -> PadeApproximant:
    """[M/N] Padé approximant of sum c_j lam**j.

    The denominator solves the N linear conditions that cancel orders
    M+1..M+N. The system is screened with a column-pivoted QR factorisation,
    whose condition estimate compares the smallest pivot with the largest
    pivot and with the size of the (rescaled) coefficients. It is then solved
    exactly over the rationals (float inputs are exact rationals too) and
    rounded once.

    Raises
    ------
    PadeDegeneracyError
        If the system is singular, its condition estimate exceeds
        ``max_condition``, or the result fails to re-expand into the input
        to ``REPRODUCTION_TOL``; a smaller [M/N] usually helps.
    """
    M, N = int(M), int(N)
    if M < 0 or N < 0:
        raise DomainError("Padé orders must be non-negative")
    if len(coeffs) < M + N + 1:
        raise DomainError(f"[{M}/{N}] needs {M + N + 1} coefficients, got {len(coeffs)}")
    exact = [_as_mpq(v) for v in coeffs[: M + N + 1]]
    c = np.array([float(v) for v in exact])
    s = _scale_for(c, M, N)
    cs = c * s ** np.arange(M + N + 1)

    cond = 1.0
    q = [mpq(1)]
    if N > 0:
        # the pivoted float QR only screens for degeneracy
        A = np.array(
            [[cs[M + i - k] if M + i - k >= 0 else 0.0 for k in range(1, N + 1)] for i in range(1, N + 1)]
        )
        d = np.abs(np.diag(linalg.qr(A, pivoting=True, mode="r")[0]))
        # smallest pivot against both the largest pivot and the coefficient scale
        ref = max(d[0], float(np.max(np.abs(cs))))
        with np.errstate(over="ignore"):
            cond = np.inf if d[-1] == 0 else ref / d[-1]
        sol = None
        if np.isfinite(cond) and cond <= max_condition:
            sol = _exact_solve(
                [[exact[M + i - k] if M + i - k >= 0 else mpq(0) for k in range(1, N + 1)] for i in range(1, N + 1)],
                [-exact[M + i] for i in range(1, N + 1)],
            )
        if sol is None:
            raise PadeDegeneracyError(
                f"[{M}/{N}] system is degenerate (condition estimate {cond:.3g}); try a smaller table entry"
            )
        q += sol
    # exact solution, rounded once: the float coefficients are the nearest to the true approximant
    num = np.array([float(sum((q[k] * exact[i - k] for k in range(min(i, N) + 1)), mpq(0))) for i in range(M + 1)])
    approx = PadeApproximant(M, N, num, np.array([float(v) for v in q]), float(cond))
    # a near-cancelling pole/zero pair passes the pivot test but amplifies rounding in re-expansion
    mismatch = float(np.max(np.abs(approx.taylor(M + N) - c)))
    if not mismatch <= REPRODUCTION_TOL * max(1.0, float(np.max(np.abs(c)))):
        raise PadeDegeneracyError(
            f"[{M}/{N}] re-expansion misses the input by {mismatch:.3g} (near-common factor); "
            "try a smaller table entry"
        )
    return approx


def _horner(coeffs, x):
    acc = np.zeros_like(x) if isinstance(x, np.ndarray) else 0.0
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def pade_eval(approx: PadeApproximant, lam, pole_tol: float = 1e-14):
    """Evaluate an approximant; refuses points where |Q(lam)| < ``pole_tol``."""
    x = np.asarray(lam, dtype=float) if not np.isscalar(lam) else float(lam)
    den = _horner(approx.denominator, x)
    if np.any(np.abs(den) < pole_tol):
        raise PoleError(f"denominator vanishes at lam={lam!r}")
    return _horner(approx.numerator, x) / den


# --------------------------------------------------------------------------
# Borel-Padé
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BorelSumResult:
    value_real: float
    value_imag: float
    method: str
    nodes: int = 0
    poles: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    orders: tuple = ()

    @property
    def value(self) -> complex:
        return complex(self.value_real, self.value_imag)


def borel_transform(coeffs: Sequence) -> np.ndarray:
    """b_j = c_j / j!, divided exactly when the inputs are rational."""
    out = []
    for j, c in enumerate(coeffs):
        if isinstance(c, (int, Fraction)) or type(c).__name__ == "mpq":
            r = Fraction(int(c.numerator), int(c.denominator) * math.factorial(j))
            out.append(r.numerator / r.denominator)
        else:
            out.append(float(c) / math.factorial(j))
    return np.asarray(out, dtype=float)


def _on_path(poles, lam, rel_tol=1e-8):
    # path in the Borel variable is s = lam * t, t in [0, inf)
    hits = []
    for z in poles:
        w = z * math.copysign(1.0, lam)
        if w.real > 0 and abs(w.imag) <= rel_tol * abs(w):
            hits.append(z)
    return hits


@functools.lru_cache(maxsize=8)
def _laguerre_rule(n):
    """Gauss-Laguerre nodes and weights by Golub-Welsch.

    The Jacobi matrix of the Laguerre weight has diagonal 2k+1 and
    off-diagonal k+1; weights are squared first eigenvector components.
    Unlike the three-term evaluation in scipy this stays finite for n in the
    thousands (far-tail weights simply underflow to zero).
    """
    k = np.arange(n, dtype=float)
    t, v = linalg.eigh_tridiagonal(2.0 * k + 1.0, k[1:])
    return t, v[0] ** 2


def _nondegenerate_pade(b, M, N):
    # A Borel transform that is itself a low-degree rational function makes
    # [M/N] singular; [M-k/N-k] then reproduces the same function.
    while True:
        try:
            return pade(b, M, N)
        except PadeDegeneracyError:
            if M == 0 or N == 0:
                raise
            M, N = M - 1, N - 1


def borel_pade_sum(
    coeffs: Sequence,
    M: int,
    N: int,
    lam: float,
    nodes: int = 200,
    tol: float = 1e-10,
    max_nodes: int = 3200,
) -> BorelSumResult:
    """Borel-Padé sum int_0^inf exp(-t) P(lam t) dt by Gauss-Laguerre quadrature.

    The node count starts at ``nodes`` and doubles until two successive
    values agree to ``tol`` (relative). When the Borel-plane [M/N] system is
    degenerate the diagonal is stepped down; ``orders`` records what was used.

    Raises
    ------
    NonSummableError
        If a pole of the Borel-plane approximant lies on the integration path,
        which is what happens for the moment series when lam < 0.
    """
    lam = float(lam)
    b = borel_transform(list(coeffs)[: M + N + 1])
    if lam == 0.0:
        return BorelSumResult(float(b[0]), 0.0, QUADRATURE, 0)
    approx = _nondegenerate_pade(b, M, N)
    poles = approx.poles()
    bad = _on_path(poles, lam)
    if bad:
        raise NonSummableError(
            f"Borel-plane pole(s) {np.round(bad, 6)} on the integration path for lam={lam}"
        )
    prev = None
    n = int(nodes)
    while True:
        t, w = _laguerre_rule(n)
        val = float(np.sum(w * pade_eval(approx, lam * t, pole_tol=0.0)))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return BorelSumResult(val, 0.0, QUADRATURE, n, poles, (approx.M, approx.N))
        if n >= max_nodes:
            warnings.warn(f"Gauss-Laguerre did not settle to {tol} by {n} nodes", RuntimeWarning)
            return BorelSumResult(val, 0.0, QUADRATURE, n, poles, (approx.M, approx.N))
        prev = val
        n *= 2


# --------------------------------------------------------------------------
# Shi / Chi and the leading-term closed form
# --------------------------------------------------------------------------

_SERIES_LIMIT = 50.0
_OVERFLOW_LIMIT = 700.0


def _series_shi(x):
    term = x  # x^(2k+1)/(2k+1)!
    total = term
    k = 0
    while True:
        k += 1
        term *= x * x / ((2 * k) * (2 * k + 1))
        add = term / (2 * k + 1)
        total += add
        if abs(add) <= 1e-17 * abs(total):
            return total


def _series_chi_tail(x):
    # sum_{k>=1} x^(2k) / ((2k)(2k)!)
    term = 1.0
    total = 0.0
    k = 0
    while True:
        k += 1
        term *= x * x / ((2 * k - 1) * (2 * k))
        add = term / (2 * k)
        total += add
        if add <= 1e-17 * total:
            return total


def _asymptotic_sum(x, sign):
    # sum_k (sign)^k k! / x^k, truncated at the smallest term
    total, term, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt >= term or nxt < 1e-17:
            return total
        term = nxt
        total += term * (sign**k)


def _check_range(x):
    if abs(x) > _OVERFLOW_LIMIT:
        raise OverflowError(f"|x|={abs(x)} overflows double precision in Shi/Chi")


def shi(x: float) -> float:
    """Hyperbolic sine integral int_0^x sinh(t)/t dt."""
    x = float(x)
    _check_range(x)
    if x == 0.0:
        return 0.0
    if abs(x) <= _SERIES_LIMIT:
        return _series_shi(x)
    ax = abs(x)
    return math.copysign(math.exp(ax) / (2.0 * ax) * _asymptotic_sum(ax, 1), x)


def chi(x: float) -> float:
    """Hyperbolic cosine integral gamma + ln x + int_0^x (cosh t - 1)/t dt, x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"Chi is defined here only for x > 0 (got {x})")
    _check_range(x)
    if x <= _SERIES_LIMIT:
        return EULER_GAMMA + math.log(x) + _series_chi_tail(x)
    return math.exp(x) / (2.0 * x) * _asymptotic_sum(x, 1)


def _scaled_e1(x):
    """exp(x) E1(x) for x > 0 (E1 = Shi - Chi)."""
    if x <= 2.0:
        return math.exp(x) * (shi(x) - chi(x))
    # modified Lentz evaluation of the continued fraction
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def _scaled_ei(y):
    """exp(-y) Ei(y) for y > 0 (Ei = Shi + Chi)."""
    if y <= _SERIES_LIMIT:
        return math.exp(-y) * (shi(y) + chi(y))
    return _asymptotic_sum(y, 1) / y


def leading_borel_closed_form(lam: float, f0: float = F0) -> BorelSumResult:
    """Borel sum of f0 sum_j (-1)^j (8 lam)^j j!.

    For lam > 0 this is f0 e^x/(8 lam) [Shi(x) - Chi(x)] with x = 1/(8 lam),
    which is real. For lam < 0 the integrand has a pole at t = 1/(8|lam|); the
    real part is the principal value and the imaginary part is the pole
    residue pi f0 exp(-1/(8|lam|)) / (8|lam|).
    """
    lam = float(lam)
    if lam == 0.0:
        raise DomainError("closed form needs lam != 0 (the value at 0 is f0)")
    if abs(lam) < 1e-4:
        warnings.warn(
            "Shi/Chi arguments overflow for |lam| < 1e-4; using the asymptotic expansion",
            RuntimeWarning,
        )
    x = 1.0 / (8.0 * abs(lam))
    if lam > 0:
        if abs(lam) < 1e-4:
            val = f0 * _asymptotic_sum(x, -1)
        else:
            val = f0 * x * _scaled_e1(x)
        return BorelSumResult(val, 0.0, CLOSED_FORM)
    if abs(lam) < 1e-4:
        re = f0 * _asymptotic_sum(x, 1)
    else:
        re = f0 * x * _scaled_ei(x)
    im = math.pi * f0 * x * math.exp(-x)
    return BorelSumResult(re, im, CLOSED_FORM)


def imaginary_part_prefactor(f0: float = F0) -> float:
    """Constant K in Im S_B(lam) ~ K |lam|^-1 exp(-1/(8|lam|)), i.e. pi f0 / 8."""
    return math.pi * f0 / 8.0
