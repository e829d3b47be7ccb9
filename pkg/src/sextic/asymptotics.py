"""Linearised least-squares fits for large-order and level-splitting laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, column_or_1d

from .errors import FitWindowError, NoiseFloorError
from .hvpt import PerturbationSeries

#: design matrices with a (column-equilibrated) condition above this are refused
MAX_CONDITION = 1e13
#: default splitting-fit window from the triple-well regime
SPLITTING_WINDOW = (-0.030, -0.012)
LARGE_ORDER_WINDOW = (200, 1000)


@dataclass(frozen=True)
class FitResult:
    parameters: np.ndarray
    residual_rms: float
    window: Tuple[float, float]
    condition_estimate: float
    names: Tuple[str, ...] = ()
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.names.index(key)
        return self.parameters[key]

    def as_dict(self) -> dict:
        return {
            "parameters": dict(zip(self.names, map(float, self.parameters))),
            "residual_rms": float(self.residual_rms),
            "window": list(self.window),
            "condition_estimate": float(self.condition_estimate),
            **({"diagnostics": self.diagnostics} if self.diagnostics else {}),
        }


def qr_lstsq(A, y, max_condition=MAX_CONDITION):
    """Least squares via Householder QR of the column-equilibrated design.

    Two steps of iterative refinement with residuals accumulated in extended
    precision bring the solution down to the limit set by the data rounding.
    Returns (coefficients, residual vector, condition estimate).
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    Q, R = linalg.qr(A / scale, mode="economic")
    d = np.abs(np.diag(R))
    cond = np.inf if d.min() == 0 else float(np.linalg.cond(R))
    if not np.isfinite(cond) or cond > max_condition:
        raise FitWindowError(f"design matrix too ill-conditioned (estimate {cond:.3g}); widen the window")
    coef = linalg.solve_triangular(R, Q.T @ y) / scale
    A_ext, y_ext = A.astype(np.longdouble), y.astype(np.longdouble)
    for _ in range(2):
        r = (y_ext - A_ext @ coef.astype(np.longdouble)).astype(float)
        coef = coef + linalg.solve_triangular(R, Q.T @ r) / scale
    return coef, y - A @ coef, cond


def _window(series, j_min, j_max, minimum=10):
    if j_min < minimum:
        raise FitWindowError(f"j_min must be at least {minimum} (got {j_min})")
    if j_max > series.order:
        raise FitWindowError(f"j_max={j_max} exceeds the available order {series.order}")
    if j_max <= j_min:
        raise FitWindowError("empty window")
    return np.arange(j_min, j_max + 1)


def large_order_ratios(series: PerturbationSeries, js, base: int = -8) -> np.ndarray:
    """Exact c_j / (base^j j!) rounded to float."""
    out = []
    for j in map(int, js):
        c = series[j]
        r = Fraction(int(c.numerator), int(c.denominator) * base**j * math.factorial(j))
        out.append(r.numerator / r.denominator)
    return np.asarray(out)


def fit_large_order_moments(
    series: PerturbationSeries, j_min: int = 200, j_max: int = 1000, terms: int = 6
) -> FitResult:
    """Fit X^(j) / ((-1)^j 8^j j!) = sum_k f_k / (j+1)^k over j_min..j_max."""
    if not 1 <= terms <= 6:
        raise FitWindowError("terms must be between 1 and 6")
    js = _window(series, j_min, j_max)
    r = large_order_ratios(series, js)
    A = np.vstack([(js + 1.0) ** (-k) for k in range(terms)]).T
    coef, res, cond = qr_lstsq(A, r)
    return FitResult(
        coef,
        float(np.sqrt(np.mean(res**2))),
        (int(j_min), int(j_max)),
        cond,
        tuple(f"f{k}" for k in range(terms)),
        res,
    )


def fit_e1_growth(
    series: PerturbationSeries, j_min: int = 100, j_max: Optional[int] = None, terms: int = 3
) -> FitResult:
    """Fit |E^(j)| / (8^j j! sqrt(j)) = sum_k a_k / j^k.

    The sign pattern (-1)^(j+1) is checked on the exact coefficients for
    2 <= j <= j_max and reported in ``diagnostics``.
    """
    if j_max is None:
        j_max = series.order
    js = _window(series, j_min, j_max)
    signs_ok = all(
        (series[j] > 0) == (j % 2 == 1) and series[j] != 0 for j in range(2, int(j_max) + 1)
    )
    r = np.abs(large_order_ratios(series, js, base=8)) / np.sqrt(js)
    A = np.vstack([js ** (-float(k)) for k in range(terms)]).T
    coef, res, cond = qr_lstsq(A, r)
    return FitResult(
        coef,
        float(np.sqrt(np.mean(res**2))),
        (int(j_min), int(j_max)),
        cond,
        tuple(f"a{k}" for k in range(terms)),
        res,
        {"sign_pattern_ok": bool(signs_ok)},
    )


def fit_splitting(
    lambdas: Sequence[float],
    deltas: Sequence[float],
    fix_exponent: bool = False,
    noise_floor: float = 1e-11,
) -> FitResult:
    """Fit E0 - 1 = A |lam|^B exp(-C/|lam|) by linear least squares on the log.

    ``fix_exponent=True`` pins B = 0. Parameters are always reported as
    (A, B, C).

    Raises
    ------
    NoiseFloorError
        If any sample is below ten times ``noise_floor``.
    """
    lam = np.asarray(lambdas, dtype=float)
    y = np.asarray(deltas, dtype=float)
    if lam.shape != y.shape or lam.ndim != 1:
        raise FitWindowError("lambdas and deltas must be 1-d and of equal length")
    if np.any(lam >= 0):
        raise FitWindowError("splitting samples need lam < 0")
    if len(np.unique(lam)) != len(lam):
        raise FitWindowError("lam values must be distinct")
    low = y <= 10.0 * noise_floor
    if np.any(low):
        raise NoiseFloorError(
            f"{int(low.sum())} sample(s) at or below 10x the noise floor {noise_floor:g}: "
            f"lam={lam[low].tolist()}"
        )
    a = np.abs(lam)
    cols = [np.ones_like(a)] + ([] if fix_exponent else [np.log(a)]) + [-1.0 / a]
    min_points = len(cols) + 1
    if len(a) < min_points:
        raise FitWindowError(f"need at least {min_points} samples")
    coef, res, cond = qr_lstsq(np.vstack(cols).T, np.log(y))
    B = 0.0 if fix_exponent else coef[1]
    params = np.array([math.exp(coef[0]), B, coef[-1]])
    return FitResult(
        params,
        float(np.sqrt(np.mean(res**2))),
        (float(lam.min()), float(lam.max())),
        cond,
        ("A", "B", "C"),
        res,
        {"fix_exponent": bool(fix_exponent)},
    )


def splitting_model(lam, A, B, C):
    a = np.abs(np.asarray(lam, dtype=float))
    return A * a**B * np.exp(-C / a)


class SplittingLawRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_splitting`.

    ``X`` holds lam values (one column), ``y`` the splittings E0 - 1.
    """

    def __init__(self, fix_exponent=False, noise_floor=1e-11):
        self.fix_exponent = fix_exponent
        self.noise_floor = noise_floor

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)), y, y_numeric=True)
        self.result_ = fit_splitting(X[:, 0], y, self.fix_exponent, self.noise_floor)
        self.amplitude_, self.exponent_, self.rate_ = map(float, self.result_.parameters)
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        lam = column_or_1d(np.reshape(X, (-1, 1)))
        return splitting_model(lam, self.amplitude_, self.exponent_, self.rate_)


class LargeOrderRegressor(RegressorMixin, BaseEstimator):
    """Fits r_j = sum_k f_k / (j+1)^k to reduced large-order ratios."""

    def __init__(self, terms=6):
        self.terms = terms

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)), y, y_numeric=True)
        js = X[:, 0]
        A = np.vstack([(js + 1.0) ** (-k) for k in range(self.terms)]).T
        coef, res, cond = qr_lstsq(A, y)
        self.coef_ = coef
        self.condition_ = cond
        self.residual_rms_ = float(np.sqrt(np.mean(res**2)))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        js = column_or_1d(np.reshape(X, (-1, 1))).astype(float)
        return sum(c * (js + 1.0) ** (-k) for k, c in enumerate(self.coef_))
