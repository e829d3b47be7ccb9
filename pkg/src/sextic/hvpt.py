"""Exact-rational hypervirial perturbation theory.

For H = p**2 + v1 x**2 + v2 x**4 + v3 x**6 with v1 = 1 - 12 lam, v2 = 8 lam and
v3 = 16 lam**2, the even moments U_N = <x^(2N)> of an eigenstate obey

    2(2N+1) E U_N = 2 sum_k (2N+1+k) v_k U_(N+k) - N(2N+1)(2N-1) U_(N-1).

Expanding E and U_N in powers of lam and solving for U_(N+1) order by order,
with dE/dlam = <-12 x**2 + 8 x**4 + 32 lam x**6> supplying the energy
corrections, gives every coefficient as an exact rational.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from gmpy2 import mpq

from .errors import DomainError, ResourceLimitError

DEFAULT_ORDER = 200
HARD_MAX_ORDER = 1000

ENERGY = "energy"
MOMENT = "moment"


def to_float(q) -> float:
    """Correctly rounded float of an exact rational."""
    return int(q.numerator) / int(q.denominator)


def as_rational(value) -> mpq:
    """Exact rational from an int, Fraction, mpq, float or "p/q" string."""
    if isinstance(value, str):
        return mpq(value.strip())
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


@dataclass(frozen=True)
class PerturbationSeries:
    """Coefficients c_p, p = 0..P, of a power series in lam for one state.

    ``quantity`` is ``"energy"`` or ``"moment"``; for moments ``power`` is N in
    <x^(2N)>.
    """

    state: int
    quantity: str
    coefficients: Tuple[mpq, ...]
    power: Optional[int] = None

    def __post_init__(self):
        if self.quantity not in (ENERGY, MOMENT):
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if (self.quantity == MOMENT) != (self.power is not None):
            raise ValueError("moment series need a power; energy series must not have one")

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, p):
        return self.coefficients[p]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def label(self) -> str:
        if self.quantity == ENERGY:
            return f"E{self.state}"
        return f"<x^{2 * self.power}>_{self.state}"

    def as_floats(self):
        return [to_float(c) for c in self.coefficients]


@dataclass(frozen=True)
class MomentTable:
    """Triangular table U[N][p] of moment corrections for one state.

    Row N holds orders p = 0 .. p_max(N), where p_max(N) is the largest p with
    N <= 3 + 3 (P - p), i.e. every entry the recurrence needed for E^(P).
    """

    state: int
    max_order: int
    rows: Tuple[Tuple[mpq, ...], ...]

    def __getitem__(self, N):
        return self.rows[N]

    @property
    def max_power(self) -> int:
        return len(self.rows) - 1

    def series(self, N: int) -> PerturbationSeries:
        return PerturbationSeries(self.state, MOMENT, self.rows[N], power=N)


def _ncap(P, p):
    return 3 + 3 * (P - p)


@functools.lru_cache(maxsize=8)
def _generate(n: int, P: int):
    E = [mpq(2 * n + 1)]
    # U[N] is grown lazily; N_cap(0) + 3 covers every index the sweep touches.
    size = _ncap(P, 0) + 4
    U = [[mpq(0)] * (P + 1) for _ in range(size)]
    U[0][0] = mpq(1)
    zero = mpq(0)
    for p in range(P + 1):
        if p >= 1:
            e = -12 * U[1][p - 1] + 8 * U[2][p - 1]
            if p >= 2:
                e += 32 * U[3][p - 2]
            E.append(e / p)
        nonzero_E = [(q, E[q]) for q in range(p + 1) if E[q] != zero]
        for N in range(_ncap(P, p)):
            row = U[N]
            acc = zero
            for q, eq in nonzero_E:
                acc += eq * row[p - q]
            acc *= 2 * (2 * N + 1)
            if N >= 1:
                acc += N * (2 * N + 1) * (2 * N - 1) * U[N - 1][p]
            if p >= 1:
                acc += 24 * (2 * N + 2) * U[N + 1][p - 1] - 16 * (2 * N + 3) * U[N + 2][p - 1]
            if p >= 2:
                acc -= 32 * (2 * N + 4) * U[N + 3][p - 2]
            U[N + 1][p] = acc / (2 * (2 * N + 2))
    rows = []
    for N in range(_ncap(P, 0) + 1):
        # highest order at which row N was filled
        pmax = P if N <= 3 else P - (N - 3 + 2) // 3
        rows.append(tuple(U[N][: pmax + 1]))
    return tuple(E), tuple(rows)


def generate_series(
    n: int, P: int = DEFAULT_ORDER, max_order: int = HARD_MAX_ORDER
) -> Tuple[PerturbationSeries, MomentTable]:
    """Energy series and moment table of state ``n`` through order ``P``.

    Parameters
    ----------
    n : int
        Harmonic-oscillator quantum number of the unperturbed state.
    P : int
        Highest order in lam.
    max_order : int
        Resource guard; at most ``HARD_MAX_ORDER``.

    Raises
    ------
    ResourceLimitError
        If ``P`` exceeds ``max_order``.
    """
    n, P = int(n), int(P)
    if n < 0 or P < 0:
        raise DomainError(f"state and order must be non-negative (n={n}, P={P})")
    limit = min(int(max_order), HARD_MAX_ORDER)
    if P > limit:
        raise ResourceLimitError(f"order {P} exceeds the configured maximum {limit}")
    E, rows = _generate(n, P)
    return PerturbationSeries(n, ENERGY, E), MomentTable(n, P, rows)


def moment_series(n: int, N: int, P: int = DEFAULT_ORDER, **kw) -> PerturbationSeries:
    """Convenience wrapper: the <x^(2N)> series of state ``n``."""
    if N > 3:
        P_needed = P + (N - 3 + 2) // 3
        _, table = generate_series(n, P_needed, **kw)
        return PerturbationSeries(n, MOMENT, table[N][: P + 1], power=N)
    _, table = generate_series(n, P, **kw)
    return table.series(N)


def hellmann_feynman_residuals(energy: PerturbationSeries, table: MomentTable):
    """(p+1) E^(p+1) - (-12 U1^(p) + 8 U2^(p) + 32 U3^(p-1)) for every stored p."""
    out = []
    for p in range(energy.order):
        rhs = -12 * table[1][p] + 8 * table[2][p]
        if p >= 1:
            rhs += 32 * table[3][p - 1]
        out.append((p + 1) * energy[p + 1] - rhs)
    return out


def evaluate_partial_sum(series: PerturbationSeries, lam: float, order: int) -> float:
    """sum_{p <= order} c_p lam**p, summed exactly and rounded once."""
    if order > series.order:
        raise DomainError(f"order {order} exceeds the series length {series.order}")
    x = mpq(lam) if not isinstance(lam, str) else as_rational(lam)
    total = mpq(0)
    for c in reversed(series.coefficients[: order + 1]):
        total = total * x + c
    return to_float(total)


def _rational_str(q) -> str:
    return f"{int(q.numerator)}/{int(q.denominator)}"


def export_coefficients(series: PerturbationSeries, fmt: str = "csv") -> str:
    """Lossless text form of the coefficients.

    ``csv`` gives a single line ``p:num/den,...``; ``json`` also records the
    state and quantity.
    """
    if fmt == "csv":
        return ",".join(f"{p}:{_rational_str(c)}" for p, c in enumerate(series.coefficients))
    if fmt == "json":
        return json.dumps(
            {
                "state": series.state,
                "quantity": series.quantity,
                "power": series.power,
                "coefficients": [_rational_str(c) for c in series.coefficients],
            }
        )
    raise ValueError(f"unknown format {fmt!r}")


def parse_coefficients(
    text: str, fmt: str = "csv", state: int = 0, quantity: str = ENERGY, power=None
) -> PerturbationSeries:
    """Inverse of :func:`export_coefficients`.

    Lines starting with ``#`` are ignored. For ``csv`` the metadata comes from
    the keyword arguments.
    """
    body = "\n".join(l for l in text.splitlines() if not l.lstrip().startswith("#")).strip()
    if fmt == "json":
        d = json.loads(body)
        coeffs = tuple(as_rational(c) for c in d["coefficients"])
        return PerturbationSeries(d["state"], d["quantity"], coeffs, power=d.get("power"))
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    items = [tok for tok in body.replace("\n", ",").split(",") if tok.strip()]
    coeffs = []
    for expected, tok in enumerate(items):
        idx, val = tok.split(":", 1)
        if int(idx) != expected:
            raise ValueError(f"coefficient index {idx} out of sequence")
        coeffs.append(as_rational(val))
    return PerturbationSeries(state, quantity, tuple(coeffs), power=power)


def series_from_values(values: Sequence, state=0, quantity=ENERGY, power=None):
    return PerturbationSeries(state, quantity, tuple(as_rational(v) for v in values), power)
