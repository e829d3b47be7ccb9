"""Rayleigh-Ritz solver in the harmonic-oscillator basis.

H(lam) couples basis states k and k' only when k - k' is even and
|k - k'| <= 6, so each parity block is a symmetric banded matrix with three
super-diagonals.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DomainError, SolverError
from .potential import exact_ground_state_value, ground_state_cutoff, ground_state_norm_sq

HALF_BANDWIDTH = 3
DEFAULT_DIM = 500
SCAN_DIM = 250


class Parity(enum.IntEnum):
    EVEN = 0
    ODD = 1

    @property
    def tag(self) -> str:
        return "even" if self is Parity.EVEN else "odd"

    @classmethod
    def parse(cls, value) -> "Parity":
        if isinstance(value, Parity):
            return value
        if isinstance(value, str):
            return cls.EVEN if value.lower().startswith("e") else cls.ODD
        return cls(int(value))


@functools.lru_cache(maxsize=16)
def position_powers(size: int, omega: float = 1.0):
    """Exact x^2, x^4, x^6 (and p^2) on the first ``size`` basis states.

    Products are formed on ``size + 6`` states and then truncated, so the
    retained entries carry no truncation error.
    """
    big = size + 6
    k = np.arange(big - 1)
    off = np.sqrt((k + 1) / (2.0 * omega))
    X = sparse.diags([off, off], [1, -1], format="csr")
    X2 = (X @ X).tocsr()
    X4 = (X2 @ X2).tocsr()
    X6 = (X4 @ X2).tocsr()
    n = np.arange(big)
    # p^2 = omega (2N + 1) - omega^2 x^2 in a basis of frequency omega
    P2 = (sparse.diags(omega * (2 * n + 1.0)) - omega * omega * X2).tocsr()
    cut = lambda M: M[:size, :size].toarray()
    return cut(X2), cut(X4), cut(X6), cut(P2)


def _block_indices(parity: Parity, dim: int):
    return np.arange(int(parity), 2 * dim, 2)


@dataclass(frozen=True)
class BandedSpectralProblem:
    """One parity block of H(lam) in upper banded storage (``band[3 - d, d:]``
    is the d-th super-diagonal)."""

    lam: float
    parity: Parity
    dim: int
    band: np.ndarray
    omega: float = 1.0

    @property
    def basis(self) -> np.ndarray:
        return _block_indices(self.parity, self.dim)

    def dense(self) -> np.ndarray:
        H = np.zeros((self.dim, self.dim))
        for d in range(HALF_BANDWIDTH + 1):
            diag = self.band[HALF_BANDWIDTH - d, d:]
            H[np.arange(self.dim - d), np.arange(d, self.dim)] = diag
            H[np.arange(d, self.dim), np.arange(self.dim - d)] = diag
        return H

    def operator(self, name: str) -> np.ndarray:
        """Block of ``x2``, ``x4``, ``x6`` or ``p2`` on this basis."""
        X2, X4, X6, P2 = position_powers(2 * self.dim, self.omega)
        M = {"x2": X2, "x4": X4, "x6": X6, "p2": P2}[name]
        idx = self.basis
        return M[np.ix_(idx, idx)]


@dataclass(frozen=True)
class EigenPair:
    level: int
    parity: Parity
    block_index: int
    energy: float
    coefficients: np.ndarray
    x2_expectation: float
    lam: float = 0.0

    @property
    def delta_x(self) -> float:
        return math.sqrt(self.x2_expectation)


def build_hamiltonian(lam: float, parity, dim: int, omega: float = 1.0) -> BandedSpectralProblem:
    """Parity block of H = p^2 + (1-12 lam) x^2 + 8 lam x^4 + 16 lam^2 x^6."""
    if dim < 4:
        raise DomainError("dim must be at least 4")
    parity = Parity.parse(parity)
    lam = float(lam)
    X2, X4, X6, P2 = position_powers(2 * dim, omega)
    if omega == 1.0:
        H = np.diag(2.0 * np.arange(2 * dim) + 1.0) - 12.0 * lam * X2
    else:
        H = P2 + (1.0 - 12.0 * lam) * X2
    H = H + 8.0 * lam * X4 + 16.0 * lam * lam * X6
    idx = _block_indices(parity, dim)
    B = H[np.ix_(idx, idx)]
    band = np.zeros((HALF_BANDWIDTH + 1, dim))
    for d in range(HALF_BANDWIDTH + 1):
        band[HALF_BANDWIDTH - d, d:] = np.diagonal(B, d)
    return BandedSpectralProblem(lam, parity, dim, band, omega)


def solve_eigen(problem: BandedSpectralProblem, k: int) -> List[EigenPair]:
    """The ``k`` lowest eigenpairs of one block, ascending.

    ``level`` is provisional (block index); :func:`merge_blocks` assigns the
    global ordering.
    """
    if not 1 <= k <= problem.dim:
        raise DomainError(f"k must be in [1, {problem.dim}]")
    try:
        w, v = linalg.eig_banded(
            problem.band, lower=False, select="i", select_range=(0, k - 1), check_finite=True
        )
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(
            f"banded eigensolver failed for lam={problem.lam}, {problem.parity.tag} block: {exc}",
            lam=problem.lam,
            parity=problem.parity,
        ) from exc
    X2 = problem.operator("x2")
    x2 = np.einsum("ij,ij->j", v, X2 @ v)
    return [
        EigenPair(i, problem.parity, i, float(w[i]), v[:, i].copy(), float(x2[i]), problem.lam)
        for i in range(k)
    ]


def merge_blocks(*blocks: Sequence[EigenPair]) -> List[EigenPair]:
    """Sort eigenpairs from both parity blocks by energy and number them."""
    pairs = sorted((p for b in blocks for p in b), key=lambda p: (p.energy, int(p.parity)))
    return [
        EigenPair(n, p.parity, p.block_index, p.energy, p.coefficients, p.x2_expectation, p.lam)
        for n, p in enumerate(pairs)
    ]


def solve_levels(lam: float, n_levels: int, dim: int = DEFAULT_DIM, omega: float = 1.0) -> List[EigenPair]:
    """Lowest ``n_levels`` states of H(lam) across both parities."""
    per_block = min(dim, n_levels // 2 + 2)
    blocks = [solve_eigen(build_hamiltonian(lam, par, dim, omega), per_block) for par in Parity]
    return merge_blocks(*blocks)[:n_levels]


def expectation_x2(pair: EigenPair, X2: np.ndarray) -> float:
    c = pair.coefficients
    if X2.shape != (len(c), len(c)):
        raise DomainError(f"X2 has shape {X2.shape}, coefficients have length {len(c)}")
    return float(c @ X2 @ c)


def expectation(problem: BandedSpectralProblem, pair: EigenPair, name: str) -> float:
    c = pair.coefficients
    return float(c @ problem.operator(name) @ c)


def virial_sides(problem: BandedSpectralProblem, pair: EigenPair):
    """(2<p^2>, <x V'(x)>) for one eigenpair."""
    lam = problem.lam
    lhs = 2.0 * expectation(problem, pair, "p2")
    rhs = (
        2.0 * (1.0 - 12.0 * lam) * expectation(problem, pair, "x2")
        + 32.0 * lam * expectation(problem, pair, "x4")
        + 96.0 * lam * lam * expectation(problem, pair, "x6")
    )
    return lhs, rhs


def hellmann_feynman_slope(problem: BandedSpectralProblem, pair: EigenPair) -> float:
    """<dH/dlam> = <-12 x^2 + 8 x^4 + 32 lam x^6>."""
    lam = problem.lam
    return (
        -12.0 * expectation(problem, pair, "x2")
        + 8.0 * expectation(problem, pair, "x4")
        + 32.0 * lam * expectation(problem, pair, "x6")
    )


def finite_difference_slope(
    lam: float, n: int, h: float = 1e-5, dim: int = DEFAULT_DIM, richardson: bool = False
) -> float:
    """dE_n/dlam by central differences of step ``h``.

    With ``richardson=True`` the steps h and h/2 are combined to cancel the
    O(h^2) term, which matters where E_n(lam) bends sharply.
    """

    def central(step):
        up = solve_levels(lam + step, n + 1, dim)[n].energy
        down = solve_levels(lam - step, n + 1, dim)[n].energy
        return (up - down) / (2.0 * step)

    d1 = central(h)
    if not richardson:
        return d1
    return (4.0 * central(h / 2.0) - d1) / 3.0


def block_partner(lam: float, pair: EigenPair, dim: int = DEFAULT_DIM):
    """(problem, eigenpair) for a globally labelled level, rebuilt in its parity block."""
    problem = build_hamiltonian(lam, pair.parity, dim)
    return problem, solve_eigen(problem, pair.block_index + 1)[pair.block_index]


def hermite_functions(kmax: int, x: np.ndarray) -> np.ndarray:
    """Normalised oscillator eigenfunctions psi_0..psi_kmax on ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1, x.size))
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def wavefunction(pair: EigenPair, x) -> np.ndarray:
    idx = _block_indices(pair.parity, len(pair.coefficients))
    psi = hermite_functions(int(idx[-1]), np.atleast_1d(x))
    return pair.coefficients @ psi[idx]


def overlap_with_exact(pair: EigenPair, lam: float, points: int = 4001) -> float:
    """|<psi_RR|phi>|^2 / <phi|phi> for the exact lam >= 0 ground state."""
    if lam < 0:
        raise DomainError("the exact ground state exists only for lam >= 0")
    if pair.parity is not Parity.EVEN:
        return 0.0
    xc = ground_state_cutoff(lam)
    x = np.linspace(-xc, xc, points)
    h = x[1] - x[0]
    # trapezoid is spectrally accurate here: the integrand is negligible at +-xc
    s = h * np.sum(wavefunction(pair, x) * exact_ground_state_value(lam, x))
    return float(s * s / ground_state_norm_sq(lam))


class SpectrumTransformer(TransformerMixin, BaseEstimator):
    """Map a column of lam values to the lowest ``n_levels`` energies.

    Stateless: ``fit`` only validates parameters. ``transform`` returns an
    array of shape (n_samples, n_levels); ``delta_x_`` keeps the matching
    sqrt(<x^2>) values from the last call.
    """

    def __init__(self, n_levels=10, dim=SCAN_DIM, omega=1.0):
        self.n_levels = n_levels
        self.dim = dim
        self.omega = omega

    def fit(self, X=None, y=None):
        if self.n_levels > self.dim:
            raise DomainError("n_levels cannot exceed dim")
        return self

    def transform(self, X):
        lam = np.asarray(X, dtype=float).reshape(-1)
        E = np.empty((lam.size, self.n_levels))
        D = np.empty_like(E)
        for i, l in enumerate(lam):
            levels = solve_levels(l, self.n_levels, self.dim, self.omega)
            E[i] = [p.energy for p in levels]
            D[i] = [p.delta_x for p in levels]
        self.delta_x_ = D
        return E
