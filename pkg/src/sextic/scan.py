"""Spectrum scans over lam, avoided-crossing detection and Delta-x tracking."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import DomainError, SolverError
from .potential import Regime, classify_potential
from .variational import SCAN_DIM, Parity, build_hamiltonian, merge_blocks, solve_eigen

#: Fig. 4-style scan defaults
SCAN_WINDOW = (-0.03, -0.002)
SCAN_POINTS = 60
#: splitting-fit grid
SPLITTING_GRID = (-0.030, -0.012, 10)
JUMP_THRESHOLD = 3.0
CSV_COLUMNS = ("lambda", "level", "parity", "energy", "delta_x")


def log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """``points`` values log-spaced in |lam| between two same-sign endpoints, ascending."""
    if lo * hi <= 0:
        raise DomainError("log-spaced grids need endpoints of the same sign")
    sign = math.copysign(1.0, lo)
    g = sign * np.geomspace(abs(lo), abs(hi), int(points))
    return np.sort(g)


@dataclass
class ScanTable:
    """Energies and Delta-x on a lam grid.

    ``energies[i, n]`` is level n (global ascending order) at ``lambdas[i]``;
    the per-parity arrays keep every computed block level for crossing
    detection.
    """

    lambdas: np.ndarray
    energies: np.ndarray
    parities: np.ndarray
    delta_x: np.ndarray
    block_index: np.ndarray
    block_energies: Dict[int, np.ndarray] = field(default_factory=dict)
    block_delta_x: Dict[int, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[1]

    def rows(self):
        for i, lam in enumerate(self.lambdas):
            for n in range(self.n_levels):
                yield (
                    float(lam),
                    n,
                    Parity(int(self.parities[i, n])).tag,
                    float(self.energies[i, n]),
                    float(self.delta_x[i, n]),
                )

    def global_label(self, i: int, parity: int, k: int) -> Optional[int]:
        hit = np.nonzero((self.parities[i] == parity) & (self.block_index[i] == k))[0]
        return int(hit[0]) if hit.size else None


def _solve_point(lam, per_block, dim):
    try:
        blocks = [solve_eigen(build_hamiltonian(lam, par, dim), per_block) for par in Parity]
    except SolverError as exc:
        raise SolverError(f"lam={lam}: {exc}", lam=lam, parity=exc.parity) from exc
    return blocks


def scan_spectrum(
    lambda_grid: Sequence[float], n_levels: int = 10, dim: int = SCAN_DIM, workers: Optional[int] = None
) -> ScanTable:
    """One Rayleigh-Ritz solve per grid point; grid points run concurrently."""
    lams = np.sort(np.asarray(lambda_grid, dtype=float))
    if n_levels > dim // 2 * 2 or n_levels < 1:
        raise DomainError("need 1 <= n_levels <= dim")
    per_block = min(dim, n_levels // 2 + 2)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda l: _solve_point(l, per_block, dim), lams))
    G = len(lams)
    E = np.empty((G, n_levels))
    P = np.empty((G, n_levels), dtype=int)
    D = np.empty((G, n_levels))
    K = np.empty((G, n_levels), dtype=int)
    bE = {int(p): np.empty((G, per_block)) for p in Parity}
    bD = {int(p): np.empty((G, per_block)) for p in Parity}
    for i, blocks in enumerate(results):
        for par, block in zip(Parity, blocks):
            bE[int(par)][i] = [e.energy for e in block]
            bD[int(par)][i] = [e.delta_x for e in block]
        merged = merge_blocks(*blocks)[:n_levels]
        E[i] = [e.energy for e in merged]
        P[i] = [int(e.parity) for e in merged]
        D[i] = [e.delta_x for e in merged]
        K[i] = [e.block_index for e in merged]
    meta = {
        "lambda_min": float(lams.min()),
        "lambda_max": float(lams.max()),
        "points": int(G),
        "dim": int(dim),
        "n_levels": int(n_levels),
        "version": __version__,
    }
    return ScanTable(lams, E, P, D, K, bE, bD, meta)


# --------------------------------------------------------------------------
# avoided crossings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AvoidedCrossing:
    pair: Tuple[int, int]
    parity: str
    lambda_star: float
    min_gap: float
    delta_x_swap: Tuple[Tuple[float, float], Tuple[float, float]]
    refined: bool = True
    bracket: Tuple[float, float] = (math.nan, math.nan)
    local_spacing: float = math.nan
    block_pair: Tuple[int, int] = (0, 1)

    def as_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "parity": self.parity,
            "lambda_star": self.lambda_star,
            "min_gap": self.min_gap,
            "local_spacing": self.local_spacing,
            "refined": self.refined,
            "bracket": list(self.bracket),
            "delta_x_swap": [list(self.delta_x_swap[0]), list(self.delta_x_swap[1])],
        }


def golden_section_minimize(f, a, b, tol=1e-6, max_evals=40):
    """Golden-section search on [a, b].

    Returns (x, f(x), converged, evaluations).
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while abs(b - a) > tol and evals < max_evals:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        evals += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    return x, fx, abs(b - a) <= tol, evals


def _block_gap(lam, parity, k, dim):
    es = solve_eigen(build_hamiltonian(lam, parity, dim), k + 2)
    return es[k + 1].energy - es[k].energy


def _local_spacing(lam, parity, k, dim):
    es = solve_eigen(build_hamiltonian(lam, parity, dim), k + 3)
    e = [x.energy for x in es]
    neighbours = [e[k + 2] - e[k + 1]] + ([e[k] - e[k - 1]] if k >= 1 else [])
    return float(np.mean(neighbours))


def detect_avoided_crossings(
    table: ScanTable,
    refine: bool = True,
    dim: Optional[int] = None,
    tol: float = 1e-6,
    max_evals: int = 40,
    workers: Optional[int] = None,
) -> List[AvoidedCrossing]:
    """Interior local minima of every same-parity adjacent gap, refined.

    Only pairs whose two levels are both among the table's ``n_levels`` at the
    minimising grid point are reported. Refinement uses golden-section search
    with fresh solves at ``dim`` (default: the table's); when it does not reach
    ``tol`` within ``max_evals`` the grid bracket is reported with
    ``refined=False``.
    """
    lams = table.lambdas
    if len(lams) < 10:
        raise DomainError("crossing detection needs at least 10 grid points")
    dim = int(dim or table.metadata.get("dim", SCAN_DIM))
    candidates = []
    for par, bE in table.block_energies.items():
        for k in range(bE.shape[1] - 1):
            g = bE[:, k + 1] - bE[:, k]
            for i in range(1, len(g) - 1):
                if g[i] < g[i - 1] and g[i] < g[i + 1]:
                    lo = table.global_label(i, par, k)
                    hi = table.global_label(i, par, k + 1)
                    if lo is None or hi is None:
                        continue
                    candidates.append((par, k, i, lo, hi, float(g[i])))

    def work(c):
        par, k, i, lo, hi, g_grid = c
        a, b = float(lams[i - 1]), float(lams[i + 1])
        if refine:
            x, fx, ok, _ = golden_section_minimize(
                lambda l: _block_gap(l, Parity(par), k, dim), a, b, tol, max_evals
            )
            if not ok:
                x, fx = float(lams[i]), g_grid
        else:
            x, fx, ok = float(lams[i]), g_grid, False
        bD = table.block_delta_x[par]
        swap = ((float(bD[i - 1, k]), float(bD[i - 1, k + 1])), (float(bD[i + 1, k]), float(bD[i + 1, k + 1])))
        return AvoidedCrossing(
            pair=(lo, hi),
            parity=Parity(par).tag,
            lambda_star=float(x),
            min_gap=float(fx),
            delta_x_swap=swap,
            refined=bool(ok),
            bracket=(a, b),
            local_spacing=_local_spacing(x, Parity(par), k, dim),
            block_pair=(k, k + 1),
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        found = list(pool.map(work, candidates))
    return sorted(found, key=lambda c: (c.pair, c.lambda_star))


# --------------------------------------------------------------------------
# Delta-x traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Jump:
    index: int
    lam_left: float
    lam_right: float
    change: float

    @property
    def direction(self) -> str:
        """Sense of the change with lam increasing along the grid."""
        return "up" if self.change > 0 else "down"


@dataclass(frozen=True)
class DeltaXTrace:
    level: int
    lambdas: np.ndarray
    delta_x: np.ndarray
    jumps: Tuple[Jump, ...]
    localization: Tuple[Optional[str], ...]
    threshold: float

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "threshold": self.threshold,
            "trace": [[float(a), float(b)] for a, b in zip(self.lambdas, self.delta_x)],
            "localization": list(self.localization),
            "jumps": [
                {"lam_left": j.lam_left, "lam_right": j.lam_right, "change": j.change, "direction": j.direction}
                for j in self.jumps
            ],
        }


def _barrier_position(lam):
    shape = classify_potential(lam)
    if shape.regime is Regime.TRIPLE_WELL:
        return math.sqrt(shape.x_M_sq)
    return None


def track_delta_x(table: ScanTable, n: int, threshold: float = JUMP_THRESHOLD) -> DeltaXTrace:
    """Delta-x of level ``n`` along the grid with jump annotations.

    A jump is a step whose size exceeds ``threshold`` times the median
    absolute step. A state counts as side-well dominated where Delta-x exceeds
    the barrier position x_M.
    """
    if not 0 <= n < table.n_levels:
        raise DomainError(f"level {n} not in table (n_levels={table.n_levels})")
    dx = table.delta_x[:, n].copy()
    steps = np.diff(dx)
    med = float(np.median(np.abs(steps))) if steps.size else 0.0
    jumps = tuple(
        Jump(i, float(table.lambdas[i]), float(table.lambdas[i + 1]), float(s))
        for i, s in enumerate(steps)
        if abs(s) > threshold * med and abs(s) > 0
    )
    loc = []
    for lam, d in zip(table.lambdas, dx):
        xM = _barrier_position(lam)
        loc.append(None if xM is None else ("side" if d > xM else "central"))
    return DeltaXTrace(n, table.lambdas.copy(), dx, jumps, tuple(loc), float(threshold))


# --------------------------------------------------------------------------
# splitting samples
# --------------------------------------------------------------------------


def eigensolver_noise_floor(lam: float, dim: int) -> float:
    """Empirical accuracy floor: |E0 - 1| at the mirrored coupling +|lam|, where E0 = 1 exactly."""
    es = solve_eigen(build_hamiltonian(abs(lam), Parity.EVEN, dim), 1)
    return max(abs(es[0].energy - 1.0), 10.0 * np.finfo(float).eps)


@dataclass(frozen=True)
class SplittingSamples:
    lambdas: np.ndarray
    deltas: np.ndarray
    dropped: Tuple[Tuple[float, float], ...]
    noise_floor: float
    dim: int

    def __iter__(self):
        return iter(zip(self.lambdas.tolist(), self.deltas.tolist()))


def splitting_samples(
    lambda_grid: Sequence[float], dim: int = 500, workers: Optional[int] = None
) -> SplittingSamples:
    """E0(lam) - 1 on the grid; samples under ten times the noise floor are dropped."""
    lams = np.sort(np.asarray(lambda_grid, dtype=float))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        e0 = list(
            pool.map(lambda l: solve_eigen(build_hamiltonian(l, Parity.EVEN, dim), 1)[0].energy, lams)
        )
    floor = max(eigensolver_noise_floor(l, dim) for l in (lams.min(), lams.max()))
    d = np.asarray(e0) - 1.0
    keep = d > 10.0 * floor
    dropped = tuple((float(a), float(b)) for a, b in zip(lams[~keep], d[~keep]))
    return SplittingSamples(lams[keep], d[keep], dropped, float(floor), int(dim))


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------


def _header(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def write_scan_csv(table: ScanTable, fh=None, extra_meta: Optional[dict] = None) -> str:
    """``lambda,level,parity,energy,delta_x`` with a ``#`` metadata line."""
    buf = io.StringIO()
    meta = dict(table.metadata, **(extra_meta or {}))
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for lam, n, par, e, d in table.rows():
        w.writerow([f"{lam:.17g}", n, par, f"{e:.17g}", f"{d:.17g}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_metadata(text: str) -> dict:
    for line in text.splitlines():
        if line.startswith("#"):
            return json.loads(line[1:].strip())
    return {}


def read_scan_csv(text: str) -> ScanTable:
    meta = read_metadata(text)
    body = [l for l in text.splitlines() if l and not l.startswith("#")]
    reader = csv.DictReader(body)
    rows = list(reader)
    lams = sorted({float(r["lambda"]) for r in rows})
    L = max(int(r["level"]) for r in rows) + 1
    idx = {l: i for i, l in enumerate(lams)}
    G = len(lams)
    E = np.full((G, L), np.nan)
    D = np.full((G, L), np.nan)
    P = np.zeros((G, L), dtype=int)
    for r in rows:
        i, n = idx[float(r["lambda"])], int(r["level"])
        E[i, n] = float(r["energy"])
        D[i, n] = float(r["delta_x"])
        P[i, n] = int(Parity.parse(r["parity"]))
    K = np.zeros_like(P)
    bE, bD = {}, {}
    for par in (0, 1):
        counts = (P == par).sum(axis=1)
        m = int(counts.min()) if G else 0
        bE[par] = np.empty((G, m))
        bD[par] = np.empty((G, m))
        for i in range(G):
            cols = np.nonzero(P[i] == par)[0]
            K[i, cols] = np.arange(cols.size)
            bE[par][i] = E[i, cols[:m]]
            bD[par][i] = D[i, cols[:m]]
    return ScanTable(np.asarray(lams), E, P, D, K, bE, bD, meta)


def crossings_to_json(crossings: Sequence[AvoidedCrossing], meta: Optional[dict] = None) -> str:
    return json.dumps({"metadata": meta or {}, "crossings": [c.as_dict() for c in crossings]}, indent=2)
