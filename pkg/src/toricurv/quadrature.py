"""Averages over the torus and uniform direction sampling on spheres.

Torus averages use the equispaced trapezoidal rule, which is exact for
trigonometric polynomials resolved by the grid and spectrally accurate for
smooth periodic integrands.  Direction sampling normalizes standard normal
draws from a counter-based generator, so a (seed, count, n) triple always
produces the same sequence no matter how the work is chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateMetric
from .immersion import FourierImmersion, jets_at

_DEGENERATE_EIG = 1e-12


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class TorusGrid:
    """Equispaced grid theta_j = 2*pi*(j_1/N_1, ..., j_n/N_n) on the torus."""

    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(N) for N in self.sizes)
        if not sizes:
            raise ValueError("grid needs at least one axis")
        if any(N < 4 for N in sizes):
            raise ValueError(f"all grid sizes must be >= 4, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sizes))

    def theta_at(self, flat_index) -> np.ndarray:
        """Parameter point(s) for flat C-order indices."""
        idx = np.unravel_index(np.asarray(flat_index), self.sizes)
        coords = [2.0 * math.pi * np.asarray(j, dtype=float) / N for j, N in zip(idx, self.sizes)]
        return np.stack(coords, axis=-1)

    def iter_points(self, chunk: int = 4096):
        """Yield (start, thetas) batches in flat C order."""
        P = self.npoints
        for start in range(0, P, chunk):
            stop = min(start + chunk, P)
            yield start, self.theta_at(np.arange(start, stop))

    def points(self) -> np.ndarray:
        """All grid points as a (P, n) array (only sensible for small grids)."""
        return self.theta_at(np.arange(self.npoints))

    def doubled(self) -> "TorusGrid":
        return TorusGrid(tuple(2 * N for N in self.sizes))

    @staticmethod
    def default(n: int) -> "TorusGrid":
        """Desk-scale defaults: 64^2, 32^3, 16^4; 512 for a circle, 8^n above."""
        per_axis = {1: 512, 2: 64, 3: 32, 4: 16}.get(n, 8)
        return TorusGrid((per_axis,) * n)


def volume_weights(imm: FourierImmersion, thetas: np.ndarray) -> np.ndarray:
    """sqrt(det g) at each point; raises DegenerateMetric naming the offender."""
    _, d1, _, _ = jets_at(imm, thetas, order=1)
    g = np.einsum("piq,pjq->pij", d1, d1)
    try:
        C = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        C = None
    if C is None or float(np.min(np.einsum("pii->pi", C))) ** 2 < 1e-10:
        # Slow path: locate the first genuinely singular point for the error.
        eigs = np.linalg.eigvalsh(g)
        bad = np.nonzero(eigs[:, 0] < _DEGENERATE_EIG)[0]
        if bad.size:
            theta = thetas[bad[0]]
            raise DegenerateMetric(
                f"metric eigenvalue {eigs[bad[0], 0]:.3e} < {_DEGENERATE_EIG} at theta={theta.tolist()}"
            )
        if C is None:  # Cholesky failed yet no eigenvalue is tiny: genuinely broken input
            raise DegenerateMetric("induced metric is not positive definite on this batch")
    return np.prod(np.einsum("pii->pi", C), axis=1)


def _field_values(field, imm: FourierImmersion, thetas: np.ndarray, start: int, stop: int) -> np.ndarray:
    if callable(field):
        vals = np.asarray(field(thetas), dtype=float)
        if vals.shape != (thetas.shape[0],):
            raise ValueError(f"field callable returned shape {vals.shape}, expected ({thetas.shape[0]},)")
        return vals
    arr = np.asarray(field, dtype=float).reshape(-1)
    return arr[start:stop]


def average_over_torus(field, imm: FourierImmersion, grid: TorusGrid, chunk: int = 4096) -> float:
    """Average of a point field with respect to the induced volume.

    `field` is either a callable mapping a (P, n) batch of parameter points
    to (P,) values, or an array of values precomputed in the grid's flat C
    order.  The reduction order is fixed by the grid indexing, so results do
    not depend on how the evaluation is scheduled.
    """
    if not callable(field):
        arr = np.asarray(field, dtype=float).reshape(-1)
        if arr.size != grid.npoints:
            raise ValueError(f"field array has {arr.size} values for a grid of {grid.npoints} points")
        field = arr
    num = 0.0
    den = 0.0
    for start, thetas in grid.iter_points(chunk):
        w = volume_weights(imm, thetas)
        v = _field_values(field, imm, thetas, start, start + thetas.shape[0])
        num += float(np.sum(v * w))
        den += float(np.sum(w))
    return num / den


@dataclass(frozen=True)
class RefinementReport:
    value: float
    refined_value: float
    delta: float


def grid_refinement_report(field: Callable, imm: FourierImmersion, grid: TorusGrid,
                           refined: TorusGrid | None = None) -> RefinementReport:
    """Average on a grid and the change after doubling every axis.

    Callers treat delta < 1e-6 as "the average is resolved"; a larger delta
    flags an under-resolved integrand (aliasing).
    """
    refined = grid.doubled() if refined is None else refined
    base = average_over_torus(field, imm, grid)
    fine = average_over_torus(field, imm, refined)
    return RefinementReport(value=base, refined_value=fine, delta=abs(fine - base))


@dataclass(frozen=True)
class SphereSampler:
    """Deterministic uniform sampler of unit directions in R^n."""

    n: int
    count: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    def directions(self) -> np.ndarray:
        """(count, n) unit vectors, a pure function of (seed, count, n)."""
        g = _philox(self.seed)
        z = g.standard_normal((self.count, self.n))
        norms = np.linalg.norm(z, axis=1)
        degenerate = norms < 1e-12
        if np.any(degenerate):  # measure-zero event; pin a fixed direction
            z[degenerate] = 0.0
            z[degenerate, 0] = 1.0
            norms = np.linalg.norm(z, axis=1)
        return z / norms[:, None]


def sphere_average_mc(fn: Callable[[np.ndarray], np.ndarray], sampler: SphereSampler) -> tuple[float, float]:
    """Monte-Carlo sphere average of fn with its standard error.

    fn maps a (count, n) array of unit directions to (count,) values.
    """
    dirs = sampler.directions()
    vals = np.asarray(fn(dirs), dtype=float).reshape(-1)
    if vals.shape[0] != sampler.count:
        raise ValueError(f"fn returned {vals.shape[0]} values for {sampler.count} directions")
    mean = float(np.mean(vals))
    if sampler.count == 1:
        return mean, 0.0
    stderr = float(np.std(vals, ddof=1) / math.sqrt(sampler.count))
    return mean, stderr


@dataclass(frozen=True)
class MonomialEntry:
    label: str
    mean: float
    stderr: float

    @property
    def deviation(self) -> float:
        return abs(self.mean - 1.0)

    @property
    def sigmas(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.deviation == 0.0 else math.inf
        return self.deviation / self.stderr


@dataclass(frozen=True)
class MonomialReport:
    n: int
    count: int
    seed: int
    entries: tuple[MonomialEntry, ...]

    @property
    def max_deviation(self) -> float:
        return max(e.deviation for e in self.entries)

    @property
    def worst_sigmas(self) -> float:
        return max(e.sigmas for e in self.entries)


def monomial_selftest(n: int, count: int, seed: int = 0) -> MonomialReport:
    """Check the two quartic monomial averages that normalize to 1 on S^(n-1).

    The scaled monomials n(n+2)/3 * x_i^4 and n(n+2) * x_i^2 x_j^2 have unit
    sphere average; the report carries each estimate with its standard error
    so callers can assert a 5-standard-error band.
    """
    dirs = SphereSampler(n, count, seed).directions()
    scale4 = n * (n + 2) / 3.0
    scale22 = float(n * (n + 2))
    entries = []
    for i in range(n):
        vals = scale4 * dirs[:, i] ** 4
        mean = float(np.mean(vals))
        stderr = float(np.std(vals, ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        entries.append(MonomialEntry(f"x{i + 1}^4", mean, stderr))
    for i in range(n):
        for j in range(i + 1, n):
            vals = scale22 * dirs[:, i] ** 2 * dirs[:, j] ** 2
            mean = float(np.mean(vals))
            stderr = float(np.std(vals, ddof=1) / math.sqrt(count)) if count > 1 else 0.0
            entries.append(MonomialEntry(f"x{i + 1}^2*x{j + 1}^2", mean, stderr))
    return MonomialReport(n=n, count=count, seed=seed, entries=tuple(entries))
