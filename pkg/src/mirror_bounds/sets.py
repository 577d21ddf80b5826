"""Polyhedral feasible sets: simplex with a floor, and box x simplex products.

Both families ship exact Euclidean projections (sort-based), exact linear
minimization oracles, and explicit vertex lists so norms/diameters can be
maximized exactly.
"""

from __future__ import annotations

import numpy as np

from .core import ConfigError, FeasibleSet, MEMBERSHIP_TOL, as_vector


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = total} via the sort algorithm."""
    if total <= 0:
        raise ConfigError("simplex mass must be positive")
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ks = np.arange(1, n + 1)
    cond = u - css / ks > 0
    k = int(np.nonzero(cond)[0][-1]) + 1
    tau = css[k - 1] / k
    return np.maximum(v - tau, 0.0)


class FloorSimplex(FeasibleSet):
    """{x in R^n : sum(x) = total, x_i >= floor} with floor < total/n."""

    def __init__(self, n: int, total: float = 1.0, floor: float = 0.0):
        if n < 1:
            raise ConfigError("dimension must be >= 1")
        if floor < 0:
            raise ConfigError("floor must be >= 0")
        if not floor < total / n:
            raise ConfigError("floor must satisfy floor < total/n (set is empty or a point)")
        self.dimension = n
        self.total = float(total)
        self.floor = float(floor)

    def __repr__(self):
        return f"FloorSimplex(n={self.dimension}, total={self.total}, floor={self.floor})"

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            return False
        return abs(float(np.sum(x)) - self.total) <= tol and float(np.min(x)) >= self.floor - tol

    def project(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x, dim=self.dimension)
        free = self.total - self.dimension * self.floor
        return self.floor + project_simplex(x - self.floor, free)

    def lmo(self, c: np.ndarray) -> np.ndarray:
        c = as_vector(c, dim=self.dimension, name="c")
        out = np.full(self.dimension, self.floor)
        out[int(np.argmin(c))] += self.total - self.dimension * self.floor
        return out

    def start_point(self) -> np.ndarray:
        return np.full(self.dimension, self.total / self.dimension)

    def vertices(self) -> np.ndarray:
        base = np.full((self.dimension, self.dimension), self.floor)
        np.fill_diagonal(base, self.floor + self.total - self.dimension * self.floor)
        return base

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        free = self.total - self.dimension * self.floor
        return self.floor + free * rng.dirichlet(np.ones(self.dimension))


class BoxSimplex(FeasibleSet):
    """{(x0, x) : |x0| <= bound, x in FloorSimplex(n, total, floor)}.

    Coordinate 0 is the box coordinate; coordinates 1..n are the simplex part.
    """

    def __init__(self, n: int, bound: float = 1.0, total: float = 1.0, floor: float = 0.0):
        if bound <= 0:
            raise ConfigError("box bound must be positive")
        self.simplex = FloorSimplex(n, total=total, floor=floor)
        self.bound = float(bound)
        self.dimension = n + 1

    def __repr__(self):
        return f"BoxSimplex(n={self.simplex.dimension}, bound={self.bound})"

    def split(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        return float(x[0]), x[1:]

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            return False
        return abs(x[0]) <= self.bound + tol and self.simplex.contains(x[1:], tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x, dim=self.dimension)
        x0 = min(max(x[0], -self.bound), self.bound)
        return np.concatenate(([x0], self.simplex.project(x[1:])))

    def lmo(self, c: np.ndarray) -> np.ndarray:
        c = as_vector(c, dim=self.dimension, name="c")
        x0 = -self.bound if c[0] > 0 else self.bound
        return np.concatenate(([x0], self.simplex.lmo(c[1:])))

    def start_point(self) -> np.ndarray:
        return np.concatenate(([0.0], self.simplex.start_point()))

    def vertices(self) -> np.ndarray:
        sv = self.simplex.vertices()
        lo = np.hstack([np.full((len(sv), 1), -self.bound), sv])
        hi = np.hstack([np.full((len(sv), 1), self.bound), sv])
        return np.vstack([lo, hi])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        x0 = rng.uniform(-self.bound, self.bound)
        return np.concatenate(([x0], self.simplex.sample(rng)))
