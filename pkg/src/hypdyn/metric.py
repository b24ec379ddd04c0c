"""Space-agnostic metric primitives.

Gromov products, four-point hyperbolicity estimates, discrete quasi-geodesic
certificates, geodesic-region membership and sampled Hausdorff distances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .spaces import BoundaryAnchor, ModelSpace

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def gromov_product(space: ModelSpace, x, y, w) -> float:
    """``(x, y)_w = (d(x, w) + d(y, w) - d(x, y)) / 2``."""
    for p in (x, y, w):
        space.check(p)
    dxw = space.distance(x, w)
    dyw = space.distance(y, w)
    # summing in a fixed order keeps the product exactly symmetric in x, y
    lo, hi = (dxw, dyw) if dxw <= dyw else (dyw, dxw)
    return 0.5 * ((lo + hi) - space.distance(x, y))


@dataclass(frozen=True)
class DeltaEstimate:
    four_point_C: float
    implied_thin_delta: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "four_point_C": self.four_point_C,
            "implied_thin_delta": self.implied_thin_delta,
            "samples": self.samples,
            "seed": self.seed,
        }


def four_point_excess(space: ModelSpace, W, X, Y, Z) -> np.ndarray:
    """Per-quadruple ``min((x,z)_w, (y,z)_w) - (x,y)_w`` on array inputs."""
    dxw = space.distance_array(X, W)
    dyw = space.distance_array(Y, W)
    dzw = space.distance_array(Z, W)
    dxy = space.distance_array(X, Y)
    dxz = space.distance_array(X, Z)
    dyz = space.distance_array(Y, Z)
    xz = 0.5 * (dxw + dzw - dxz)
    yz = 0.5 * (dyw + dzw - dyz)
    xy = 0.5 * (dxw + dyw - dxy)
    return np.minimum(xz, yz) - xy


def estimate_delta(
    space: ModelSpace,
    sample_window: dict | None = None,
    n_samples: int = 10_000,
    seed: int = 0,
    chunk: int = 50_000,
) -> DeltaEstimate:
    """Lower-bound the four-point constant by sampling quadruples in a window.

    The quadruple stream is a prefix-stable function of ``seed``: a run with
    more samples sees every quadruple of a shorter run, so the estimate is
    non-decreasing in ``n_samples``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    window = sample_window or space.default_window()
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        u = rng.random((k, 4, space.dim))
        pts = space.points_from_unit(u, window)
        W, X, Y, Z = (pts[:, i] for i in range(4))
        excess = four_point_excess(space, W, X, Y, Z)
        worst = max(worst, float(np.max(excess)))
        done += k
    # sub-ulp excess is rounding, not curvature
    C = worst if worst > 1e-12 else 0.0
    return DeltaEstimate(four_point_C=C, implied_thin_delta=4.0 * C, samples=n_samples, seed=seed)


@dataclass
class QuasiGeodesicCertificate:
    A: float
    B: float
    window: tuple
    violations: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def valid(self) -> bool:
        return not self.violations and not self.degenerate

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "window": list(self.window),
            "violations": [list(v) for v in self.violations[:20]],
            "n_violations": len(self.violations),
            "degenerate": self.degenerate,
            "valid": self.valid,
        }


def pairwise_distances(space: ModelSpace, seq) -> np.ndarray:
    n = len(seq)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = space.distance(seq[i], seq[j])
    return D


def certify_discrete_quasigeodesic(
    seq,
    space: ModelSpace,
    A_hint: float | None = None,
    B_hint: float | None = None,
    tol: float = 1e-9,
    distances: np.ndarray | None = None,
) -> QuasiGeodesicCertificate:
    """Fit or check ``|n-m|/A - B <= d(x_n, x_m) <= A|n-m| + B`` on a finite window."""
    n = len(seq)
    if n < 2:
        raise ValueError("a quasi-geodesic certificate needs at least two points")
    D = pairwise_distances(space, seq) if distances is None else distances
    iu = np.triu_indices(n, k=1)
    dist = D[iu]
    gap = (iu[1] - iu[0]).astype(float)
    if np.all(dist == 0.0):
        return QuasiGeodesicCertificate(A=1.0, B=0.0, window=(0, n - 1), degenerate=True)
    A = float(A_hint) if A_hint is not None else max(1.0, float(np.max(dist / gap)))
    if B_hint is not None:
        B = float(B_hint)
    else:
        excess = np.maximum(gap / A - dist, dist - A * gap)
        B = max(0.0, float(np.max(excess)))
    bad = (dist < gap / A - B - tol) | (dist > A * gap + B + tol)
    violations = [(int(i), int(j)) for i, j in zip(iu[0][bad], iu[1][bad])]
    return QuasiGeodesicCertificate(A=A, B=B, window=(0, n - 1), violations=violations)


@dataclass(frozen=True)
class GeodesicRegion:
    ray: BoundaryAnchor
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("geodesic region radius must be positive")


def distance_to_ray(space: ModelSpace, ray: BoundaryAnchor, x, T_max: float, n_grid: int = 401):
    """Sampled ``inf_t d(x, ray(t))`` over [0, T_max]; returns (distance, argmin t)."""
    ts = np.linspace(0.0, T_max, n_grid)
    vals = [space.distance(x, ray.at(t)) for t in ts]
    k = int(np.argmin(vals))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, n_grid - 1)]
    best_t, best = float(ts[k]), float(vals[k])
    # golden-section refinement on the bracketing cell
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = space.distance(x, ray.at(c))
    fd = space.distance(x, ray.at(d))
    for _ in range(60):
        if b - a < 1e-12:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = space.distance(x, ray.at(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = space.distance(x, ray.at(d))
    for t, v in ((c, fc), (d, fd)):
        if v < best:
            best, best_t = v, t
    return best, best_t


def geodesic_region_contains(space: ModelSpace, region: GeodesicRegion, x, T_max: float = 40.0):
    """Return ``(d(x, ray) < R, sampled distance)`` for the ray truncated at ``T_max``."""
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    space.check(x)
    dist, t_star = distance_to_ray(space, region.ray, x, T_max)
    if t_star >= T_max * (1.0 - 1e-9):
        warnings.warn(
            f"closest ray point sits at the horizon T_max={T_max}; membership is inconclusive",
            RuntimeWarning,
            stacklevel=2,
        )
    return dist < region.R, dist


def empirical_hausdorff(space: ModelSpace, traceA, traceB) -> float:
    """Max of the two directed sampled Hausdorff distances between two traces."""
    if not traceA or not traceB:
        raise ValueError("both traces must be non-empty")
    D = np.array([[space.distance(a, b) for b in traceB] for a in traceA])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def ray_hausdorff_trend(
    space: ModelSpace,
    ray_a: BoundaryAnchor,
    ray_b: BoundaryAnchor,
    horizons=(10.0, 20.0, 40.0),
    step: float = 0.25,
) -> dict:
    """Hausdorff distance of truncated rays as the horizon grows.

    Asymptotic rays give a stable value. Rays to distinct boundary points grow
    roughly linearly in the horizon and are flagged ``divergent``.
    """
    values = []
    for T in horizons:
        ts = np.arange(0.0, T + 0.5 * step, step)
        values.append(empirical_hausdorff(space, ray_a.trace(ts), ray_b.trace(ts)))
    growth = values[-1] - values[0]
    divergent = growth > 0.25 * (horizons[-1] - horizons[0])
    return {"horizons": list(horizons), "values": values, "divergent": bool(divergent)}
