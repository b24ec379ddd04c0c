"""Backward orbits: construction, step profiles, synthesis and diagnostics.

A backward orbit is a sequence with ``f(x[n]) = x[n-1]``. Orbits come from a
declared inverse, from a root solver, or from the horosphere-stopping
synthesizer that pulls forward orbits of ray points back from a level set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dilation import BRFPRecord, detect_brfp
from .errors import (
    ClustersDiverged,
    DomainError,
    NoRepellingCertificate,
    SolverFailed,
    VerificationFailure,
)
from .forward import Calka, ClassificationResult, MapClass, OrbitTrace, calka_dichotomy, classify, forward_orbit
from .horofunction import horofunction
from .maps import MapHandle
from .metric import certify_discrete_quasigeodesic, distance_to_ray, empirical_hausdorff
from .spaces import label_to_json

RESIDUAL_TOL = 1e-8
EPS_B = 0.05


class StepProfileWarning(UserWarning):
    """Tail averages of ``d(x[n+m], x[n])`` have not settled."""


@dataclass
class BackwardOrbit:
    space: object
    points: list
    construction: str
    residuals: list = field(default_factory=list)
    escaped_at: int | None = None
    ambiguous_steps: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    @property
    def step_distances(self) -> list:
        return [self.space.distance(a, b) for a, b in zip(self.points, self.points[1:])]

    @property
    def displacement(self) -> list:
        x0 = self.points[0]
        return [self.space.distance(x0, x) for x in self.points]

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def as_trace(self) -> OrbitTrace:
        return OrbitTrace(self.space, self.points, self.step_distances, self.displacement, "backward", self.escaped_at)

    @classmethod
    def from_points(cls, fmap: MapHandle, points, construction: str = "given") -> "BackwardOrbit":
        """Wrap an explicit sequence, recording ``d(f(x[n+1]), x[n])``."""
        space = fmap.space
        pts = [space.check(p) for p in points]
        res = [space.distance(fmap(b), a) for a, b in zip(pts, pts[1:])]
        return cls(space, pts, construction, res)


def backward_orbit_via_inverse(fmap: MapHandle, x0, N: int) -> BackwardOrbit:
    """Apply the declared inverse ``N`` times; stop at the first domain escape."""
    if fmap.inverse is None:
        raise ValueError(f"{fmap.name} declares no inverse")
    space = fmap.space
    x = space.check(x0)
    pts, res = [x], []
    escaped_at = None
    for n in range(1, N + 1):
        try:
            y = space.check(fmap.inverse(x))
        except DomainError:
            escaped_at = n - 1
            break
        res.append(space.distance(fmap(y), x))
        pts.append(y)
        x = y
    orbit = BackwardOrbit(space, pts, "inverse", res, escaped_at)
    if escaped_at is not None:
        orbit.notes.append(f"the inverse leaves the domain after index {escaped_at}")
    return orbit


def _solve_preimage(fmap, target, seeds, residual_tol):
    space = fmap.space
    tv = space.to_vector(target)
    big = np.full(space.dim, 1e10)

    def F(v):
        try:
            return space.vector_difference(space.to_vector(fmap(space.from_vector(v))), tv)
        except DomainError:
            return big

    found = []
    best = math.inf
    for v0 in seeds:
        sol = optimize.root(F, v0, method="hybr", options={"xtol": 1e-15, "maxfev": 400})
        try:
            cand = space.from_vector(sol.x)
            r = space.distance(fmap(cand), target)
        except DomainError:
            continue
        best = min(best, r)
        if r <= residual_tol:
            found.append((cand, r))
    return found, best


def backward_orbit_via_solver(
    fmap: MapHandle,
    x0,
    N: int,
    seeds_per_step: int = 4,
    residual_tol: float = RESIDUAL_TOL,
    cluster_tol: float = 1e-6,
    seed: int = 0,
) -> BackwardOrbit:
    """Solve ``f(x[n+1]) = x[n]`` step by step from several starting guesses.

    Guesses are the previous point, a linear extrapolation and random nudges.
    Among accepted roots the one closest to the previous point wins (the orbit
    follows one branch); a second distinct root within ``cluster_tol`` of that
    score is flagged as an ambiguity.
    """
    space = fmap.space
    rng = np.random.default_rng(seed)
    x = space.check(x0)
    pts, res = [x], []
    ambiguous = []
    for n in range(1, N + 1):
        v = space.to_vector(x)
        seeds = [v]
        if len(pts) >= 2:
            seeds.append(v + space.vector_difference(v, space.to_vector(pts[-2])))
        scale = 0.1 * (1.0 + np.abs(v))
        while len(seeds) < seeds_per_step:
            seeds.append(v + scale * rng.standard_normal(space.dim))
        found, best = _solve_preimage(fmap, x, seeds, residual_tol)
        if not found:
            raise SolverFailed(
                f"no preimage within {residual_tol:g} at step {n} (best residual {best:.3g})",
                best_residual=best,
                step=n,
            )
        scored = sorted(((space.distance(c, x), r, c) for c, r in found), key=lambda t: (t[0], t[1]))
        d0, r0, c0 = scored[0]
        for d1, _, c1 in scored[1:]:
            if space.distance(c0, c1) > 1e-6 and d1 - d0 <= cluster_tol:
                ambiguous.append(n)
                break
        pts.append(c0)
        res.append(r0)
        x = c0
    orbit = BackwardOrbit(space, pts, "solver", res, None, ambiguous)
    if ambiguous:
        orbit.notes.append(f"{len(ambiguous)} steps had competing preimages")
    return orbit


@dataclass
class StepProfile:
    sigma: dict
    spread: dict
    m_max: int
    b_estimate: float
    b_index: int
    window: int
    monotone_violations: int = 0

    def subadditivity_violations(self, tol: float = 1e-6) -> list:
        bad = []
        for m in range(1, self.m_max + 1):
            for k in range(1, self.m_max + 1 - m):
                if self.sigma[m + k] > self.sigma[m] + self.sigma[k] + tol:
                    bad.append((m, k))
        return bad

    def to_dict(self) -> dict:
        return {
            "m_max": self.m_max,
            "b_estimate": self.b_estimate,
            "b_index": self.b_index,
            "sigma_1": self.sigma[1],
            "sigma": {str(m): v for m, v in self.sigma.items()},
            "max_spread": max(self.spread.values()),
            "window": self.window,
            "monotone_violations": self.monotone_violations,
        }


def step_profile(orbit, m_max: int | None = None, spread_tol: float = 0.1, space=None) -> StepProfile:
    """Tail averages ``sigma[m]`` of ``d(x[n+m], x[n])`` and ``b = min sigma[m] / m``.

    The averages run over the last quarter of admissible indices. Because
    ``d(x[n+m], x[n])`` is non-decreasing in ``n``, each average is a lower
    estimate of the limit; the monotonicity is counted, not assumed.
    """
    points = orbit.points if hasattr(orbit, "points") else list(orbit)
    space = space or orbit.space
    L = len(points) - 1
    if m_max is None:
        m_max = max(1, L // 4)
    if L + 1 < 4 * m_max:
        raise ValueError(f"an orbit of length {L + 1} supports m_max up to {(L + 1) // 4}")
    q = max(1, L // 4)
    sigma, spread = {}, {}
    monotone_bad = 0
    for m in range(1, m_max + 1):
        hi = L - m
        lo = max(0, hi - q)
        vals = [space.distance(points[n + m], points[n]) for n in range(lo, hi + 1)]
        for a, b in zip(vals, vals[1:]):
            if b < a - 1e-9 * max(1.0, a):
                monotone_bad += 1
        sigma[m] = float(np.mean(vals))
        spread[m] = float(max(vals) - min(vals))
    ratios = {m: sigma[m] / m for m in sigma}
    b_index = min(ratios, key=lambda m: (ratios[m], m))
    unsettled = [m for m in spread if spread[m] > spread_tol * max(1.0, sigma[m])]
    if unsettled:
        warnings.warn(
            f"{len(unsettled)} of {m_max} step averages vary by more than {spread_tol:g} over the tail window",
            StepProfileWarning,
            stacklevel=2,
        )
    return StepProfile(sigma, spread, m_max, ratios[b_index], b_index, q + 1, monotone_bad)


def backward_divergence_rate(orbit: BackwardOrbit, n: int) -> float:
    """``d(x[0], x[n]) / n``, which tends to the backward step rate."""
    return orbit.space.distance(orbit.points[0], orbit.points[n]) / n


# ---------------------------------------------------------------------------
# synthesizer


@dataclass
class SynthesizerState:
    m: int
    c: float
    t_grid: list
    stop_indices: list
    depth: int
    cluster_tol: float
    cluster_sizes: list
    chosen: int
    max_steps: int

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "c": self.c,
            "t_grid": list(self.t_grid),
            "stop_indices": list(self.stop_indices),
            "depth": self.depth,
            "cluster_tol": self.cluster_tol,
            "cluster_sizes": list(self.cluster_sizes),
            "chosen": self.chosen,
        }


@dataclass
class SynthesisResult:
    orbit: BackwardOrbit
    state: SynthesizerState
    profile: StepProfile
    stable: float
    sup_to_inverse_orbit: float | None = None
    hausdorff_to_basepoint_inverse: float | None = None

    @property
    def b(self) -> float:
        return self.profile.b_estimate

    def to_dict(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "b": self.b,
            "stable": self.stable,
            "sigma_1": self.profile.sigma[1],
            "max_residual": self.orbit.max_residual,
            "sup_to_inverse_orbit": self.sup_to_inverse_orbit,
            "hausdorff_to_basepoint_inverse": self.hausdorff_to_basepoint_inverse,
        }


def _auto_threshold(fmap, anchor, h, probes=200):
    """Pick ``c`` one unit below where forward orbits of ray points settle."""
    lows = []
    for t in (0.0, 1.0, 5.0):
        tr = forward_orbit(fmap, anchor.at(t), probes)
        vals = [h(x) for x in tr.points[len(tr.points) // 2:]]
        lows.append(min(vals))
    return min(0.0, min(lows)) - 1.0


def _pull_family(fmap, start, h, m, c, max_steps):
    """Forward orbit of ``start`` up to the first multiple of ``m`` past level ``c``.

    Returns the single-step orbit and the stop index ``n`` such that
    ``h(f^{m n}(start)) <= c`` while ``h(f^{m (n+1)}(start)) > c``.
    """
    orbit = [start]
    x = start
    n = 0
    while True:
        for _ in range(m):
            x = fmap(x)
            orbit.append(x)
        if h(x) > c:
            return orbit, n
        n += 1
        if len(orbit) > max_steps:
            raise ClustersDiverged(f"forward orbit never left the horoball within {max_steps} steps")


def synthesize_backward_orbit(
    fmap: MapHandle,
    repelling: BRFPRecord,
    p=None,
    c: float | None = None,
    t_grid=None,
    m: int | None = None,
    depth: int = 50,
    cluster_tol: float = 0.2,
    n_rays: int = 40,
    ray_spacing: float = 0.05,
    max_steps: int = 200_000,
) -> SynthesisResult:
    """Build a backward orbit converging to a repelling boundary fixed point.

    For each ray parameter ``t_k`` the forward orbit of ``ray(t_k)`` under
    ``f^m`` is followed until the horofunction first exceeds ``c``; the single
    steps before that moment are read backwards as a family of candidate
    orbit segments. At each depth the families are clustered and the largest
    cluster kept, which yields nested subsequences. The returned orbit is the
    family at the centre of the final cluster, so ``f(x[v+1]) = x[v]`` exactly.

    When ``t_grid`` is omitted it starts at the smallest multiple of 5 (from 10)
    for which the stop index covers ``depth`` steps, and then takes ``n_rays``
    values ``ray_spacing`` apart.
    """
    if repelling.classification != "repelling" or repelling.dilation_table is None:
        raise NoRepellingCertificate(
            f"boundary point {label_to_json(repelling.label)} is {repelling.classification}, not repelling"
        )
    space = fmap.space
    anchor = repelling.anchor if p is None else repelling.anchor.rebased(p)
    p = anchor.basepoint
    table = repelling.dilation_table
    if m is None:
        positive = [n for n in sorted(table.entries) if table.entries[n] > 0]
        if not positive:
            raise NoRepellingCertificate("no iterate has positive dilation")
        m = positive[0]
    h = horofunction(anchor, p)
    if c is None:
        c = _auto_threshold(fmap, anchor, h)
    if t_grid is None:
        t0 = 10.0
        while True:
            _, n0 = _pull_family(fmap, anchor.at(t0), h, m, c, max_steps)
            if m * n0 >= depth:
                break
            t0 += 5.0
            if t0 > 1000.0:
                raise ClustersDiverged("no ray parameter below 1000 reaches the requested depth")
        t_grid = [t0 + k * ray_spacing for k in range(n_rays)]
    families, stops = [], []
    for t in t_grid:
        orbit, n_stop = _pull_family(fmap, anchor.at(t), h, m, c, max_steps)
        stops.append(n_stop)
        top = m * n_stop
        if top >= depth:
            families.append([orbit[top - v] for v in range(depth + 1)])
        else:
            families.append(None)
    alive = [k for k, fam in enumerate(families) if fam is not None]
    if len(alive) < 2:
        raise ClustersDiverged("fewer than two ray parameters reach the requested depth", level=0)
    sizes = []
    centre = alive[0]
    for v in range(depth + 1):
        pts = {k: families[k][v] for k in alive}
        best_key, best_group = None, None
        for k in alive:
            group = [j for j in alive if space.distance(pts[k], pts[j]) <= cluster_tol]
            spread = sum(space.distance(pts[k], pts[j]) for j in group)
            key = (-len(group), spread, k)
            if best_key is None or key < best_key:
                best_key, best_group, centre = key, group, k
        alive = best_group
        sizes.append(len(alive))
        if len(alive) < 2:
            raise ClustersDiverged(f"pulled-back families stopped clustering at depth {v}", level=v)
    points = families[centre]
    orbit = BackwardOrbit.from_points(fmap, points, "synthesized")
    state = SynthesizerState(m, c, list(t_grid), stops, depth, cluster_tol, sizes, centre, max_steps)
    profile = step_profile(orbit, m_max=max(1, depth // 4))
    result = SynthesisResult(orbit, state, profile, table.stable)
    if fmap.inverse is not None:
        inv = backward_orbit_via_inverse(fmap, points[0], depth)
        k = len(inv.points)
        result.sup_to_inverse_orbit = max(space.distance(a, b) for a, b in zip(points[:k], inv.points))
        base = backward_orbit_via_inverse(fmap, p, depth)
        result.hausdorff_to_basepoint_inverse = empirical_hausdorff(space, points, base.points)
    return result


# ---------------------------------------------------------------------------
# equivalence battery and limit classification


@dataclass
class BatteryReport:
    verdicts: dict
    values: dict
    limit_label: object

    @property
    def unanimous(self) -> bool:
        return len(set(self.verdicts.values())) == 1

    @property
    def verdict(self) -> bool | None:
        return next(iter(self.verdicts.values())) if self.unanimous else None

    def to_dict(self) -> dict:
        return {
            "verdicts": dict(self.verdicts),
            "values": self.values,
            "limit_label": label_to_json(self.limit_label),
            "unanimous": self.unanimous,
            "alarm": not self.unanimous,
        }


def equivalence_battery(
    orbit: BackwardOrbit,
    fmap: MapHandle,
    eps_b: float = EPS_B,
    qg_ratio: float = 0.1,
    region_radius: float = 3.0,
    rate_tol: float = 1e-2,
    max_points: int = 401,
    profile: StepProfile | None = None,
) -> BatteryReport:
    """Evaluate seven finite-sample conditions on an escaping bounded-step orbit.

    1. step rate ``b > eps_b``
    2. quasi-geodesic: fitted ``B <= qg_ratio * window / A``
    3. the tail stays within ``region_radius`` of the ray to the limit point
    4. the horofunction of the limit point decreases at rate at least ``eps_b``
    5. the horofunction drops at least one unit below its early minimum
    6. the limit point is a repelling boundary fixed point
    7. ``|b - stable dilation| <= rate_tol`` with ``b > eps_b``
    """
    space = fmap.space
    trace = orbit.as_trace()
    if calka_dichotomy(trace) is not Calka.ESCAPING:
        raise ValueError("the battery needs an escaping orbit")
    steps = trace.step_distances
    if not steps or not math.isfinite(max(steps)):
        raise ValueError("the battery needs a bounded-step orbit")
    pts = orbit.points
    profile = profile or step_profile(orbit)
    b = profile.b_estimate
    values = {"b": b, "sigma_1": profile.sigma[1]}
    verdicts = {}

    verdicts["1_positive_rate"] = b > eps_b

    window = pts[:max_points]
    cert = certify_discrete_quasigeodesic(window, space)
    values["qg_A"], values["qg_B"] = cert.A, cert.B
    verdicts["2_quasi_geodesic"] = cert.valid and cert.B <= qg_ratio * (len(window) - 1) / cert.A

    label = space.limit_label(pts)
    x0 = pts[0]
    ray = space.ray_toward(x0, label)
    T = space.distance(x0, pts[-1]) + 10.0
    tail_idx = np.linspace(len(pts) * 3 // 4, len(pts) - 1, 8).astype(int)
    ray_dist = [distance_to_ray(space, ray, pts[i], T)[0] for i in tail_idx]
    values["tail_distance_to_ray"] = ray_dist
    verdicts["3_geodesic_region"] = max(ray_dist) <= region_radius and ray_dist[-1] <= ray_dist[0] + 1.0

    h = horofunction(ray, x0)
    hv = np.array([h(x) for x in pts])
    half = len(hv) // 2
    n_idx = np.arange(half, len(hv), dtype=float)
    slope = float(np.polyfit(n_idx, hv[half:], 1)[0]) if len(hv) - half >= 2 else 0.0
    values["horofunction_slope"] = slope
    verdicts["4_horofunction_to_minus_infinity"] = slope < -eps_b
    early_min = float(hv[: max(1, half)].min())
    late_min = float(hv[half:].min())
    values["horofunction_early_min"], values["horofunction_late_min"] = early_min, late_min
    verdicts["5_horofunction_liminf"] = late_min < early_min - 1.0

    rec = detect_brfp(fmap, ray)
    values["limit_classification"] = rec.classification
    values["limit_stable"] = rec.stable
    verdicts["6_repelling_limit"] = rec.classification == "repelling"
    verdicts["7_rate_equals_stable_dilation"] = (
        rec.stable is not None and b > eps_b and abs(b - rec.stable) <= rate_tol
    )
    return BatteryReport(verdicts, values, label)


@dataclass
class BackwardLimit:
    kind: str
    label: object = None
    b: float | None = None
    stable: float | None = None
    map_class: str | None = None
    notes: list = field(default_factory=list)

    def __str__(self):
        if self.label is None:
            return self.kind
        return f"{self.kind}{{{label_to_json(self.label)}}}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": None if self.label is None else label_to_json(self.label),
            "b": self.b,
            "stable": self.stable,
            "map_class": self.map_class,
            "notes": list(self.notes),
        }


def classify_backward_limit(
    orbit: BackwardOrbit,
    fmap: MapHandle,
    classification: ClassificationResult | None = None,
    profile: StepProfile | None = None,
    eps_b: float = EPS_B,
) -> BackwardLimit:
    """RepellingBRFP, ParabolicDW, WeaklyEllipticUndetermined or NonEscaping."""
    space = fmap.space
    verdict = calka_dichotomy(orbit.as_trace())
    if verdict is Calka.BOUNDED:
        classification = classification or classify(fmap)
        out = BackwardLimit("NonEscaping", map_class=classification.label)
        if classification.kind is not MapClass.ELLIPTIC:
            raise VerificationFailure(
                f"a bounded backward orbit of a {classification.label} map contradicts the dichotomy"
            )
        return out
    if verdict is Calka.UNDETERMINED:
        return BackwardLimit("Undetermined", notes=["orbit escape could not be decided"])
    profile = profile or step_profile(orbit)
    b = profile.b_estimate
    label = space.limit_label(orbit.points)
    if b > eps_b:
        rec = detect_brfp(fmap, space.ray_toward(orbit.points[0], label))
        return BackwardLimit("RepellingBRFP", label, b, rec.stable, notes=[f"limit point is {rec.classification}"])
    classification = classification or classify(fmap)
    if classification.kind is MapClass.PARABOLIC:
        return BackwardLimit("ParabolicDW", classification.dw_label, b, map_class=classification.label)
    if classification.kind is MapClass.ELLIPTIC and classification.ellipticity == "weak":
        return BackwardLimit("WeaklyEllipticUndetermined", label, b, map_class=classification.label)
    if classification.kind is MapClass.UNDETERMINED:
        return BackwardLimit("Undetermined", label, b, map_class=classification.label)
    raise VerificationFailure(
        f"an escaping orbit with step rate {b:.3g} <= {eps_b} under a {classification.label} map"
    )


def unbounded_step_probe(fmap: MapHandle, orbit: BackwardOrbit, n_cells: int = 16, angle_index: int = 0) -> dict:
    """Step growth and angular equidistribution of a backward orbit."""
    steps = orbit.step_distances
    angles = np.array([p[angle_index] for p in orbit.points]) % (2.0 * math.pi)
    cells = np.floor(angles / (2.0 * math.pi) * n_cells).astype(int) % n_cells
    counts = np.bincount(cells, minlength=n_cells)
    first_full = None
    seen = set()
    for n, cell in enumerate(cells):
        seen.add(int(cell))
        if len(seen) == n_cells:
            first_full = n
            break
    occupied = int(np.count_nonzero(counts))
    tail = np.asarray(steps[len(steps) // 2:])
    growth = float(np.polyfit(np.arange(len(tail)), tail, 1)[0]) if len(tail) >= 2 else 0.0
    return {
        "steps": steps,
        "step_growth_per_index": growth,
        "steps_unbounded": growth > 0.1 and steps[-1] > steps[0] + 10.0,
        "cell_counts": counts.tolist(),
        "cells_occupied": occupied,
        "all_cells_hit_at": first_full,
        "bounded_angular_set": occupied <= 1,
        "limit_label": label_to_json(fmap.space.limit_label(orbit.points)),
    }
