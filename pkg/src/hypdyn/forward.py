"""Forward orbits, escape detection, divergence rate and map classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, NonExpansionViolated
from .maps import MapHandle
from .spaces import label_to_json

R_ESCAPE = 20.0
R_BOUND = 20.0
N_MIN = 50
LOG_TREND_MIN = 0.25
EPS_C = 1e-3
R_STRONG = 1.0


@dataclass
class OrbitTrace:
    space: object
    points: list
    step_distances: list
    displacement: list
    direction: str = "forward"
    escaped_at: int | None = None

    def __len__(self):
        return len(self.points)

    def step_monotone_violations(self, tol: float = 1e-9) -> list:
        s = self.step_distances
        return [i for i in range(1, len(s)) if s[i] > s[i - 1] + tol * max(1.0, s[i - 1])]


def forward_orbit(fmap: MapHandle, x0, N: int) -> OrbitTrace:
    """Iterate ``fmap`` ``N`` times from ``x0``.

    A domain escape stops the orbit; ``escaped_at`` then holds the last valid index.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    space = fmap.space
    x0 = space.check(x0)
    points, steps, disp = [x0], [], [0.0]
    escaped_at = None
    x = x0
    for n in range(1, N + 1):
        try:
            y = fmap(x)
        except DomainError:
            escaped_at = n - 1
            break
        steps.append(space.distance(x, y))
        disp.append(space.distance(x0, y))
        points.append(y)
        x = y
    return OrbitTrace(space, points, steps, disp, "forward", escaped_at)


class Calka(str, Enum):
    BOUNDED = "bounded"
    ESCAPING = "escaping"
    UNDETERMINED = "undetermined"


def _ls_slope(y) -> float:
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return 0.0
    x = np.arange(len(y), dtype=float)
    x -= x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def trend_fits(displacement, start_fraction: float = 0.5) -> dict:
    """Least-squares fits of the displacement tail against ``n`` and ``log n``."""
    D = np.asarray(displacement, dtype=float)
    N = len(D) - 1
    lo = max(1, int(N * start_fraction))
    n = np.arange(lo, N + 1, dtype=float)
    y = D[lo:]
    out = {}
    for name, feature in (("linear", n), ("log", np.log(n))):
        X = np.column_stack([np.ones_like(feature), feature])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        out[name] = {"coef": float(coef[1]), "ssr": float(np.dot(resid, resid))}
    out["log_wins"] = out["log"]["ssr"] < out["linear"]["ssr"]
    return out


def calka_dichotomy(
    trace: OrbitTrace,
    R_escape: float = R_ESCAPE,
    R_bound: float = R_BOUND,
    slope_min: float = 0.0,
    log_trend_min: float = LOG_TREND_MIN,
    N_min: int = N_MIN,
) -> Calka:
    """Finite-sample form of the bounded / escaping alternative.

    Escaping when the displacement passes ``R_escape`` with a non-negative
    last-quarter slope, or when it keeps rising along a logarithmic trend with
    coefficient above ``log_trend_min`` (slow escape such as ``log(1 + n)``).
    Bounded when the last half stays below ``R_bound`` without such a trend.
    """
    D = np.asarray(trace.displacement, dtype=float)
    if len(D) < N_min:
        return Calka.UNDETERMINED
    N = len(D) - 1
    last_quarter = D[(3 * N) // 4:]
    last_half = D[N // 2:]
    if D.max() > R_escape and _ls_slope(last_quarter) >= slope_min:
        return Calka.ESCAPING
    if log_trend(D) > log_trend_min:
        return Calka.ESCAPING
    if last_half.max() < R_bound:
        return Calka.BOUNDED
    return Calka.UNDETERMINED


def log_trend(displacement) -> float:
    """Coefficient of ``log n`` for a steadily rising tail, else 0."""
    D = np.asarray(displacement, dtype=float)
    N = len(D) - 1
    half = D[N // 2:]
    rising = np.all(np.diff(half) >= -1e-9 * np.maximum(1.0, np.abs(half[:-1])))
    if not rising or half[-1] <= half[0]:
        return 0.0
    return trend_fits(D)["log"]["coef"]


def divergence_rate_details(fmap: MapHandle, x0, N: int) -> dict:
    if N < 10:
        raise ValueError("N must be at least 10")
    trace = forward_orbit(fmap, x0, N)
    return _rate_from_trace(trace)


def _rate_from_trace(trace: OrbitTrace) -> dict:
    D = np.asarray(trace.displacement, dtype=float)
    n = np.arange(1, len(D))
    fekete = float(np.min(D[1:] / n)) if len(D) > 1 else 0.0
    fits = trend_fits(D)
    slope = _ls_slope(D[(len(D) - 1) // 2:])
    if fits["log_wins"]:
        # sublinear escape: the running ratio overstates c, the tail slope does not
        rate = max(0.0, min(fekete, slope))
    else:
        rate = max(0.0, fekete)
    return {"rate": rate, "fekete": fekete, "tail_slope": slope, "fits": fits, "trace": trace}


def divergence_rate(fmap: MapHandle, x0, N: int = 500) -> float:
    """Estimate ``c(f) = lim d(x, f^n x) / n``.

    The subadditive sequence makes ``min_n d(x, f^n x) / n`` an upper bound that
    converges to ``c``. When the tail is better explained by ``log n`` than by
    ``n``, the last-half slope replaces it.
    """
    return divergence_rate_details(fmap, x0, N)["rate"]


@dataclass
class NonExpansionReport:
    n_pairs: int
    max_excess: float
    passed: bool

    def to_dict(self):
        return {"n_pairs": self.n_pairs, "max_excess": self.max_excess, "pass": self.passed}


def check_nonexpanding(fmap: MapHandle, sampler=None, n_pairs: int = 1000, seed: int = 0, tol: float = 1e-9):
    """Sample pairs and check ``d(f p, f q) <= d(p, q)``; raise with the worst pair otherwise."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    space = fmap.space
    rng = np.random.default_rng(seed)
    if sampler is None:
        pts = space.sample(rng, 2 * n_pairs)
    else:
        pts = list(sampler(rng, 2 * n_pairs))
    worst, witness = -math.inf, None
    for p, q in zip(pts[0::2], pts[1::2]):
        d = space.distance(p, q)
        excess = (space.distance(fmap(p), fmap(q)) - d) / max(1.0, d)
        if excess > worst:
            worst, witness = excess, (p, q)
    if worst > tol:
        raise NonExpansionViolated(
            f"{fmap.name} expands the pair {witness!r} by {worst:.3g}", witness=witness, excess=worst
        )
    return NonExpansionReport(n_pairs=n_pairs, max_excess=worst, passed=True)


@dataclass
class RetractSample:
    points: list
    bounded: bool
    diameter: float
    boundary_labels_touched: list = field(default_factory=list)


def _cluster(space, points, tol):
    reps = []
    for p in points:
        if all(space.distance(p, r) > tol for r in reps):
            reps.append(p)
    return reps


def _diameter(space, points) -> float:
    best = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = max(best, space.distance(points[i], points[j]))
    return best


def limit_retract_sample(
    fmap: MapHandle,
    seeds,
    N: int = 500,
    tail_fraction: float = 0.25,
    cluster_tol: float = 1e-3,
    R_strong: float = R_STRONG,
    traces: list | None = None,
) -> RetractSample:
    """Sample the limit retract from the tails of long orbits of an elliptic map."""
    space = fmap.space
    traces = traces or [forward_orbit(fmap, s, N) for s in seeds]
    for tr in traces:
        if calka_dichotomy(tr) is Calka.ESCAPING:
            raise ValueError(f"{fmap.name} has an escaping orbit; the limit retract is only sampled for elliptic maps")
    tail = []
    for tr in traces:
        k = max(1, int(len(tr.points) * tail_fraction))
        tail.extend(tr.points[-k:])
    reps = _cluster(space, tail, cluster_tol)
    diam = _diameter(space, reps)
    touched = []
    origin = traces[0].points[0]
    for r in reps:
        if space.distance(origin, r) > 3.0:
            lab = space.nearest_label(r)
            if not any(space.labels_equal(lab, t) for t in touched):
                touched.append(lab)
    return RetractSample(points=reps, bounded=diam <= R_strong, diameter=diam, boundary_labels_touched=touched)


class MapClass(str, Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"
    UNDETERMINED = "undetermined"


@dataclass
class ClassificationResult:
    kind: MapClass
    c_estimate: float
    ellipticity: str | None = None
    dw_label: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.kind is MapClass.ELLIPTIC:
            return f"elliptic-{self.ellipticity}"
        return self.kind.value

    def to_dict(self) -> dict:
        return {
            "class": self.kind.value,
            "ellipticity": self.ellipticity,
            "c_estimate": self.c_estimate,
            "dw_label": None if self.dw_label is None else label_to_json(self.dw_label),
            "diagnostics": self.diagnostics,
        }


def classify(
    fmap: MapHandle,
    seeds=None,
    N: int = 500,
    eps_c: float = EPS_C,
    R_strong: float = R_STRONG,
) -> ClassificationResult:
    """Elliptic (strong / weak / undetermined), parabolic or hyperbolic."""
    space = fmap.space
    seeds = list(seeds) if seeds is not None else space.default_seeds()
    if not seeds:
        raise ValueError("classify needs at least one seed")
    traces = [forward_orbit(fmap, s, N) for s in seeds]
    verdicts = [calka_dichotomy(t) for t in traces]
    diag = {"seed_verdicts": [v.value for v in verdicts]}
    escaping = [t for t, v in zip(traces, verdicts) if v is Calka.ESCAPING]
    if escaping:
        # one escaping orbit forces all of them to escape; each seed's ratio is an
        # upper bound for c, so keep the smallest. The trend shape and the limit
        # come from the orbit that got furthest: seeds deep inside the space can
        # still be in their pre-asymptotic regime after N steps
        infos = [_rate_from_trace(t) for t in escaping]
        info = min(infos, key=lambda i: i["fekete"])
        k = max(range(len(escaping)), key=lambda j: escaping[j].displacement[-1])
        tr = escaping[k]
        log_wins = infos[k]["fits"]["log_wins"]
        diag.update(fekete=info["fekete"], tail_slope=info["tail_slope"], log_fit_wins=log_wins)
        dw = space.limit_label(tr.points)
        if log_wins or info["fekete"] <= eps_c:
            return ClassificationResult(MapClass.PARABOLIC, 0.0 if log_wins else info["fekete"], None, dw, diag)
        return ClassificationResult(MapClass.HYPERBOLIC, info["fekete"], None, dw, diag)
    if any(v is Calka.UNDETERMINED for v in verdicts):
        return ClassificationResult(MapClass.UNDETERMINED, float("nan"), None, None, diag)
    retract = limit_retract_sample(fmap, seeds, N, traces=traces)
    seed_diam = _diameter(space, [t.points[0] for t in traces])
    if retract.diameter <= R_strong:
        ell = "strong"
    elif retract.diameter >= 0.5 * seed_diam and seed_diam > 2.0 * R_strong:
        ell = "weak"
    else:
        ell = "undetermined"
    diag.update(retract_diameter=retract.diameter, seed_diameter=seed_diam, retract_points=len(retract.points))
    return ClassificationResult(MapClass.ELLIPTIC, 0.0, ell, None, diag)
