"""Busemann functions, horoballs and Julia-inequality verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MonotonicityViolated, NotAvailable, TailNotConverged
from .metric import DeltaEstimate, estimate_delta
from .spaces import BoundaryAnchor, ModelSpace

DEFAULT_T_MAX = 40.0
DEFAULT_TAIL_TOL = 1e-6
MONOTONE_SLACK = 1e-9


def _ray_excess_trace(space: ModelSpace, anchor: BoundaryAnchor, y, ts) -> list:
    """``d(y, ray(t)) - t`` along ``ts``; non-increasing by the triangle inequality."""
    return [space.distance(y, anchor.at(t)) - t for t in ts]


def _check_non_increasing(values, what: str):
    for i in range(1, len(values)):
        if values[i] > values[i - 1] + MONOTONE_SLACK * (1.0 + abs(values[i - 1])):
            raise MonotonicityViolated(f"{what} increased at trace index {i}", index=i, values=list(values))


def busemann_limit(
    space: ModelSpace,
    anchor: BoundaryAnchor,
    p,
    x,
    T_max: float = DEFAULT_T_MAX,
    tail_tol: float = DEFAULT_TAIL_TOL,
    n_trace: int = 9,
) -> tuple[float, float]:
    """Truncated-limit Busemann value and its half-horizon companion.

    ``h(x) - h(p)`` is split as ``[d(x, g(t)) - t] - [d(p, g(t)) - t]`` so that
    each bracket is monotone in ``t`` and the monotonicity can be asserted.
    """
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    ts = np.linspace(T_max / 2.0, T_max, n_trace)
    gx = _ray_excess_trace(space, anchor, x, ts)
    gp = _ray_excess_trace(space, anchor, p, ts)
    _check_non_increasing(gx, "d(x, ray(t)) - t")
    _check_non_increasing(gp, "d(p, ray(t)) - t")
    value = gx[-1] - gp[-1]
    half = gx[0] - gp[0]
    if abs(value - half) > tail_tol:
        raise TailNotConverged(
            f"Busemann tail gap {abs(value - half):.3g} exceeds {tail_tol:g} at T={T_max:g}",
            value=value,
            half_value=half,
        )
    return value, half


def busemann_value(
    space: ModelSpace,
    anchor: BoundaryAnchor,
    p,
    x,
    T_max: float = DEFAULT_T_MAX,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """``h_{anchor,p}(x) = lim_t d(x, ray(t)) - d(ray(t), p)``.

    Uses the closed form when the space declares one for the label, otherwise
    the certified truncated limit at ``T_max``.
    """
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    try:
        return space.busemann_exact(anchor, p, x)
    except NotAvailable:
        return busemann_limit(space, anchor, p, x, T_max, tail_tol)[0]


@dataclass(frozen=True)
class HorofunctionHandle:
    """A Busemann function normalized to vanish at ``basepoint``."""

    anchor: BoundaryAnchor
    basepoint: object
    T_max: float = DEFAULT_T_MAX
    tail_tol: float = DEFAULT_TAIL_TOL

    @property
    def space(self) -> ModelSpace:
        return self.anchor.space

    @property
    def exact(self) -> bool:
        try:
            self.space.busemann_exact(self.anchor, self.basepoint, self.basepoint)
        except NotAvailable:
            return False
        return True

    def __call__(self, x) -> float:
        return busemann_value(self.space, self.anchor, self.basepoint, x, self.T_max, self.tail_tol)


def horofunction(anchor: BoundaryAnchor, p=None, **kw) -> HorofunctionHandle:
    return HorofunctionHandle(anchor, anchor.basepoint if p is None else p, **kw)


def horoball_contains(handle: HorofunctionHandle, c: float, x) -> bool:
    """Whether ``x`` lies in the closed horoball ``{h <= c}``."""
    return handle(x) <= c


@dataclass
class JuliaReport:
    samples: int
    max_violation: float
    error_budget: float
    tolerance: float
    mode: str
    log_dilation: float
    image_horofunction: str
    witness: object = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.error_budget + self.tolerance

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_violation": self.max_violation,
            "error_budget": self.error_budget,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "log_dilation": self.log_dilation,
            "image_horofunction": self.image_horofunction,
            "pass": self.passed,
        }


def image_curve_horofunction(fmap, anchor: BoundaryAnchor, p, T_max=DEFAULT_T_MAX, tail_tol=1e-6):
    """Horofunction defined by the image curve ``f(ray(t))``.

    Returns a callable ``y -> lim_t d(y, f(ray(t))) - d(f(ray(t)), p)``. When
    compactifications differ, this is the horofunction the image of the anchor
    actually converges to, which need not be the anchor's own Busemann function.
    """
    space = fmap.space
    far = fmap(anchor.at(T_max))
    half = fmap(anchor.at(T_max / 2.0))
    dp_far = space.distance(far, p)
    dp_half = space.distance(half, p)

    def h(y):
        value = space.distance(y, far) - dp_far
        half_value = space.distance(y, half) - dp_half
        if abs(value - half_value) > tail_tol:
            raise TailNotConverged(
                f"image-curve horofunction tail gap {abs(value - half_value):.3g} exceeds {tail_tol:g}",
                value=value,
                half_value=half_value,
            )
        return value

    return h


def verify_julia(
    space: ModelSpace,
    fmap,
    brfp,
    p,
    samples,
    mode: str = "exact",
    delta: DeltaEstimate | None = None,
    tol: float = 1e-6,
    T_max: float = DEFAULT_T_MAX,
) -> JuliaReport:
    """Check ``h_b(f(x)) <= h_a(x) + log(lambda) [+ 4 delta]`` on samples.

    ``brfp`` needs ``anchor`` and ``log_dilation`` attributes. ``h_a`` is the
    anchor's Busemann function at ``p``. ``h_b`` is the same function when the
    space's compactifications agree, otherwise the horofunction of the image
    curve ``f(ray)``.
    """
    if mode not in ("exact", "delta"):
        raise ValueError("mode must be 'exact' or 'delta'")
    log_lambda = brfp.log_dilation
    if log_lambda is None or not math.isfinite(log_lambda):
        raise ValueError("the boundary point carries no finite dilation estimate")
    anchor = brfp.anchor if brfp.anchor.basepoint == p else brfp.anchor.rebased(p)
    h_a = horofunction(anchor, p, T_max=T_max)
    if space.compactification_equivalent:
        h_b = h_a
        which = "anchor Busemann function"
    else:
        h_b = image_curve_horofunction(fmap, anchor, p, T_max=T_max)
        which = "image-curve horofunction"
    worst = -math.inf
    witness = None
    for x in samples:
        v = h_b(fmap(x)) - h_a(x) - log_lambda
        if v > worst:
            worst, witness = v, x
    if mode == "delta":
        delta = delta if delta is not None else estimate_delta(space)
        budget = 4.0 * delta.implied_thin_delta
    else:
        budget = 0.0
    return JuliaReport(
        samples=len(samples),
        max_violation=worst,
        error_budget=budget,
        tolerance=tol,
        mode=mode,
        log_dilation=log_lambda,
        image_horofunction=which,
        witness=witness,
    )
