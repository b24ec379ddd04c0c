"""Model spaces with closed-form geometry.

All hyperbolic models use curvature -1, so the disc distance is
``2 * artanh(|z - w| / |1 - conj(w) z|)``.

Points are plain Python values whose layout depends on the space:

* ``UpperHalfPlane`` and ``SlitPlane``: ``complex``.
* ``PoincareDisc``: ``complex`` in the Cayley half-plane chart
  ``w = i (1 + z) / (1 - z)``. Build points with ``space.point(z)`` and read
  disc coordinates back with ``space.coords(p)``. The chart keeps orbits that
  run hundreds of units toward the boundary representable.
* ``RealLine`` and ``LogLine``: ``float``.
* ``L1Cylinder`` and ``FlatCylinder``: ``(x, theta)`` with theta in [0, 2pi).
* ``HyperbolicPuncturedCylinder``: ``(alpha, s)`` where ``s = log t`` is the
  logarithm of the height, so heights like ``2**-2000`` stay representable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidLabel, NotAvailable

TWO_PI = 2.0 * math.pi
INF = math.inf

Point = Any


# ---------------------------------------------------------------------------
# small helpers


def circle_distance(a: float, b: float) -> float:
    """Arc-length distance on the unit circle, in [0, pi]."""
    d = math.fmod(abs(a - b), TWO_PI)
    return min(d, TWO_PI - d)


def circle_distance_array(a, b):
    d = np.fmod(np.abs(a - b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def reduce_angle(a: float) -> float:
    """Representative of ``a`` in [0, 2pi)."""
    r = math.fmod(a, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r -= TWO_PI
    return r


def signed_angle(a: float) -> float:
    """Representative of ``a`` in [-pi, pi)."""
    r = reduce_angle(a + math.pi) - math.pi
    return r


def _is_inf_label(label) -> bool:
    return isinstance(label, float) and math.isinf(label)


def parse_label(raw):
    """Turn a JSON-ish label (``"+inf"``, ``"-inf"``, number, [re, im]) into a Python value."""
    if isinstance(raw, str):
        text = raw.strip().lower()
        if text in ("inf", "+inf", "infinity", "+infinity", "cusp"):
            return INF
        if text in ("-inf", "-infinity"):
            return -INF
        try:
            return float(text)
        except ValueError:
            try:
                return complex(text.replace("i", "j"))
            except ValueError as exc:
                raise InvalidLabel(f"unparseable boundary label {raw!r}") from exc
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    if isinstance(raw, complex):
        return raw
    if isinstance(raw, (int, float)):
        return float(raw)
    raise InvalidLabel(f"unparseable boundary label {raw!r}")


def label_to_json(label):
    if isinstance(label, complex):
        return [label.real, label.imag]
    if isinstance(label, float) and math.isinf(label):
        return "+inf" if label > 0 else "-inf"
    return float(label)


# ---------------------------------------------------------------------------
# upper half-plane primitives (used by every chart-based model)


def uhp_distance(z: complex, w: complex) -> float:
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag) * math.sqrt(w.imag)))


def uhp_distance_array(z, w):
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag) * np.sqrt(w.imag)))


def _mobius(m, w: complex) -> complex:
    a, b, c, d = m
    return (a * w + b) / (c * w + d)


def uhp_geodesic_point(p: complex, q: complex, s: float) -> complex:
    """Point at fraction ``s`` of the way from ``p`` to ``q``.

    ``p`` is moved to ``i`` by an affine isometry, ``q`` is rotated about ``i``
    onto the imaginary axis, and the answer is ``i * exp(s * d)`` pulled back.
    """
    if s == 0.0:
        return p
    if s == 1.0:
        return q
    x0, y0 = p.real, p.imag
    qn = complex((q.real - x0) / y0, q.imag / y0)
    dist = uhp_distance(1j, qn)
    zeta = (qn - 1j) / (qn + 1j)
    # zeta is the disc picture of qn seen from i; its argument is the direction
    half = 0.5 * cmath.phase(zeta) if zeta != 0 else 0.0
    # the elliptic rotation about i that carries the upward axis onto the geodesic
    c, sn = math.cos(half), math.sin(half)
    rot = (c, sn, -sn, c)
    w = _mobius(rot, 1j * math.exp(s * dist))
    return complex(x0 + y0 * w.real, y0 * w.imag)


def uhp_ray_point(base: complex, label: float, t: float) -> complex:
    if _is_inf_label(label):
        return complex(base.real, base.imag * math.exp(t))
    u0 = -1.0 / (base - label)
    u = complex(u0.real, u0.imag * math.exp(t))
    return label - 1.0 / u


def uhp_busemann(label: float, p: complex, x: complex) -> float:
    if _is_inf_label(label):
        return math.log(p.imag / x.imag)
    hp = p.imag / abs(p - label) ** 2
    hx = x.imag / abs(x - label) ** 2
    return math.log(hp / hx)


# ---------------------------------------------------------------------------
# anchors


@dataclass(frozen=True)
class BoundaryAnchor:
    """A unit-speed geodesic ray from ``basepoint`` toward the boundary ``label``."""

    space: "ModelSpace"
    label: Any
    basepoint: Point

    def at(self, t: float) -> Point:
        return self.space._ray_point(self.basepoint, self.label, float(t))

    def trace(self, ts: Sequence[float]) -> list:
        return [self.at(t) for t in ts]

    def rebased(self, basepoint: Point) -> "BoundaryAnchor":
        return self.space.ray_toward(basepoint, self.label)

    def to_dict(self) -> dict:
        return {
            "label": label_to_json(self.label),
            "basepoint": list(self.space.coords(self.basepoint)),
        }


# ---------------------------------------------------------------------------
# base class


@dataclass(frozen=True)
class ModelSpace:
    """Common interface of the shipped model spaces."""

    kind: str = field(init=False, default="ModelSpace")
    compactification_equivalent: bool = field(init=False, default=True)
    # number of real coordinates used by the sampler and the preimage solver
    dim: int = field(init=False, default=2)
    curvature_scale: float = field(init=False, default=-1.0)

    @property
    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    # -- points -------------------------------------------------------------
    def check(self, p: Point) -> Point:
        raise NotImplementedError

    def point(self, *coords) -> Point:
        raise NotImplementedError

    def coords(self, p: Point) -> tuple:
        raise NotImplementedError

    def to_vector(self, p: Point) -> np.ndarray:
        raise NotImplementedError

    def from_vector(self, v) -> Point:
        raise NotImplementedError

    def vector_difference(self, u, v) -> np.ndarray:
        """``u - v`` for coordinate vectors, wrapping angular components."""
        return np.asarray(u, dtype=float) - np.asarray(v, dtype=float)

    def same_point(self, p: Point, q: Point, tol: float = 0.0) -> bool:
        return self.distance(p, q) <= tol

    # -- metric -------------------------------------------------------------
    def distance(self, p: Point, q: Point) -> float:
        raise NotImplementedError

    def distance_array(self, P, Q):
        raise NotImplementedError

    def geodesic_point(self, p: Point, q: Point, s: float) -> Point:
        self.check(p)
        self.check(q)
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"geodesic fraction must lie in [0, 1], got {s}")
        if self.distance(p, q) == 0.0:
            raise DomainError("geodesic_point needs two distinct points")
        return self._geodesic_point(p, q, float(s))

    def _geodesic_point(self, p, q, s):
        raise NotImplementedError

    # -- boundary -----------------------------------------------------------
    def canonical_labels(self) -> list:
        raise NotImplementedError

    def normalize_label(self, label):
        raise NotImplementedError

    def labels_equal(self, a, b, tol: float = 1e-6) -> bool:
        a = self.normalize_label(a)
        b = self.normalize_label(b)
        if isinstance(a, float) and isinstance(b, float) and (math.isinf(a) or math.isinf(b)):
            return a == b
        return abs(a - b) <= tol

    def ray_toward(self, basepoint: Point, label) -> BoundaryAnchor:
        self.check(basepoint)
        return BoundaryAnchor(self, self.normalize_label(label), basepoint)

    def _ray_point(self, base, label, t):
        raise NotImplementedError

    def has_exact_busemann(self, label) -> bool:
        return True

    def busemann_exact(self, anchor: BoundaryAnchor, p: Point, x: Point) -> float:
        """Closed-form Busemann function ``lim d(x, g(t)) - d(g(t), p)``."""
        raise NotAvailable(f"{self.kind} has no closed-form Busemann function")

    def nearest_label(self, p: Point):
        raise NotImplementedError

    def limit_label(self, points: Sequence[Point]):
        """Name the boundary point a diverging sequence tends to."""
        raise NotImplementedError

    # -- sampling -----------------------------------------------------------
    def default_window(self) -> dict:
        raise NotImplementedError

    def default_seeds(self) -> list:
        raise NotImplementedError

    def points_from_unit(self, u, window: dict):
        """Map unit-cube samples of shape (..., dim) to the array representation."""
        raise NotImplementedError

    def unpack(self, arr) -> list:
        """Convert an array of points to a list of scalar points."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int, window: dict | None = None) -> list:
        window = window or self.default_window()
        u = rng.random((n, self.dim))
        return self.unpack(self.points_from_unit(u, window))


def _window_range(window: dict, key: str) -> tuple:
    lo, hi = window[key]
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"window range {key!r} must be a finite [lo, hi], got {window[key]!r}")
    return lo, hi


# ---------------------------------------------------------------------------
# half-plane charts


@dataclass(frozen=True)
class _HalfPlaneChart(ModelSpace):
    """Spaces isometric to the upper half-plane through an explicit chart."""

    def to_chart(self, p):
        return p

    def from_chart(self, w):
        return w

    def _chart_label(self, label):
        return label

    def _user_label(self, chart_label):
        return chart_label

    def distance(self, p, q):
        return uhp_distance(self.to_chart(p), self.to_chart(q))

    def distance_array(self, P, Q):
        return uhp_distance_array(self.to_chart_array(P), self.to_chart_array(Q))

    def to_chart_array(self, P):
        return P

    def _geodesic_point(self, p, q, s):
        return self.from_chart(uhp_geodesic_point(self.to_chart(p), self.to_chart(q), s))

    def _ray_point(self, base, label, t):
        return self.from_chart(uhp_ray_point(self.to_chart(base), self._chart_label(label), t))

    def busemann_exact(self, anchor, p, x):
        return uhp_busemann(self._chart_label(anchor.label), self.to_chart(p), self.to_chart(x))

    def nearest_label(self, p):
        w = self.to_chart(p)
        z = (w - 1j) / (w + 1j)
        if abs(z) == 0.0:
            return self._user_label(INF)
        u = z / abs(z)
        if abs(u - 1.0) < 1e-12:
            return self._user_label(INF)
        r = (1j * (1.0 + u) / (1.0 - u)).real
        return self._user_label(r)

    def limit_label(self, points):
        ws = [self.to_chart(p) for p in points]
        tail = ws[len(ws) * 3 // 4:] if len(ws) >= 4 else ws
        last, first = tail[-1], tail[0]
        if abs(last) > 1e8:
            return self._user_label(INF)
        moduli = [abs(w) for w in tail]
        drift = abs(last.real - first.real)
        growing = all(b >= a for a, b in zip(moduli, moduli[1:])) and moduli[-1] > moduli[0]
        if growing and drift > 1e-3 * (1.0 + abs(first.real)):
            return self._user_label(INF)
        if last.imag > 1.0 + abs(last.real) and growing:
            return self._user_label(INF)
        return self._user_label(last.real)

    def to_vector(self, p):
        w = self.to_native_complex(p)
        return np.array([w.real, w.imag])

    def to_native_complex(self, p):
        return p

    def from_vector(self, v):
        return self.check(complex(float(v[0]), float(v[1])))

    def unpack(self, arr):
        return [complex(w) for w in np.asarray(arr).ravel()]


@dataclass(frozen=True)
class UpperHalfPlane(_HalfPlaneChart):
    """The upper half-plane ``Im z > 0``; labels are real numbers or ``inf``."""

    kind: str = field(init=False, default="UpperHalfPlane")

    def check(self, p):
        if not isinstance(p, complex):
            p = complex(p)
        if not (math.isfinite(p.real) and math.isfinite(p.imag)) or not p.imag > 0.0:
            raise DomainError(f"upper half-plane point needs finite coordinates and Im > 0, got {p!r}")
        return p

    def point(self, x, y=None):
        return self.check(complex(x) if y is None else complex(float(x), float(y)))

    def coords(self, p):
        return (p.real, p.imag)

    def canonical_labels(self):
        return [INF, 0.0, 1.0, -1.0]

    def normalize_label(self, label):
        label = parse_label(label) if not isinstance(label, float) else label
        if isinstance(label, complex):
            if label.imag != 0.0:
                raise InvalidLabel(f"half-plane labels are real or inf, got {label!r}")
            label = label.real
        label = float(label)
        if label == -INF:
            raise InvalidLabel("the half-plane has a single point at infinity, use +inf")
        return label

    def default_window(self):
        return {"x": [-5.0, 5.0], "y": [0.1, 10.0]}

    def default_seeds(self):
        return [1j, 2.0 + 1j, -3.0 + 0.5j, 5j, 50j, 1.0 + 200j]

    def points_from_unit(self, u, window):
        x0, x1 = _window_range(window, "x")
        y0, y1 = _window_range(window, "y")
        if y0 <= 0.0:
            raise ValueError("half-plane window needs y > 0")
        u = np.asarray(u)
        return (x0 + (x1 - x0) * u[..., 0]) + 1j * (y0 + (y1 - y0) * u[..., 1])


@dataclass(frozen=True)
class PoincareDisc(_HalfPlaneChart):
    """The unit disc, stored in the Cayley chart ``w = i (1 + z) / (1 - z)``.

    Boundary labels are unimodular complex numbers. Label ``1`` sits at the
    chart's infinity and ``-1`` at the chart's origin.
    """

    kind: str = field(init=False, default="PoincareDisc")

    @staticmethod
    def disc_to_chart(z: complex) -> complex:
        return 1j * (1.0 + z) / (1.0 - z)

    @staticmethod
    def chart_to_disc(w: complex) -> complex:
        return (w - 1j) / (w + 1j)

    def check(self, p):
        if not isinstance(p, complex):
            p = complex(p)
        if not (math.isfinite(p.real) and math.isfinite(p.imag)) or not p.imag > 0.0:
            raise DomainError(f"disc point (chart form) must have Im > 0, got {p!r}")
        return p

    def point(self, x, y=None):
        z = complex(x) if y is None else complex(float(x), float(y))
        if not abs(z) < 1.0:
            raise DomainError(f"disc point must satisfy |z| < 1, got {z!r}")
        return self.check(self.disc_to_chart(z))

    def from_chart(self, w):
        return w

    def coords(self, p):
        z = self.chart_to_disc(p)
        return (z.real, z.imag)

    def disc_value(self, p) -> complex:
        return self.chart_to_disc(p)

    def _chart_label(self, label):
        if abs(label - 1.0) < 1e-15:
            return INF
        return (1j * (1.0 + label) / (1.0 - label)).real

    def _user_label(self, chart_label):
        if _is_inf_label(chart_label):
            return complex(1.0, 0.0)
        z = (chart_label - 1j) / (chart_label + 1j)
        return z / abs(z)

    def canonical_labels(self):
        return [complex(1.0, 0.0), complex(-1.0, 0.0), complex(0.0, 1.0), complex(0.0, -1.0)]

    def normalize_label(self, label):
        if not isinstance(label, complex):
            label = parse_label(label)
        label = complex(label)
        if abs(abs(label) - 1.0) > 1e-9:
            raise InvalidLabel(f"disc labels are unimodular complex numbers, got {label!r}")
        return label / abs(label)

    def labels_equal(self, a, b, tol=1e-6):
        return abs(self.normalize_label(a) - self.normalize_label(b)) <= tol

    def default_window(self):
        return {"radius": 0.9}

    def default_seeds(self):
        return [self.point(z) for z in (0.0, 0.5, -0.3 + 0.4j, 0.8j, -0.9, 0.6 - 0.6j)]

    def points_from_unit(self, u, window):
        r = float(window["radius"])
        if not 0.0 < r < 1.0:
            raise ValueError("disc window radius must lie in (0, 1)")
        u = np.asarray(u)
        z = r * np.sqrt(u[..., 0]) * np.exp(2j * np.pi * u[..., 1])
        return 1j * (1.0 + z) / (1.0 - z)


@dataclass(frozen=True)
class SlitPlane(_HalfPlaneChart):
    """The slit plane ``C minus (-inf, 0]`` with its hyperbolic metric.

    The chart ``w = i * sqrt(z)`` (principal root) is an isometry onto the
    upper half-plane; labels are given in chart terms, so ``inf`` is the
    common endpoint of ``z -> +inf`` and ``z -> -inf`` along either edge.
    """

    kind: str = field(init=False, default="SlitPlane")

    def check(self, p):
        if not isinstance(p, complex):
            p = complex(p)
        if not (math.isfinite(p.real) and math.isfinite(p.imag)):
            raise DomainError(f"slit-plane point must be finite, got {p!r}")
        if p.imag == 0.0 and p.real <= 0.0:
            raise DomainError(f"point {p!r} lies on the slit (-inf, 0]")
        return p

    def point(self, x, y=None):
        return self.check(complex(x) if y is None else complex(float(x), float(y)))

    def to_chart(self, p):
        return 1j * cmath.sqrt(p)

    def to_chart_array(self, P):
        return 1j * np.sqrt(np.asarray(P, dtype=complex))

    def from_chart(self, w):
        return -(w * w)

    def coords(self, p):
        return (p.real, p.imag)

    def canonical_labels(self):
        return [INF, 0.0, 1.0, -1.0]

    normalize_label = UpperHalfPlane.normalize_label

    def default_window(self):
        return {"x": [-5.0, 5.0], "y": [-5.0, 5.0]}

    def default_seeds(self):
        return [1.0 + 0j, 1j, -1j, -3.0 + 0.5j, 10.0 + 0j, -2.0 - 2j]

    def points_from_unit(self, u, window):
        x0, x1 = _window_range(window, "x")
        y0, y1 = _window_range(window, "y")
        u = np.asarray(u)
        z = (x0 + (x1 - x0) * u[..., 0]) + 1j * (y0 + (y1 - y0) * u[..., 1])
        # the slit has measure zero; nudge exact hits off it
        on_slit = (z.imag == 0.0) & (z.real <= 0.0)
        return np.where(on_slit, z + 1e-12j, z)


# ---------------------------------------------------------------------------
# lines


@dataclass(frozen=True)
class RealLine(ModelSpace):
    """The real line with ``|x - y|``; labels are ``+inf`` and ``-inf``."""

    kind: str = field(init=False, default="RealLine")
    dim: int = field(init=False, default=1)

    def check(self, p):
        p = float(p)
        if not math.isfinite(p):
            raise DomainError(f"real-line point must be finite, got {p!r}")
        return p

    def point(self, x):
        return self.check(x)

    def coords(self, p):
        return (p,)

    def to_vector(self, p):
        return np.array([p])

    def from_vector(self, v):
        return self.check(v[0])

    def distance(self, p, q):
        return abs(p - q)

    def distance_array(self, P, Q):
        return np.abs(np.asarray(P) - np.asarray(Q))

    def _geodesic_point(self, p, q, s):
        return p + s * (q - p)

    def canonical_labels(self):
        return [INF, -INF]

    def normalize_label(self, label):
        label = parse_label(label) if not isinstance(label, float) else label
        if not _is_inf_label(label):
            raise InvalidLabel(f"real-line labels are +inf or -inf, got {label!r}")
        return label

    def _ray_point(self, base, label, t):
        return base + t if label > 0 else base - t

    def busemann_exact(self, anchor, p, x):
        return p - x if anchor.label > 0 else x - p

    def nearest_label(self, p):
        return INF if p >= 0 else -INF

    def limit_label(self, points):
        return INF if points[-1] >= points[0] else -INF

    def default_window(self):
        return {"lo": -10.0, "hi": 10.0}

    def default_seeds(self):
        return [0.0, 1.0, -5.0, 20.0]

    def points_from_unit(self, u, window):
        lo, hi = _window_range(window, "range") if "range" in window else (float(window["lo"]), float(window["hi"]))
        return lo + (hi - lo) * np.asarray(u)[..., 0]

    def unpack(self, arr):
        return [float(v) for v in np.asarray(arr).ravel()]


@dataclass(frozen=True)
class LogLine(ModelSpace):
    """Positive reals with ``|ln(x / y)|``; labels are ``0.0`` and ``+inf``."""

    kind: str = field(init=False, default="LogLine")
    dim: int = field(init=False, default=1)

    def check(self, p):
        p = float(p)
        if not (math.isfinite(p) and p > 0.0):
            raise DomainError(f"log-line point must be a finite positive real, got {p!r}")
        return p

    def point(self, x):
        return self.check(x)

    def coords(self, p):
        return (p,)

    def to_vector(self, p):
        return np.array([p])

    def from_vector(self, v):
        return self.check(v[0])

    def distance(self, p, q):
        return abs(math.log(p) - math.log(q))

    def distance_array(self, P, Q):
        return np.abs(np.log(np.asarray(P)) - np.log(np.asarray(Q)))

    def _geodesic_point(self, p, q, s):
        return math.exp(math.log(p) + s * (math.log(q) - math.log(p)))

    def canonical_labels(self):
        return [INF, 0.0]

    def normalize_label(self, label):
        label = parse_label(label) if not isinstance(label, float) else label
        if label == INF or label == 0.0:
            return float(label)
        raise InvalidLabel(f"log-line labels are 0 or +inf, got {label!r}")

    def _ray_point(self, base, label, t):
        return base * math.exp(t) if label == INF else base * math.exp(-t)

    def busemann_exact(self, anchor, p, x):
        diff = math.log(p) - math.log(x)
        return diff if anchor.label == INF else -diff

    def nearest_label(self, p):
        return INF if p >= 1.0 else 0.0

    def limit_label(self, points):
        return INF if points[-1] >= points[0] else 0.0

    def default_window(self):
        return {"lo": 0.01, "hi": 100.0}

    def default_seeds(self):
        return [1.0, 0.5, 3.0, 10.0]

    def points_from_unit(self, u, window):
        lo, hi = float(window["lo"]), float(window["hi"])
        if not lo > 0.0:
            raise ValueError("log-line window needs lo > 0")
        return lo + (hi - lo) * np.asarray(u)[..., 0]

    def unpack(self, arr):
        return [float(v) for v in np.asarray(arr).ravel()]


# ---------------------------------------------------------------------------
# cylinders R x S^1


@dataclass(frozen=True)
class _Cylinder(ModelSpace):
    deck_truncation: int = 8

    def check(self, p):
        x, th = float(p[0]), float(p[1])
        if not (math.isfinite(x) and math.isfinite(th)):
            raise DomainError(f"cylinder point must be finite, got {p!r}")
        return (x, reduce_angle(th))

    def point(self, x, theta):
        return self.check((x, theta))

    def coords(self, p):
        return (p[0], p[1])

    def to_vector(self, p):
        return np.array([p[0], p[1]])

    def from_vector(self, v):
        return self.check((v[0], v[1]))

    def vector_difference(self, u, v):
        return np.array([u[0] - v[0], signed_angle(u[1] - v[1])])

    def _geodesic_point(self, p, q, s):
        dth = signed_angle(q[1] - p[1])
        return (p[0] + s * (q[0] - p[0]), reduce_angle(p[1] + s * dth))

    def canonical_labels(self):
        return [INF, -INF]

    normalize_label = RealLine.normalize_label

    def _ray_point(self, base, label, t):
        return (base[0] + t if label > 0 else base[0] - t, base[1])

    def nearest_label(self, p):
        return INF if p[0] >= 0 else -INF

    def limit_label(self, points):
        return INF if points[-1][0] >= points[0][0] else -INF

    def default_window(self):
        return {"x": [-10.0, 10.0]}

    def default_seeds(self):
        return [(0.0, 0.0), (1.0, 2.0), (-5.0, 4.0), (12.0, 1.0)]

    def points_from_unit(self, u, window):
        lo, hi = _window_range(window, "x")
        u = np.asarray(u)
        return np.stack([lo + (hi - lo) * u[..., 0], TWO_PI * u[..., 1]], axis=-1)

    def unpack(self, arr):
        arr = np.asarray(arr).reshape(-1, 2)
        return [(float(a), float(b)) for a, b in arr]


@dataclass(frozen=True)
class L1Cylinder(_Cylinder):
    """``R x S^1`` with the sum metric ``|x1 - x2| + arc(theta1, theta2)``.

    Busemann functions toward an end depend on the angle of the ray, so the
    horofunction compactification is strictly larger than the Gromov one.
    """

    kind: str = field(init=False, default="L1Cylinder")
    compactification_equivalent: bool = field(init=False, default=False)

    def distance(self, p, q):
        return abs(p[0] - q[0]) + circle_distance(p[1], q[1])

    def distance_array(self, P, Q):
        P, Q = np.asarray(P), np.asarray(Q)
        return np.abs(P[..., 0] - Q[..., 0]) + circle_distance_array(P[..., 1], Q[..., 1])

    def busemann_exact(self, anchor, p, x):
        th0 = anchor.basepoint[1]
        sign = 1.0 if anchor.label < 0 else -1.0
        return sign * (x[0] - p[0]) + circle_distance(x[1], th0) - circle_distance(p[1], th0)


@dataclass(frozen=True)
class FlatCylinder(_Cylinder):
    """``R x S^1`` with the flat product metric, via deck translates ``|k| <= K``."""

    kind: str = field(init=False, default="FlatCylinder")

    @property
    def params(self):
        return {"deck_truncation": self.deck_truncation}

    def distance(self, p, q):
        dx = abs(p[0] - q[0])
        base = circle_distance(p[1], q[1])
        best = INF
        for k in range(-self.deck_truncation, self.deck_truncation + 1):
            best = min(best, math.hypot(dx, base + TWO_PI * k))
        return best

    def distance_array(self, P, Q):
        P, Q = np.asarray(P), np.asarray(Q)
        dx = P[..., 0] - Q[..., 0]
        base = np.fmod(P[..., 1] - Q[..., 1] + np.pi, TWO_PI)
        base = np.where(base < 0, base + TWO_PI, base) - np.pi
        ks = np.arange(-self.deck_truncation, self.deck_truncation + 1)
        d = np.hypot(dx[..., None], base[..., None] + TWO_PI * ks)
        return d.min(axis=-1)

    def busemann_exact(self, anchor, p, x):
        return p[0] - x[0] if anchor.label > 0 else x[0] - p[0]


# ---------------------------------------------------------------------------
# hyperbolic punctured cylinder


def _log_abs_2sinh(x: float) -> float:
    """``log |2 sinh(x)|`` without overflow."""
    ax = abs(x)
    if ax == 0.0:
        return -INF
    return ax + math.log(-math.expm1(-2.0 * ax))


def _log_domain_uhp_distance(dalpha: float, s1: float, s2: float) -> float:
    """Half-plane distance between ``(a, e^s1)`` and ``(a + dalpha, e^s2)``."""
    sm = 0.5 * (s1 + s2)
    t1 = math.log(abs(dalpha)) - sm if dalpha != 0.0 else -INF
    t2 = _log_abs_2sinh(0.5 * (s1 - s2))
    if t1 == -INF and t2 == -INF:
        return 0.0
    # log of |w1 - w2| / (2 sqrt(y1 y2))
    big = max(t1, t2)
    small = min(t1, t2)
    log_u = big + 0.5 * math.log1p(math.exp(2.0 * (small - big))) - math.log(2.0)
    if log_u > 0.0:
        return 2.0 * (log_u + math.log1p(math.sqrt(1.0 + math.exp(-2.0 * log_u))))
    return 2.0 * math.asinh(math.exp(log_u))


@dataclass(frozen=True)
class HyperbolicPuncturedCylinder(ModelSpace):
    """``(R x (0, inf), (da^2 + dt^2) / t^2)`` modulo ``a -> a + 2 pi``.

    Points are ``(alpha, s)`` with height ``t = exp(s)``; ``point(alpha, t)``
    takes the height itself and ``point_log`` the logarithm. Labels are the
    cusp ``+inf`` (``t -> inf``) or an angle in [0, 2pi) on the ``t -> 0`` end.
    """

    kind: str = field(init=False, default="HyperbolicPuncturedCylinder")
    deck_truncation: int = 8

    @property
    def params(self):
        return {"deck_truncation": self.deck_truncation}

    def check(self, p):
        a, s = float(p[0]), float(p[1])
        if not (math.isfinite(a) and math.isfinite(s)):
            raise DomainError(f"punctured-cylinder point must be finite, got {p!r}")
        return (reduce_angle(a), s)

    def point(self, alpha, t):
        t = float(t)
        if not t > 0.0:
            raise DomainError(f"height must be positive, got {t!r}")
        return self.check((alpha, math.log(t)))

    def point_log(self, alpha, s):
        return self.check((alpha, s))

    def coords(self, p):
        return (p[0], math.exp(p[1]))

    def to_vector(self, p):
        return np.array([p[0], p[1]])

    def from_vector(self, v):
        return self.check((v[0], v[1]))

    def vector_difference(self, u, v):
        return np.array([signed_angle(u[0] - v[0]), u[1] - v[1]])

    def _deck_offsets(self):
        ks = sorted(range(-self.deck_truncation, self.deck_truncation + 1), key=lambda k: (abs(k), k < 0))
        return ks

    def _best_offset(self, p, q):
        base = signed_angle(q[0] - p[0])
        best, best_k = INF, 0
        for k in self._deck_offsets():
            d = _log_domain_uhp_distance(base + TWO_PI * k, p[1], q[1])
            if d < best - 1e-15:
                best, best_k = d, k
        return best, base + TWO_PI * best_k

    def distance(self, p, q):
        # a fixed argument order makes the value exactly symmetric
        if q < p:
            p, q = q, p
        return self._best_offset(p, q)[0]

    def distance_array(self, P, Q):
        P, Q = np.asarray(P), np.asarray(Q)
        base = np.fmod(Q[..., 0] - P[..., 0] + np.pi, TWO_PI)
        base = np.where(base < 0, base + TWO_PI, base) - np.pi
        ks = np.arange(-self.deck_truncation, self.deck_truncation + 1)
        da = base[..., None] + TWO_PI * ks
        y1 = np.exp(P[..., 1])[..., None]
        y2 = np.exp(Q[..., 1])[..., None]
        num = np.hypot(da, y1 - y2)
        d = 2.0 * np.arcsinh(num / (2.0 * np.sqrt(y1) * np.sqrt(y2)))
        return d.min(axis=-1)

    def _geodesic_point(self, p, q, s):
        _, dalpha = self._best_offset(p, q)
        # work in the half-plane normalized so that p sits at i
        scale = math.exp(p[1])
        w2 = complex(dalpha / scale, math.exp(q[1] - p[1]))
        w = uhp_geodesic_point(1j, w2, s)
        return self.check((p[0] + w.real * scale, p[1] + math.log(w.imag)))

    def canonical_labels(self):
        return [INF, 0.0, math.pi / 2, math.pi, 3 * math.pi / 2]

    def normalize_label(self, label):
        label = parse_label(label) if not isinstance(label, float) else label
        if isinstance(label, complex):
            raise InvalidLabel(f"punctured-cylinder labels are +inf or an angle, got {label!r}")
        if label == INF:
            return INF
        if not math.isfinite(label):
            raise InvalidLabel("punctured-cylinder labels are +inf or a finite angle")
        return reduce_angle(label)

    def labels_equal(self, a, b, tol=1e-6):
        a, b = self.normalize_label(a), self.normalize_label(b)
        if a == INF or b == INF:
            return a == b
        return circle_distance(a, b) <= tol

    def _ray_point(self, base, label, t):
        if label == INF:
            return (base[0], base[1] + t)
        scale = math.exp(base[1])
        r = signed_angle(label - base[0]) / scale
        w = uhp_ray_point(1j, r, t)
        return self.check((base[0] + w.real * scale, base[1] + math.log(w.imag)))

    def busemann_exact(self, anchor, p, x):
        if anchor.label == INF:
            return p[1] - x[1]
        a0 = anchor.label
        # log of Im/|w - r|^2 with the minimizing translate of the label

        def log_height(pt):
            da = signed_angle(pt[0] - a0)
            return pt[1] - math.log(da * da + math.exp(2.0 * pt[1]))

        return log_height(p) - log_height(x)

    def nearest_label(self, p):
        return INF if p[1] >= 0.0 else p[0]

    def limit_label(self, points):
        if points[-1][1] >= points[0][1]:
            return INF
        return points[-1][0]

    def default_window(self):
        return {"alpha": [0.0, TWO_PI], "t": [0.1, 10.0]}

    def default_seeds(self):
        return [self.point(0.0, 1.0), self.point(1.0, 0.5), self.point(3.0, 4.0)]

    def points_from_unit(self, u, window):
        a0, a1 = _window_range(window, "alpha")
        t0, t1 = _window_range(window, "t")
        if t0 <= 0.0:
            raise ValueError("punctured-cylinder window needs t > 0")
        u = np.asarray(u)
        alpha = np.fmod(a0 + (a1 - a0) * u[..., 0], TWO_PI)
        t = t0 + (t1 - t0) * u[..., 1]
        return np.stack([alpha, np.log(t)], axis=-1)

    def unpack(self, arr):
        arr = np.asarray(arr).reshape(-1, 2)
        return [(float(a), float(b)) for a, b in arr]


# ---------------------------------------------------------------------------
# construction by name

SPACE_KINDS: dict[str, Callable[..., ModelSpace]] = {
    "PoincareDisc": PoincareDisc,
    "UpperHalfPlane": UpperHalfPlane,
    "SlitPlane": SlitPlane,
    "LogLine": LogLine,
    "RealLine": RealLine,
    "L1Cylinder": L1Cylinder,
    "FlatCylinder": FlatCylinder,
    "HyperbolicPuncturedCylinder": HyperbolicPuncturedCylinder,
}


def make_space(kind: str, params: dict | None = None) -> ModelSpace:
    try:
        factory = SPACE_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown space kind {kind!r}") from None
    return factory(**(params or {}))
