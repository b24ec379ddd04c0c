"""Non-expanding self-maps of the model spaces.

A :class:`MapHandle` bundles the forward map, an optional exact inverse and the
boundary labels the map is known to fix. The ``MAP_KINDS`` table builds the
shipped examples by name so scenarios can refer to them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spaces import (
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    ModelSpace,
    PoincareDisc,
    RealLine,
    SlitPlane,
    UpperHalfPlane,
    reduce_angle,
)


@dataclass(frozen=True, eq=False)
class MapHandle:
    space: ModelSpace
    apply: Callable
    inverse: Callable | None = None
    declared_brfps: tuple = ()
    name: str = "map"
    params: dict = field(default_factory=dict)
    is_isometry: bool = False

    def __call__(self, x):
        return self.apply(x)

    def iterate(self, x, n: int):
        for _ in range(n):
            x = self.apply(x)
        return x

    def power(self, k: int) -> "MapHandle":
        if k < 1:
            raise ValueError("power must be a positive integer")
        if k == 1:
            return self
        f, g = self.apply, self.inverse

        def fk(x):
            for _ in range(k):
                x = f(x)
            return x

        gk = None
        if g is not None:

            def gk(x):
                for _ in range(k):
                    x = g(x)
                return x

        return MapHandle(
            space=self.space,
            apply=fk,
            inverse=gk,
            declared_brfps=self.declared_brfps,
            name=f"{self.name}^{k}",
            params=dict(self.params, power=k),
            is_isometry=self.is_isometry,
        )

    def describe(self) -> dict:
        return {"kind": self.name, "params": dict(self.params)}


# ---------------------------------------------------------------------------
# helpers for Möbius maps


def _real_mobius(m):
    a, b, c, d = (float(v) for v in m)

    def f(w):
        return (a * w + b) / (c * w + d)

    return f


def _real_inverse(m):
    a, b, c, d = m
    return (d, -b, -c, a)


def disc_matrix_to_chart(M) -> tuple:
    """Conjugate a disc Möbius matrix into a real matrix on the Cayley chart."""
    M = np.asarray(M, dtype=complex)
    C = np.array([[1j, 1j], [-1.0, 1.0]])
    Cinv = np.array([[1.0, -1j], [1.0, 1j]])
    N = C @ M @ Cinv
    N = N / np.sqrt(np.linalg.det(N))
    # an automorphism becomes real up to one global phase
    k = int(np.argmax(np.abs(N)))
    phase = N.flat[k] / abs(N.flat[k])
    N = N / phase
    if np.max(np.abs(N.imag)) > 1e-9 * max(1.0, np.max(np.abs(N.real))):
        raise ValueError("matrix does not preserve the disc")
    return tuple(float(v) for v in N.real.ravel())


def _chart_mobius_handle(space, matrix, name, params, declared, isometry=True):
    f = _real_mobius(matrix)
    finv = _real_mobius(_real_inverse(matrix))

    def apply(w):
        return space.check(f(w))

    def inverse(w):
        return space.check(finv(w))

    return MapHandle(space, apply, inverse, tuple(declared), name, params, isometry)


# ---------------------------------------------------------------------------
# catalog


def identity(space: ModelSpace) -> MapHandle:
    return MapHandle(space, lambda x: x, lambda x: x, (), "identity", {}, True)


def disc_automorphism(space: PoincareDisc, a: float = 0.5) -> MapHandle:
    """Hyperbolic automorphism ``z -> (z + a) / (1 + a z)`` with axis (-1, 1).

    The attracting fixed point is 1 and the repelling one is -1; in the chart
    the map is the dilation ``w -> (1 + a) / (1 - a) * w``.
    """
    if not isinstance(space, PoincareDisc):
        raise TypeError("disc_automorphism acts on the PoincareDisc")
    if not -1.0 < a < 1.0:
        raise ValueError("automorphism parameter must lie in (-1, 1)")
    m = disc_matrix_to_chart([[1.0, a], [a, 1.0]])
    return _chart_mobius_handle(space, m, "disc_automorphism", {"a": a}, (1 + 0j, -1 + 0j))


def disc_rotation(space: PoincareDisc, theta: float = 1.0) -> MapHandle:
    """Elliptic isometry ``z -> exp(i theta) z``."""
    if not isinstance(space, PoincareDisc):
        raise TypeError("disc_rotation acts on the PoincareDisc")
    e = cmath.exp(0.5j * theta)
    m = disc_matrix_to_chart([[e, 0.0], [0.0, 1.0 / e]])
    return _chart_mobius_handle(space, m, "disc_rotation", {"theta": theta}, ())


def disc_power(space: PoincareDisc, k: int = 2) -> MapHandle:
    """``z -> z**k``: non-expanding by Schwarz-Pick, not injective."""
    if not isinstance(space, PoincareDisc):
        raise TypeError("disc_power acts on the PoincareDisc")

    def apply(w):
        z = space.chart_to_disc(w)
        return space.check(space.disc_to_chart(z**k))

    return MapHandle(space, apply, None, (), "disc_power", {"k": k}, False)


def halfplane_mobius(space: UpperHalfPlane, a=1.0, b=0.0, c=0.0, d=1.0) -> MapHandle:
    """Real Möbius map ``z -> (a z + b) / (c z + d)`` with ``ad - bc > 0``."""
    det = a * d - b * c
    if not det > 0:
        raise ValueError("half-plane Möbius map needs ad - bc > 0")
    s = math.sqrt(det)
    m = (a / s, b / s, c / s, d / s)
    return _chart_mobius_handle(space, m, "halfplane_mobius", {"a": a, "b": b, "c": c, "d": d}, ())


def halfplane_translation(space: UpperHalfPlane, shift: float = 1.0) -> MapHandle:
    """Parabolic isometry ``z -> z + shift`` fixing infinity."""
    return MapHandle(
        space,
        lambda z: z + shift,
        lambda z: z - shift,
        (math.inf,),
        "halfplane_translation",
        {"shift": shift},
        True,
    )


def halfplane_sqrt_map(space: UpperHalfPlane) -> MapHandle:
    """``z -> sqrt(z**2 - 1)`` on the branch with positive imaginary part.

    Parabolic with Denjoy-Wolff point at infinity. No inverse is declared;
    backward orbits come from the preimage solver.
    """
    if not isinstance(space, UpperHalfPlane):
        raise TypeError("the square-root map acts on the UpperHalfPlane")

    def apply(z):
        r = cmath.sqrt(z * z - 1.0)
        if r.imag < 0.0:
            r = -r
        return space.check(r)

    return MapHandle(space, apply, None, (math.inf,), "halfplane_sqrt_map", {}, False)


def clamp_map(space: UpperHalfPlane) -> MapHandle:
    """``x + iy -> [x - 1]_+ - [-x - 1]_+ + iy``: pulls the real part toward [-1, 1], then to 0."""
    if not isinstance(space, UpperHalfPlane):
        raise TypeError("the clamp map acts on the UpperHalfPlane")

    def apply(z):
        x = z.real
        nx = max(x - 1.0, 0.0) - max(-x - 1.0, 0.0)
        return space.check(complex(nx, z.imag))

    return MapHandle(space, apply, None, (), "clamp_map", {}, False)


def cylinder_shift(space, shift: float = 1.0, theta: float = 0.0) -> MapHandle:
    """``(x, angle) -> (x + shift, angle + theta)``: an isometry of either cylinder."""
    if not isinstance(space, (L1Cylinder, FlatCylinder)):
        raise TypeError("cylinder_shift acts on L1Cylinder or FlatCylinder")

    def apply(p):
        return (p[0] + shift, reduce_angle(p[1] + theta))

    def inverse(p):
        return (p[0] - shift, reduce_angle(p[1] - theta))

    return MapHandle(
        space, apply, inverse, (math.inf, -math.inf), "cylinder_shift", {"shift": shift, "theta": theta}, True
    )


def line_shift(space, shift: float = 1.0) -> MapHandle:
    """``t -> t + shift`` on the real line or the log-line."""
    if isinstance(space, RealLine):
        return MapHandle(
            space, lambda t: t + shift, lambda t: t - shift, (math.inf, -math.inf), "line_shift", {"shift": shift}, True
        )
    if isinstance(space, LogLine):
        if shift < 0:
            raise ValueError("a negative shift does not map the log-line into itself")

        def inverse(t):
            return space.check(t - shift)

        return MapHandle(
            space, lambda t: t + shift, inverse, (math.inf, 0.0), "line_shift", {"shift": shift}, shift == 0
        )
    raise TypeError("line_shift acts on RealLine or LogLine")


def slit_shift(space: SlitPlane, shift: float = 1.0) -> MapHandle:
    """``z -> z + shift`` (shift >= 0) on the slit plane."""
    if not isinstance(space, SlitPlane):
        raise TypeError("slit_shift acts on the SlitPlane")
    if shift < 0:
        raise ValueError("slit_shift needs a non-negative shift")

    def apply(z):
        return space.check(z + shift)

    def inverse(z):
        return space.check(z - shift)

    return MapHandle(space, apply, inverse, (math.inf,), "slit_shift", {"shift": shift}, False)


def punctured_rotation_scaling(
    space: HyperbolicPuncturedCylinder, theta: float = 1.0, factor: float = 2.0
) -> MapHandle:
    """``(alpha, t) -> (alpha + theta, factor * t)`` with ``factor >= 1``."""
    if not isinstance(space, HyperbolicPuncturedCylinder):
        raise TypeError("punctured_rotation_scaling acts on the HyperbolicPuncturedCylinder")
    if not factor >= 1.0:
        raise ValueError("factor must be at least 1 for the map to be non-expanding")
    ls = math.log(factor)

    def apply(p):
        return (reduce_angle(p[0] + theta), p[1] + ls)

    def inverse(p):
        return (reduce_angle(p[0] - theta), p[1] - ls)

    return MapHandle(
        space,
        apply,
        inverse,
        (math.inf,),
        "punctured_rotation_scaling",
        {"theta": theta, "factor": factor},
        factor == 1.0,
    )


MAP_KINDS: dict[str, Callable[..., MapHandle]] = {
    "identity": identity,
    "disc_automorphism": disc_automorphism,
    "disc_rotation": disc_rotation,
    "disc_power": disc_power,
    "halfplane_mobius": halfplane_mobius,
    "halfplane_translation": halfplane_translation,
    "halfplane_sqrt_map": halfplane_sqrt_map,
    "clamp_map": clamp_map,
    "cylinder_shift": cylinder_shift,
    "line_shift": line_shift,
    "slit_shift": slit_shift,
    "punctured_rotation_scaling": punctured_rotation_scaling,
}


def make_map(space: ModelSpace, kind: str, params: dict | None = None) -> MapHandle:
    try:
        factory = MAP_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown map kind {kind!r}") from None
    try:
        return factory(space, **(params or {}))
    except TypeError as exc:
        raise ValueError(f"map {kind!r} cannot act on {space.kind} with params {params!r}: {exc}") from None

