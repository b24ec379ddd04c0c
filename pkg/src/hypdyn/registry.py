"""Registry of worked examples with expected values and tolerances.

Each entry computes a dictionary of named quantities and compares them with
its expectations. ``source`` records where an expected value comes from:
``published-example`` for values stated with a worked example,
``closed-form`` for values derived from an exact formula, ``trivial`` for
sanity checks.
"""

from __future__ import annotations

import cmath
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backward, dilation, forward, metric
from .horofunction import horofunction as make_horofunction, verify_julia
from .maps import (
    clamp_map,
    cylinder_shift,
    disc_automorphism,
    halfplane_sqrt_map,
    line_shift,
    punctured_rotation_scaling,
    slit_shift,
)
from .spaces import (
    INF,
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    PoincareDisc,
    SlitPlane,
    UpperHalfPlane,
    label_to_json,
)

LOG3 = math.log(3.0)


@dataclass(frozen=True)
class Expectation:
    name: str
    expected: object
    comparator: str = "eq"
    tol: float = 0.0
    source: str = "closed-form"

    def check(self, computed) -> bool:
        if computed is None:
            return False
        if isinstance(self.expected, (str, bool)):
            return computed == self.expected
        c, e = float(computed), float(self.expected)
        if not math.isfinite(c):
            return False
        if self.comparator == "eq":
            return abs(c - e) <= self.tol
        if self.comparator == "ge":
            return c >= e - self.tol
        if self.comparator == "le":
            return c <= e + self.tol
        raise ValueError(f"unknown comparator {self.comparator!r}")


@dataclass(frozen=True)
class ExampleEntry:
    id: str
    title: str
    tags: tuple
    compute: Callable[[], dict]
    expectations: tuple
    scenario: dict = field(default_factory=dict)


@dataclass
class CheckOutcome:
    name: str
    expected: object
    computed: object
    comparator: str
    tol: float
    source: str
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "expected": self.expected,
            "computed": self.computed,
            "comparator": self.comparator,
            "tol": self.tol,
            "source": self.source,
            "pass": self.passed,
        }


@dataclass
class EntryResult:
    id: str
    checks: list
    values: dict
    seconds: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "id": self.id,
            "pass": self.passed,
            "error": self.error,
            "checks": [c.to_dict() for c in self.checks],
            "values": self.values,
        }


# ---------------------------------------------------------------------------
# example computations


def _l1_cylinder(theta=math.pi / 2):
    space = L1Cylinder()
    f = cylinder_shift(space, 1.0, theta)
    p = space.point(0.0, 0.0)
    minus = dilation.detect_brfp(f, space.ray_toward(p, -INF))
    plus = dilation.detect_brfp(f, space.ray_toward(p, INF))
    return {
        "one_step_dilation_minus_inf": minus.log_dilation,
        "stable_minus_inf": minus.stable,
        "stable_plus_inf": plus.stable,
        "classification_minus_inf": minus.classification,
        "classification_plus_inf": plus.classification,
    }


def _flat_cylinder():
    space = FlatCylinder()
    f = cylinder_shift(space, 1.0, math.pi)
    rng = np.random.default_rng(0)
    pts = space.sample(rng, 100)
    disp = [space.distance(x, f(x)) for x in pts]
    target = math.hypot(1.0, math.pi)
    rec = dilation.detect_brfp(f, space.ray_toward(space.point(0.0, 0.0), INF))
    return {
        "max_displacement_error": max(abs(d - target) for d in disp),
        "displacement": float(np.mean(disp)),
        "dilation_plus_inf": rec.log_dilation,
        "displacement_minus_abs_log_dilation": float(np.mean(disp)) - abs(rec.log_dilation),
    }


def _disc_automorphism():
    space = PoincareDisc()
    f = disc_automorphism(space, 0.5)
    p = space.point(0.0)
    at_one = dilation.detect_brfp(f, space.ray_toward(p, 1 + 0j), n_max=16)
    at_minus = dilation.detect_brfp(f, space.ray_toward(p, -1 + 0j), n_max=16)
    cls = forward.classify(f)
    return {
        "dilation_at_1": at_one.log_dilation,
        "dilation_at_minus_1": at_minus.log_dilation,
        "divergence_rate": cls.c_estimate,
        "stable_at_minus_1": at_minus.stable,
        "minus_stable_at_1": -at_one.stable,
        "power_rule_deviation": max(
            at_one.dilation_table.power_rule_deviation(16), at_minus.dilation_table.power_rule_deviation(16)
        ),
        "class": cls.label,
    }


def _sqrt_orbit(N=1000):
    space = UpperHalfPlane()
    f = halfplane_sqrt_map(space)
    return space, f, backward.backward_orbit_via_solver(f, cmath.sqrt(1j), N)


def _poggi_corradini():
    space, f, orbit = _sqrt_orbit()
    err = max(abs(orbit.points[n] - cmath.sqrt(n + 1j)) for n in range(401))
    prof = backward.step_profile(orbit)
    limit = backward.classify_backward_limit(orbit, f, profile=prof)
    im = [z.imag for z in orbit.points]
    return {
        "max_error_n_le_400": err,
        "max_residual": orbit.max_residual,
        "b": prof.b_estimate,
        "rate_at_200": backward.backward_divergence_rate(orbit, 200),
        "imag_decreasing": all(b < a for a, b in zip(im, im[1:])),
        "imag_at_400": im[400],
        "backward_limit": str(limit),
    }


def _logline():
    space = LogLine()
    orbit = backward.backward_orbit_via_inverse(line_shift(space, 1.0), 10.0, 100)
    return {"escaped_at": orbit.escaped_at, "length": len(orbit.points)}


def _slit_plane():
    space = SlitPlane()
    f = slit_shift(space, 1.0)
    xs = backward.backward_orbit_via_inverse(f, 1j, 100)
    ys = backward.backward_orbit_via_inverse(f, -1j, 100)
    d = [space.distance(x, y) for x, y in zip(xs.points, ys.points)]
    return {
        "companion_distance_at_100": d[100],
        "companion_distance_increasing": all(b > a for a, b in zip(d, d[1:])),
        "limit_label": label_to_json(space.limit_label(xs.points)),
    }


def clamp_orbit(N=1000):
    space = UpperHalfPlane()
    f = clamp_map(space)
    return f, backward.BackwardOrbit.from_points(f, [complex(n, 1.0) for n in range(N + 1)], "given")


def _clamp():
    f, orbit = clamp_orbit()
    prof = backward.step_profile(orbit)
    battery = backward.equivalence_battery(orbit, f, profile=prof)
    cls = forward.classify(f)
    limit = backward.classify_backward_limit(orbit, f, classification=cls, profile=prof)
    return {
        "max_residual": orbit.max_residual,
        "b": prof.b_estimate,
        "battery_true_count": sum(battery.verdicts.values()),
        "battery_unanimous": battery.unanimous,
        "class": cls.label,
        "limit_label": label_to_json(battery.limit_label),
        "backward_limit": limit.kind,
    }


def _punctured():
    space = HyperbolicPuncturedCylinder()
    f = punctured_rotation_scaling(space, 1.0, 2.0)
    orbit = backward.backward_orbit_via_inverse(f, space.point(0.0, 1.0), 2000)
    probe = backward.unbounded_step_probe(f, orbit)
    still = punctured_rotation_scaling(space, 0.0, 2.0)
    probe0 = backward.unbounded_step_probe(still, backward.backward_orbit_via_inverse(still, space.point(0.0, 1.0), 200))
    return {
        "step_at_20": probe["steps"][19],
        "cells_occupied": probe["cells_occupied"],
        "all_cells_hit_at": probe["all_cells_hit_at"],
        "no_rotation_bounded_angles": probe0["bounded_angular_set"],
    }


def _synth_disc():
    space = PoincareDisc()
    f = disc_automorphism(space, 0.5)
    rec = dilation.detect_brfp(f, space.ray_toward(space.point(0.0), -1 + 0j))
    res = backward.synthesize_backward_orbit(f, rec, depth=50)
    return {
        "sup_to_inverse_orbit": res.sup_to_inverse_orbit,
        "b": res.b,
        "stable": res.stable,
        "max_residual": res.orbit.max_residual,
    }


def _synth_l1():
    space = L1Cylinder()
    f = cylinder_shift(space, 1.0, math.pi / 2)
    rec = dilation.detect_brfp(f, space.ray_toward(space.point(0.0, 0.0), -INF))
    res = backward.synthesize_backward_orbit(f, rec, depth=50)
    return {"b": res.b, "sigma_1": res.profile.sigma[1], "stable": res.stable, "max_residual": res.orbit.max_residual}


def disc_inverse_orbit(N=200):
    space = PoincareDisc()
    f = disc_automorphism(space, 0.5)
    return f, backward.backward_orbit_via_inverse(f, space.point(0.0), N)


def _battery_disc():
    f, orbit = disc_inverse_orbit()
    prof = backward.step_profile(orbit)
    battery = backward.equivalence_battery(orbit, f, profile=prof)
    limit = backward.classify_backward_limit(orbit, f, profile=prof)
    return {
        "battery_true_count": sum(battery.verdicts.values()),
        "b": prof.b_estimate,
        "qg_B": battery.values["qg_B"],
        "rate_at_200": backward.backward_divergence_rate(orbit, 200),
        "backward_limit": str(limit),
    }


def _battery_sqrt():
    _, f, orbit = _sqrt_orbit()
    battery = backward.equivalence_battery(orbit, f)
    return {"battery_true_count": sum(battery.verdicts.values())}


def _julia():
    space = PoincareDisc()
    f = disc_automorphism(space, 0.5)
    p = space.point(0.0)
    rec = dilation.detect_brfp(f, space.ray_toward(p, 1 + 0j), n_max=4)
    samples = space.sample(np.random.default_rng(0), 1000)
    exact = verify_julia(space, f, rec, p, samples)
    l1 = L1Cylinder()
    g = cylinder_shift(l1, 1.0, 1.0)
    q = l1.point(0.0, 0.0)
    rec_l1 = dilation.detect_brfp(g, l1.ray_toward(q, -INF), n_max=4)
    exact_l1 = verify_julia(l1, g, rec_l1, q, l1.sample(np.random.default_rng(1), 1000))
    return {"disc_max_violation": exact.max_violation, "l1_max_violation": exact_l1.max_violation}


def _delta_uhp():
    est = metric.estimate_delta(UpperHalfPlane(), n_samples=4000, seed=0)
    return {"four_point_C": est.four_point_C}


E = Expectation

REGISTRY: tuple = (
    ExampleEntry(
        "ex-4.2",
        "L1 cylinder shift with rotation pi/2: one-step vs stable dilation",
        ("dilation",),
        _l1_cylinder,
        (
            E("one_step_dilation_minus_inf", 1.0 - math.pi / 2, "eq", 1e-6, "published-example"),
            E("stable_minus_inf", 1.0, "eq", 1e-3, "published-example"),
            E("stable_plus_inf", -1.0, "eq", 1e-3, "published-example"),
            E("classification_minus_inf", "repelling", source="closed-form"),
        ),
        {"space": {"kind": "L1Cylinder"}, "map": {"kind": "cylinder_shift", "params": {"shift": 1.0, "theta": math.pi / 2}}},
    ),
    ExampleEntry(
        "ex-cylinder",
        "flat cylinder shift with half rotation: displacement exceeds |log dilation|",
        ("dilation",),
        _flat_cylinder,
        (
            E("max_displacement_error", 0.0, "le", 1e-9, "published-example"),
            E("displacement", math.hypot(1.0, math.pi), "eq", 1e-5, "published-example"),
            E("dilation_plus_inf", -1.0, "eq", 1e-6, "published-example"),
            E("displacement_minus_abs_log_dilation", math.hypot(1.0, math.pi) - 1.0, "eq", 1e-5),
        ),
        {"space": {"kind": "FlatCylinder"}, "map": {"kind": "cylinder_shift", "params": {"shift": 1.0, "theta": math.pi}}},
    ),
    ExampleEntry(
        "ex-disc-automorphism",
        "disc automorphism a=0.5: dilations, divergence rate, power rule",
        ("dilation", "forward"),
        _disc_automorphism,
        (
            E("dilation_at_1", -LOG3, "eq", 1e-4),
            E("dilation_at_minus_1", LOG3, "eq", 1e-4),
            E("divergence_rate", LOG3, "eq", 1e-4),
            E("stable_at_minus_1", LOG3, "eq", 1e-4),
            E("minus_stable_at_1", LOG3, "eq", 1e-4),
            E("power_rule_deviation", 0.0, "le", 1e-4),
            E("class", "hyperbolic"),
        ),
        {"space": {"kind": "PoincareDisc"}, "map": {"kind": "disc_automorphism", "params": {"a": 0.5}}},
    ),
    ExampleEntry(
        "ex-poggi-corradini",
        "square-root map: solver backward orbit sqrt(n+i) with zero step rate",
        ("backward",),
        _poggi_corradini,
        (
            E("max_error_n_le_400", 0.0, "le", 1e-8, "published-example"),
            E("max_residual", 0.0, "le", 1e-8),
            E("b", 0.05, "le", 0.0),
            E("rate_at_200", 0.0, "le", 0.05),
            E("imag_decreasing", True),
            E("imag_at_400", 0.025, "eq", 1e-4),
            E("backward_limit", "ParabolicDW{+inf}", source="published-example"),
        ),
        {"space": {"kind": "UpperHalfPlane"}, "map": {"kind": "halfplane_sqrt_map"}},
    ),
    ExampleEntry(
        "ex-logline",
        "log-line shift: no backward orbit to +inf",
        ("backward",),
        _logline,
        (E("escaped_at", 9.0, "eq", 0.0, "published-example"), E("length", 10.0, "eq", 0.0)),
        {"space": {"kind": "LogLine"}, "map": {"kind": "line_shift", "params": {"shift": 1.0}}},
    ),
    ExampleEntry(
        "ex-slitplane",
        "slit-plane shift: companion backward orbits drift apart",
        ("backward",),
        _slit_plane,
        (
            E("companion_distance_at_100", 10.0, "ge", 0.0, "published-example"),
            E("companion_distance_increasing", True),
        ),
        {"space": {"kind": "SlitPlane"}, "map": {"kind": "slit_shift", "params": {"shift": 1.0}}},
    ),
    ExampleEntry(
        "ex-clamp",
        "clamp map: escaping orbit n+i with zero step rate, battery all false",
        ("backward",),
        _clamp,
        (
            E("max_residual", 0.0, "le", 1e-12),
            E("b", 0.05, "le", 0.0),
            E("battery_true_count", 0.0, "eq", 0.0),
            E("battery_unanimous", True),
            E("class", "elliptic-weak", source="published-example"),
            E("limit_label", "+inf"),
            E("backward_limit", "WeaklyEllipticUndetermined"),
        ),
        {"space": {"kind": "UpperHalfPlane"}, "map": {"kind": "clamp_map"}},
    ),
    ExampleEntry(
        "ex-punctured-cylinder",
        "punctured cylinder rotation-scaling: unbounded steps, circle limit set",
        ("backward",),
        _punctured,
        (
            E("step_at_20", 20.0, "ge", 0.0),
            E("cells_occupied", 16.0, "eq", 0.0, "published-example"),
            E("all_cells_hit_at", 2000.0, "le", 0.0),
            E("no_rotation_bounded_angles", True, source="trivial"),
        ),
        {
            "space": {"kind": "HyperbolicPuncturedCylinder"},
            "map": {"kind": "punctured_rotation_scaling", "params": {"theta": 1.0, "factor": 2.0}},
        },
    ),
    ExampleEntry(
        "ex-synth-disc",
        "synthesizer at the repelling point of the disc automorphism",
        ("backward",),
        _synth_disc,
        (
            E("sup_to_inverse_orbit", 0.5, "le", 0.0),
            E("b", LOG3, "eq", 1e-2),
            E("max_residual", 0.0, "le", 1e-8),
        ),
    ),
    ExampleEntry(
        "ex-synth-l1",
        "synthesizer on the L1 cylinder: rate attained, step not",
        ("backward",),
        _synth_l1,
        (
            E("b", 1.0, "eq", 1e-2, "published-example"),
            E("sigma_1", 1.0 + math.pi / 2, "ge", 1e-3, "published-example"),
            E("max_residual", 0.0, "le", 1e-8),
        ),
    ),
    ExampleEntry(
        "ex-battery-disc",
        "equivalence battery on the disc automorphism backward orbit",
        ("backward",),
        _battery_disc,
        (
            E("battery_true_count", 7.0, "eq", 0.0),
            E("b", LOG3, "eq", 1e-3),
            E("rate_at_200", LOG3, "eq", 1e-2),
            E("backward_limit", "RepellingBRFP{[-1.0, 0.0]}"),
        ),
    ),
    ExampleEntry(
        "ex-battery-sqrt",
        "equivalence battery on the square-root orbit",
        ("backward",),
        _battery_sqrt,
        (E("battery_true_count", 0.0, "eq", 0.0),),
    ),
    ExampleEntry(
        "ex-julia",
        "Julia inequality in exact mode on the disc and the L1 cylinder",
        ("horofunction",),
        _julia,
        (E("disc_max_violation", 0.0, "le", 1e-6), E("l1_max_violation", 0.0, "le", 1e-6)),
    ),
    ExampleEntry(
        "ex-delta-halfplane",
        "four-point constant of the hyperbolic plane",
        ("metric",),
        _delta_uhp,
        (E("four_point_C", math.log(2.0), "le", 1e-9),),
    ),
)


def list_entries(filter_substr: str | None = None) -> list:
    if not filter_substr:
        return list(REGISTRY)
    s = filter_substr.lower()
    return [e for e in REGISTRY if s in e.id.lower() or any(s in t for t in e.tags)]


def get_entry(entry_id: str) -> ExampleEntry:
    for e in REGISTRY:
        if e.id == entry_id:
            return e
    from .errors import ConfigurationError

    raise ConfigurationError(f"unknown example id {entry_id!r}")


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def run_entry(entry: ExampleEntry) -> EntryResult:
    start = time.perf_counter()
    try:
        values = {k: _plain(v) for k, v in entry.compute().items()}
    except Exception as exc:  # reported per entry, never swallowed silently
        return EntryResult(entry.id, [], {}, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    checks = []
    for ex in entry.expectations:
        computed = values.get(ex.name)
        checks.append(CheckOutcome(ex.name, ex.expected, computed, ex.comparator, ex.tol, ex.source, ex.check(computed)))
    return EntryResult(entry.id, checks, values, time.perf_counter() - start)


def thread_count() -> int:
    raw = os.environ.get("HYPDYN_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def reproduce_all(entries=None, filter_substr: str | None = None, threads: int | None = None) -> list:
    """Run entries concurrently; results come back in registry order."""
    entries = list(entries) if entries is not None else list_entries(filter_substr)
    threads = threads or thread_count()
    if threads == 1:
        return [run_entry(e) for e in entries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_entry, entries))


def summary_table(results) -> str:
    lines = [f"{'id':<24} {'check':<36} {'expected':>14} {'computed':>16} {'tol':>8}  verdict"]
    for r in results:
        if r.error:
            lines.append(f"{r.id:<24} {'<error>':<36} {'':>14} {'':>16} {'':>8}  FAIL  {r.error}")
            continue
        for c in r.checks:
            lines.append(
                f"{r.id:<24} {c.name:<36} {_cell(c.expected):>14} {_cell(c.computed):>16} {c.tol:>8.0e}  "
                f"{'pass' if c.passed else 'FAIL'}"
            )
    return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.8g}"
    return str(v)
