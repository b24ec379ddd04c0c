"""Dilation at boundary fixed points, iterate tables and stable dilation.

The dilation of ``f`` at a boundary point along a ray ``g`` from ``p`` is the
limit of ``g(t) = t - d(f(g(t)), p)``, a non-decreasing function of ``t``.
When the space's horofunction and Gromov compactifications agree and the
Busemann function ``h`` is known in closed form, ``D(t) = h(f(g(t))) - h(g(t))``
satisfies ``g(t) <= D(t) <= log(lambda)`` and usually converges much faster;
it is used whenever its own tail certificate passes, and the report says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MonotonicityViolated, NotAvailable, TailNotConverged
from .forward import ClassificationResult, MapClass, RetractSample
from .maps import MapHandle
from .spaces import BoundaryAnchor, label_to_json

T_MAX = 40.0
N_MAX = 64
EPS_LAMBDA = 1e-3
TOL_SUPER = 1e-6
TAIL_TOL = 1e-6
DISP_FLAT_TOL = 0.1
MONOTONE_SLACK = 1e-9

REGIME_SANDWICH = "busemann-sandwich"
REGIME_RAY = "ray-limit"


def _assert_non_decreasing(ts, values, what):
    for i in range(1, len(values)):
        if values[i] < values[i - 1] - MONOTONE_SLACK * (1.0 + abs(values[i - 1])):
            raise MonotonicityViolated(
                f"{what} decreased between t={ts[i - 1]:.4g} and t={ts[i]:.4g}", index=i, values=list(values)
            )


def _exact_busemann(anchor: BoundaryAnchor):
    space = anchor.space
    if not space.compactification_equivalent:
        return None
    p = anchor.basepoint
    try:
        space.busemann_exact(anchor, p, p)
    except NotAvailable:
        return None
    return lambda x: space.busemann_exact(anchor, p, x)


def _half_index(ts, t_ref):
    return int(np.argmin(np.abs(np.asarray(ts) - t_ref)))


@dataclass
class RayDilation:
    value: float
    regime: str
    tail_gap: float
    ts: list
    g: list
    sandwich: list | None = None

    def to_dict(self) -> dict:
        return {"value": self.value, "regime": self.regime, "tail_gap": self.tail_gap}


def _resolve(ts, g, D, tail_index, tail_tol, check_tail, what):
    """Pick the reported value from the raw trace and the sandwich trace."""
    _assert_non_decreasing(ts, g, what)
    raw_gap = g[-1] - g[tail_index]
    if D is not None and all(math.isfinite(v) for v in (D[-1], D[tail_index])):
        gap = abs(D[-1] - D[tail_index])
        if gap <= tail_tol and D[-1] >= g[-1] - 1e-9 * (1.0 + abs(g[-1])):
            return D[-1], REGIME_SANDWICH, gap
    if check_tail and abs(raw_gap) > tail_tol:
        raise TailNotConverged(
            f"{what}: tail gap {raw_gap:.3g} exceeds {tail_tol:g}", value=g[-1], half_value=g[tail_index]
        )
    return g[-1], REGIME_RAY, raw_gap


def dilation_along_ray(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    p=None,
    t_grid=None,
    tail_tol: float = TAIL_TOL,
    check_tail: bool = True,
) -> RayDilation:
    """Estimate ``log lambda`` of ``fmap`` at the anchor's boundary point."""
    space = fmap.space
    if p is not None and not space.same_point(p, anchor.basepoint):
        anchor = anchor.rebased(p)
    p = anchor.basepoint
    ts = np.linspace(0.0, T_MAX, 161) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(np.diff(ts) <= 0) or ts[-1] < 20.0:
        raise ValueError("t_grid must be increasing with maximum at least 20")
    h = _exact_busemann(anchor)
    g, D = [], [] if h is not None else None
    for t in ts:
        y = anchor.at(t)
        fy = fmap(y)
        g.append(space.distance(y, p) - space.distance(fy, p))
        if D is not None:
            D.append(h(fy) - h(y))
    k = _half_index(ts, ts[-1] / 2.0)
    value, regime, gap = _resolve(ts, g, D, k, tail_tol, check_tail, "dilation trace")
    return RayDilation(value, regime, gap, list(ts), g, D)


@dataclass
class DilationTable:
    anchor: BoundaryAnchor
    entries: dict
    stable: float
    stable_index: int
    n_max: int
    t_grid: dict
    diagnostics: dict = field(default_factory=dict)
    ceiling: dict | None = None

    @property
    def basepoint(self):
        return self.anchor.basepoint

    @property
    def label(self):
        return self.anchor.label

    def superadditivity_violations(self, tol: float = TOL_SUPER) -> list:
        bad = []
        for n in range(1, self.n_max + 1):
            for m in range(1, self.n_max + 1 - n):
                if self.entries[n + m] < self.entries[n] + self.entries[m] - tol:
                    bad.append((n, m))
        return bad

    def power_rule_deviation(self, n_upto: int | None = None) -> float:
        n_upto = n_upto or self.n_max
        return max(abs(self.entries[n] - n * self.entries[1]) for n in range(1, n_upto + 1))

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.to_dict(),
            "entries": {str(n): v for n, v in self.entries.items()},
            "stable": self.stable,
            "stable_index": self.stable_index,
            "n_max": self.n_max,
            "t_grid": self.t_grid,
            "regimes": sorted({d["regime"] for d in self.diagnostics.values()}),
            "max_tail_gap": max(abs(d["tail_gap"]) for d in self.diagnostics.values()),
        }


def dilation_iterates(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    p=None,
    n_max: int = N_MAX,
    t_max: float = T_MAX,
    tail_tol: float = TAIL_TOL,
    spacing: float = 0.5,
    delta: float | None = None,
) -> DilationTable:
    """Dilations of ``f, f^2, ..., f^n_max`` at one anchor and the stable dilation.

    One shared grid serves every power. It runs to ``t_max + n_max * d(p, f p)``
    so that even ``f^n_max`` of the far ray points is still far out, and each
    entry's tail is certified between the horizon and the horizon minus ``t_max/2``.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    space = fmap.space
    if p is not None and not space.same_point(p, anchor.basepoint):
        anchor = anchor.rebased(p)
    p = anchor.basepoint
    step = space.distance(p, fmap(p))
    T = t_max + n_max * step
    M = int(math.ceil(T / spacing)) + 1
    ts = np.linspace(0.0, T, M)
    h = _exact_busemann(anchor)
    g = np.empty((n_max + 1, M))
    D = np.empty((n_max + 1, M)) if h is not None else None
    for j, t in enumerate(ts):
        y = anchor.at(t)
        d0 = space.distance(y, p)
        h0 = h(y) if h is not None else 0.0
        for n in range(1, n_max + 1):
            y = fmap(y)
            g[n, j] = d0 - space.distance(y, p)
            if D is not None:
                D[n, j] = h(y) - h0
    k = _half_index(ts, T - t_max / 2.0)
    entries, diags = {}, {}
    for n in range(1, n_max + 1):
        value, regime, gap = _resolve(
            ts, list(g[n]), None if D is None else list(D[n]), k, tail_tol, True, f"dilation trace of f^{n}"
        )
        entries[n] = float(value)
        diags[n] = {"regime": regime, "tail_gap": float(gap)}
    ratios = {n: entries[n] / n for n in entries}
    best = max(ratios, key=lambda n: (ratios[n], -n))
    ceiling = None
    if delta is not None:
        ceiling = {n: n * (entries[1] + 8.0 * delta + step) for n in entries}
    return DilationTable(
        anchor=anchor,
        entries=entries,
        stable=ratios[best],
        stable_index=best,
        n_max=n_max,
        t_grid={"start": 0.0, "stop": float(T), "count": M, "tail_reference": float(ts[k])},
        diagnostics=diags,
        ceiling=ceiling,
    )


def classify_brfp(table: DilationTable, eps: float = EPS_LAMBDA, tol_super: float = TOL_SUPER) -> str:
    """``attracting``, ``indifferent`` or ``repelling`` from the stable dilation.

    A single positive entry already certifies repelling: superadditivity makes
    the stable dilation at least ``entries[n] / n``.
    """
    if any(v > tol_super for v in table.entries.values()):
        return "repelling"
    if table.stable < -eps:
        return "attracting"
    if abs(table.stable) <= eps:
        return "indifferent"
    return "repelling"


@dataclass
class BRFPRecord:
    anchor: BoundaryAnchor
    is_brfp: bool
    displacement_liminf: float
    displacement_limsup: float
    log_dilation: float | None = None
    dilation_regime: str | None = None
    dilation_table: DilationTable | None = None
    classification: str = "unknown"
    C_emp: float | None = None
    bracket_ok: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def label(self):
        return self.anchor.label

    @property
    def stable(self):
        return None if self.dilation_table is None else self.dilation_table.stable

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.to_dict(),
            "is_brfp": self.is_brfp,
            "displacement_liminf": self.displacement_liminf,
            "displacement_limsup": self.displacement_limsup,
            "log_dilation": self.log_dilation,
            "dilation_regime": self.dilation_regime,
            "stable": self.stable,
            "classification": self.classification,
            "C_emp": self.C_emp,
            "bracket_ok": self.bracket_ok,
            "dilation_table": None if self.dilation_table is None else self.dilation_table.to_dict(),
            "notes": list(self.notes),
        }


def detect_brfp(
    fmap: MapHandle,
    anchor: BoundaryAnchor,
    t_grid=None,
    n_max: int = N_MAX,
    flat_tol: float = DISP_FLAT_TOL,
) -> BRFPRecord:
    """Decide from the displacement along the ray whether the anchor is a BRFP."""
    space = fmap.space
    ts = np.linspace(0.0, T_MAX, 161) if t_grid is None else np.asarray(t_grid, dtype=float)
    disp = []
    for t in ts:
        y = anchor.at(t)
        try:
            disp.append(space.distance(y, fmap(y)))
        except DomainError:
            disp.append(math.inf)
    tail = np.asarray(disp[len(disp) // 2:])
    finite = bool(np.all(np.isfinite(tail)))
    lo = float(tail.min()) if finite else math.inf
    hi = float(tail.max()) if finite else math.inf
    record = BRFPRecord(anchor=anchor, is_brfp=finite and hi - lo <= flat_tol, displacement_liminf=lo, displacement_limsup=hi)
    if not record.is_brfp:
        record.notes.append("displacement along the ray is not bounded and flat")
        return record
    try:
        ray = dilation_along_ray(fmap, anchor, t_grid=ts)
    except (TailNotConverged, MonotonicityViolated) as exc:
        record.notes.append(f"dilation: {exc}")
        return record
    record.log_dilation = ray.value
    record.dilation_regime = ray.regime
    record.C_emp = hi - abs(ray.value)
    record.bracket_ok = abs(ray.value) <= lo + 1e-9
    try:
        record.dilation_table = dilation_iterates(fmap, anchor, n_max=n_max)
    except (TailNotConverged, MonotonicityViolated) as exc:
        record.notes.append(f"iterate table: {exc}")
        return record
    record.classification = classify_brfp(record.dilation_table)
    return record


def find_brfps(fmap: MapHandle, p=None, n_max: int = N_MAX) -> list:
    """BRFP records for the declared labels, or for a sweep of canonical labels."""
    space = fmap.space
    p = p if p is not None else space.default_seeds()[0]
    labels = list(fmap.declared_brfps) or space.canonical_labels()
    records = [detect_brfp(fmap, space.ray_toward(p, lab), n_max=n_max) for lab in labels]
    return [r for r in records if r.is_brfp]


@dataclass
class RelationsReport:
    checks: list
    passed: bool

    def to_dict(self):
        return {"checks": self.checks, "pass": self.passed}


def global_dilation_relations(
    fmap: MapHandle,
    brfps: list,
    classification: ClassificationResult,
    tol: float = EPS_LAMBDA,
    retract: RetractSample | None = None,
) -> RelationsReport:
    """Check the identities tying stable dilations to the divergence rate."""
    space = fmap.space
    checks = []
    if classification.kind is MapClass.ELLIPTIC:
        if fmap.is_isometry:
            for r in brfps:
                checks.append(
                    {
                        "name": "isometry BRFP indifferent",
                        "label": label_to_json(r.label),
                        "classification": r.classification,
                        "passed": r.classification == "indifferent",
                    }
                )
        if retract is not None:
            for r in brfps:
                h_vals = [space.busemann_exact(r.anchor, r.anchor.basepoint, x) for x in retract.points]
                near = min(h_vals) <= -2.0
                checks.append(
                    {
                        "name": "indifferent iff approached by the retract sample",
                        "label": label_to_json(r.label),
                        "classification": r.classification,
                        "approached": near,
                        "passed": (r.classification == "indifferent") == near,
                    }
                )
        return RelationsReport(checks, all(c["passed"] for c in checks))

    if classification.dw_label is None:
        raise ValueError("a non-elliptic classification must carry a Denjoy-Wolff label")
    dw = [r for r in brfps if space.labels_equal(r.label, classification.dw_label)]
    if not dw or dw[0].stable is None:
        checks.append({"name": "Denjoy-Wolff anchor present", "passed": False})
        return RelationsReport(checks, False)
    zeta = dw[0]
    c = classification.c_estimate
    checks.append(
        {
            "name": "stable(DW) = -c",
            "stable": zeta.stable,
            "c": c,
            "passed": abs(zeta.stable + c) <= tol,
        }
    )
    for r in brfps:
        if r is zeta or r.stable is None:
            continue
        checks.append(
            {
                "name": "stable(eta) >= -stable(DW)",
                "label": label_to_json(r.label),
                "stable": r.stable,
                "passed": r.stable >= -zeta.stable - tol,
            }
        )
        checks.append(
            {
                "name": "only the DW point is non-repelling",
                "label": label_to_json(r.label),
                "classification": r.classification,
                "passed": r.classification == "repelling",
            }
        )
    return RelationsReport(checks, all(ch["passed"] for ch in checks))
