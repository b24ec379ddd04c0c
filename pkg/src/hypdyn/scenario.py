"""Scenario files: JSON-schema validation and task execution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import backward, dilation, forward, metric
from .errors import ConfigurationError
from .export import write_report, write_trace_csv
from .horofunction import horofunction as make_horofunction, verify_julia
from .maps import make_map
from .spaces import label_to_json, make_space, parse_label

TASKS = (
    "classify",
    "dilation",
    "stable-dilation",
    "forward-orbit",
    "backward-orbit",
    "synthesize",
    "battery",
    "delta-estimate",
    "julia-verify",
    "reproduce",
)


def load_schema() -> dict:
    text = resources.files("hypdyn").joinpath("schemas/scenario.schema.json").read_text()
    return json.loads(text)


def _reject_constant(name):
    raise ConfigurationError(f"non-finite number {name} in scenario")


def validate(scenario: dict) -> dict:
    """Raise ConfigurationError with the schema path of the first problem."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(scenario), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigurationError(f"scenario invalid at {where}: {err.message}")
    _check_finite(scenario, "")
    return scenario


def _check_finite(obj, where):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ConfigurationError(f"non-finite number at {where or '<root>'}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}/{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}/{i}")


def load_scenario(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from None
    return validate(data)


def point_from_json(space, raw):
    coords = raw if isinstance(raw, list) else [raw]
    try:
        return space.point(*coords)
    except TypeError:
        raise ConfigurationError(f"{space.kind} points take {space.dim} coordinates, got {raw!r}") from None


def build(scenario: dict):
    """Construct the space and map named in a scenario."""
    try:
        space = make_space(scenario["space"]["kind"], scenario["space"].get("params"))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"space: {exc}") from None
    try:
        fmap = make_map(space, scenario["map"]["kind"], scenario["map"].get("params"))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"map: {exc}") from None
    return space, fmap


@dataclass
class TaskResult:
    report: dict
    trace: dict | None = None
    verified: bool = True
    files: list = field(default_factory=list)


def _anchor(space, params, default_label=None):
    raw = params.get("label", default_label)
    if raw is None:
        raise ConfigurationError("this task needs params.label")
    p = point_from_json(space, params["basepoint"]) if "basepoint" in params else space.default_seeds()[0]
    return space.ray_toward(p, parse_label(raw))


def _backward_orbit(space, fmap, params):
    method = params.get("method", "inverse" if fmap.inverse is not None else "solver")
    N = params.get("N", 200)
    if method == "given":
        if "points" not in params:
            raise ConfigurationError("method 'given' needs params.points")
        return backward.BackwardOrbit.from_points(fmap, [point_from_json(space, q) for q in params["points"]])
    x0 = point_from_json(space, params["x0"]) if "x0" in params else space.default_seeds()[0]
    if method == "inverse":
        if fmap.inverse is None:
            raise ConfigurationError(f"{fmap.name} declares no inverse; use method 'solver'")
        return backward.backward_orbit_via_inverse(fmap, x0, N)
    return backward.backward_orbit_via_solver(fmap, x0, N)


def execute(scenario: dict, seed: int | None = None) -> TaskResult:
    """Run one validated scenario and return its report."""
    task = scenario["task"]
    params = scenario.get("params", {})
    seed = scenario.get("seed", 0) if seed is None else seed
    if task == "reproduce":
        from .registry import get_entry, run_entry

        res = run_entry(get_entry(params["example_id"]))
        return TaskResult(res.to_dict(), verified=res.passed)

    space, fmap = build(scenario)
    report = {"task": task, "space": {"kind": space.kind}, "map": fmap.describe(), "seed": seed}

    if task == "classify":
        seeds = [point_from_json(space, s) for s in params["seeds"]] if "seeds" in params else None
        res = forward.classify(fmap, seeds, N=params.get("N", 500))
        report["result"] = res.to_dict()
        report["label"] = res.label
        return TaskResult(report)

    if task == "dilation":
        anchor = _anchor(space, params)
        res = dilation.dilation_along_ray(fmap, anchor)
        report["anchor"] = anchor.to_dict()
        report["result"] = res.to_dict()
        return TaskResult(report, {"kind": "ray", "points": [anchor.at(t) for t in res.ts], "ts": res.ts, "anchor": anchor})

    if task == "stable-dilation":
        anchor = _anchor(space, params)
        rec = dilation.detect_brfp(fmap, anchor, n_max=params.get("n_max", dilation.N_MAX))
        report["result"] = rec.to_dict()
        if rec.dilation_table is not None:
            report["superadditivity_violations"] = rec.dilation_table.superadditivity_violations()
        return TaskResult(report)

    if task == "forward-orbit":
        x0 = point_from_json(space, params["x0"]) if "x0" in params else space.default_seeds()[0]
        tr = forward.forward_orbit(fmap, x0, params.get("N", 500))
        info = forward._rate_from_trace(tr)
        report["result"] = {
            "length": len(tr.points),
            "escaped_at": tr.escaped_at,
            "dichotomy": forward.calka_dichotomy(tr).value,
            "divergence_rate": info["rate"],
            "fekete": info["fekete"],
            "final": list(space.coords(tr.points[-1])),
        }
        anchors = [space.ray_toward(x0, parse_label(a)) for a in params.get("anchors", [])]
        return TaskResult(report, {"kind": "orbit", "points": tr.points, "anchors": anchors})

    if task in ("backward-orbit", "battery"):
        orbit = _backward_orbit(space, fmap, params)
        report["orbit"] = {
            "construction": orbit.construction,
            "length": len(orbit.points),
            "escaped_at": orbit.escaped_at,
            "max_residual": orbit.max_residual,
            "ambiguous_steps": orbit.ambiguous_steps,
            "notes": orbit.notes,
        }
        verified = orbit.max_residual <= backward.RESIDUAL_TOL
        if len(orbit.points) >= 8:
            prof = backward.step_profile(orbit, params.get("m_max"))
            report["profile"] = prof.to_dict()
            report["backward_limit"] = backward.classify_backward_limit(orbit, fmap, profile=prof).to_dict()
            if task == "battery":
                br = backward.equivalence_battery(orbit, fmap, profile=prof)
                report["battery"] = br.to_dict()
                verified = verified and br.unanimous
        anchors = [space.ray_toward(orbit.points[0], parse_label(a)) for a in params.get("anchors", [])]
        trace = {"kind": "orbit", "points": orbit.points, "anchors": anchors, "residuals": orbit.residuals}
        return TaskResult(report, trace, verified)

    if task == "synthesize":
        anchor = _anchor(space, params)
        rec = dilation.detect_brfp(fmap, anchor, n_max=params.get("n_max", dilation.N_MAX))
        res = backward.synthesize_backward_orbit(
            fmap,
            rec,
            c=params.get("c"),
            t_grid=params.get("t_grid"),
            m=params.get("m"),
            depth=params.get("depth", 50),
            cluster_tol=params.get("cluster_tol", 0.2),
        )
        report["result"] = res.to_dict()
        trace = {"kind": "orbit", "points": res.orbit.points, "anchors": [anchor], "residuals": res.orbit.residuals}
        return TaskResult(report, trace, res.orbit.max_residual <= backward.RESIDUAL_TOL)

    if task == "delta-estimate":
        est = metric.estimate_delta(space, params.get("window"), n_samples=params.get("n_samples", 10000), seed=seed)
        report["result"] = est.to_dict()
        return TaskResult(report)

    if task == "julia-verify":
        anchor = _anchor(space, params)
        rec = dilation.detect_brfp(fmap, anchor)
        if rec.log_dilation is None:
            report["result"] = rec.to_dict()
            return TaskResult(report, verified=False)
        rng = np.random.default_rng(seed)
        samples = space.sample(rng, params.get("n_samples", 1000), params.get("window"))
        jr = verify_julia(space, fmap, rec, anchor.basepoint, samples, mode=params.get("mode", "exact"))
        report["anchor"] = {"label": label_to_json(anchor.label)}
        report["result"] = jr.to_dict()
        return TaskResult(report, verified=jr.passed)

    raise ConfigurationError(f"unknown task {task!r}")


def run(scenario: dict, out_dir=None, seed: int | None = None) -> TaskResult:
    """Execute and write the JSON report and, when the task has one, the CSV trace."""
    result = execute(scenario, seed)
    out = scenario.get("output", {})
    base = Path(out_dir) if out_dir is not None else Path(".")
    report_path = base / out.get("report", "report.json")
    result.files.append(str(write_report(report_path, result.report)))
    if result.trace is not None:
        tr = result.trace
        space, _ = build(scenario)
        hs = [make_horofunction(a) for a in tr.get("anchors", [])]
        trace_path = base / out.get("trace", "trace.csv")
        write_trace_csv(trace_path, space, tr["points"], hs, tr.get("ts"), tr.get("residuals"))
        result.files.append(str(trace_path))
    return result
