"""Scenario runner: ``sgcalc run``, ``sgcalc corpus`` and ``sgcalc explain``.

A scenario is one JSON document with dimensions, named definitions (phases,
symbols, amplitudes, test functions, graph data) and an ordered task list.
``run`` executes the tasks, writes ``report.json`` plus per-task CSV files,
and returns an exit code: 0 when every verdict passes, 1 when a check fails,
2 on input or parse errors.  With ``--ci`` the exit code instead reflects
whether every task met its declared expectation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .classical import PrincipalTriple, compatibility_check, ellipticity_check
from .expr import Expression
from .lagrangian import LagrangianData, lagrangian_validate
from .oscint import DEFAULT_EPS, DEFAULT_SCALES, TestFunction, oscint_eval, probe_distances, wavefront_probe, write_probe_csv
from .parametrize import (
    ROUNDTRIP_TOL,
    LagrangianGraphData,
    build_phase,
    equivalence_check,
    extract_graph_data,
    roundtrip_verify,
)
from .phase import PhaseFunction, admissibility_check, nondegeneracy_batch
from .stationary import SearchConfig, all_faces, neatness_report, write_cloud_csv
from .symbols import SampleConfig, check_estimates

__all__ = [
    "SCHEMA_VERSION",
    "TASK_KINDS",
    "ScenarioError",
    "RunConfig",
    "Scenario",
    "load_scenario",
    "corpus_list",
    "run",
    "report_schema",
    "explain",
    "main",
]

SCHEMA_VERSION = "1.0"
TASK_KINDS = (
    "check-symbol",
    "check-phase",
    "stationary",
    "lagrangian-verify",
    "parametrize",
    "equivalence",
    "oscint",
    "wavefront",
)
DEF_KINDS = ("phase", "symbol", "amplitude", "test-function", "graph")
# which definition kind each task parameter must name
REF_KINDS = {
    "phase": ("phase",),
    "other": ("phase",),
    "source": ("phase",),
    "extract": ("phase",),
    "symbol": ("symbol",),
    "amplitude": ("amplitude",),
    "test_function": ("test-function",),
    "graph": ("graph",),
}
REQUIRED = {
    "check-symbol": ("symbol",),
    "check-phase": ("phase",),
    "stationary": ("phase",),
    "lagrangian-verify": ("phase",),
    "parametrize": (),
    "equivalence": ("phase", "other"),
    "oscint": ("phase", "amplitude", "test_function"),
    "wavefront": ("phase", "amplitude", "locations", "directions"),
}
_ID = re.compile(r"^[A-Za-z0-9_-]+$")


class ScenarioError(ValueError):
    """Input or parse error in a scenario (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    eps_ell: float = 1e-6
    newton_tol: float = 1e-10
    parallel: int = 1

    def search(self) -> SearchConfig:
        return SearchConfig(newton_tol=self.newton_tol)

    def to_json(self) -> dict:
        return {"seed": self.seed, "eps_ell": self.eps_ell, "newton_tol": self.newton_tol, "parallel": self.parallel}


@dataclass
class Scenario:
    name: str
    description: str
    d: int
    s: int
    definitions: dict  # name -> built object
    tasks: list
    file: str
    sha256: str


# --- loading -----------------------------------------------------------------------------


def _schema(name: str) -> dict:
    return json.loads(resources.files("sgcalc").joinpath("data", name).read_text())


def report_schema() -> dict:
    """The JSON schema that every ``report.json`` validates against."""
    return _schema("report.schema.json")


def _corpus_dir():
    return resources.files("sgcalc").joinpath("data", "corpus")


def corpus_list() -> list:
    """Bundled scenarios as ``{"name", "description", "tasks"}`` entries, sorted by name."""
    out = []
    for entry in sorted(_corpus_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            doc = json.loads(entry.read_text())
            out.append({"name": doc["name"], "description": doc.get("description", ""), "tasks": len(doc["tasks"])})
    return out


def _resolve(path) -> tuple[str, str]:
    """Scenario text and file name; bare names fall back to the bundled corpus."""
    p = Path(path)
    if p.is_file():
        return p.read_text(), p.name
    bundled = _corpus_dir().joinpath(f"{p.stem}.json")
    if p.suffix in ("", ".json") and p.parent == Path(".") and bundled.is_file():
        return bundled.read_text(), bundled.name
    raise ScenarioError(f"scenario file not found: {path}")


def _dims(entry: dict, default: tuple) -> tuple[int, int]:
    return int(entry.get("d", default[0])), int(entry.get("s", default[1]))


def _build_definition(name: str, entry: dict, dims: tuple):
    kind = entry["kind"]
    d, s = _dims(entry, dims)
    if kind == "phase":
        return PhaseFunction.parse(entry["expr"], d, s, entry.get("triple"))
    if kind == "symbol":
        if "order" not in entry:
            raise ScenarioError(f"definition {name!r}: a symbol needs an order")
        base = Expression.parse(entry["expr"], d, s)
        triple = PrincipalTriple.parse(entry["triple"], d, s) if "triple" in entry else None
        return {"expr": base, "order": tuple(entry["order"]), "triple": triple}
    if kind == "amplitude":
        expr = entry["expr"]
        text = repr(float(expr)) if isinstance(expr, (int, float)) else expr
        Expression.parse(text, d, s)
        return text
    if kind == "test-function":
        if "envelope" in entry:
            return TestFunction(d, entry["envelope"], entry.get("center"), entry.get("prefactor"), entry.get("frequency"))
        return TestFunction.gaussian(d, entry.get("width", 1.0), entry.get("center"), entry.get("prefactor"), entry.get("frequency"))
    g = entry
    return LagrangianGraphData(
        d, s, g["e_position"], g["e_covector"], g["psi_position"], g["psi_covector"], g.get("corner")
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario; every problem raises :class:`ScenarioError`."""
    text, fname = _resolve(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, _schema("scenario.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario does not validate at {where}: {exc.message}") from None
    dims = (doc["dims"]["d"], doc["dims"]["s"])
    defs = {}
    kinds = {}
    for name, entry in doc.get("definitions", {}).items():
        try:
            defs[name] = _build_definition(name, entry, dims)
        except ScenarioError:
            raise
        except (ValueError, ArithmeticError, KeyError, TypeError) as exc:
            raise ScenarioError(f"definition {name!r}: {exc}") from None
        kinds[name] = entry["kind"]
    tasks, seen = [], set()
    for i, task in enumerate(doc["tasks"]):
        task = dict(task)
        kind = task["kind"]
        tid = task.setdefault("id", f"{i + 1:02d}-{kind}")
        if not _ID.match(tid) or tid in seen:
            raise ScenarioError(f"task {i + 1}: id {tid!r} is not a unique [A-Za-z0-9_-] name")
        seen.add(tid)
        for key in REQUIRED[kind]:
            if key not in task:
                raise ScenarioError(f"task {tid!r}: missing parameter {key!r}")
        if kind == "parametrize" and ("graph" in task) == ("extract" in task):
            raise ScenarioError(f"task {tid!r}: give exactly one of 'graph' or 'extract'")
        for key, allowed in REF_KINDS.items():
            if key not in task:
                continue
            ref = task[key]
            if ref not in defs:
                raise ScenarioError(f"task {tid!r}: undefined name {ref!r}")
            if kinds[ref] not in allowed:
                raise ScenarioError(f"task {tid!r}: {key} {ref!r} is a {kinds[ref]}, expected {' or '.join(allowed)}")
        _check_dims(tid, task, defs)
        tasks.append(task)
    return Scenario(
        doc["name"], doc.get("description", ""), dims[0], dims[1], defs, tasks, fname,
        hashlib.sha256(text.encode()).hexdigest(),
    )


def _dims_of(obj) -> tuple[int, int] | None:
    if isinstance(obj, PhaseFunction):
        return obj.d, obj.s
    if isinstance(obj, dict):
        return obj["expr"].d, obj["expr"].s
    if isinstance(obj, TestFunction):
        return obj.d, None
    if isinstance(obj, LagrangianGraphData):
        return obj.d, None
    return None


def _check_dims(tid, task, defs):
    seen = {}
    for key in REF_KINDS:
        if key in task and key != "amplitude":
            dims = _dims_of(defs[task[key]])
            if dims is not None:
                seen[key] = dims
    ds = {v[0] for v in seen.values()}
    ss = {v[1] for v in seen.values() if v[1] is not None}
    if len(ds) > 1 or len(ss) > 1:
        raise ScenarioError(f"task {tid!r}: inconsistent dimensions across references {seen}")
    if "amplitude" in task and "phase" in task:
        phi = defs[task["phase"]]
        try:
            Expression.parse(defs[task["amplitude"]], phi.d, phi.s)
        except ValueError as exc:
            raise ScenarioError(f"task {tid!r}: amplitude does not fit the phase dimensions: {exc}") from None


# --- task runners ------------------------------------------------------------------------
# each returns (passed, verdict text, numbers, files)


def _task_check_symbol(task, defs, cfg, out):
    sym = defs[task["symbol"]]
    rep = check_estimates(sym["expr"], sym["order"], task.get("max_deriv", 2), SampleConfig(seed=cfg.seed))
    numbers = {"estimates": rep.to_json()}
    ok = rep.passed
    if sym["triple"] is not None:
        comp = compatibility_check(sym["triple"], sym["order"], seed=cfg.seed)
        numbers["compatibility"] = comp.to_json()
        ok = ok and comp.passed
    if task.get("ellipticity", False):
        ell = ellipticity_check(sym["expr"], task.get("eps_ell", cfg.eps_ell), order=sym["order"])
        numbers["ellipticity"] = ell.to_json()
        ok = ok and ell.elliptic
    return ok, "pass" if ok else "fail", numbers, []


def _task_check_phase(task, defs, cfg, out):
    phi = defs[task["phase"]]
    rep = admissibility_check(phi, task.get("R", 8.0), task.get("eps_ell", cfg.eps_ell))
    numbers = {"admissibility": rep.to_json()}
    if not rep.admissible:
        return False, rep.verdict, numbers, []
    worst, count, bad = math.inf, 0, []
    if task.get("nondegeneracy", True):
        for face, cloud in all_faces(phi, cfg.search(), frames=False).items():
            pts = cloud.points
            _, small, _, ok = nondegeneracy_batch(phi, face, [p.x for p in pts], [p.t for p in pts])
            count += len(pts)
            worst = min([worst, *small.tolist()])
            bad += [pts[i].to_json() for i in np.flatnonzero(~ok)][: 5 - len(bad)]
        numbers["nondegeneracy"] = {"points": count, "smallest_singular_value": worst, "degenerate_points": bad}
    ok = not bad
    return ok, "admissible, non-degenerate" if ok else "degenerate", numbers, []


def _face_summary(clouds) -> dict:
    out = {}
    for face, cloud in clouds.items():
        pts = cloud.points
        out[face] = {
            "count": len(pts),
            "max_residual": max((p.residual for p in pts), default=0.0),
            "min_singular_value": min((p.min_singular_value for p in pts), default=None),
            "max_abs_x": max((float(np.abs(lp.x).max()) for lp in cloud.lagrangian), default=None),
        }
    return out


def _task_stationary(task, defs, cfg, out):
    phi = defs[task["phase"]]
    search = cfg.search()
    clouds = all_faces(phi, search, frames=False)
    path = f"{task['id']}_cloud.csv"
    write_cloud_csv(clouds, out / path)
    summary = _face_summary(clouds)
    ok = all(v["max_residual"] <= search.keep_tol for v in summary.values())
    mismatch = {}
    for face, want in task.get("expect_counts", {}).items():
        got = summary[face]["count"]
        if got != want:
            mismatch[face] = {"expected": want, "found": got}
    numbers = {"faces": summary}
    if mismatch:
        numbers["count_mismatch"] = mismatch
    ok = ok and not mismatch
    return ok, "pass" if ok else "fail", numbers, [path]


def _task_lagrangian(task, defs, cfg, out):
    phi = defs[task["phase"]]
    clouds = all_faces(phi, cfg.search(), frames=True)
    path = f"{task['id']}_cloud.csv"
    write_cloud_csv(clouds, out / path)
    neat = neatness_report(phi, clouds)
    rep = lagrangian_validate(LagrangianData.from_clouds(clouds, neat), task.get("tol", 1e-8))
    numbers = {"lagrangian": rep.to_json(), "neatness": neat.to_json(), "faces": _face_summary(clouds)}
    return rep.passed, rep.verdict, numbers, [path]


def _task_parametrize(task, defs, cfg, out):
    search = cfg.search()
    numbers, files = {}, []
    if "extract" in task:
        source = defs[task["extract"]]
        graph = extract_graph_data(source, search)
        numbers["extracted_graph"] = graph.to_json()
    else:
        graph = defs[task["graph"]]
        source = defs[task["source"]] if "source" in task else None
    built = build_phase(graph)
    numbers["built_phase"] = str(built.phase)
    numbers["built_triple"] = {"e": str(built.e), "psi": str(built.psi), "psie": str(built.psie)}
    numbers["checks"] = built.checks
    rebuilt = all_faces(built.phase, search, frames=False)
    path = f"{task['id']}_rebuilt_cloud.csv"
    write_cloud_csv(rebuilt, out / path)
    files.append(path)
    if source is None:
        return True, "built", numbers, files
    rt = roundtrip_verify(source, built.phase, search, task.get("tol", ROUNDTRIP_TOL))
    numbers["roundtrip"] = rt.to_json()
    return rt.passed, rt.verdict, numbers, files


def _task_equivalence(task, defs, cfg, out):
    region = task.get("region")
    if region is not None:
        region = {k: tuple(v) for k, v in region.items()}
    res = equivalence_check(defs[task["phase"]], defs[task["other"]], region, cfg.search())
    return res.verdict.startswith("equivalent"), res.verdict, {"equivalence": res.to_json()}, []


def _task_oscint(task, defs, cfg, out):
    res = oscint_eval(defs[task["phase"]], defs[task["amplitude"]], defs[task["test_function"]], task.get("eps_ladder", DEFAULT_EPS))
    numbers = {"oscint": res.to_json()}
    if "reference" not in task:
        return True, "computed", numbers, []
    ref = task["reference"]
    ref = complex(ref[0], ref[1]) if isinstance(ref, list) else complex(ref)
    rtol = task.get("rtol", 1e-2)
    err = abs(res.value - ref)
    numbers["reference"] = {"value": [ref.real, ref.imag], "abs_error": err, "rtol": rtol}
    ok = err <= rtol * abs(ref)
    return ok, "pass" if ok else "fail", numbers, []


def _points(raw, d):
    return [np.atleast_1d(np.asarray(p, float)).reshape(d) for p in raw]


def _task_wavefront(task, defs, cfg, out):
    phi = defs[task["phase"]]
    a = defs[task["amplitude"]]
    d = phi.d
    scales = task.get("scales", DEFAULT_SCALES)
    jobs = [(x0, xi) for x0 in _points(task["locations"], d) for xi in _points(task["directions"], d)]

    def one(job):
        return wavefront_probe(phi, a, job[0], job[1], scale_ladder=scales)

    if cfg.parallel > 1:
        with ThreadPoolExecutor(cfg.parallel) as pool:
            probes = list(pool.map(one, jobs))
    else:
        probes = [one(j) for j in jobs]
    path = f"{task['id']}_probes.csv"
    write_probe_csv(probes, out / path)
    dist = probe_distances(probes, all_faces(phi, cfg.search(), frames=False))
    tol = task.get("inclusion_tol", 0.05)
    flagged = [(p, dd) for p, dd in zip(probes, dist) if p.flagged]
    outside = [{"x0": p.x0.tolist(), "direction": p.direction.tolist(), "distance": dd} for p, dd in flagged if dd > tol]
    numbers = {
        "probes": len(probes),
        "flagged": len(flagged),
        "max_flagged_distance": max((dd for _, dd in flagged), default=None),
        "inclusion_tol": tol,
        "outside": outside,
        "flags": [{"x0": p.x0.tolist(), "direction": p.direction.tolist(), "slope": p.slope} for p, _ in flagged],
    }
    ok = not outside
    if task.get("expect_no_flags", False) and flagged:
        ok = False
    return ok, "pass" if ok else "fail", numbers, [path]


RUNNERS = {
    "check-symbol": _task_check_symbol,
    "check-phase": _task_check_phase,
    "stationary": _task_stationary,
    "lagrangian-verify": _task_lagrangian,
    "parametrize": _task_parametrize,
    "equivalence": _task_equivalence,
    "oscint": _task_oscint,
    "wavefront": _task_wavefront,
}


# --- report --------------------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _run_task(task, defs, cfg, out) -> dict:
    expect = task.get("expect", "pass")
    entry = {"id": task["id"], "kind": task["kind"], "expected": expect}
    t0 = time.perf_counter()
    try:
        ok, detail, numbers, files = RUNNERS[task["kind"]](task, defs, cfg, out)
        entry.update(verdict="pass" if ok else "fail", detail=detail, numbers=numbers, files=files, failed=False)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        files = sorted(p.name for p in out.glob(f"{task['id']}_*"))
        entry.update(verdict="fail", detail="error", numbers={}, files=files, failed=True, error=str(exc))
    entry["wall_time_s"] = time.perf_counter() - t0
    met = entry["verdict"] == expect
    if "expect_detail" in task:
        entry["expected_detail"] = task["expect_detail"]
        met = met and entry["detail"] == task["expect_detail"]
    if "expect_error" in task:
        entry["expected_error"] = task["expect_error"]
        met = met and task["expect_error"] in entry.get("error", "")
    entry["met_expectation"] = met
    return entry


def run(scenario, out_dir, config: RunConfig | None = None, ci: bool = False) -> tuple[dict, int]:
    """Run a scenario (path, corpus name or :class:`Scenario`) and write its outputs.

    Returns the report and the exit code.  Raises :class:`ScenarioError` on
    input errors before any task runs.
    """
    cfg = config or RunConfig()
    sc = scenario if isinstance(scenario, Scenario) else load_scenario(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    entries = [_run_task(task, sc.definitions, cfg, out) for task in sc.tasks]
    passed = sum(e["verdict"] == "pass" for e in entries)
    met = sum(e["met_expectation"] for e in entries)
    if ci:
        code = 0 if met == len(entries) else 1
    else:
        code = 0 if passed == len(entries) else 1
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "sgcalc", "version": __version__},
        "scenario": {"name": sc.name, "file": sc.file, "sha256": sc.sha256, "dims": {"d": sc.d, "s": sc.s}},
        "seed": cfg.seed,
        "config": {**cfg.to_json(), "mode": "ci" if ci else "strict"},
        "tasks": entries,
        "summary": {
            "tasks": len(entries),
            "passed": passed,
            "failed": len(entries) - passed,
            "met_expectation": met,
            "exit_code": code,
        },
        "wall_time_s": time.perf_counter() - t0,
    }
    report = _jsonable(report)
    jsonschema.validate(report, report_schema())
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report, code


# --- explain -------------------------------------------------------------------------------

EXPLAIN = {
    "check-symbol": (
        "Symbol estimates and classicality.",
        "Samples every derivative D_t^alpha D_x^beta with |alpha| + |beta| up to max_deriv along dyadic "
        "rays and in a box, weights it by <x>^(|beta| - m_e) <t>^(|alpha| - m_psi) and fits the growth of "
        "the weighted values against log(<x><t>); a positive growth rate signals a violated estimate. "
        "When the symbol declares its three principal components (e, psi, corner), both iterated radial "
        "limits are compared with the corner component at random direction pairs. With ellipticity "
        "enabled, the transported symbol is sampled on the three boundary faces of the compactified "
        "product of balls and must stay away from zero.",
    ),
    "check-phase": (
        "Admissibility and non-degeneracy of a phase function.",
        "A real phase of order (1,1) is admissible when <x>^2 |grad_x phi|^2 + <t>^2 |grad_t phi|^2 "
        "is bounded below by a multiple of <x>^2 <t>^2 outside a compact set. The ratio is sampled on a "
        "dyadic mesh with |x| + |t| >= R, and the transported gradient pair is sampled on every boundary "
        "face of the compactification. The worst point is reported as a witness. For an "
        "admissible phase every boundary stationary point (where the fiber gradient of the face "
        "component vanishes) is tested for non-degeneracy: the Jacobian of the stationarity map must "
        "have full rank s.",
    ),
    "stationary": (
        "Boundary stationary sets.",
        "Solves for the points on the e face (|x| at infinity), the psi face (|t| at infinity) and the "
        "corner where the fiber gradient of the corresponding principal component vanishes, by damped "
        "Newton from a seed mesh followed by deduplication, and maps each point to the cotangent "
        "boundary through the gradient in x. The cloud is written as CSV.",
    ),
    "lagrangian-verify": (
        "Lagrangian certification of the boundary image.",
        "Attaches tangent frames to every image point and checks that the tautological form xi.dx "
        "vanishes on the psi component, the exit form -x.dxi vanishes on the e component, both vanish "
        "at the corner, and x and xi are orthogonal at corner points. Frame sizes must be d-1 on the "
        "faces and d-2 at the corner, and corner points must be limits of both side families.",
    ),
    "parametrize": (
        "Phase functions from graph data.",
        "Builds a phase whose boundary Lagrangian is the graph of the given data: the e part pairs the "
        "fiber with the position coordinates, the psi part pairs it with the covector coordinates, and the "
        "parts are glued with excision functions. Homogeneity, a conormality gate at the corner and the "
        "graph identities are checked before building. With a source phase (or extraction from one), "
        "the boundary clouds of source and rebuilt phase are compared face by face in Hausdorff distance.",
    ),
    "equivalence": (
        "Principal-level equivalence of two phases.",
        "Necessary conditions for two phases to define the same oscillatory integrals up to lower order: "
        "their boundary Lagrangians must coincide, the transported phase values must agree at matched "
        "points, and the fiber Hessians must have equal signatures there. The verdict names the first "
        "condition that fails.",
    ),
    "oscint": (
        "Oscillatory integral paired with a test function.",
        "Evaluates the pairing of the oscillatory integral of e^(i phi) a with a Gaussian-type test "
        "function by damping the fiber integral with e^(-eps |t|^2) along a ladder of eps values and "
        "extrapolating to eps = 0 with a quadratic model. For admissible phases the limit exists and "
        "does not depend on the damping. An optional reference value is checked at a relative tolerance.",
    ),
    "wavefront": (
        "Wave-front probes and the inclusion into the Lagrangian.",
        "At each location x0 and direction xi, pairs the oscillatory integral with a wave packet of "
        "width lam^-1/2 modulated at frequency lam xi and fits the decay of the result over a ladder "
        "of lam. Slow decay flags a possible wave-front direction. Every flagged probe must lie within "
        "the inclusion tolerance of the computed Lagrangian in compactified coordinates; regular "
        "directions are not required to be off it.",
    ),
}


def explain(task: str) -> str:
    if task not in EXPLAIN:
        raise ScenarioError(f"unknown task {task!r}; choose one of {', '.join(TASK_KINDS)}")
    title, body = EXPLAIN[task]
    return f"{task}: {title}\n\n{body}\n"


# --- entry point ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgcalc", description="Checks and computations for SG phase functions.")
    ap.add_argument("--version", action="version", version=f"sgcalc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or a bundled scenario by name")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--eps-ell", type=float, default=1e-6, help="ellipticity threshold")
    r.add_argument("--newton-tol", type=float, default=1e-10, help="Newton residual tolerance")
    r.add_argument("--parallel", type=int, default=1, help="worker threads for probe grids")
    r.add_argument("--ci", action="store_true", help="exit 0 when every task meets its declared expectation")
    sub.add_parser("corpus", help="list bundled scenarios")
    e = sub.add_parser("explain", help="describe what a task kind checks")
    e.add_argument("task", choices=TASK_KINDS)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "corpus":
        for item in corpus_list():
            print(f"{item['name']:<18} {item['tasks']:>2} tasks  {item['description']}")
        return 0
    if args.command == "explain":
        print(explain(args.task), end="")
        return 0
    if args.parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return 2
    cfg = RunConfig(args.seed, args.eps_ell, args.newton_tol, args.parallel)
    try:
        report, code = run(args.scenario, args.out, cfg, ci=args.ci)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for t in report["tasks"]:
        mark = "ok" if t["met_expectation"] else "UNEXPECTED"
        print(f"{t['id']:<24} {t['verdict']:<5} ({t['detail']}) expected {t['expected']:<5} {mark}")
    s = report["summary"]
    print(f"{s['passed']}/{s['tasks']} passed, {s['met_expectation']}/{s['tasks']} as expected -> exit {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
