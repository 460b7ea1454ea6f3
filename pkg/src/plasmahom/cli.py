"""plasmahom command-line front end.

One JSON configuration drives one task: mesh generation, a cell solve, a
tensor evaluation, a frequency sweep, a closed-form ENZ analysis or a macro
run.  Artifacts are written atomically into the output directory, embed the
configuration hash, and rerunning an identical configuration reproduces
byte-identical CSV/JSON artifacts.

Subcommands:
    plasmahom run CONFIG [--set dotted.key=value ...]
    plasmahom validate CONFIG
    plasmahom version

Exit codes: 0 success, 2 configuration/validation error, 3 solver failure.
The environment variable PLASMAHOM_THREADS overrides solver.parallelism.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, analysis, cellsolver, enz, macrosolver, svgplot
from .effperm import (check_divergence_free, effective_permittivity_closed_form,
                      effective_permittivity_fem, tensor_structure_check)
from .errors import ConfigError, PlasmahomError
from .geometry import geometry_from_config
from .materials import (DEFAULT_RELAX_TIME, complex_to_pair,
                        material_builder_from_config, rescaled_eta)
from .meshing import generate_mesh, write_mesh

ARTIFACT_VERSION = 1
CONFIG_VERSION = 1

_GEOMETRY_KEYS = {"kind", "width", "radius", "center", "amplitude", "periods"}
_MATERIAL_KEYS = {"eps_bulk", "sigma_surface", "lambda_line",
                  "lambda_matches_sigma_flux", "drude"}
_DRUDE_KEYS = {"E_F_tilde", "d_tilde", "tau_ps", "omega_tilde"}
_SOLVER_KEYS = {"h", "tol", "parallelism", "grade", "method"}
_OUTPUT_KEYS = {"directory", "formats"}
_TASK_KEYS = {
    "mesh": {"name"},
    "cell": {"name", "omega_tilde", "directions"},
    "effperm": {"name", "omega_tilde"},
    "sweep": {"name", "omega_min", "omega_max", "n_points", "entry"},
    "enz": {"name", "eps_bar", "sigma_bar_d", "lambda_bar_d", "omega",
            "spacing", "from_drude"},
    "macro": {"name", "kind", "eps_slab", "thickness", "distance",
              "resolution", "omega", "eps_ambient"},
}
_FORMATS = {"csv", "json", "svg", "mesh", "bin"}


def _check_keys(block: dict, allowed: set, where: str, issues: list):
    unknown = sorted(set(block) - allowed)
    if unknown:
        issues.append(f"{where}: unknown keys {unknown}")


def validate_config(cfg: dict) -> list[str]:
    """Schema plus cross-field validation; returns a list of issues."""
    issues = []
    if not isinstance(cfg, dict):
        return ["configuration root must be a JSON object"]
    _check_keys(cfg, {"version", "geometry", "material", "solver", "task",
                      "output"}, "top level", issues)
    if cfg.get("version") != CONFIG_VERSION:
        issues.append(f"config schema version must be {CONFIG_VERSION}")

    task = cfg.get("task")
    if not isinstance(task, dict) or "name" not in task:
        issues.append("task block with a 'name' is required")
        return issues
    name = task["name"]
    if name not in _TASK_KEYS:
        issues.append(f"unknown task {name!r}; expected one of {sorted(_TASK_KEYS)}")
        return issues
    _check_keys(task, _TASK_KEYS[name], f"task.{name}", issues)

    needs_geometry = name in ("mesh", "cell", "effperm", "sweep")
    if needs_geometry:
        geo = cfg.get("geometry")
        if not isinstance(geo, dict):
            issues.append("geometry block is required for this task")
        else:
            _check_keys(geo, _GEOMETRY_KEYS, "geometry", issues)
            try:
                geometry_from_config(geo)
            except PlasmahomError as exc:
                issues.append(f"geometry: {exc}")

    if name in ("cell", "effperm", "sweep"):
        matb = cfg.get("material")
        if not isinstance(matb, dict):
            issues.append("material block is required for this task")
        else:
            _check_keys(matb, _MATERIAL_KEYS, "material", issues)
            if isinstance(matb.get("drude"), dict):
                _check_keys(matb["drude"], _DRUDE_KEYS, "material.drude", issues)
            try:
                material_builder_from_config(matb)(1.0)
            except PlasmahomError as exc:
                issues.append(f"material: {exc}")

    solver = cfg.get("solver", {})
    if not isinstance(solver, dict):
        issues.append("solver block must be an object")
        solver = {}
    _check_keys(solver, _SOLVER_KEYS, "solver", issues)
    h = solver.get("h", 0.02)
    if not 0.0 < float(h) <= 0.5:
        issues.append(f"solver.h must lie in (0, 0.5], got {h}")
    if int(solver.get("parallelism", 1)) < 1:
        issues.append("solver.parallelism must be >= 1")

    out = cfg.get("output", {})
    if not isinstance(out, dict):
        issues.append("output block must be an object")
        out = {}
    _check_keys(out, _OUTPUT_KEYS, "output", issues)
    bad = set(out.get("formats", [])) - _FORMATS
    if bad:
        issues.append(f"output.formats: unknown formats {sorted(bad)}")

    if name == "sweep":
        lo = float(task.get("omega_min", 0.5))
        hi = float(task.get("omega_max", 4.0))
        if not lo < hi:
            issues.append("sweep grid must be increasing (omega_min < omega_max)")
        if int(task.get("n_points", 120)) < 2:
            issues.append("sweep needs at least 2 points")
    if name in ("cell", "effperm"):
        if float(task.get("omega_tilde", 0.0)) <= 0.0:
            issues.append(f"task.{name}: positive omega_tilde is required")
    if name == "enz" and "from_drude" not in task:
        for key in ("sigma_bar_d", "omega"):
            if key not in task:
                issues.append(f"task.enz: missing {key}")
    if name == "macro":
        if task.get("kind", "enz_slab") not in ("enz_slab", "dipole"):
            issues.append("task.macro.kind must be 'enz_slab' or 'dipole'")
    return issues


def apply_overrides(cfg: dict, pairs: list[str]) -> dict:
    """Apply dotted-path overrides; values parse as JSON with string fallback."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _atomic_write(path: str, data, binary=False):
    tmp = path + ".tmp"
    mode = "wb" if binary else "w"
    with open(tmp, mode) as f:
        f.write(data)
    os.replace(tmp, path)


def _atomic_call(path: str, writer):
    tmp = path + ".tmp"
    writer(tmp)
    os.replace(tmp, path)


def _write_json(path, payload, chash):
    doc = {"artifact_version": ARTIFACT_VERSION, "config_hash": chash}
    doc.update(payload)
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


class _Run:
    def __init__(self, cfg: dict, base_dir: str = "."):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        out = cfg.get("output", {})
        outdir = out.get("directory", ".")
        # relative paths are anchored at the config file's directory
        self.outdir = outdir if os.path.isabs(outdir) else os.path.join(base_dir, outdir)
        self.formats = set(out.get("formats", ["csv", "json"]))
        os.makedirs(self.outdir, exist_ok=True)
        self.outputs = []
        solver = cfg.get("solver", {})
        self.h = float(solver.get("h", 0.02))
        self.tol = float(solver.get("tol", 1e-10))
        self.grade = solver.get("grade")
        self.method = solver.get("method", "direct")
        par = int(solver.get("parallelism", 1))
        env = os.environ.get("PLASMAHOM_THREADS")
        self.parallelism = int(env) if env else par

    def path(self, name):
        p = os.path.join(self.outdir, name)
        self.outputs.append(p)
        return p

    def geometry(self):
        return geometry_from_config(self.cfg["geometry"])

    def mesh(self, geom):
        return generate_mesh(geom, self.h,
                             None if self.grade is None else float(self.grade))

    def material_builder(self):
        return material_builder_from_config(self.cfg.get("material", {}))

    # ----- tasks ------------------------------------------------------

    def task_mesh(self, task):
        mesh = self.mesh(self.geometry())
        _atomic_call(self.path("mesh.txt"), lambda p: write_mesh(mesh, p))
        summary = {"n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
                   "interface_length": mesh.interface_length(),
                   "mesh_id": mesh.mesh_id}
        _write_json(self.path("mesh.json"), summary, self.hash)
        return summary

    def task_cell(self, task):
        geom = self.geometry()
        mesh = self.mesh(geom)
        omega = float(task["omega_tilde"])
        mat = self.material_builder()(omega)
        parts = cellsolver.build_operator_parts(mesh, mat)
        dirs = [int(d) for d in task.get("directions", [1, 2])]
        info = {}
        for j in dirs:
            system = cellsolver.assemble(mesh, mat, omega, j, parts)
            chi = cellsolver.solve(system, tol=self.tol, method=self.method)
            _atomic_call(self.path(f"corrector_j{j}.csv"),
                         lambda p, c=chi: cellsolver.export_corrector_csv(c, p))
            if "svg" in self.formats:
                _atomic_call(self.path(f"corrector_j{j}.svg"),
                             lambda p, c=chi: svgplot.corrector_panels_svg(c, p))
            info[f"j{j}"] = {"max_abs_chi": float(np.abs(chi.nodal_values).max()),
                             "residual": chi.residual}
        _write_json(self.path("cell.json"),
                    {"omega_tilde": omega, "mesh_id": mesh.mesh_id,
                     "correctors": info}, self.hash)
        return info

    def task_effperm(self, task):
        geom = self.geometry()
        mesh = self.mesh(geom)
        omega = float(task["omega_tilde"])
        mat = self.material_builder()(omega)
        parts = cellsolver.build_operator_parts(mesh, mat)
        correctors = [cellsolver.solve(cellsolver.assemble(mesh, mat, omega, j, parts),
                                       tol=self.tol, method=self.method)
                      for j in (1, 2)]
        tensor = effective_permittivity_fem(mesh, correctors, mat, omega)
        payload = {"fem": tensor.to_json_dict()}
        report = check_divergence_free(mat, geom)
        payload["divergence_free"] = {"volume_ok": report.volume_ok,
                                      "surface_ok": report.surface_ok,
                                      "edge_ok": report.edge_ok,
                                      "overall": report.overall}
        if report.overall:
            closed = effective_permittivity_closed_form(mat, geom, omega)
            payload["closed_form"] = closed.to_json_dict()
        if geom.kind in ("planar_sheet", "ribbon", "tube"):
            chk = tensor_structure_check(tensor, geom.kind)
            payload["structure_check"] = {"passed": chk.passed,
                                          **{k: (v if isinstance(v, str) else float(v))
                                             for k, v in chk.diagnostics.items()}}
        _write_json(self.path("eps_eff.json"), payload, self.hash)
        return payload

    def task_sweep(self, task):
        geom = self.geometry()
        mesh = self.mesh(geom)
        grid = np.linspace(float(task.get("omega_min", 0.5)),
                           float(task.get("omega_max", 4.0)),
                           int(task.get("n_points", 120)))
        entry = task.get("entry", "eps11")
        records = analysis.frequency_sweep(geom, self.material_builder(), grid,
                                           tol=self.tol, mesh=mesh,
                                           parallelism=self.parallelism)
        _atomic_call(self.path("sweep.csv"),
                     lambda p: analysis.write_sweep_csv(
                         records, p,
                         f"plasmahom-sweep {ARTIFACT_VERSION} config={self.hash}"))
        summary = {"n_points": len(records),
                   "n_failed": sum(not r.ok for r in records),
                   "mesh_id": mesh.mesh_id, "entry": entry}
        try:
            fit = analysis.fit_lorentzian(records, entry)
            summary["fit"] = {"resonance_freq": fit.resonance_freq,
                              "amplitude": fit.amplitude, "width": fit.width,
                              "background": complex_to_pair(fit.background),
                              "rms_residual": fit.rms_residual}
            roots = analysis.find_enz_frequency(records, entry)
            summary["enz_crossings"] = [{"omega_tilde": r, "direction": d}
                                        for r, d in roots]
        except PlasmahomError as exc:
            summary["fit_error"] = str(exc)
        _write_json(self.path("fit.json"), summary, self.hash)
        if "svg" in self.formats:
            _atomic_call(self.path("sweep.svg"),
                         lambda p: svgplot.sweep_plot_svg(records, p, entry))
        return summary

    def task_enz(self, task):
        if "from_drude" in task:
            d = task["from_drude"]
            omega = float(d["omega_tilde"])
            dt = float(d["d_tilde"])
            eta = rescaled_eta(float(d["E_F_tilde"]), dt, omega)
            sigma_bar_d = 1j * omega * dt * eta
        else:
            omega = float(task["omega"])
            dt = float(task.get("spacing", 1.0))
            sigma_bar_d = _pair(task.get("sigma_bar_d", 0.0))
        params = enz.EnzParams(
            eps_bar=_pair(task.get("eps_bar", 1.0)),
            sigma_bar_d=sigma_bar_d,
            lambda_bar_d=_pair(task.get("lambda_bar_d", 0.0)),
            omega=omega, spacing=dt)
        report = enz.analyze(params)
        payload = report.to_json_dict()
        _write_json(self.path("enz.json"), payload, self.hash)
        return payload

    def task_macro(self, task):
        kind = task.get("kind", "enz_slab")
        omega = float(task.get("omega", 2.0 * np.pi))
        if kind == "enz_slab":
            eps_slab = _pair(task.get("eps_slab", [0.0, 0.022]))
            prob, layout = macrosolver.enz_slab_problem(
                eps_slab, thickness=float(task.get("thickness", 0.2)),
                distance=float(task.get("distance", 5.0)),
                resolution=int(task.get("resolution", 80)), omega=omega)
            field = macrosolver.solve_macro(prob, tol=min(self.tol, 1e-8))
            spread = macrosolver.interior_phase_spread(
                field, layout["slab_lo"], layout["slab_hi"])
            payload = {"kind": kind, "residual": field.residual,
                       "phase_spread_deg": spread,
                       "divergence_residual": macrosolver.divergence_check(field, prob)}
        else:
            eps = _pair(task.get("eps_ambient", 1.0))
            res = int(task.get("resolution", 30))
            src = macrosolver.GaussianCurrent(center=(3.0, 2.0), radius=2 * 6.0 / (6 * res))
            prob = macrosolver.MacroProblem.homogeneous(
                eps, nx=6 * res, ny=6 * res, omega=omega, source=src)
            field = macrosolver.solve_macro(prob, tol=min(self.tol, 1e-8))
            payload = {"kind": kind, "residual": field.residual,
                       "divergence_residual": macrosolver.divergence_check(field, prob)}
        if "bin" in self.formats:
            _atomic_call(self.path("field.bin"),
                         lambda p: macrosolver.write_field_dump(field, p))
        if "svg" in self.formats:
            _atomic_call(self.path("field_maps.svg"),
                         lambda p: svgplot.macro_maps_svg(field, p))
        _write_json(self.path("macro.json"), payload, self.hash)
        return payload


def _pair(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def run_config(cfg: dict, base_dir: str = ".") -> tuple[int, dict]:
    issues = validate_config(cfg)
    if issues:
        return 2, {"status": "invalid", "issues": issues}
    run = _Run(cfg, base_dir)
    task = cfg["task"]
    handler = getattr(run, f"task_{task['name']}")
    try:
        result = handler(task)
    except PlasmahomError as exc:
        return 3, {"status": "solver_error", "task": task["name"],
                   "error": str(exc), "config_hash": run.hash}
    return 0, {"status": "ok", "task": task["name"], "outputs": run.outputs,
               "config_hash": run.hash, "summary_keys": sorted(result)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plasmahom", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute the task in a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override (JSON-parsed value)")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(json.dumps({"plasmahom": __version__}))
        return 0

    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"status": "invalid", "issues": [f"cannot load config: {exc}"]}))
        return 2

    if args.command == "validate":
        issues = validate_config(cfg)
        print(json.dumps({"status": "ok" if not issues else "invalid",
                          "issues": issues}))
        return 0 if not issues else 2

    try:
        cfg = apply_overrides(cfg, args.set)
    except ConfigError as exc:
        print(json.dumps({"status": "invalid", "issues": [str(exc)]}))
        return 2
    code, summary = run_config(cfg, base_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.set:
        summary["overrides"] = args.set
    print(json.dumps(summary, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
