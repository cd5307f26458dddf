"""Command-line front end: families, experiments and artifacts.

Subcommands
-----------
constants   print ``c_{n,s}``, ``gamma_{n,s}``, ``r0`` and related values as
            ``name,n,s,params,value`` rows
geometry    metric report of a family domain or a ``domain2 v1`` file as
            ``quantity,value,error_bound`` rows
solve       one Dirichlet solve, written as ``field2 v1`` plus a CSV
verify      quick torsion and principal-value consistency checks
sweep       run a configuration file (all grid points) into ``out_dir``

Configuration files are TOML with one ``[experiment]`` table; command-line
flags override its keys.  Outputs are written to a temporary directory
which is renamed into place once complete, so a failed run leaves nothing
behind.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import tomli

from . import __version__
from .constants import BallSpec, FracParams, c_ns, gamma_ns, r0_half_level, torsion_profile, unit_ball_volume
from .geometry.domain import AnnularDomain, Domain2
from .geometry.io import read_domain
from .geometry.measures import minkowski_sum_disk, rho_deviation, touching_ball_radii
from .geometry.planes import BISECTION_FRACTION, containment_margin, critical_value
from .solver.field import Field
from .solver.io import write_field, write_field_csv
from .solver.mesh import mesh_annular, mesh_exterior, mesh_torsion
from .solver.pv import frac_laplacian_pv_many
from .solver.solve import probe_points, solve_annular, solve_exterior, solve_torsion_ball
from .stability import (
    STABILITY_COLUMNS,
    SweepRecord,
    directions,
    exponent_fit,
    hopf_lower_bound_check,
    one_sided_constant,
    record_seed,
    stability_check_annular,
    stability_check_exterior,
)

PROBLEMS = ("exterior", "annular", "torsion")
FAMILIES = ("disk", "ellipse", "cos3", "square_rounded", "custom_file")
TASKS = ("stability", "solve", "torsion", "hopf")
#: radius of the fixed outer disk of the annular families
ANNULAR_OUTER_RADIUS = 3.0
#: offset radius of the ``square_rounded`` family
SQUARE_ROUNDING = 0.2

SWEEP_COLUMNS = ("family_name", "epsilon", "s", "h", "seed", "deficit", "rho", "censored",
                 "symmetric", "empirical_C", "run_id")
FIT_COLUMNS = ("family_name", "s", "records", "censored_records", "one_sided_C",
               "slope", "intercept", "r2", "reference_slope", "fit_scope")
TORSION_COLUMNS = ("s", "h", "radius", "linf_rel_error", "center_value", "center_exact",
                   "pv_residual_max", "iterations", "energy")
HOPF_COLUMNS = ("s", "h", "passed", "min_slack", "C_H", "essinf_K", "cells",
                "sharpness_scale", "sharpness_passed")
SOLVE_COLUMNS = ("problem", "s", "h", "energy", "pv_residual_max", "iterations",
                 "truncation_radius", "unknowns", "u_min", "u_max")


class StageError(RuntimeError):
    """An experiment stage failed; ``stage`` names it."""

    def __init__(self, stage: str, msg: str):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


# -- configuration -------------------------------------------------------------
def _number(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem, a domain family and parameter grids.

    ``h`` and grid entries may be given as fraction strings such as
    ``"1/48"``.
    """

    problem: str = "exterior"
    family: str = "disk"
    epsilon_grid: tuple = (0.0,)
    s_grid: tuple = (0.5,)
    R: float = 0.5
    h: float = 1 / 32
    box_scale: float = 1.0
    seed: int = 0
    out_dir: str = "out"
    task: str = ""
    name: str = ""
    domain_file: str = ""
    normalization: str = "printed"
    vertices: int = 512
    hopf_ball: tuple = (2.0, 0.0, 0.5)
    hopf_K: tuple = (0.0, 4.5, 0.5)
    hopf_sharpness: float = 10.0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("epsilon_grid", tuple(_number(e) for e in self.epsilon_grid))
        set_("s_grid", tuple(_number(s) for s in self.s_grid))
        for k in ("R", "h", "box_scale", "hopf_sharpness"):
            set_(k, _number(getattr(self, k)))
        set_("hopf_ball", tuple(_number(v) for v in self.hopf_ball))
        set_("hopf_K", tuple(_number(v) for v in self.hopf_K))
        set_("seed", int(self.seed))
        set_("vertices", int(self.vertices))
        if not self.task:
            set_("task", "torsion" if self.problem == "torsion" else "stability")
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.epsilon_grid or not self.s_grid:
            raise ValueError("epsilon_grid and s_grid must be nonempty")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h!r}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R!r}")
        if not self.box_scale > 0:
            raise ValueError(f"box_scale must be positive, got {self.box_scale!r}")
        if self.family == "custom_file" and not self.domain_file:
            raise ValueError("family custom_file needs domain_file")
        if len(self.hopf_ball) != 3 or len(self.hopf_K) != 3:
            raise ValueError("hopf_ball and hopf_K are [x, y, radius]")

    def point(self, epsilon: float, s: float) -> "ExperimentConfig":
        """The configuration restricted to one grid point."""
        return replace(self, epsilon_grid=(epsilon,), s_grid=(s,))

    def resolved(self) -> str:
        """Canonical TOML text of the configuration, ``out_dir`` excluded so
        that run ids do not depend on where results go."""
        lines = ["[experiment]"]
        for f_ in fields(self):
            if f_.name == "out_dir":
                continue
            lines.append(f"{f_.name} = {_toml_value(getattr(self, f_.name))}")
        return "\n".join(lines) + "\n"

    def run_id(self) -> str:
        """Stable 12-hex-digit hash of the resolved configuration."""
        return hashlib.sha256(self.resolved().encode()).hexdigest()[:12]


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read the ``[experiment]`` table of a TOML file and apply overrides.

    Relative ``domain_file`` paths are resolved against the file's folder.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    table = dict(data.get("experiment", data))
    known = {f_.name for f_ in fields(ExperimentConfig)}
    unknown = set(table) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    if table.get("domain_file"):
        p = Path(table["domain_file"])
        table["domain_file"] = str(p if p.is_absolute() else (path.parent / p).resolve())
    table.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig(**table)


# -- families ------------------------------------------------------------------
def build_family_domain(family: str, epsilon: float, annular: bool = False, path: str | None = None,
                        n: int = 512):
    """Domain of a test family at parameter ``epsilon``.

    ``disk`` is the unit disk for every ``epsilon``; ``ellipse`` has
    semiaxes ``(1 + epsilon, 1)``; ``cos3`` is ``r = 1 + epsilon cos 3t``;
    ``square_rounded`` is the unit square offset by 0.2; ``custom_file``
    reads ``path``.  With ``annular=True`` the domain, shifted by
    ``(epsilon, 0)``, becomes the inner set of an annulus whose outer set
    is the disk of radius 3 about the origin.

    Raises
    ------
    ValueError
        For an unknown family or an ``epsilon`` that breaks the curve.
    """
    eps = float(epsilon)
    if family == "disk":
        d = Domain2.disk((0.0, 0.0), 1.0, n)
    elif family == "ellipse":
        if not 1 + eps > 0:
            raise ValueError(f"ellipse needs 1 + epsilon > 0, got epsilon = {eps}")
        d = Domain2.ellipse(1 + eps, 1.0, n=n)
        d = Domain2(d.boundary, name="ellipse")
    elif family == "cos3":
        if not abs(eps) < 1:
            raise ValueError(f"cos3 needs |epsilon| < 1 for a simple curve, got {eps}")
        d = Domain2.from_polar(lambda t: 1 + eps * np.cos(3 * t), (0.0, 0.0), n, name="cos3")
    elif family == "square_rounded":
        d = minkowski_sum_disk(Domain2.rectangle(1.0, 1.0, n=n), SQUARE_ROUNDING, n=n)
        d = Domain2(d.boundary, name="square_rounded")
    elif family == "custom_file":
        if not path:
            raise ValueError("custom_file needs a domain path")
        d = read_domain(path)
    else:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if not annular:
        return d
    inner = Domain2(d.translated((eps, 0.0)).boundary, name=f"{d.name}-shifted")
    outer = Domain2.disk((0.0, 0.0), ANNULAR_OUTER_RADIUS, max(n, 1024))
    return AnnularDomain(inner, outer)


def _config_domain(cfg: ExperimentConfig, eps: float):
    return build_family_domain(cfg.family, eps, annular=cfg.problem == "annular",
                               path=cfg.domain_file or None, n=cfg.vertices)


# -- writers -------------------------------------------------------------------
def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Sequence[dict], schema: str):
    """CSV with a ``# schema`` comment line, a header row and data rows."""
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _svg_plot(path, draw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "fraccap", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": f"fraccap {__version__}"})
        plt.close(fig)


def _plot_sweep(path, records, s_values):
    def draw(ax):
        for s in s_values:
            rs = [r for r in records if r.s == s and r.deficit > 0 and r.rho > 0]
            if not rs:
                continue
            x = np.array([r.deficit for r in rs])
            y = np.array([r.rho for r in rs])
            ax.loglog(x, y, "o", label=f"s = {s:g}")
            C = one_sided_constant(rs)
            xx = np.geomspace(x.min(), x.max(), 20)
            ax.loglog(xx, C * xx ** (1 / (s + 2)), "--", label=f"C deficit^(1/(s+2)), C = {C:.3g}")
        ax.set_xlabel("deficit")
        ax.set_ylabel("rho")
        ax.set_title("ball deviation against deficit")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)

    _svg_plot(path, draw)


def _plot_profile(path, xs, ys, label, ref=None):
    def draw(ax):
        ax.plot(xs, ys, "-", label=label)
        if ref is not None:
            ax.plot(xs, ref, "--", label="closed form")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend(fontsize=8)

    _svg_plot(path, draw)


# -- runs ----------------------------------------------------------------------
def _params(cfg: ExperimentConfig, s: float) -> FracParams:
    return FracParams(2, s, normalization=cfg.normalization)


def _solve(cfg: ExperimentConfig, dom, p: FracParams):
    if cfg.problem == "exterior":
        m = mesh_exterior(dom, p, cfg.h, box_scale=cfg.box_scale)
        return m, solve_exterior(dom, p, m)
    if cfg.problem == "annular":
        m = mesh_annular(dom, cfg.h)
        return m, solve_annular(dom, p, m)
    b = BallSpec((0.0, 0.0), 1.0)
    m = mesh_torsion(b, cfg.h)
    return m, solve_torsion_ball(b, p, m)


def torsion_errors(field_: Field, b: BallSpec, p: FracParams, min_dist: float) -> float:
    """Relative L-infinity error against the closed form on cells at least
    ``min_dist`` inside the ball."""
    c = field_.mesh.centers()
    ex = torsion_profile(b, p, c)
    sel = b.radius - np.hypot(c[:, 0] - b.center[0], c[:, 1] - b.center[1]) >= min_dist
    return float(np.abs(field_.values.ravel() - ex)[sel].max() / ex.max())


def _run_point(cfg: ExperimentConfig, tmp: Path) -> dict:
    """Run one grid point into ``tmp``; returns the sweep-row fields."""
    eps, s = cfg.epsilon_grid[0], cfg.s_grid[0]
    stage = "domain"
    try:
        p = _params(cfg, s)
        dom = _config_domain(cfg, eps) if cfg.problem != "torsion" else None
        stage = "solve"
        m, (fld, srep) = _solve(cfg, dom, p)
        write_field(tmp / "field.bin", fld)
        stage = "report"
        row = {"deficit": math.nan, "rho": math.nan, "censored": False, "symmetric": False,
               "empirical_C": math.nan}
        if cfg.task == "torsion":
            b = BallSpec((0.0, 0.0), 1.0)
            err = torsion_errors(fld, b, p, 3 * cfg.h)
            centre = float(fld.interpolate(np.zeros((1, 2)))[0])
            exact = float(torsion_profile(b, p, np.zeros((1, 2)))[0])
            write_csv(tmp / "report.csv", TORSION_COLUMNS, [{
                "s": s, "h": cfg.h, "radius": 1.0, "linf_rel_error": err, "center_value": centre,
                "center_exact": exact, "pv_residual_max": srep.pv_residual_max,
                "iterations": srep.iterations, "energy": srep.energy}], "torsion v1")
            xs = np.linspace(-1.5, 1.5, 301)
            pts = np.column_stack([xs, np.zeros_like(xs)])
            _plot_profile(tmp / "plot.svg", xs, fld.interpolate(pts), "cell solution",
                          torsion_profile(b, p, pts))
        elif cfg.task == "hopf":
            if cfg.problem != "exterior":
                raise ValueError("the Hopf task uses the exterior problem")
            bx, by, br = cfg.hopf_ball
            kx, ky, kr = cfg.hopf_K
            v = fld.one_minus()
            ball = BallSpec((bx, by), br)
            K = Domain2.disk((kx, ky), kr, 256)
            hop = hopf_lower_bound_check(v, ball, K, p)
            sharp = hopf_lower_bound_check(v, ball, K, p, scale=cfg.hopf_sharpness)
            write_csv(tmp / "report.csv", HOPF_COLUMNS, [{
                "s": s, "h": cfg.h, "passed": hop.passed, "min_slack": hop.min_slack, "C_H": hop.C_H,
                "essinf_K": hop.essinf_K, "cells": hop.cells, "sharpness_scale": cfg.hopf_sharpness,
                "sharpness_passed": sharp.passed}], "hopf v1")
            xs = np.linspace(bx - br, bx + br, 201)
            pts = np.column_stack([xs, np.full_like(xs, by)])
            _plot_profile(tmp / "plot.svg", xs, v.interpolate(pts), "1 - u",
                          hop.C_H * torsion_profile(ball, p, pts))
        elif cfg.task == "solve":
            write_csv(tmp / "report.csv", SOLVE_COLUMNS, [{
                "problem": cfg.problem, "s": s, "h": cfg.h, "energy": srep.energy,
                "pv_residual_max": srep.pv_residual_max, "iterations": srep.iterations,
                "truncation_radius": srep.truncation_radius, "unknowns": srep.unknowns,
                "u_min": float(fld.values.min()), "u_max": float(fld.values.max())}], "solve v1")
            xs = np.linspace(m.box[0], m.box[2], 401)
            _plot_profile(tmp / "plot.svg", xs, fld.interpolate(np.column_stack([xs, np.zeros_like(xs)])), "u")
        else:
            if cfg.problem == "exterior":
                rep = stability_check_exterior(dom, cfg.R, p, m, solution=(fld, srep))
            elif cfg.problem == "annular":
                rep = stability_check_annular(dom, cfg.R, p, m, solution=(fld, srep))
            else:
                raise ValueError("the stability task needs the exterior or annular problem")
            write_csv(tmp / "report.csv", STABILITY_COLUMNS, [rep.row()], "stability v1")
            row.update(deficit=rep.deficit, rho=rep.rho, censored=rep.censored,
                       symmetric=rep.symmetric, empirical_C=rep.empirical_C)
            outer = dom.outer.bbox[2] if cfg.problem == "annular" else 3.0
            xs = np.linspace(-outer, outer, 401)
            line = np.column_stack([xs, np.zeros_like(xs)])
            _plot_profile(tmp / "plot.svg", xs, fld.interpolate(line), "u on the x axis")
        return row
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - tagged and re-raised
        raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc


def _stamp(d: Path, cfg: ExperimentConfig):
    (d / "config.resolved").write_text(f"# fraccap {__version__}\n" + cfg.resolved(), encoding="utf-8")
    (d / "VERSION").write_text(f"fraccap {__version__}\n", encoding="utf-8")


def _commit(tmp: Path, final: Path):
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)


def run_experiment(cfg: ExperimentConfig, log=print) -> int:
    """Run every grid point of ``cfg`` and write all artifacts.

    Layout: ``out_dir/{run_id}/`` per grid point with ``config.resolved``,
    ``VERSION``, ``field.bin``, ``report.csv`` and ``plot.svg``; and
    ``out_dir/sweep-{run_id}/`` for the whole configuration with
    ``sweep.csv``, ``fit.csv`` and ``plot.svg``.  Each directory is built
    under a temporary name and renamed when complete.

    Returns
    -------
    int
        0 on success, 2 when a stage fails (the message names the stage).
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    temps = []
    try:
        records, rows, done = [], [], []
        for s in cfg.s_grid:
            for eps in cfg.epsilon_grid:
                pc = cfg.point(eps, s)
                rid = pc.run_id()
                tmp = Path(tempfile.mkdtemp(prefix=f".{rid}-", dir=out))
                temps.append(tmp)
                _stamp(tmp, pc)
                row = _run_point(pc, tmp)
                done.append((tmp, out / rid))
                seed = record_seed(cfg.family, eps, s, cfg.h) ^ cfg.seed
                rec = SweepRecord(cfg.family, eps, row["deficit"], row["rho"], s, cfg.h, seed, row["censored"])
                records.append(rec)
                rows.append({"family_name": cfg.family, "epsilon": eps, "s": s, "h": cfg.h, "seed": seed,
                             "deficit": row["deficit"], "rho": row["rho"], "censored": row["censored"],
                             "symmetric": row["symmetric"], "empirical_C": row["empirical_C"], "run_id": rid})
                log(f"run {rid}: family={cfg.family} epsilon={eps:g} s={s:g} done")
        sid = cfg.run_id()
        tmp = Path(tempfile.mkdtemp(prefix=f".sweep-{sid}-", dir=out))
        temps.append(tmp)
        _stamp(tmp, cfg)
        write_csv(tmp / "sweep.csv", SWEEP_COLUMNS, rows, "sweep v1")
        fits = []
        if cfg.task == "stability":
            for s in cfg.s_grid:
                rs = [r for r in records if r.s == s]
                fit = {"family_name": cfg.family, "s": s, "records": len(rs),
                       "censored_records": sum(bool(r.censored) for r in rs),
                       "one_sided_C": one_sided_constant(rs), "reference_slope": 1 / (s + 2),
                       "slope": math.nan, "intercept": math.nan, "r2": math.nan, "fit_scope": "none"}
                try:
                    fit.update(zip(("slope", "intercept", "r2"), exponent_fit(rs)), fit_scope="above_floor")
                except ValueError:
                    try:
                        fit.update(zip(("slope", "intercept", "r2"), exponent_fit(rs, floor=0.0)),
                                   fit_scope="all_records")
                    except ValueError:
                        pass
                fits.append(fit)
            _plot_sweep(tmp / "plot.svg", records, cfg.s_grid)
        write_csv(tmp / "fit.csv", FIT_COLUMNS, fits, "fit v1")
        done.append((tmp, out / f"sweep-{sid}"))
        for t, final in done:
            _commit(t, final)
        log(f"sweep {sid}: {len(records)} runs written to {out}")
        return 0
    except StageError as exc:
        log(f"error: {exc}")
        return 2
    finally:
        for t in temps:
            if t.exists():
                shutil.rmtree(t, ignore_errors=True)


# -- subcommands -------------------------------------------------------------
def _cmd_constants(args) -> int:
    p = FracParams(args.n, args.s, normalization=args.normalization)
    norm = f"normalization={p.normalization}"
    r = float(args.radius)
    rows = [("c_ns", norm, c_ns(p)), ("gamma_ns", norm, gamma_ns(p)), ("r0", "", r0_half_level(p)),
            ("omega_n", "", unit_ball_volume(p.n)),
            ("torsion_center", f"{norm};radius={_fmt(r)}", gamma_ns(p) * r ** (2 * p.s))]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "n", "s", "params", "value"])
    for name, params, v in rows:
        w.writerow([name, p.n, _fmt(p.s), params, _fmt(v)])
    return 0


def geometry_rows(d: Domain2) -> list:
    """``(quantity, value, error_bound)`` rows of the geometry report.

    Error bounds are relative to the smooth curve the polyline samples:
    they combine the sagitta bound of the polyline with the tolerances of
    the probing and bisection routines.  Counts and labels carry an empty
    bound.
    """
    sag = d.max_sagitta
    probe = 2.0 * sag + 1e-9 * d.diameter
    margin = containment_margin(d)
    rr = rho_deviation(d)
    r_int, r_ext = touching_ball_radii(d)
    rows = [("name", d.name, ""), ("vertices", len(d), ""), ("area", d.area, d.perimeter * sag),
            ("perimeter", d.perimeter, d.perimeter * 2 * sag / d.diameter), ("diameter", d.diameter, 2 * sag),
            ("rho", rr.rho, 2 * sag), ("rho_center_x", rr.center[0], ""), ("rho_center_y", rr.center[1], ""),
            ("r_int", r_int, probe), ("r_ext", r_ext, probe)]
    for k, e in enumerate(directions()):
        res = critical_value(d, e)
        rows.append((f"lambda_e_{k:02d}", res.frame.lam, margin + BISECTION_FRACTION * d.diameter))
        rows.append((f"case_{k:02d}", str(res.case), ""))
    return rows


def _cmd_geometry(args, cfg: ExperimentConfig) -> int:
    if args.domain:
        d = read_domain(args.domain)
    else:
        d = build_family_domain(cfg.family, cfg.epsilon_grid[0], path=cfg.domain_file or None, n=cfg.vertices)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["quantity", "value", "error_bound"])
    for k, v, err in geometry_rows(d):
        w.writerow([k, _fmt(v), _fmt(err)])
    return 0


def _cmd_solve(args, cfg: ExperimentConfig) -> int:
    s = cfg.s_grid[0]
    p = _params(cfg, s)
    if cfg.problem == "exterior":
        dom = read_domain(args.domain) if args.domain else _config_domain(cfg, cfg.epsilon_grid[0])
    elif cfg.problem == "annular":
        if args.domain and args.inner:
            dom = AnnularDomain(read_domain(args.inner), read_domain(args.domain))
        else:
            dom = _config_domain(cfg, cfg.epsilon_grid[0])
    else:
        dom = None
    _, (fld, rep) = _solve(cfg, dom, p)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_field(out, fld)
    write_field_csv(out.with_suffix(out.suffix + ".csv"), fld)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "value"])
    for k in ("energy", "pv_residual_max", "iterations", "h", "truncation_radius", "unknowns", "pv_probes"):
        w.writerow([k, _fmt(getattr(rep, k))])
    return 0


def _cmd_verify(args, cfg: ExperimentConfig) -> int:
    b = BallSpec((0.0, 0.0), 1.0)
    ok_all = True
    for s in cfg.s_grid:
        p = _params(cfg, s)
        m = mesh_torsion(b, cfg.h)
        fld, rep = solve_torsion_ball(b, p, m)
        err = torsion_errors(fld, b, p, 3 * cfg.h)
        exact = Field.from_function(m, lambda x: torsion_profile(b, p, x))
        pts = probe_points(m, count=20, region=((0.0, 0.0), 1.0), seed=cfg.seed)
        pv = frac_laplacian_pv_many(exact, p, pts)
        pv_dev = float(np.abs(pv - 1).max())
        ok = err < 0.05 and pv_dev < 0.03 and fld.values.min() >= -1e-8
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'} s={s:g} h={cfg.h:g} torsion_linf_rel={err:.4g} "
              f"pv_max_dev={pv_dev:.4g} pv_residual_solved={rep.pv_residual_max:.4g}")
    return 0 if ok_all else 1


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraccap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fraccap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML file with an [experiment] table")
        sp.add_argument("--problem", choices=PROBLEMS)
        sp.add_argument("--family", choices=FAMILIES)
        sp.add_argument("--epsilon", type=_number, help="single family parameter")
        sp.add_argument("--s", type=_number, help="single fractional order")
        sp.add_argument("--h", type=_number, help="mesh pitch, e.g. 1/32")
        sp.add_argument("--R", type=_number, help="parallel-surface distance")
        sp.add_argument("--box-scale", type=_number, dest="box_scale")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--normalization", choices=("printed", "standard"))

    c = sub.add_parser("constants", help="print the explicit constants")
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--s", type=_number, default=0.5)
    c.add_argument("--normalization", choices=("printed", "standard"), default="printed")
    c.add_argument("--radius", type=_number, default=1.0, help="ball radius of torsion_center")

    g = sub.add_parser("geometry", help="metric report of a domain")
    common(g)
    g.add_argument("--domain", help="domain2 v1 file")

    sv = sub.add_parser("solve", help="one Dirichlet solve to a field2 file")
    common(sv)
    sv.add_argument("--domain", help="domain2 v1 file (Omega)")
    sv.add_argument("--inner", help="domain2 v1 file (D, annular problem)")
    sv.add_argument("--out", required=True, help="field2 v1 output file")

    v = sub.add_parser("verify", help="torsion and principal-value consistency checks")
    common(v)

    sw = sub.add_parser("sweep", help="run a configuration into out_dir")
    common(sw)
    return ap


def _overrides(args) -> dict:
    o = {}
    for k in ("problem", "family", "h", "R", "box_scale", "seed", "out_dir", "normalization"):
        if getattr(args, k, None) is not None:
            o[k] = getattr(args, k)
    if getattr(args, "epsilon", None) is not None:
        o["epsilon_grid"] = (args.epsilon,)
    if getattr(args, "s", None) is not None:
        o["s_grid"] = (args.s,)
    return o


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``fraccap`` command."""
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "constants":
            return _cmd_constants(args)
        ov = _overrides(args)
        if args.config:
            cfg = load_config(args.config, ov)
        else:
            if args.command == "solve":
                ov.setdefault("task", "solve")
            cfg = ExperimentConfig(**ov)
        if args.command == "geometry":
            return _cmd_geometry(args, cfg)
        if args.command == "solve":
            return _cmd_solve(args, cfg)
        if args.command == "verify":
            return _cmd_verify(args, cfg)
        return run_experiment(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
