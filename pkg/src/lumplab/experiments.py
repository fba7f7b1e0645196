"""Experiment runners behind the command-line subcommands.

Each runner takes a resolved :class:`~lumplab.config.ExperimentConfig` and
an output directory, writes its files atomically and returns the JSON
summary it wrote.  Outputs depend only on the config, so identical configs
give byte-identical files.
"""

import csv
import io
import json
import math
import os

import numpy as np

from . import checks
from .config import ExperimentConfig
from .errors import ConfigError, NumericalError, Unstable
from .linalg import BandedSPD, write_matrix_market
from .linalg.io import atomic_write_text, write_band_csv
from .lumping import LumpedFamilyMember, make_Pi, make_Pij
from .nkp import cond_bound, nkp_preconditioner, nkp_rank1, nkp_rank_r, spectral_equivalence_scan, two_level_preconditioner
from .pencil import _dense, Ordering, Pencil, critical_dt, gen_eig, gen_eigvals, loewner_compare, ratio_bounds
from .dynamics import NewmarkConfig, newmark, transient_l2_series
from .splinefem import (
    AnnulusWave,
    SplineSpace,
    StandingWave1D,
    assemble_1d,
    assemble_2d,
    assemble_3d,
    l2_projection,
    load_vector,
)


# -- output helpers -------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


class Output:
    """Writes CSV/JSON/MatrixMarket files stamped with the config hash."""

    def __init__(self, cfg, directory, command):
        self.cfg = cfg
        self.dir = directory
        self.command = command
        self.files = []
        os.makedirs(directory, exist_ok=True)

    @property
    def header(self):
        return self.cfg.header(self.command)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.dir, name)

    def csv(self, name, columns, rows):
        buf = io.StringIO()
        buf.write(f"# {self.header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        atomic_write_text(self.path(name), buf.getvalue())

    def text(self, name, text):
        atomic_write_text(self.path(name), text)

    def matrix(self, name, a):
        write_matrix_market(self.path(name), a, comment=self.header)

    def bands(self, name, banded):
        write_band_csv(self.path(name), banded, comment=self.header)

    def summary(self, payload):
        doc = {
            "command": self.command,
            "experiment": self.cfg.experiment,
            "config_hash": self.cfg.hash,
            "config": self.cfg.data,
        }
        doc.update(payload)
        doc["files"] = sorted(self.files)
        doc = _jsonable(doc)
        atomic_write_text(os.path.join(self.dir, self.cfg["outputs"]["summary"]), json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return doc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return "" if v is None else v


# -- models and operators ---------------------------------------------------------


def _bc(name, dim):
    if name == "mixed":
        return (("dirichlet", "neumann"),) * dim
    return name


def build_model(cfg, subdivisions=None):
    """Assemble the discretization described by ``cfg``."""
    d = cfg["discretization"]
    space = SplineSpace(d["degree"], subdivisions or d["subdivisions"])
    bc = _bc(d["bc"], d["dim"])
    if d["dim"] == 1:
        return assemble_1d(space, d["density"], d["geometry"], bc, d["quad_points"])
    if d["dim"] == 2:
        return assemble_2d(space, d["density"], d["geometry"], bc, d["quad_points"])
    return assemble_3d(space, d["density"], bc)


def _pij_name(idx):
    sep = "" if all(i < 10 for i in idx) else "_"
    return "P" + sep.join(str(i) for i in idx)


def build_operators(cfg, model):
    """Mass-like operators requested in ``cfg["operators"]``, keyed by label."""
    spec = cfg["operators"]
    ops = {}
    if spec["consistent"]:
        ops["M"] = model.M
    for i in spec["P_i"]:
        ops[f"P{i}"] = make_Pi(model.M, i)
    if spec["P_ij"]:
        if not model.kronecker:
            raise ConfigError("P_ij operators need a separable model; use two_level for non-separable ones")
        for idx in spec["P_ij"]:
            ops[_pij_name(idx)] = make_Pij(model.mass_factors, idx)
    if spec["nkp_rank"] or spec["two_level"]:
        if model.dim != 2:
            raise ConfigError("nearest Kronecker operators are available for 2D models")
    r = spec["nkp_rank"]
    if r == 1:
        ops["NKP"] = nkp_preconditioner(model.M, model.dims)
    elif r > 1:
        ops[f"NKP_r{r}"] = nkp_rank_r(model.M, model.dims, r)
    for i in spec["two_level"]:
        ops[f"TL{i}{i}" if i < 10 else f"TL{i}_{i}"] = two_level_preconditioner(model.M, model.dims, i)
    if not ops:
        raise ConfigError("no operators selected")
    return ops


def _with_context(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NumericalError as exc:
        exc.args = (f"operator {name}: {exc}",) + exc.args[1:]
        raise


# -- runners ------------------------------------------------------------------------


def run_assemble(cfg: ExperimentConfig, out_dir):
    """Export ``M`` and ``K`` as MatrixMarket plus a model summary."""
    out = Output(cfg, out_dir, "assemble")
    model = build_model(cfg)
    out.matrix("M.mtx", model.M)
    out.matrix("K.mtx", model.K)
    if model.mass_factors is not None:
        for a, f in enumerate(model.mass_factors, 1):
            out.matrix(f"M{a}.mtx", f)
    return out.summary({"model": model.summary(), "info": model.info})


def run_lump(cfg, out_dir):
    """Export every lumped operator and its relation to ``M``."""
    out = Output(cfg, out_dir, "lump")
    model = build_model(cfg)
    ops = build_operators(cfg, model)
    mass = model.M
    mass_dense = _dense(mass)
    dt_m = critical_dt(model.K, mass)
    report = {}
    for name, op in ops.items():
        if name == "M":
            continue
        dense = op.to_dense()
        w = gen_eig(Pencil(mass, dense)).values
        entry = {
            "lam_min_M_P": w[0],
            "lam_max_M_P": w[-1],
            "loewner_P_vs_M": loewner_compare(dense, mass).value,
            "row_sum_defect": float(np.max(np.abs(dense.sum(axis=1) - mass_dense.sum(axis=1)))),
            "dt_ratio": _with_context(name, critical_dt, model.K, op) / dt_m,
        }
        if isinstance(op, (LumpedFamilyMember, BandedSPD)):
            banded = op.P if isinstance(op, LumpedFamilyMember) else op
            entry["bandwidth"] = banded.bandwidth
            out.bands(f"{name}_bands.csv", banded)
        if cfg["outputs"]["matrices"] or dense.shape[0] <= 400:
            out.matrix(f"{name}.mtx", dense)
        report[name] = entry
    return out.summary({"model": model.summary(), "dt_M": dt_m, "operators": report})


def _order_checks(spectra, rtol=1e-10):
    names = list(spectra)
    out = {}
    for a in names:
        for b in names:
            if a != b:
                x, y = spectra[a], spectra[b]
                out[f"{a}<={b}"] = bool(np.all(x <= y + rtol * np.abs(y)))
    return out


def run_spectrum(cfg, out_dir):
    """Spectra ``lam_k(K, P)`` per operator, ratio envelopes and step sizes."""
    out = Output(cfg, out_dir, "spectrum")
    model = build_model(cfg)
    ops = build_operators(cfg, model)
    rel = cfg["spectrum"]["relative"]
    spectra = {name: _with_context(name, gen_eigvals, model.K, op, relative=rel) for name, op in ops.items()}
    names = list(spectra)
    n = model.n
    out.csv("spectrum.csv", ["k"] + names, ([k + 1] + [spectra[s][k] for s in names] for k in range(n)))
    bounds = {}
    if cfg["spectrum"]["bounds"] and "M" in ops:
        for name, op in ops.items():
            if name == "M":
                continue
            rep = _with_context(name, ratio_bounds, model.K, model.M, op, relative=rel)
            atomic_write_text(out.path(f"bounds_{name}.csv"), rep.to_csv(out.header))
            s = rep["ratio"]
            bounds[name] = {
                "lam_min_M_P": rep.info["lam_min_M_Mt"],
                "lam_max_M_P": rep.info["lam_max_M_Mt"],
                "holds": s.holds(rtol=1e-9),
            }
    summary = {
        "model": model.summary(),
        "operators": {
            name: {"lam_min": v[0], "lam_max": v[-1], "critical_dt": 2.0 / math.sqrt(v[-1])} for name, v in spectra.items()
        },
        "ordering": _order_checks(spectra),
        "ratio_bounds": bounds,
    }
    return out.summary(summary)


def run_converge(cfg, out_dir):
    """First-eigenfrequency errors on a mesh sequence with fitted slopes."""
    out = Output(cfg, out_dir, "converge")
    conv = cfg["convergence"]
    meshes = sorted(conv["meshes"])
    bands = cfg["operators"]["P_i"]
    errs = checks.omega_errors(conv["problem"], cfg["discretization"]["degree"], meshes, bands)
    h = [1.0 / m for m in meshes]
    names = list(errs)
    out.csv("convergence.csv", ["h"] + names, ([h[r]] + [errs[s][r] for s in names] for r in range(len(meshes))))
    slopes = {}
    for s in names:
        e = np.asarray(errs[s])
        slopes[s] = checks.fitted_slope(h, e) if np.all(e > 0) else None
    return out.summary({"problem": conv["problem"], "meshes": meshes, "errors": errs, "slopes": slopes})


def _dynamics_problem(cfg, model):
    prob = cfg["dynamics"]["problem"]
    geo = model.geometry.id
    if prob == "standing_wave":
        if geo != "unit_interval":
            raise ConfigError("standing_wave runs on the unit interval")
        wave = StandingWave1D(4)
        u0 = l2_projection(model, wave.initial_displacement)
        return wave, None, u0, np.zeros_like(u0)
    if geo != "quarter_annulus":
        raise ConfigError("annulus_wave runs on the quarter annulus")
    wave = AnnulusWave()
    b = load_vector(model, wave.forcing_shape)
    v0 = l2_projection(model, wave.initial_velocity)
    return wave, (lambda t: math.sin(wave.omega * t) * b), np.zeros_like(v0), v0


def run_integrate(cfg, out_dir):
    """Newmark runs per operator with L2 error series and final states."""
    out = Output(cfg, out_dir, "integrate")
    dyn = cfg["dynamics"]
    model = build_model(cfg)
    ops = build_operators(cfg, model)
    wave, force, u0, v0 = _dynamics_problem(cfg, model)
    times = [t for t in dyn["sample_times"] if t <= dyn["T"]]
    dofs = [d for d in dyn["trajectory_dofs"] if d < model.n]
    rows, finals, report = [], {}, {}
    for name, op in ops.items():
        dt = dyn["dt"] or dyn["safety"] * _with_context(name, critical_dt, model.K, op)
        ncfg = NewmarkConfig.from_step(dyn["T"], dt, dyn["beta"], dyn["gamma"])
        try:
            traj = newmark(op, model.K, force, u0, v0, ncfg)
        except Unstable as exc:
            raise Unstable(exc.step, f"operator {name}: time integration became unstable") from None
        series = transient_l2_series(model, traj, wave, times)
        rows.extend((name, t, e) for t, e in series)
        finals[name] = traj.u[-1]
        report[name] = {"steps": ncfg.N, "dt": ncfg.dt, "max_l2_error": float(series[:, 1].max()) if len(series) else None}
        if dofs:
            out.text(f"trajectory_{name}.csv", traj.to_csv(dofs, out.header))
        if dyn["binary"]:
            with open(out.path(f"trajectory_{name}.bin"), "wb") as fh:
                fh.write(traj.to_bytes())
    out.csv("l2_error.csv", ["operator", "t", "l2_error"], rows)
    names = list(finals)
    out.csv("final_state.csv", ["dof"] + names, ([d] + [finals[s][d] for s in names] for d in range(model.n)))
    steps = [report[k]["steps"] for k in names]
    return out.summary({"model": model.summary(), "problem": dyn["problem"], "operators": report, "step_counts": dict(zip(names, steps))})


def run_nkp(cfg, out_dir):
    """Singular values of R(M), factors, condition bound and two-level chain."""
    out = Output(cfg, out_dir, "nkp")
    model = build_model(cfg)
    if model.dim != 2:
        raise ConfigError("the nkp experiment needs a 2D model")
    res = nkp_rank1(model.M, model.dims)
    s = res.singular_values
    out.csv("singular_values.csv", ["i", "sigma", "sigma_over_sigma1"], ((i + 1, v, v / s[0]) for i, v in enumerate(s)))
    if cfg["nkp"]["export_factors"]:
        for a, f in enumerate(res.factors, 1):
            out.matrix(f"factor{a}.mtx", f)
    r = min(cfg["nkp"]["rank"], int(np.count_nonzero(s > 0)))
    kop = nkp_rank_r(model.M, model.dims, r) if r > 1 else None
    summary = {"model": model.summary(), "nkp": res.to_dict(), "sigma2_over_sigma1": float(s[1] / s[0]) if s.size > 1 else 0.0}
    lead = nkp_preconditioner(model.M, model.dims)
    w = gen_eig(Pencil(model.M, lead.to_dense())).values
    summary["kappa_M_NKP"] = float(w[-1] / w[0])
    if kop is not None:
        summary["cond_bound"] = {"rank": r, **cond_bound(kop).to_dict()}
    if cfg["nkp"]["scan_meshes"]:
        rows = spectral_equivalence_scan(lambda m: build_model(cfg, m), cfg["nkp"]["scan_meshes"])
        out.csv("spectral_equivalence.csv", ["m", "h", "lam_min", "lam_max", "error"], ([d[k] for k in ("m", "h", "lam_min", "lam_max", "error")] for d in rows))
        summary["spectral_equivalence"] = rows
    bands = cfg["operators"]["two_level"] or [1, 2, 3]
    chain = []
    lead_dense = lead.to_dense()
    prev = None
    for i in bands:
        p = two_level_preconditioner(model.M, model.dims, i).to_dense()
        wi = gen_eig(Pencil(lead_dense, p)).values
        entry = {"band": i, "lam_min": wi[0], "lam_max": wi[-1], "in_unit_interval": bool(wi[0] > 0 and wi[-1] <= 1 + 1e-10)}
        if prev is not None:
            entry["below_previous"] = loewner_compare(prev, p) in (Ordering.X_GE_Y, Ordering.EQUAL)
        chain.append(entry)
        prev = p
    summary["two_level_chain"] = chain
    return out.summary(summary)


def run_verify(cfg, out_dir):
    """Run the invariant suite; the summary lists one entry per check."""
    out = Output(cfg, out_dir, "verify")
    results = [check() for check in checks.verify_suite(cfg.seed)]
    payload = {"passed": all(r.passed for r in results), "checks": []}
    for r in results:
        d = r.to_dict()
        d.pop("seconds")
        payload["checks"].append(d)
    doc = out.summary(payload)
    return doc, results


RUNNERS = {
    "assemble": run_assemble,
    "lump": run_lump,
    "spectrum": run_spectrum,
    "converge": run_converge,
    "integrate": run_integrate,
    "nkp": run_nkp,
}
