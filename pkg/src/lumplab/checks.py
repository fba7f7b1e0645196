"""Invariant and reproduction checks shared by ``lumplab verify`` and the tests.

Every check returns a :class:`CheckResult`; ``details`` holds the measured
quantities so failures can be diagnosed from the JSON report alone.
"""

import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .dynamics import NewmarkConfig, central_difference, newmark, transient_l2_series
from .errors import Unstable
from .linalg import BandedSPD, KronOperator, banded_cholesky_solve, kron_materialize, kron_solve, thomas_solve
from .lumping import lump, make_Pi, make_Pii
from .nkp import cond_bound, hoffman_wielandt_check, kronecker_rank, nkp_rank1, nkp_rank_r
from .pencil import Ordering, Pencil, bauer_fike_bounds, critical_dt, gen_eig, gen_eigvals, loewner_compare
from .splinefem import (
    AnnulusWave,
    PROBLEM_BCS,
    SplineSpace,
    StandingWave1D,
    assemble_1d,
    assemble_2d,
    assemble_3d,
    exact_eigenfrequency,
    l2_projection,
    load_vector,
)
from .splinefem.assembly import eigenvalue_error

REFERENCE_STEP_COUNTS = {"M": 322, "P11": 139, "P22": 289, "P33": 320}


@dataclass
class CheckResult:
    id: str
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id}: {self.title} ({self.seconds:.1f}s)"

    def to_dict(self):
        return {"id": self.id, "title": self.title, "passed": self.passed, "seconds": self.seconds, "details": self.details}


def _timed(cid, title, fn, *args, **kwargs):
    t0 = time.perf_counter()
    passed, details = fn(*args, **kwargs)
    return CheckResult(cid, title, bool(passed), details, time.perf_counter() - t0)


def _rel_le(a, b, rtol):
    """Elementwise ``a <= b`` up to ``rtol * |b|``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b + rtol * np.abs(b)))


# -- pencils -----------------------------------------------------------------


def _indefinite_example():
    a = 6.0 * np.eye(2)
    b = np.array([[2.0, 1.0], [1.0, 2.0]])
    bt = np.diag([3.0, 2.0])
    lab = gen_eig(Pencil(a, b)).values
    labt = gen_eig(Pencil(a, bt)).values
    le = gen_eig(Pencil(bt - b, np.eye(2))).values
    s5 = math.sqrt(5.0)
    errs = [
        np.max(np.abs(lab - [2.0, 6.0])),
        np.max(np.abs(labt - [2.0, 3.0])),
        np.max(np.abs(le - [(1 - s5) / 2, (1 + s5) / 2])),
    ]
    order = loewner_compare(bt, b)
    ok = max(errs) <= 1e-12 and order == Ordering.INDEFINITE
    return ok, {"lam_AB": lab.tolist(), "lam_ABt": labt.tolist(), "lam_E": le.tolist(), "max_abs_error": max(errs)}


def check_indefinite_example():
    return _timed("C1", "2x2 example with indefinite mass error reproduced", _indefinite_example)


def _row_sum_placement():
    worst_hi = 0.0
    worst_max = 0.0
    min_val = np.inf
    count = 0
    for p in range(1, 6):
        for m in (10, 50):
            for bc in ("dirichlet", "neumann", ("dirichlet", "neumann")):
                mass = assemble_1d(SplineSpace(p, m), bc=bc).M
                w = gen_eig(Pencil(mass, lump(mass))).values
                min_val = min(min_val, w[0])
                worst_hi = max(worst_hi, w[-1] - 1.0)
                worst_max = max(worst_max, abs(w[-1] - 1.0))
                count += 1
    ok = min_val > 0 and worst_hi <= 1e-10 and worst_max <= 1e-10
    return ok, {"pencils": count, "min_eigenvalue": min_val, "max_excess_over_1": worst_hi, "max_abs_lam_max_minus_1": worst_max}


def check_row_sum_placement():
    return _timed("C2", "spectrum of (M, L(M)) lies in (0, 1] with lam_max = 1", _row_sum_placement)


def _chain_1d(p, m):
    mass, stiff = assemble_1d(SplineSpace(p, m))
    specs = [gen_eigvals(stiff, make_Pi(mass, i), relative=True) for i in (1, 2, 3)]
    specs.append(gen_eigvals(stiff, mass, relative=True))
    return specs


def _chain_2d(p, m):
    model = assemble_2d(SplineSpace(p, m))
    specs = [gen_eigvals(model.K, make_Pii(model.mass_factors, i), relative=True) for i in (1, 2, 3)]
    specs.append(gen_eigvals(model.K, model.M, relative=True))
    return specs


def _monotone_chain(rtol=1e-10):
    details = {}
    ok = True
    for label, builder, args in (
        ("1d_p3_m400", _chain_1d, (3, 400)),
        ("1d_p5_m400", _chain_1d, (5, 400)),
        ("2d_p3_m20", _chain_2d, (3, 20)),
        ("2d_p5_m20", _chain_2d, (5, 20)),
    ):
        specs = builder(*args)
        links = [_rel_le(a, b, rtol) for a, b in zip(specs, specs[1:])]
        margin = [float(np.max((a - b) / np.abs(b))) for a, b in zip(specs, specs[1:])]
        details[label] = {"links_hold": links, "max_relative_excess": margin, "n": int(specs[0].size)}
        ok &= all(links)
    return ok, details


def check_monotone_chain():
    return _timed("C3", "lam_k(K,P1) <= lam_k(K,P2) <= lam_k(K,P3) <= lam_k(K,M)", _monotone_chain)


def _catalogue_models():
    for p in range(1, 6):
        for m in (10, 30):
            yield f"1d_p{p}_m{m}", assemble_1d(SplineSpace(p, m))
    for geo in ("unit_square", "quarter_annulus", "stretched_square", "reentrant_corner"):
        for p in (2, 3):
            yield f"2d_{geo}_p{p}_m10", assemble_2d(SplineSpace(p, 10), None, geo)
    yield "2d_unit_square_sin_xy_p3_m10", assemble_2d(SplineSpace(3, 10), "sin_xy", "unit_square")
    yield "3d_unit_cube_p2_m3", assemble_3d(SplineSpace(2, 3))


def _critical_step(rtol=1e-10):
    details = {}
    ok = True
    for name, model in _catalogue_models():
        ref = critical_dt(model.K, model.M)
        ops = {f"P{i}": make_Pi(model.M, i) for i in (1, 2, 3)}
        if model.kronecker and model.dim > 1:
            for i in (1, 2, 3):
                ops["P" + str(i) * model.dim] = make_Pii(model.mass_factors, i)
        ratios = {}
        for key, op in ops.items():
            dt = critical_dt(model.K, op)
            ratios[key] = dt / ref
            ok &= dt >= ref * (1.0 - rtol)
        details[name] = {"dt_M": ref, "dt_ratio": ratios}
    return ok, details


def check_critical_step():
    return _timed("C4", "lumped critical time step is never smaller than the consistent one", _critical_step)


# -- convergence --------------------------------------------------------------


def omega_errors(problem, degree, meshes, bands=(1, 3)):
    """Relative first-eigenfrequency errors per operator on a mesh sequence.

    Uses :func:`eigenvalue_error`, which stays accurate when the error is
    close to machine precision.
    """
    lam = exact_eigenfrequency(problem) ** 2
    dim = 2 if "2d" in problem else 1
    bcs = PROBLEM_BCS[problem]
    out = {"M": []}
    out.update({("P" + str(i) * dim): [] for i in bands})
    for m in meshes:
        space = SplineSpace(degree, m)
        model = assemble_1d(space, bc=bcs) if dim == 1 else assemble_2d(space, bc=bcs)
        ops = {"M": model.M}
        for i in bands:
            key = "P" + str(i) * dim
            ops[key] = make_Pi(model.M, i) if dim == 1 else make_Pii(model.mass_factors, i)
        for key, op in ops.items():
            vec = gen_eig(Pencil(model.K, op)).vectors[:, 0]
            d = eigenvalue_error(model, vec, op, problem)
            out[key].append(abs(math.expm1(0.5 * math.log1p(d / lam))))
    return out


def fitted_slope(h, err):
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def _convergence():
    meshes = [8, 16, 32, 64]
    h = [1.0 / m for m in meshes]
    errs = omega_errors("laplace_1d_mixed", 3, meshes)
    slopes = {k: fitted_slope(h, v) for k, v in errs.items()}
    ratio = errs["P1"][-1] / errs["P3"][-1]
    ok = abs(slopes["M"] - 6.0) <= 0.5 and abs(slopes["P1"] - 2.0) <= 0.3 and abs(slopes["P3"] - 2.0) <= 0.3
    ok &= ratio >= 10.0
    return ok, {"meshes": meshes, "errors": errs, "slopes": slopes, "P1_over_P3_at_finest": ratio}


def check_convergence():
    return _timed("C5", "first-eigenfrequency convergence slopes (M: 2p, P1/P3: 2)", _convergence)


# -- Kronecker approximation ----------------------------------------------------


def _sin_xy_model(p=3, m=20):
    return assemble_2d(SplineSpace(p, m), "sin_xy", "unit_square")


def _nkp_error_identity():
    model = _sin_xy_model()
    res = nkp_rank1(model.M, model.dims)
    rel = abs(res.error - res.tail) / res.tail
    lhs, rhs = hoffman_wielandt_check(model.M, np.kron(*res.factors))
    ok = rel <= 1e-10 and lhs <= rhs * (1 + 1e-10)
    return ok, {"error": res.error, "tail": res.tail, "relative_gap": rel, "hw_lhs": lhs, "hw_rhs": rhs}


def check_nkp_error_identity():
    return _timed("C6", "||M - B x C||_F = sqrt(sum_{i>=2} sigma_i^2) and Hoffman-Wielandt", _nkp_error_identity)


def _rank_study():
    model = _sin_xy_model()
    s = nkp_rank1(model.M, model.dims).singular_values
    ratios = s / s[0]
    rank = kronecker_rank(s)
    eps_rank = int(np.count_nonzero(ratios > np.finfo(float).eps))
    gap_rank = int(np.count_nonzero(ratios > 1e-9))
    ok = 5 <= rank <= 7
    return ok, {
        "rank_at_rank_tol": rank,
        "count_above_machine_eps": eps_rank,
        "count_above_1e-9": gap_rank,
        "leading_ratios": ratios[:9].tolist(),
    }


def check_rank_study():
    return _timed("C7", "numerical Kronecker rank of R(M) for rho = |sin(xy)| + x + y + 1", _rank_study)


def _synthetic_rank2(rng, n1, n2, ratio):
    def spd(n):
        x = rng.standard_normal((n, n))
        return x @ x.T + n * np.eye(n)

    u1, v1 = spd(n1), spd(n2)

    def bounded_like(base, n):
        # symmetric U with spectrum of (U, base) inside [-1, 1]
        low = np.linalg.cholesky(base)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        d = rng.uniform(-1.0, 1.0, n)
        return low @ (q * d) @ q.T @ low.T

    u2, v2 = bounded_like(u1, n1), bounded_like(v1, n2)
    return KronOperator(((1.0, (u1, v1)), (ratio, (u2, v2))))


def _cond_bounds(seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    ok = True
    for trial in range(20):
        kop = _synthetic_rank2(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)), float(rng.uniform(0.01, 0.3)))
        cb = cond_bound(kop)
        if cb.applicable:
            ok &= cb.kappa <= cb.bound + 1e-8
        rows.append(cb.to_dict() | {"case": f"synthetic_{trial}"})
    for geo in ("stretched_square", "reentrant_corner"):
        model = assemble_2d(SplineSpace(3, 20), None, geo)
        kop = nkp_rank_r(model.M, model.dims, 2)
        cb = cond_bound(kop)
        if cb.applicable:
            ok &= cb.kappa <= cb.bound + 1e-8
        rows.append(cb.to_dict() | {"case": geo})
    applicable = sum(r["applicable"] for r in rows)
    return ok and applicable > 0, {"cases": rows, "applicable": applicable}


def check_cond_bound(seed=0):
    return _timed("C8", "kappa(M~^-1/2 M M~^-1/2) <= (1 + delta) / (1 - delta) for rank-2 M", _cond_bounds, seed)


# -- perturbation bounds -------------------------------------------------------


def _bauer_fike(seed=0):
    details = {}
    mass, stiff = assemble_1d(SplineSpace(1, 100))
    rep = bauer_fike_bounds(Pencil(stiff, mass), Pencil(stiff, lump(mass)))
    scale = float(np.max(np.abs(rep.info["lam"])))
    fem_ok = rep.holds(rtol=1e-9, atol=1e-12 * scale)
    details["fem_p1_m100"] = {s.name: s.holds(rtol=1e-9, atol=1e-12 * scale) for s in rep.series}
    rng = np.random.default_rng(seed)
    fails = []
    n = 6
    trial = 0
    while trial < 50:
        x = rng.standard_normal((n, n))
        a = x @ x.T + 0.1 * np.eye(n)
        y = rng.standard_normal((n, n))
        b = y @ y.T + n * np.eye(n)
        e = rng.standard_normal((n, n))
        e = 0.05 * (e + e.T)
        f = rng.standard_normal((n, n))
        f = 0.05 * (f + f.T)
        if np.linalg.eigvalsh(b + f)[0] <= 0:
            continue
        rep = bauer_fike_bounds(Pencil(a, b), Pencil(a + e, b + f))
        sc = float(np.max(np.abs(rep.info["lam"])))
        if not rep.holds(rtol=1e-9, atol=1e-12 * sc):
            fails.append({"trial": trial, "violations": {s.name: s.violations(1e-9, 1e-12 * sc).tolist() for s in rep.series}})
        trial += 1
    details["random_failures"] = fails
    details["random_trials"] = trial
    return fem_ok and not fails, details


def check_bauer_fike(seed=0):
    return _timed("C9", "Bauer-Fike (both statements) and Crawford bounds", _bauer_fike, seed)


# -- dynamics -----------------------------------------------------------------


def scalar_stability(factor, steps, omega=3.0):
    """Run the scalar oscillator at ``factor * dt_c``; ``True`` if it stays bounded."""
    dt = factor * 2.0 / omega
    cfg = NewmarkConfig(0.0, 0.5, dt, steps, dt * steps)
    try:
        newmark(np.eye(1), np.array([[omega * omega]]), None, [0.0], [1.0], cfg)
    except Unstable as exc:
        return False, exc.step
    return True, steps


def elastodynamics_1d(p=4, m=50, safety=0.85, times=(1.0, 5.0)):
    """L2 errors of the standing-wave problem for M, P1, P2, P3 with a shared step."""
    model = assemble_1d(SplineSpace(p, m))
    mass, stiff = model
    wave = StandingWave1D(4)
    u0 = l2_projection(model, wave.initial_displacement)
    v0 = np.zeros_like(u0)
    dt = safety * critical_dt(stiff, mass)
    out = {}
    for key, op in [("M", mass)] + [(f"P{i}", make_Pi(mass, i)) for i in (1, 2, 3)]:
        traj = central_difference(op, stiff, None, u0, v0, 6.0, dt=dt)
        series = transient_l2_series(model, traj, wave, times)
        out[key] = {"steps": traj.steps, "errors": dict(zip(map(str, times), series[:, 1].tolist()))}
    return out


def annulus_step_counts(safety=1.0, p=3, m=20, T=6.0):
    model = assemble_2d(SplineSpace(p, m), None, "quarter_annulus")
    ops = {"M": model.M}
    for i in (1, 2, 3):
        ops[f"P{i}{i}"] = make_Pii(model.mass_factors, i)
    return {k: max(1, math.ceil(T / (safety * critical_dt(model.K, op)) - 1e-9)) for k, op in ops.items()}


def annulus_run(safety=1.0, p=3, m=20, T=6.0, samples=13):
    """Central-difference runs on the quarter annulus with the manufactured wave."""
    model = assemble_2d(SplineSpace(p, m), None, "quarter_annulus")
    wave = AnnulusWave()
    b = load_vector(model, wave.forcing_shape)
    v0 = l2_projection(model, wave.initial_velocity)
    u0 = np.zeros_like(v0)
    force = lambda t: np.sin(wave.omega * t) * b  # noqa: E731
    ops = {"M": model.M}
    for i in (1, 2, 3):
        ops[f"P{i}{i}"] = make_Pii(model.mass_factors, i)
    times = np.linspace(0.0, T, samples)
    out = {}
    for key, op in ops.items():
        traj = central_difference(op, model.K, force, u0, v0, T, safety=safety)
        series = transient_l2_series(model, traj, wave, times)
        out[key] = {"steps": traj.steps, "times": series[:, 0].tolist(), "l2_error": series[:, 1].tolist()}
    return model, out


def _dynamics(reference_counts=True):
    details = {}
    bounded, _ = scalar_stability(0.999, 100000)
    blew, step = scalar_stability(1.001, 100000)
    scalar_ok = bounded and not blew
    details["scalar"] = {"bounded_at_0.999": bounded, "unstable_at_1.001": not blew, "blowup_step": step}
    e1 = elastodynamics_1d()
    err5 = [e1[k]["errors"]["5.0"] for k in ("P3", "P2", "P1")]
    order_1d = err5[0] <= err5[1] <= err5[2]
    details["elastodynamics_1d"] = e1 | {"ordering_P3_P2_P1_at_t5": order_1d}
    counts = annulus_step_counts(1.0)
    counts85 = annulus_step_counts(0.85)
    order_2d = counts["P11"] < counts["P22"] < counts["P33"] <= counts["M"]
    dev = {k: counts[k] / v - 1.0 for k, v in REFERENCE_STEP_COUNTS.items()}
    dev85 = {k: counts85[k] / v - 1.0 for k, v in REFERENCE_STEP_COUNTS.items()}
    within = all(abs(d) <= 0.15 for d in dev.values())
    details["annulus"] = {
        "steps_safety_1": counts,
        "relative_deviation_safety_1": dev,
        "steps_safety_0.85": counts85,
        "relative_deviation_safety_0.85": dev85,
        "ordering": order_2d,
        "reference_counts_within_15pct_at_safety_1": within,
    }
    ok = scalar_ok and order_1d and order_2d
    if reference_counts:
        ok &= within
    return ok, details


def check_dynamics(reference_counts=True):
    title = "stability boundary, 1D error ordering, annulus step counts"
    if not reference_counts:
        title = "stability boundary, 1D error ordering, annulus step-count ordering"
    return _timed("C10", title, _dynamics, reference_counts)


# -- solver oracles --------------------------------------------------------------


def _spd(rng, n):
    x = rng.standard_normal((n, n))
    return x @ x.T / n + np.eye(n)


def _banded_spd(rng, n, b):
    a = rng.standard_normal((n, n))
    idx = np.arange(n)
    a = np.where(np.abs(idx[:, None] - idx[None, :]) <= b, a, 0.0)
    a = 0.5 * (a + a.T)
    a[idx, idx] = np.abs(a).sum(axis=1) + 1.0
    return a


def _rel(x, y):
    return float(np.linalg.norm(x - y) / max(np.linalg.norm(y), 1e-300))


def _oracles(seed=0, instances=100):
    rng = np.random.default_rng(seed)
    worst = {"kron": 0.0, "banded": 0.0, "thomas": 0.0}
    for _ in range(instances):
        k = int(rng.integers(2, 4))
        dims = [int(rng.integers(1, 7)) for _ in range(k)]
        factors = [_spd(rng, d) for d in dims]
        kop = KronOperator.single(*factors, weight=float(rng.uniform(0.5, 2.0)))
        rhs = rng.standard_normal(kop.n)
        ref = np.linalg.solve(kron_materialize(kop).data, rhs)
        worst["kron"] = max(worst["kron"], _rel(kron_solve(kop, rhs), ref))

        n = int(rng.integers(1, 60))
        b = int(rng.integers(0, max(n, 1)))
        a = _banded_spd(rng, n, b)
        rhs = rng.standard_normal(n)
        ref = np.linalg.solve(a, rhs)
        worst["banded"] = max(worst["banded"], _rel(banded_cholesky_solve(BandedSPD.from_dense(a, b), rhs), ref))

        a = _banded_spd(rng, n, 1)
        ref = np.linalg.solve(a, rhs)
        worst["thomas"] = max(worst["thomas"], _rel(thomas_solve(BandedSPD.from_dense(a, min(1, n - 1)), rhs), ref))
    ok = all(v <= 1e-10 for v in worst.values())
    return ok, {"instances": instances, "max_relative_error": worst}


def check_oracles(seed=0):
    return _timed("C11", "kron/banded/Thomas solves match dense solves", _oracles, seed)


# -- extra invariants (verify only) -----------------------------------------------


def _family_invariants(seed=0):
    rng = np.random.default_rng(seed)
    ok = True
    details = {}
    for p in (2, 3, 5):
        mass = assemble_1d(SplineSpace(p, 12)).M
        n = mass.n
        prev = None
        for i in range(1, n + 1):
            pi = make_Pi(mass, i).to_dense()
            w = gen_eig(Pencil(mass, pi)).values
            ok &= w[0] > 0 and w[-1] <= 1 + 1e-10 and abs(w[-1] - 1) <= 1e-10
            ok &= np.allclose(pi.sum(axis=1), mass.data.sum(axis=1), rtol=0, atol=1e-15)
            if prev is not None:
                ok &= loewner_compare(prev, pi) in (Ordering.X_GE_Y, Ordering.EQUAL)
            prev = pi
        details[f"p{p}"] = "ok" if ok else "violated"
    b1 = _spd(rng, 4)
    b2 = _spd(rng, 3)
    full = np.kron(b1, b2)
    kron_ok = True
    for i in range(1, 5):
        for j in range(1, 4):
            w = gen_eigvals(full, _pij([b1, b2], i, j))
            kron_ok &= w[-1] <= 1 + 1e-10 and w[0] > 0
    details["kronecker_family"] = kron_ok
    return ok and kron_ok, details


def _pij(factors, i, j):
    from .lumping import make_Pij

    return make_Pij(factors, [i, j]).to_dense()


def check_family_invariants(seed=0):
    return _timed("V1", "P_i family: spectrum in (0, 1], row sums, Loewner order", _family_invariants, seed)


ACCEPTANCE = (
    check_indefinite_example,
    check_row_sum_placement,
    check_monotone_chain,
    check_critical_step,
    check_convergence,
    check_nkp_error_identity,
    check_rank_study,
    check_cond_bound,
    check_bauer_fike,
    check_dynamics,
    check_oracles,
)


def verify_suite(seed=0):
    """Checks run by ``lumplab verify``: all property suites, seeded by ``seed``."""
    return [
        check_indefinite_example,
        check_row_sum_placement,
        check_monotone_chain,
        check_critical_step,
        check_convergence,
        check_nkp_error_identity,
        check_rank_study,
        partial(check_cond_bound, seed),
        partial(check_bauer_fike, seed),
        partial(check_dynamics, reference_counts=False),
        partial(check_oracles, seed),
        partial(check_family_invariants, seed),
    ]
