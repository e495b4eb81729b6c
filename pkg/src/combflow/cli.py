"""Command-line driver: scenario verifications, demonstrations and exports.

Exit codes: 0 success, 1 a scenario claim failed verification, 2 bad
configuration, 3 an internal guard tripped (e.g. the event-count limit).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .combs import CombLevel, CombSpec, build_comb, comb_rect_rows, psi_digit_oracle, verify_level
from .compactness import (bv_norm, compressibility, field_velocity_sampler,
                          flow_convergence_table, integrate_flow, mollify,
                          rotation_field)
from .exactnum import as_rational, digit, format_rational, half_pow
from .field import DensityField
from .flux import counterexample_flux, jacobian_eigen, polynomial_flux
from .geometry import Point2, Rect, rect
from .illposed import (AngularData, StripeEvaluator, angle_pattern,
                       field_for_box, initial_data_distance,
                       initial_data_bound_constant, l1_distance,
                       weak_limit_estimate, weak_limit_target, weak_residual)
from .riemann1d import (TravelingWave, fan_l1_error, godunov_solve,
                        scalar_riemann, smooth_angle_step,
                        vector_riemann_contact, vector_riemann_scalar_embedding)
from .scenario import (ConfigError, Scenario, build_angle, build_field,
                       build_flux, build_rect, write_csv, write_json)
from .tracer import ChatteringError, TraceError, eventual_shift, trace

DECISIONS = {
    "left_comb_velocity": "+e1 (rightward); leftward motion never reaches "
                          "points north-east of the strips",
    "left_tooth_size": "3*2^-k wide by 2^-k high so the generated shift is "
                       "exactly 2^-k",
    "half_tooth_size": "2^-k wide by 3*2^-(k+1) high so the generated shift "
                       "is exactly 2^-(k+1)",
    "digit_convention": "digit(x, k) = floor(2^k x) mod 2, terminating "
                        "expansions, half-open sets",
    "stripe_scale": "after levels 0..n pass, the angle alternates with digit "
                    "n+1 of x2 (period 2^-n)",
}


def _out_dir(args, name):
    root = args.out or os.environ.get("COMBFLOW_OUT_ROOT", "runs")
    out = Path(root) / name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out, scenario, report):
    write_json(out / "manifest.json", {
        "name": scenario.name,
        "version": __version__,
        "decisions": DECISIONS,
        "config": scenario.raw,
    })
    write_json(out / "report.json", report)
    ok = report.get("ok", True)
    print(f"{scenario.name}: {'PASS' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_trace(scenario, args):
    out = _out_dir(args, scenario.name)
    flux = build_flux(scenario.require("flux"))
    field = build_field(scenario.require("field"))
    t_end = as_rational(scenario.require("t_end"))
    rows = []
    results = []
    for i, pt in enumerate(scenario.require("points")):
        y = Point2(as_rational(pt[0]), as_rational(pt[1]))
        traj = trace(field, flux.eval_f, y, t_end, max_events=args.max_events)
        for b in traj.points:
            rows.append((i,) + b.csv_row())
        results.append({"point": i, "end": [format_rational(traj.end[0]),
                                            format_rational(traj.end[1])],
                        "events": len(traj.points) - 1,
                        "flags": sorted(traj.flags)})
    write_csv(out / "trajectories.csv", ("point", "t", "x1", "x2", "v1", "v2"), rows)
    return _finish(out, scenario, {"ok": True, "trajectories": results})


def cmd_verify_field(scenario, args):
    out = _out_dir(args, scenario.name)
    flux = build_flux(scenario.require("flux"))
    field = build_field(scenario.require("field"))
    dis = field.validate_disjoint()
    rh = field.verify_rankine_hugoniot(flux) if dis.ok else None
    report = {
        "ok": dis.ok and (rh.ok if rh else False),
        "disjointness": dis.to_dict(),
        "rankine_hugoniot": rh.to_dict() if rh else {"skipped": True},
    }
    return _finish(out, scenario, report)


def _expected_comb_shift(kind, k, p):
    u = half_pow(k)
    if kind == "up":
        return (Fraction(0), u) if digit(p[0], k) == 0 else (Fraction(0), Fraction(0))
    if kind == "left":
        hit = digit(p[1], k) != digit(p[1], k + 1)
        return (-u, Fraction(0)) if hit else (Fraction(0), Fraction(0))
    hit = digit(p[0], k) == 0
    return (Fraction(0), u / 2) if hit else (Fraction(0), Fraction(0))


def cmd_verify_shifts(scenario, args):
    from .combs import comb_covering, sample_points

    out = _out_dir(args, scenario.name)
    flux = build_flux(scenario.get("flux", {"kind": "counterexample"}))
    levels = scenario.get("levels", [0, 1, 2])
    samples = args.samples or int(scenario.get("samples", 200))
    fails = []
    total = 0
    for k in levels:
        pts = sample_points(k, samples, seed=args.seed + k)
        for kind in ("up", "left", "up_half"):
            patch = build_comb(comb_covering(k, kind, 32, 38))
            fld = DensityField(3, [patch])
            for p in pts:
                want = _expected_comb_shift(kind, k, p)
                got = eventual_shift(fld, flux.eval_f, p,
                                     max_events=args.max_events)
                total += 1
                if got.shift != want:
                    fails.append({"k": k, "kind": kind, "point": str(p),
                                  "got": str(got.shift), "want": str(want)})
    report = {"ok": not fails, "checked": total, "failures": fails[:20],
              "failure_count": len(fails)}
    return _finish(out, scenario, report)


def _psi_job(job):
    k, samples, seed = job
    flux = counterexample_flux()
    return verify_level(k, samples, flux.eval_f, seed=seed).to_dict()


def cmd_verify_psi(scenario, args):
    out = _out_dir(args, scenario.name)
    levels = scenario.get("levels", list(range(0, 5)))
    samples = args.samples or int(scenario.get("samples", 500))
    jobs = [(k, samples, args.seed + k) for k in levels]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_psi_job, jobs))
    else:
        results = [_psi_job(j) for j in jobs]
    rows = [(r["k"], r["samples"], r["trace_mismatches"], r["digit_mismatches"],
             r["flagged"], r["ok"]) for r in results]
    write_csv(out / "psi_levels.csv",
              ("k", "samples", "trace_mismatches", "digit_mismatches",
               "flagged", "ok"), rows)
    report = {"ok": all(r["ok"] for r in results), "levels": results}
    return _finish(out, scenario, report)


def cmd_illposed(scenario, args):
    out = _out_dir(args, scenario.name)
    angle = build_angle(scenario.require("beta"))
    flux = build_flux(scenario.get("flux", {"kind": "counterexample"}))
    t = as_rational(scenario.get("t", "40"))
    sol_box = build_rect(scenario.get("solution_box",
                                      [["4353/256", "17"], ["4609/256", "18"]]))
    data_box = build_rect(scenario.get("data_box", [["0", "0"], ["8", "8"]]))
    ns = scenario.get("n_values", [1, 2, 3])
    n_ref = max(ns) + 1
    grid = tuple(scenario.get("solution_grid", [8, 64]))

    claims = {}
    # initial data: exact distances and the 2^-n envelope
    fld_ref = field_for_box(n_ref, data_box)
    data_rows = []
    dists = {}
    for n in ns:
        d = initial_data_distance(n, n_ref, data_box, field_m=fld_ref)
        dists[n] = d
        data_rows.append((n, n_ref, format_rational(d), float(d),
                          float(d) * 2 ** n))
    write_csv(out / "initial_data_distance.csv",
              ("n", "m", "distance", "distance_float", "scaled_2n"), data_rows)
    c_measured = max((float(d) * 2 ** n for n, d in dists.items()), default=0.0)
    decreasing = all(dists[a] > dists[b] for a, b in zip(ns, ns[1:]))
    claims["initial_data_decay"] = {
        "ok": decreasing, "C_measured": c_measured,
        "C_a_priori": float(initial_data_bound_constant(data_box))}

    # solutions at time t: pairwise L1 on the stripe box
    evals = {n: StripeEvaluator(n, angle, t, sol_box, velocity_fn=flux.eval_f)
             for n in ns}
    area = float(sol_box.area())
    target = 3.0 * angle.sin_beta * area
    pair_rows = []
    sep_ok = True
    for i, n in enumerate(ns):
        for m in ns[i + 1:]:
            res = l1_distance(evals[n], evals[m], sol_box, grid)
            rel = abs(res.value - target) / target
            sep_ok &= res.value >= 2.0 * angle.sin_beta * area
            pair_rows.append((n, m, res.value, target, rel, res.exact))
    write_csv(out / "solution_l1.csv",
              ("n", "m", "l1", "target", "rel_error", "exact_quadrature"),
              pair_rows)
    claims["solutions_stay_apart"] = {
        "ok": sep_ok and all(r[4] <= 0.05 for r in pair_rows),
        "pairs": len(pair_rows)}

    # stripe pattern of the largest n
    n_top = ns[-1]
    rows_n = int(1 / float(evals[n_top].stripe_height))
    pat = angle_pattern(evals[n_top], (2, min(rows_n, 256)))
    write_csv(out / "angle_pattern.csv", ("row", "signs"),
              [(j, "".join("+" if s > 0 else "-" for s in pat[j]))
               for j in range(pat.shape[0])])

    # weak limit cell averages
    cell = as_rational(scenario.get("weak_limit_cell", "1/2"))
    cells = weak_limit_estimate(evals[n_top], cell)
    tgt = weak_limit_target(angle)
    werr = max(float(np.linalg.norm(c.average - tgt)) for c in cells)
    claims["weak_limit"] = {"ok": werr <= 0.02 * float(np.linalg.norm(tgt)),
                            "max_error": werr,
                            "target": [float(tgt[0]), float(tgt[1])]}
    write_csv(out / "weak_limit_cells.csv",
              ("lo1", "lo2", "avg1", "avg2"),
              [(c.cell.lo[0], c.cell.lo[1], c.average[0], c.average[1])
               for c in cells])

    # threshold: residual of the averaged limit across the front
    cos_list = [as_rational(c) for c in scenario.get(
        "residual_cos", ["1/5", "1/4", "1/3", "2/5", "1/2", "9/10"])]
    res_rows = []
    thr_ok = True
    for c in cos_list:
        r = weak_residual(AngularData.from_cos(c), flux)
        expect_zero = 3 * c <= 1
        thr_ok &= (r.defect == 0) == expect_zero
        res_rows.append((format_rational(c), format_rational(r.defect),
                         r.is_weak_solution, r.note))
    write_csv(out / "weak_residual.csv",
              ("cos_beta", "defect", "is_weak_solution", "note"), res_rows)
    claims["threshold"] = {"ok": thr_ok}

    report = {"ok": all(c["ok"] for c in claims.values()), "claims": claims}
    return _finish(out, scenario, report)


def cmd_riemann(scenario, args):
    out = _out_dir(args, scenario.name)
    cubic = polynomial_flux([0, 0, 0, 1])
    fan = scalar_riemann(cubic, 1, -1)
    write_csv(out / "fan_cubic.csv",
              ("wave", "left", "right", "speed_lo", "speed_hi"), fan.csv_rows())
    ncells = int(scenario.get("godunov_cells", 2000))
    x, u = godunov_solve(cubic, 1, -1, ncells=ncells)
    err = fan_l1_error(fan, cubic, x, u, T=1.0)
    write_csv(out / "godunov_cubic.csv", ("x", "u"), list(zip(x, u)))

    square = polynomial_flux([0, 0, 1])
    emb = vector_riemann_scalar_embedding(square, (1, 0), (-1, 0))
    con = vector_riemann_contact(square, (1, 0), (-1, 0))
    tw = TravelingWave(square, smooth_angle_step(), n=4)
    xs = np.linspace(-0.5, 1.5, 41)
    res_h = tw.residual(0.3, xs, 1e-3)
    res_h2 = tw.residual(0.3, xs, 5e-4)
    report = {
        "ok": (err <= 0.02 and emb.rh_residual() == 0.0
               and con.rh_residual() == 0.0 and res_h2 <= res_h / 2.5),
        "godunov_l1": err,
        "embedding_rh": emb.rh_residual(),
        "contact_speed": str(con.contact_speed),
        "contact_rh": con.rh_residual(),
        "viscosity_residuals": {"h=1e-3": res_h, "h=5e-4": res_h2},
    }
    return _finish(out, scenario, report)


def cmd_compactness(scenario, args):
    out = _out_dir(args, scenario.name)
    flux = build_flux(scenario.get("flux", {"kind": "counterexample"}))
    field = build_field(scenario.get("field", {
        "background": "3",
        "patches": [{"value": "4", "velocity": ["0", "1"],
                     "rects": [[["0", "0"], ["1", "3"]]]}]}))
    base = field_velocity_sampler(field, flux.eval_f)
    epsilons = [float(Fraction(e)) if isinstance(e, str) else float(e)
                for e in scenario.get("epsilons", ["1/8", "1/16", "1/32"])]
    T = float(scenario.get("T", 8.0))
    pts = [[0.5, 4.0], [0.5, 5.0]]
    exact = []
    for p in pts:
        sh = eventual_shift(field, flux.eval_f,
                            Point2(as_rational(p[0]), as_rational(round(p[1]))))
        exact.append([float(p[0] + sh.shift[0]), float(round(p[1]) + sh.shift[1])])
    rows = flow_convergence_table(base, epsilons, pts, T,
                                  exact_end=np.array(exact))
    write_csv(out / "flow_convergence.csv",
              ("epsilon", "dt", "dist_prev", "dist_exact"),
              [(r.epsilon, r.dt, r.dist_prev, r.dist_exact) for r in rows])

    rot = rotation_field(1.0)
    comp = compressibility(rot, ((0.5, 0.5), (1.5, 1.5)), [1.0, 2.0],
                           grid_m=6, dt=5e-3)
    bv = bv_norm(mollify(base, epsilons[0]), ((-1.0, 3.0), (0.0, 1.0)), T=1.0,
                 quad=(2, 48, 4))
    report = {
        "ok": True,  # tables are emitted, no convergence assertion
        "rotation_compressibility": [comp.min_ratio, comp.max_ratio],
        "bv_estimate": bv.value,
        "trend_monotone": all(
            a.dist_exact > b.dist_exact for a, b in zip(rows, rows[1:])),
    }
    return _finish(out, scenario, report)


def cmd_figures(scenario, args):
    out = _out_dir(args, scenario.name)
    flux = build_flux({"kind": "counterexample"})

    # moving rectangle with a carried point (elementary upward patch)
    fld = build_field({"background": "3",
                       "patches": [{"value": "4", "velocity": ["0", "1"],
                                    "rects": [[["0", "0"], ["1", "3"]]]}]})
    traj = trace(fld, flux.eval_f, Point2(Fraction(1, 2), Fraction(3)), 6)
    write_csv(out / "fig1_trajectory.csv", ("t", "x1", "x2", "v1", "v2"),
              [b.csv_row() for b in traj.points])
    write_csv(out / "fig1_raster.csv", ("x1", "x2", "rho"),
              fld.sample_grid(2, rect(-1, 0, 3, 7), 32, 56))

    # one comb level's geometry
    k = int(scenario.get("k", 1))
    level = CombLevel.build(k, (0, 4), (0, 4))
    rows = []
    for label, patch in (("up", level.up), ("left", level.left),
                         ("up_half", level.up_half)):
        rows.extend(comb_rect_rows(patch, label))
    write_csv(out / "fig2_comb_level.csv",
              ("family", "tooth", "lo1", "lo2", "hi1", "hi2"), rows)

    # a marked square carried through one level
    corners = [Point2(Fraction(129, 32), Fraction(129, 32)),
               Point2(Fraction(131, 32), Fraction(129, 32)),
               Point2(Fraction(129, 32), Fraction(131, 32)),
               Point2(Fraction(131, 32), Fraction(131, 32))]
    snap_rows = []
    for ci, c in enumerate(corners):
        tr = trace(level.field, flux.eval_f, c, 16)
        for tt in (0, 6, 9, 12):
            pos = tr.position(tt)
            snap_rows.append((tt, ci, pos[0], pos[1]))
    write_csv(out / "fig3_square_snapshots.csv", ("t", "corner", "x1", "x2"),
              snap_rows)

    # composite comb layout, levels 0..n
    n = int(scenario.get("n", 2))
    fld_n = field_for_box(n, rect(4, 4, 6, 6))
    rows = []
    for pi, patch in enumerate(fld_n.patches):
        rows.extend(comb_rect_rows(patch, f"patch{pi}"))
    write_csv(out / "fig4_composite.csv",
              ("family", "tooth", "lo1", "lo2", "hi1", "hi2"), rows)

    # eigenvalue curves of the radial 1D system
    square = polynomial_flux([0, 0, 1])
    eig_rows = []
    for i in range(1, 41):
        r = i / 8.0
        e = jacobian_eigen(square, (r, 0.0))
        eig_rows.append((r, e.lam, e.lam_star))
    write_csv(out / "fig5_eigenvalues.csv", ("radius", "lambda", "lambda_star"),
              eig_rows)
    return _finish(out, scenario, {"ok": True})


COMMANDS = {
    "trace": cmd_trace,
    "verify-field": cmd_verify_field,
    "verify-shifts": cmd_verify_shifts,
    "verify-psi": cmd_verify_psi,
    "illposed": cmd_illposed,
    "riemann": cmd_riemann,
    "compactness": cmd_compactness,
    "figures": cmd_figures,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="combflow",
        description="Exact comb-shift flow simulations and verifications")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON")
    parser.add_argument("--out", default=None, help="output root directory")
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--max-events", type=int, default=10 ** 6)
    args = parser.parse_args(argv)
    try:
        scenario = Scenario.load(args.config)
        return COMMANDS[args.command](scenario, args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ChatteringError as e:
        print(f"guard tripped: {e}", file=sys.stderr)
        return 3


def console_main():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    console_main()
