"""Checks that compare a solver trajectory with the free evolution P_t u0."""

from __future__ import annotations

import warnings
from dataclasses import replace

import numpy as np

from ..grid import Field, Grid, lp_norm
from ..semigroup import apply
from ..solver import SolverConfig, Trajectory, solve
from .report import CheckResult, RateFit, RatioReport

DEFAULT_FLOOR = 1e-8
SMALL_TIMES = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
TRIVIAL_TOL = 1e-8


def ratio_field(u: Field, ref: Field, floor: float = DEFAULT_FLOOR):
    """u / ref where ref > floor * max(ref), NaN elsewhere, plus a report row."""
    if u.grid != ref.grid:
        raise ValueError("u and ref live on different grids")
    if not floor > 0:
        raise ValueError("floor must be positive")
    top = float(np.max(ref.values))
    keep = ref.values > floor * top if top > 0 else np.zeros(ref.values.shape, bool)
    if u.mask is not None:
        keep &= u.mask
    if ref.mask is not None:
        keep &= ref.mask
    if not keep.any():
        raise ValueError("reference is below the floor everywhere")
    ratio = np.full(ref.values.shape, np.nan)
    ratio[keep] = u.values[keep] / ref.values[keep]
    row = {"t": float(u.time), "sup": float(np.max(ratio[keep])), "inf": float(np.min(ratio[keep])),
           "masked_fraction": float(1.0 - keep.mean())}
    return ratio, row


def _reference(traj: Trajectory, cfg: SolverConfig, t: float) -> Field:
    ref = apply(traj.u0, t, cfg.alpha)
    return ref if ref.time == t else ref.with_values(ref.values, t)


def _ratios(traj, cfg, times=None, floor=DEFAULT_FLOOR):
    """Yield (snapshot, ratio array, row) for saved t > 0 (optionally a subset)."""
    for snap in traj.snapshots:
        if snap.time <= 0:
            continue
        if times is not None and not np.any(np.isclose(times, snap.time, rtol=1e-9)):
            continue
        ratio, row = ratio_field(snap, _reference(traj, cfg, snap.time), floor)
        yield snap, ratio, row


def _require_times(traj, wanted):
    have = traj.times
    missing = [t for t in wanted if not np.any(np.isclose(have, t, rtol=1e-9))]
    return missing


def ratio_report(traj: Trajectory, cfg: SolverConfig, floor: float = DEFAULT_FLOOR) -> RatioReport:
    rep = RatioReport()
    for _, _, row in _ratios(traj, cfg, floor=floor):
        rep.add(row)
    return rep


def _refined(cfg: SolverConfig) -> SolverConfig:
    g = cfg.grid
    return replace(cfg, grid=Grid(g.dim, g.half_width, 2 * g.n))


def check_two_sided(traj: Trajectory, cfg: SolverConfig, floor: float = DEFAULT_FLOOR,
                    refined: Trajectory | None = None, eps_list=None,
                    max_masked: float = 0.05, max_drift: float = 0.10) -> CheckResult:
    """Empirical comparability constant C_emp of u against P_t u0.

    ``refined`` is the same scenario on the n -> 2n grid; it is solved here when
    not supplied. ``eps_list`` optionally adds the eps-scaled datum sweep.
    """
    rep = ratio_report(traj, cfg, floor)
    if not rep.times:
        raise ValueError("trajectory has no snapshot with t > 0")
    if refined is None:
        rcfg = _refined(cfg)
        refined = solve(rcfg)
    else:
        rcfg = replace(cfg, grid=refined.u0.grid)
    rep2 = ratio_report(refined, rcfg, floor)
    C, C2 = rep.C_emp, rep2.C_emp
    drift = abs(C2 - C) / C
    measured = {"C_emp": C, "C_emp_refined": C2, "refinement_drift": drift,
                "max_masked_fraction": max(rep.masked_fraction), "ratio_report": rep.as_dict()}
    tol = {"refinement_drift_max": max_drift, "masked_fraction_max": max_masked}
    ok = bool(np.isfinite(C) and drift < max_drift and max(rep.masked_fraction) < max_masked)
    tables = {"ratio_vs_t": (["t", "sup_ratio", "inf_ratio", "masked_fraction"],
                             list(zip(rep.times, rep.sup_ratio, rep.inf_ratio, rep.masked_fraction)))}
    if eps_list is not None:
        eps = sorted((float(e) for e in eps_list), reverse=True)
        c_eps = []
        for e in eps:
            ecfg = replace(cfg, datum=replace(cfg.datum, mass=cfg.datum.mass * e))
            c_eps.append(C if e == 1.0 else ratio_report(solve(ecfg), ecfg, floor).C_emp)
        monotone = bool(np.all(np.diff(c_eps) < 0)) and all(c >= 1.0 for c in c_eps)
        measured.update({"eps": eps, "C_emp_eps": c_eps, "eps_monotone_to_1": monotone})
        tol["eps_trend"] = "strictly decreasing toward 1 as eps decreases"
        ok = ok and monotone
        tables["c_emp_vs_eps"] = (["eps", "C_emp"], list(zip(eps, c_eps)))
    status = "trivial" if cfg.b_norm == 0 and abs(C - 1) < TRIVIAL_TOL and ok else ""
    return CheckResult("two-sided", {"floor": floor, "n": cfg.grid.n, "n_refined": rcfg.grid.n},
                       measured, tol, ok, status, tables=tables)


def _sup_error(ratio):
    return float(np.nanmax(np.abs(ratio - 1.0)))


def check_small_time(traj: Trajectory, cfg: SolverConfig, times=SMALL_TIMES,
                     floor: float = DEFAULT_FLOOR, shrink: float = 3.0) -> CheckResult:
    """e(t) = sup |u/P_t u0 - 1| must fall strictly as t decreases."""
    times = tuple(sorted(times))
    missing = _require_times(traj, times)
    if len(times) < 4 or missing:
        raise ValueError(f"small-time sweep too short; missing save times {missing}")
    e = [_sup_error(r) for _, r, _ in _ratios(traj, cfg, times, floor)]
    params = {"times": list(times), "floor": floor}
    tables = {"e_vs_t": (["t", "e"], list(zip(times, e)))}
    if cfg.b_norm == 0:
        ok = max(e) < TRIVIAL_TOL
        return CheckResult("small-time", params, {"e": e}, {"trivial_max": TRIVIAL_TOL}, ok,
                           "trivial" if ok else "fail", tables=tables)
    dec = bool(np.all(np.diff(e) > 0))
    ratio = e[-1] / e[0]
    ok = dec and e[0] < e[-1] / shrink
    return CheckResult("small-time", params,
                       {"e": e, "strictly_decreasing_as_t_decreases": dec, "shrinkage": ratio},
                       {"shrinkage_min": shrink}, ok, tables=tables)


def check_large_x(traj: Trajectory, cfg: SolverConfig, radii, t_window=None,
                  floor: float = DEFAULT_FLOOR, shrink: float = 3.0) -> CheckResult:
    """E(R) = sup over saved t (in t_window) and |x| > R of |u/P_t u0 - 1|."""
    radii = sorted(float(r) for r in radii)
    lo, hi = t_window if t_window is not None else (0.0, np.inf)
    rad = cfg.grid.radius
    E = np.full(len(radii), -np.inf)
    for snap, ratio, _ in _ratios(traj, cfg, floor=floor):
        if not lo <= snap.time <= hi:
            continue
        err = np.abs(ratio - 1.0)
        for i, R in enumerate(radii):
            sel = (rad > R) & np.isfinite(err)
            if sel.any():
                E[i] = max(E[i], float(err[sel].max()))
    keep = np.isfinite(E)
    if not keep.all():
        warnings.warn(f"dropping radii {np.array(radii)[~keep].tolist()}: fully masked")
        radii = [r for r, k in zip(radii, keep) if k]
        E = E[keep]
    if len(radii) < 2:
        raise ValueError("fewer than two usable radii")
    E = E.tolist()
    params = {"radii": radii, "t_window": [lo, hi], "floor": floor}
    tables = {"E_vs_R": (["R", "E"], list(zip(radii, E)))}
    if cfg.b_norm == 0:
        ok = max(E) < TRIVIAL_TOL
        return CheckResult("large-x", params, {"E": E}, {"trivial_max": TRIVIAL_TOL}, ok,
                           "trivial" if ok else "fail", tables=tables)
    dec = bool(np.all(np.diff(E) < 0))
    ok = dec and E[-1] < E[0] / shrink
    return CheckResult("large-x", params,
                       {"E": E, "strictly_decreasing": dec, "shrinkage": E[0] / E[-1]},
                       {"shrinkage_min": shrink}, ok, tables=tables)


def rate_gamma(cfg: SolverConfig) -> float:
    d = cfg.grid.dim
    return 0.8 * min(d * (cfg.q - cfg.q0), 1.0) / cfg.alpha


def check_large_time_rate(traj: Trajectory, cfg: SolverConfig, gamma: float | None = None,
                          t_range=(1.0, 100.0), floor: float = DEFAULT_FLOOR,
                          slack: float = 0.05, r2_min: float = 0.95) -> CheckResult:
    """Log-log slope of e(t) over t_range; q = q0 runs are the negative control."""
    lo, hi = t_range
    ts, es = [], []
    for snap, ratio, _ in _ratios(traj, cfg, floor=floor):
        if lo * (1 - 1e-12) <= snap.time <= hi * (1 + 1e-12):
            ts.append(snap.time)
            es.append(_sup_error(ratio))
    critical = abs(cfg.q - cfg.q0) < 1e-12
    gamma = rate_gamma(cfg) if gamma is None else float(gamma)
    params = {"t_range": [lo, hi], "gamma": gamma, "q": cfg.q, "q0": cfg.q0,
              "role": "negative-control" if critical else "rate"}
    tables = {"e_vs_t": (["t", "e"], list(zip(ts, es)))}
    if cfg.b_norm == 0:
        ok = max(es, default=0.0) < TRIVIAL_TOL
        return CheckResult("large-time-rate", params, {"e": es}, {"trivial_max": TRIVIAL_TOL},
                           ok, "trivial" if ok else "fail", tables=tables)
    if min(es, default=0.0) <= 0:
        raise ValueError("e(t) vanishes; rate fit underdetermined")
    fit = RateFit.fit(np.log(ts), np.log(es))
    measured = {"e": es, "fit": fit.as_dict()}
    if critical:
        tol = {"slope_min": -slack}
        ok = fit.slope > -slack
    else:
        tol = {"slope_max": -gamma + slack, "r2_min": r2_min}
        ok = fit.slope <= -gamma + slack and fit.r2 > r2_min
    return CheckResult("large-time-rate", params, measured, tol, ok, tables=tables)


def check_lp_decay(traj: Trajectory, cfg: SolverConfig, p_list=(1, 2, np.inf),
                   gamma: float | None = None, max_drift: float = 0.10,
                   mass_tol: float = 1e-6) -> CheckResult:
    """t^{d(1-1/p)/alpha} ||u(t)||_p over the sweep, plus the L^p rate for q > q0.

    ||u*(t)||_p equals t^{d(1-1/p)/alpha} ||u(t)||_p by change of variables, so
    the u* norms are read from the same numbers; ||u*(t)||_1 = M is checked
    through the mass of each snapshot.
    """
    snaps = [s for s in traj.snapshots if s.time > 0]
    ts = np.array([s.time for s in snaps])
    if ts.size < 2 or ts[-1] / ts[0] < 1e3 * (1 - 1e-9):
        raise ValueError("lp-decay needs saved times spanning at least 3 decades")
    d, a = cfg.grid.dim, cfg.alpha
    M = cfg.datum.mass
    top = ts >= ts[-1] / 10 * (1 - 1e-12)
    if top.sum() < 2:
        raise ValueError("top decade holds fewer than two saved times")
    supercritical = cfg.q > cfg.q0 + 1e-12 and cfg.b_norm > 0
    g = rate_gamma(cfg) if gamma is None else float(gamma)
    measured = {"p": [], "m_p": [], "top_decade_drift": [], "cor54_slope": [], "cor54_decreasing": []}
    ok = True
    rows = []
    for p in p_list:
        pf = float(p)
        w = d * (1.0 - 1.0 / pf) / a
        m = np.array([t ** w * lp_norm(s, pf) for t, s in zip(ts, snaps)])
        mt = m[top]
        drift = float((mt.max() - mt.min()) / mt.max())
        measured["p"].append("inf" if np.isinf(pf) else pf)
        measured["m_p"].append(float(m.max()))
        measured["top_decade_drift"].append(drift)
        ok = ok and bool(np.isfinite(m.max())) and drift < max_drift
        rows.extend((t, pf, v) for t, v in zip(ts, m))
        if supercritical:
            late = top
            tl = ts[late]
            dp = np.array([t ** (g + w) * lp_norm(s.with_values(s.values - apply(traj.u0, t, a).values), pf)
                           for t, s in zip(tl, np.array(snaps, dtype=object)[late])])
            fit = RateFit.fit(np.log(tl), np.log(dp)) if tl.size >= 4 else None
            decreasing = fit is not None and fit.slope < 0 and dp[-1] < dp[0]
            measured["cor54_slope"].append(None if fit is None else fit.slope)
            measured["cor54_decreasing"].append(bool(decreasing))
            ok = ok and decreasing
    mass_err = max(abs(lp_norm(s, 1.0) - M) / M for s in snaps)
    measured["ustar_l1_rel_error"] = mass_err
    ok = ok and mass_err < mass_tol
    tol = {"top_decade_drift_max": max_drift, "ustar_l1_rel_tol": mass_tol}
    if supercritical:
        tol["cor54"] = "log-log slope < 0 and last < first over the top decade"
    return CheckResult("lp-decay", {"p_list": measured["p"], "gamma": g}, measured, tol, ok,
                       tables={"m_p_vs_t": (["t", "p", "m_p"], rows)})


def ustar_tail(snap: Field, alpha: float, radii) -> np.ndarray:
    """sup_{|y|>R} u*(t, y) for one snapshot, -inf where no lattice point qualifies."""
    g = snap.grid
    t = snap.time
    out = []
    for R in radii:
        sel = g.radius > R * t ** (1.0 / alpha)
        out.append(float(t ** (g.dim / alpha) * snap.values[sel].max()) if sel.any() else -np.inf)
    return np.array(out)


def check_ustar_vanishing(traj: Trajectory, cfg: SolverConfig, radii=(2.0, 4.0, 8.0, 16.0),
                          t_window=(1e-4, 1e-1), shrink: float = 5.0) -> CheckResult:
    """s(t) = ||u*(t)||_inf grows from ~0; S(R) = sup_t sup_{|x|>R} u*(t,x) falls in R."""
    d, a = cfg.grid.dim, cfg.alpha
    lo, hi = t_window
    snaps = [s for s in traj.snapshots if s.time > 0]
    small = [s for s in snaps if lo * (1 - 1e-12) <= s.time <= hi * (1 + 1e-12)]
    if len(small) < 2:
        raise ValueError("need at least two saved times inside the small-t window")
    st = [float(s.time) for s in small]
    sv = [float(s.time ** (d / a) * np.max(s.values)) for s in small]
    radii = sorted(float(r) for r in radii)
    S = np.max([ustar_tail(s, a, radii) for s in snaps], axis=0)
    good = np.isfinite(S) & (S > 0)
    Sr, Rr = S[good], np.array(radii)[good]
    if Rr.size < 2:
        raise ValueError("fewer than two radii with data")
    s_ok = sv[0] < sv[-1] / shrink
    S_dec = bool(np.all(np.diff(Sr) < 0))
    S_ok = S_dec and Sr[0] / Sr[-1] >= shrink
    measured = {"s_t": sv, "s_shrinkage": sv[-1] / sv[0] if sv[0] > 0 else np.inf,
                "S_R": Sr.tolist(), "S_decreasing": S_dec, "S_shrinkage": float(Sr[0] / Sr[-1])}
    if Rr.size >= 4:
        measured["tail_slope"] = RateFit.fit(np.log(Rr), np.log(Sr)).slope
    return CheckResult("ustar-vanishing", {"radii": Rr.tolist(), "t_window": [lo, hi]}, measured,
                       {"shrinkage_min": shrink}, bool(s_ok and S_ok),
                       tables={"s_vs_t": (["t", "s"], list(zip(st, sv))),
                               "S_vs_R": (["R", "S"], list(zip(Rr.tolist(), Sr.tolist())))})
