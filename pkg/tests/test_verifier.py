import json

import numpy as np
import pytest
from scipy import integrate

from fracburgers import kernel, verifier
from fracburgers.grid import Field, Grid, InitialDatumSpec, make_u0
from fracburgers.kernel import StabilityParams
from fracburgers.semigroup import apply
from fracburgers.solver import SolverConfig, solve
from fracburgers.verifier import CheckResult, RateFit, RatioReport, ratio_field, ustar_tail

P = StabilityParams(1.5)


# ------------------------------------------------------------------ ratios

def test_ratio_field_examples():
    g = Grid(1, 20.0, 512)
    ref = make_u0(InitialDatumSpec("gaussian_bump", 1.0, 1.0), g)
    _, row = ratio_field(ref, ref)
    assert row["sup"] == row["inf"] == 1.0
    _, row = ratio_field(ref.with_values(2 * ref.values), ref)
    assert row["sup"] == pytest.approx(2.0, rel=1e-15) and row["inf"] == pytest.approx(2.0, rel=1e-15)
    fracs = [ratio_field(ref, ref, floor)[1]["masked_fraction"] for floor in (1e-12, 1e-8, 1e-4, 1e-1)]
    assert fracs == sorted(fracs) and fracs[-1] > fracs[0]
    with pytest.raises(ValueError):
        ratio_field(ref, ref.with_values(np.zeros(g.shape)))


def test_rate_fit_and_report():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = RateFit.fit(np.log(x), np.log(3 * x ** -0.5))
    assert fit.slope == pytest.approx(-0.5, abs=1e-12) and fit.r2 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        RateFit.fit(x[:3], x[:3])
    rep = RatioReport()
    rep.add({"t": 1.0, "sup": 1.5, "inf": 0.8, "masked_fraction": 0.0})
    rep.add({"t": 2.0, "sup": 1.2, "inf": 0.5, "masked_fraction": 0.01})
    assert rep.C_emp == 2.0


def test_zero_drift_is_trivial(linear):
    scn, traj = linear
    cfg = scn.solver
    two = verifier.check_two_sided(traj, cfg)
    assert two.status == "trivial" and abs(two.measured["C_emp"] - 1) < 1e-8
    small = verifier.check_small_time(traj, cfg)
    assert small.status == "trivial" and max(small.measured["e"]) < 1e-8
    large = verifier.check_large_x(traj, cfg, [2.5, 5, 10, 20])
    assert large.status == "trivial" and max(large.measured["E"]) < 1e-8
    for res in (two, small, large):
        assert res.passed


def test_critical_two_sided(critical):
    scn, traj = critical
    res = verifier.check_two_sided(traj, scn.solver, eps_list=[1, 0.3, 0.1, 0.03])
    m = res.measured
    assert res.passed and res.status == "pass"
    assert 1 < m["C_emp"] < np.inf and m["refinement_drift"] < 0.10
    eps_c = m["C_emp_eps"]
    assert all(a > b for a, b in zip(eps_c, eps_c[1:])) and min(eps_c) >= 1


def test_two_sided_scaling_invariance():
    # u0 -> lam^(d/alpha) u0(lam^(1/alpha) .), t -> t / lam on the rescaled lattice
    lam, a = 4.0, 1.5
    base = SolverConfig(P, 0.5, (1.0,), InitialDatumSpec(), Grid(1, 40.0, 1024), 0.02, 1.0, (0.01, 0.1, 1.0))
    sc = SolverConfig(P, 0.5, (1.0,), InitialDatumSpec(), Grid(1, 40.0 / lam ** (1 / a), 1024), 0.02 / lam,
                      1.0 / lam, (0.01 / lam, 0.1 / lam, 1.0 / lam))
    u0 = base.initial_field()
    v0 = Field(sc.grid, lam ** (1 / a) * u0.values)
    c1 = verifier.ratio_report(solve(base, u0), base).C_emp
    c2 = verifier.ratio_report(solve(sc, v0), sc).C_emp
    assert abs(c1 - c2) < 1e-8


def test_critical_small_time(critical):
    scn, traj = critical
    res = verifier.check_small_time(traj, scn.solver)
    e = res.measured["e"]
    assert res.passed and all(a < b for a, b in zip(e, e[1:])) and e[0] < e[-1] / 3


def test_small_time_error_linear_in_drift():
    bs = np.array([1e-3, 2e-3, 4e-3, 8e-3])
    es = []
    for b in bs:
        cfg = SolverConfig(P, 0.5, (b,), InitialDatumSpec(), Grid(1, 40.0, 1024), 0.01, 0.1,
                           verifier.SMALL_TIMES)
        es.append(verifier.check_small_time(solve(cfg), cfg).measured["e"][-1])
    assert RateFit.fit(bs, np.array(es)).r2 > 0.99


def test_critical_large_x(critical):
    scn, traj = critical
    res = verifier.check_large_x(traj, scn.solver, [2.5, 5, 10, 20], (0.01, 1.0))
    E = res.measured["E"]
    assert res.passed and all(a > b for a, b in zip(E, E[1:]))


# ------------------------------------------------------------------- u*

def test_ustar_tail_sup_over_time_is_inverse_radius():
    # b = 0, u0 = p(1,.): |y| u*(t, y) = |x| p(1 + t, x) <= sup_z z p(1, z), so S(R) ~ 1/R
    g = Grid(1, 400.0, 16384)
    saves = tuple(np.geomspace(1e-4, 1e-1, 7)) + (30.0,)
    cfg = SolverConfig(P, 0.5, (0.0,), InitialDatumSpec(), g, 0.05, 30.0, saves)
    traj = solve(cfg, Field(g, kernel.density(P, 1.0, np.abs(g.axis))))
    res = verifier.check_ustar_vanishing(traj, cfg, radii=(2, 4, 8, 16))
    z = np.linspace(0.01, 20, 20001)
    bound = np.max(z * kernel.density(P, 1.0, z))
    R = np.array([2, 4, 8, 16.0])
    RS = R * np.array(res.measured["S_R"])
    assert res.passed
    assert np.all(RS <= bound * (1 + 1e-6)) and np.all(RS >= 0.8 * bound)
    assert abs(res.measured["tail_slope"] + 1) < 0.1
    # one large-t snapshot is close to p(1,.) and carries the kernel tail
    R = np.array([4, 8, 16, 32.0])
    S = ustar_tail(traj.at(30.0), 1.5, R)
    assert abs(RateFit.fit(np.log(R), np.log(S)).slope + 2.5) < 0.1


def test_ustar_tail_heavy_datum():
    # the datum tail |x|^-(1+gamma) dominates P_1 u0 once the kernel tail correction
    # (relative size |x|^-(alpha-gamma)) has faded
    g = Grid(1, 320.0, 16384)
    u0 = make_u0(InitialDatumSpec("heavy_tail", 1.0, 1.0, gamma=0.75), g)
    R = np.array([16, 32, 64, 128.0])
    S = ustar_tail(apply(u0, 1.0, 1.5), 1.5, R)
    assert abs(RateFit.fit(np.log(R), np.log(S)).slope + 1.75) < 0.1


def test_critical_ustar(critical):
    scn, traj = critical
    res = verifier.check_ustar_vanishing(traj, scn.solver)
    s = res.measured["s_t"]
    assert res.passed and s[0] < s[-1] / 5
    # u0 bounded: s(t) <= t^(d/alpha) ||u0||_inf
    top = traj.u0.values.max()
    small = [x for x in traj.snapshots if 1e-4 <= x.time <= 1e-1]
    for snap, val in zip(small, s):
        assert val <= snap.time ** (1 / 1.5) * top * (1 + 1e-12)


# ----------------------------------------------- lemma, convolution

def test_lemma_constant_beta_limit():
    limit = (2 / 3) * np.pi / np.sin(2 * np.pi / 3)
    assert verifier.lemma_constant(1.5, 1e-12) == pytest.approx(limit, rel=1e-10)
    direct, _ = integrate.quad(lambda r: (1 - r ** 1.5) ** (-1 / 1.5), 0, 1, epsabs=1e-14, epsrel=1e-12)
    assert direct == pytest.approx(limit, rel=1e-10)
    assert verifier.lemma_constant(1.5, 0.5) == pytest.approx(verifier.lemma_constant_mp(1.5, 0.5), rel=1e-10)


def test_lemma_identity(critical):
    scn, _ = critical
    cfg = scn.solver
    f = cfg.initial_field()
    res = verifier.check_lemma_identity(0.5, f, 1.0, cfg)
    assert res.passed and res.measured["max_rel_error"] < 1e-3
    zero = verifier.check_lemma_identity(0.5, f.with_values(np.zeros(f.grid.shape)), 1.0, cfg)
    assert zero.status == "trivial" and max(zero.measured["lhs"]) == 0
    for beta in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            verifier.check_lemma_identity(beta, f, 1.0, cfg)


def test_convolution_constants():
    c = verifier.convolution_ratio(0.5, 1.5, 0.5)
    assert c == pytest.approx(verifier.REGRESSION_C_HALF, rel=1e-10)
    near_one = [verifier.convolution_ratio(v, 1.5, 0.5) for v in (0.9, 0.99, 0.999)]
    near_zero = [verifier.convolution_ratio(v, 1.5, 0.5) for v in (1e-1, 1e-2, 1e-3)]
    assert all(np.isfinite(near_one + near_zero))
    assert all(a > b for a, b in zip(near_one, near_one[1:]))
    assert max(near_zero) < 4.0
    res = verifier.check_convolution_inequality(0.5, 1.5)
    assert res.passed
    with pytest.raises(ValueError):
        verifier.check_convolution_inequality(0.5, 1.5, v_list=(0.0, 0.5))


# ------------------------------------------------------------------ kernel

@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_check_kernel_closed_forms(alpha):
    results = verifier.check_kernel(StabilityParams(alpha))
    names = {r.check for r in results}
    assert "kernel-closed-form" in names
    for r in results:
        assert r.passed, (r.check, r.measured)
    closed = next(r for r in results if r.check == "kernel-closed-form")
    assert closed.measured["max_rel_error"] < 1e-8


def test_check_kernel_envelopes_stable():
    results = {r.check: r for r in verifier.check_kernel(P)}
    for name in ("kernel-envelope", "kernel-gradient-envelope"):
        env = results[name]
        assert env.passed and 0 < env.measured["c1"] <= env.measured["c2"] < np.inf
        assert env.measured["drift"] < 0.01


# -------------------------------------------------------------------- JSON

def test_check_result_json_shape():
    res = CheckResult("demo", {"a": 1}, {"x": np.float64(np.inf), "y": np.arange(2)}, {"tol": 1e-3}, True)
    out = json.loads(json.dumps(res.to_json()))
    assert set(out) == {"check", "params", "measured", "tolerance", "pass", "status", "artifact_paths"}
    assert out["measured"]["x"] == "inf" and out["measured"]["y"] == [0, 1] and out["status"] == "pass"
