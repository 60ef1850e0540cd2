#include <cmath>

#include "doctest.h"
#include "cctstudy.hpp"
#include "eac.hpp"

using namespace mgstab;

namespace {

std::string cases_dir() { return MGSTAB_CASES_DIR; }

Scenario smib_scn(double horizon = 1.5) {
    Scenario sc;
    sc.fault_bus = 2;
    sc.t_fault = 0.1;
    sc.t_clear = 0.1 + horizon;  // search horizon
    return sc;
}

Scenario micro4_scn(double horizon = 4.0) {
    Scenario sc;
    sc.fault_bus = 4;
    sc.t_fault = 0.5;
    sc.t_clear = 0.5 + horizon;
    sc.island_branches = {0};
    return sc;
}

SimConfig angle_only() {
    SimConfig cfg;
    cfg.v_recover = 0.0;
    return cfg;
}

// closed-form CCT for the bundled smib case, from the engine's own E'
double smib_eac_cct(const Case& c) {
    TransientSim sim(c, smib_scn(), SimConfig{});
    const MachineInit& mi = sim.machines()[0];
    double x_total = c.gens[0].xdp + c.branches[0].x;
    double pmax = mi.source.emf_mag * std::abs(sim.powerflow().v[0]) / x_total;
    eac::SmibSpec spec{c.gens[0].h_sys, c.omega_s(), mi.pm, pmax, 0.0, pmax};
    double d0 = mi.state.delta;
    return eac::critical_clearing_time(spec, d0, eac::critical_angle_eac(spec, d0));
}

}  // namespace

TEST_CASE("find_cct_bisect: smib agrees with the equal-area closed form") {
    Case c = load_case(cases_dir() + "/smib.case");
    double ref = smib_eac_cct(c);
    SimConfig cfg = angle_only();
    CctResult r = find_cct_bisect(c, smib_scn(), cfg, 1e-3);
    REQUIRE(r.status == CctStatus::Ok);
    CHECK(std::abs(r.cct - ref) <= std::max(2.0 * cfg.dt, 0.02 * ref));
    CHECK(r.bracket_high - r.bracket_low <= 1e-3 + 1e-12);
}

TEST_CASE("find_cct_bisect: bracket endpoints re-simulate to their verdicts") {
    Case c = load_case(cases_dir() + "/smib.case");
    SimConfig cfg = angle_only();
    CctResult r = find_cct_bisect(c, smib_scn(), cfg, 0.01);
    REQUIRE(r.status == CctStatus::Ok);
    TransientSim sim(c, smib_scn(), cfg);
    CHECK(sim.run(r.bracket_low, r.bracket_low + cfg.t_settle + 4.0).verdict == Verdict::Stable);
    CHECK(sim.run(r.bracket_high, r.bracket_high + cfg.t_settle + 4.0).verdict == Verdict::Unstable);
}

TEST_CASE("find_cct_bisect: horizon and resolution boundaries") {
    Case c = load_case(cases_dir() + "/smib.case");
    SimConfig cfg = angle_only();
    // horizon below the true CCT: everything stable
    CctResult hi = find_cct_bisect(c, smib_scn(0.05), cfg, 0.01);
    CHECK(hi.status == CctStatus::ExceedsHorizon);
    // first probe already unstable
    Scenario sc = smib_scn(1.5);
    CctResult lo = find_cct_bisect(c, sc, cfg, 1.2);
    CHECK(lo.status == CctStatus::BelowResolution);
}

TEST_CASE("find_cct_sweep: paper counting convention and bisect agreement") {
    Case c = load_case(cases_dir() + "/smib.case");
    SimConfig cfg = angle_only();
    double t_step = 0.05;
    CctResult sweep = find_cct_sweep(c, smib_scn(), cfg, t_step);
    CctResult bisect = find_cct_bisect(c, smib_scn(), cfg, 1e-3);
    REQUIRE(sweep.status == CctStatus::Ok);
    // cct = last stable clearing instant - fault instant, on the step grid
    CHECK(sweep.cct == doctest::Approx(std::floor(bisect.cct / t_step) * t_step).epsilon(1e-9));
    CHECK(std::abs(sweep.cct - bisect.cct) <= t_step);
    CHECK(sweep.bracket_high - sweep.bracket_low == doctest::Approx(t_step));
    // trials walk upward and stop at the first unstable verdict
    for (size_t i = 0; i + 1 < sweep.trials.size(); ++i)
        CHECK(sweep.trials[i].verdict == Verdict::Stable);
    CHECK(sweep.trials.back().verdict == Verdict::Unstable);
}

TEST_CASE("find_cct_sweep: speculative batches match the sequential result") {
    Case c = load_case(cases_dir() + "/smib.case");
    SimConfig cfg = angle_only();
    CctResult seq = find_cct_sweep(c, smib_scn(), cfg, 0.05, 1);
    CctResult par = find_cct_sweep(c, smib_scn(), cfg, 0.05, 4);
    CHECK(seq.cct == par.cct);
    CHECK(seq.trials.size() == par.trials.size());
}

TEST_CASE("find_cct_sweep: first trial unstable reports below-resolution") {
    Case c = load_case(cases_dir() + "/smib.case");
    CctResult r = find_cct_sweep(c, smib_scn(), angle_only(), 1.4);
    CHECK(r.status == CctStatus::BelowResolution);
}

TEST_CASE("find_cct_bisect: cct grows with inertia") {
    SimConfig cfg = angle_only();
    double prev = 0.0;
    for (double h : {3.0, 5.0, 8.0}) {
        Case c = load_case(cases_dir() + "/smib.case");
        c.gens[0].h = h;
        c.gens[0].h_sys = h;  // s_rating == base
        CctResult r = find_cct_bisect(c, smib_scn(), cfg, 5e-3);
        REQUIRE(r.status == CctStatus::Ok);
        CHECK(r.cct > prev);
        prev = r.cct;
    }
}

TEST_CASE("sweep_pv_share: zero share reproduces the no-PV case") {
    Case c = load_case(cases_dir() + "/micro4.case");
    StudyConfig study;
    study.resolution = 0.01;
    study.sim.dt = 1e-3;
    auto rows = sweep_pv_share(c, {0.0}, 2, micro4_scn(), study);
    REQUIRE(rows.size() == 1);
    Case bare = c;
    bare.pvs.clear();
    CctResult ref = find_cct_bisect(bare, micro4_scn(), study.sim, 0.01);
    CHECK(rows[0].cct == doctest::Approx(ref.cct).epsilon(1e-12));
}

TEST_CASE("sweep_pv_share: thirty MW centralized beats zero") {
    Case c = load_case(cases_dir() + "/micro4.case");
    StudyConfig study;
    study.resolution = 0.005;
    auto rows = sweep_pv_share(c, {0.0, 30.0}, 2, micro4_scn(), study);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].feasible);
    CHECK(rows[1].feasible);
    CHECK(rows[1].cct > rows[0].cct);
}

TEST_CASE("sweep_pv_share: infeasible share is marked and the sweep continues") {
    Case c = load_case(cases_dir() + "/micro4.case");
    StudyConfig study;
    study.resolution = 0.05;
    // 5 GW of PV at a distribution bus cannot converge
    auto rows = sweep_pv_share(c, {5000.0, 5.0}, 2, micro4_scn(), study);
    REQUIRE(rows.size() == 2);
    CHECK(!rows[0].feasible);
    CHECK(rows[1].feasible);
}

TEST_CASE("compare_topologies: identical layouts give identical rows") {
    Case c = load_case(cases_dir() + "/micro4.case");
    StudyConfig study;
    study.resolution = 0.01;
    auto rows = compare_topologies(c, 10.0, 3, {{3, 10.0}}, micro4_scn(), study);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cct == rows[1].cct);
    CHECK(rows[0].peak_fault_current == doctest::Approx(rows[1].peak_fault_current).epsilon(1e-12));
}

TEST_CASE("compare_topologies: layout must sum to the total") {
    Case c = load_case(cases_dir() + "/micro4.case");
    StudyConfig study;
    CHECK_THROWS_AS(compare_topologies(c, 30.0, 2, {{2, 10.0}}, micro4_scn(), study), Error);
}

TEST_CASE("compare_topologies: permuting the distributed fleet changes nothing") {
    Case c = load_case(cases_dir() + "/micro4.case");
    Scenario sc = micro4_scn();
    SimConfig cfg;
    cfg.t_end = 4.2;
    sc.t_clear = 0.62;
    SimResult a = simulate(c, sc, cfg);
    Case perm = c;
    std::swap(perm.pvs[0], perm.pvs[5]);
    std::swap(perm.pvs[1], perm.pvs[3]);
    SimResult b = simulate(perm, sc, cfg);
    CHECK(a.verdict == b.verdict);
    CHECK(a.peak_fault_current == doctest::Approx(b.peak_fault_current).epsilon(1e-9));
    CHECK(a.max_rel_angle_dev == doctest::Approx(b.max_rel_angle_dev).epsilon(1e-9));
}

TEST_CASE("fault_current_probe: smib breakdown matches E'/xdp") {
    Case c = load_case(cases_dir() + "/smib.case");
    Scenario sc = smib_scn();
    sc.t_clear = 0.2;
    SimConfig cfg = angle_only();
    ProbeResult p = fault_current_probe(c, sc, cfg);
    TransientSim sim(c, sc, cfg);
    double expect_sg = sim.machines()[0].source.emf_mag / c.gens[0].xdp;
    REQUIRE(p.per_source.size() == 1);
    CHECK(p.per_source[0].first == "g2");
    CHECK(p.per_source[0].second == doctest::Approx(expect_sg).epsilon(0.01));
    CHECK(p.peak > expect_sg);  // the infinite bus feeds the short as well
}

TEST_CASE("fault_current_probe: an added PV at the faulted bus raises the peak") {
    Case c = load_case(cases_dir() + "/smib.case");
    Scenario sc = smib_scn();
    sc.t_clear = 0.2;
    SimConfig cfg = angle_only();
    ProbeResult base = fault_current_probe(c, sc, cfg);

    Case with_pv = c;
    with_pv.pvs.push_back(pvmodel::default_unit(2, 5.0));
    ProbeResult withp = fault_current_probe(with_pv, sc, cfg);
    REQUIRE(withp.per_source.size() == 2);
    double i_max = pvmodel::unit_i_max_pu(with_pv.pvs[0], c.base_mva);
    CHECK(withp.per_source[1].second == doctest::Approx(i_max).epsilon(1e-6));
    CHECK(withp.peak > base.peak);

    // hand phasor oracle: fixed point of I_f = y_f V, V = (sum I)/(y_g + y_tie + y_f)
    TransientSim sim(with_pv, sc, cfg);
    const MachineInit& mi = sim.machines()[0];
    Complex e = mi.source.emf_mag * Complex(std::cos(mi.state.delta), std::sin(mi.state.delta));
    Complex v1 = sim.powerflow().v[0];
    Complex yg = 1.0 / Complex(0.0, c.gens[0].xdp);
    Complex yt = 1.0 / Complex(0.0, c.branches[0].x);
    Complex yf = sc.fault_admittance;
    Complex v2(1e-6, 0.0);
    for (int it = 0; it < 300; ++it) {
        Complex ipv = pvmodel::injection_current(0.05, i_max, v2);
        v2 = (yg * e + yt * v1 + ipv) / (yg + yt + yf);
    }
    CHECK(withp.peak == doctest::Approx(std::abs(yf * v2)).epsilon(1e-4));
}

TEST_CASE("fault_current_probe: tripping the whole fleet never raises the peak") {
    Case c = load_case(cases_dir() + "/micro4.case");
    Scenario sc = micro4_scn();
    sc.t_clear = 0.62;
    SimConfig cfg;
    cfg.t_end = 4.2;
    ProbeResult with_pv = fault_current_probe(c, sc, cfg);
    Scenario tripped = sc;
    for (size_t i = 0; i < c.pvs.size(); ++i)
        tripped.trip_elements.push_back("pv:" + std::to_string(i));
    ProbeResult without = fault_current_probe(c, tripped, cfg);
    CHECK(without.peak <= with_pv.peak + 1e-12);
}
