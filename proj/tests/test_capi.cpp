// Exercises the shared-library surface the way an external client would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "mgstab.h"

namespace {

std::string path(const char* name) { return std::string(MGSTAB_CASES_DIR) + "/" + name; }

struct Loaded {
    mgstab_case* c = nullptr;
    ~Loaded() { mgstab_case_free(c); }
};

mgstab_scenario micro4_scenario(double horizon) {
    static const int island[] = {0};
    mgstab_scenario sc;
    mgstab_scenario_init(&sc);
    sc.fault_bus = 4;
    sc.t_fault = 0.5;
    sc.t_clear = 0.5 + horizon;
    sc.island_branches = island;
    sc.n_island_branches = 1;
    return sc;
}

}  // namespace

TEST_CASE("capi: load, counts and names") {
    Loaded h;
    REQUIRE(mgstab_case_load(path("micro4.case").c_str(), &h.c) == MGSTAB_OK);
    CHECK(mgstab_case_bus_count(h.c) == 4);
    CHECK(mgstab_case_gen_count(h.c) == 1);
    CHECK(mgstab_case_pv_count(h.c) == 6);
    CHECK(mgstab_case_bus_id(h.c, 0) == 1);
    CHECK(std::strcmp(mgstab_case_bus_name(h.c, 0), "utility") == 0);
    CHECK(mgstab_case_pv_bus(h.c, 0) == 2);
    CHECK(mgstab_case_pv_rating_mva(h.c, 0) == 5.0);
}

TEST_CASE("capi: error paths set status and message") {
    mgstab_case* c = nullptr;
    CHECK(mgstab_case_load("/nonexistent/path.case", &c) == MGSTAB_ERR_IO);
    CHECK(std::strlen(mgstab_last_error()) > 0);
    CHECK(mgstab_case_load_text("{not json", &c) == MGSTAB_ERR_PARSE);
    CHECK(mgstab_case_load(nullptr, &c) == MGSTAB_ERR_INVALID_ARG);

    const char* bad = R"({"base_mva": 100.0, "f_nom": 60.0,
        "buses": [{"id": 1, "name": "a", "base_kv": 13.8, "kind": "slack"}],
        "loads": [{"bus": 9, "p": 1.0, "q": 0.0}]})";
    CHECK(mgstab_case_load_text(bad, &c) == MGSTAB_ERR_VALIDATION);
}

TEST_CASE("capi: parse + validate lists diagnostics without throwing") {
    const char* text = R"({"base_mva": 100.0, "f_nom": 60.0,
        "buses": [{"id": 1, "name": "a", "base_kv": 13.8, "kind": "slack"},
                  {"id": 1, "name": "b", "base_kv": 13.8, "kind": "pq"}],
        "branches": [{"from": 1, "to": 1, "r": 0.0, "x": 0.0}]})";
    // go through a temp file to exercise the file entry point
    std::string tmp = "/tmp/mgstab_capi_bad.case";
    FILE* f = std::fopen(tmp.c_str(), "w");
    REQUIRE(f);
    std::fputs(text, f);
    std::fclose(f);
    Loaded h;
    REQUIRE(mgstab_case_parse_file(tmp.c_str(), &h.c) == MGSTAB_OK);
    int n = 0;
    REQUIRE(mgstab_case_validate(h.c, &n) == MGSTAB_OK);
    CHECK(n >= 3);  // duplicate id, self loop, zero impedance
    bool saw_dup = false;
    for (int i = 0; i < n; ++i)
        saw_dup = saw_dup || std::string(mgstab_case_diagnostic(h.c, i)).find("duplicate-bus-id") !=
                                 std::string::npos;
    CHECK(saw_dup);
}

TEST_CASE("capi: powerflow accessors") {
    Loaded h;
    REQUIRE(mgstab_case_load(path("smib.case").c_str(), &h.c) == MGSTAB_OK);
    mgstab_powerflow* pf = nullptr;
    REQUIRE(mgstab_powerflow_run(h.c, &pf) == MGSTAB_OK);
    CHECK(mgstab_powerflow_max_mismatch(pf) <= 1e-8);
    CHECK(mgstab_powerflow_bus_vm(pf, 0) == doctest::Approx(1.0));
    CHECK(mgstab_powerflow_bus_va(pf, 0) == doctest::Approx(0.0));
    CHECK(mgstab_powerflow_gen_p(pf, 0) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(std::isnan(mgstab_powerflow_bus_vm(pf, 99)));
    mgstab_powerflow_free(pf);
}

TEST_CASE("capi: simulate and series accessors") {
    Loaded h;
    REQUIRE(mgstab_case_load(path("smib.case").c_str(), &h.c) == MGSTAB_OK);
    mgstab_scenario sc;
    mgstab_scenario_init(&sc);
    sc.fault_bus = 2;
    sc.t_fault = 0.1;
    sc.t_clear = 0.2;
    mgstab_sim_config cfg;
    mgstab_sim_config_init(&cfg);
    cfg.t_end = 3.5;
    cfg.v_recover = 0.0;
    mgstab_result* r = nullptr;
    REQUIRE(mgstab_simulate(h.c, &sc, &cfg, &r) == MGSTAB_OK);
    int steps = mgstab_result_steps(r);
    CHECK(steps == 3501);
    CHECK(mgstab_result_machine_count(r) == 1);
    CHECK(std::strcmp(mgstab_result_machine_name(r, 0), "g2") == 0);
    const double* t = mgstab_result_time(r);
    const double* d = mgstab_result_delta(r, 0);
    REQUIRE(t);
    REQUIRE(d);
    CHECK(t[0] == 0.0);
    CHECK(t[steps - 1] == doctest::Approx(3.5));
    CHECK(mgstab_result_stable(r) == 1);
    CHECK(d[0] == doctest::Approx(d[steps - 1]).epsilon(0.2));  // swings back around delta0
    CHECK(mgstab_result_peak_fault_current(r) > 4.0);
    mgstab_result_free(r);
}

TEST_CASE("capi: cct, study and probe round trip") {
    Loaded h;
    REQUIRE(mgstab_case_load(path("micro4.case").c_str(), &h.c) == MGSTAB_OK);
    mgstab_scenario sc = micro4_scenario(3.0);
    mgstab_sim_config cfg;
    mgstab_sim_config_init(&cfg);

    mgstab_cct* cct = nullptr;
    REQUIRE(mgstab_find_cct_bisect(h.c, &sc, &cfg, 0.01, &cct) == MGSTAB_OK);
    CHECK(mgstab_cct_status_of(cct) == MGSTAB_CCT_OK);
    CHECK(mgstab_cct_value(cct) > 0.05);
    CHECK(mgstab_cct_value(cct) < 1.0);
    CHECK(mgstab_cct_bracket_high(cct) - mgstab_cct_bracket_low(cct) <= 0.01 + 1e-12);
    int trials = mgstab_cct_trial_count(cct);
    REQUIRE(trials > 2);
    CHECK(mgstab_cct_trial_stable(cct, trials - 1) >= 0);
    mgstab_cct_free(cct);

    double shares[2] = {0.0, 30.0};
    mgstab_study* st = nullptr;
    REQUIRE(mgstab_sweep_pv_share(h.c, shares, 2, 2, &sc, &cfg, 0.01, 1, 0.1, 2, &st) == MGSTAB_OK);
    REQUIRE(mgstab_study_row_count(st) == 2);
    CHECK(std::strcmp(mgstab_study_label(st, 0), "0") == 0);
    CHECK(mgstab_study_cct(st, 1) > mgstab_study_cct(st, 0));
    mgstab_study_free(st);

    int dist_buses[3] = {2, 3, 4};
    double dist_mw[3] = {10.0, 10.0, 10.0};
    REQUIRE(mgstab_compare_topologies(h.c, 30.0, 2, dist_buses, dist_mw, 3, &sc, &cfg, 0.01, 1,
                                      0.1, 2, &st) == MGSTAB_OK);
    REQUIRE(mgstab_study_row_count(st) == 2);
    CHECK(std::strcmp(mgstab_study_label(st, 0), "centralized") == 0);
    CHECK(std::strcmp(mgstab_study_label(st, 1), "distributed") == 0);
    CHECK(mgstab_study_peak_fault_current(st, 1) >= mgstab_study_peak_fault_current(st, 0));
    mgstab_study_free(st);

    mgstab_scenario probe_sc = micro4_scenario(0.12);
    mgstab_probe* p = nullptr;
    REQUIRE(mgstab_fault_current_probe(h.c, &probe_sc, &cfg, &p) == MGSTAB_OK);
    CHECK(mgstab_probe_peak(p) > 1.0);
    CHECK(mgstab_probe_source_count(p) == 7);  // 1 SG + 6 PV units
    CHECK(std::strcmp(mgstab_probe_source_name(p, 0), "g4") == 0);
    mgstab_probe_free(p);
}
