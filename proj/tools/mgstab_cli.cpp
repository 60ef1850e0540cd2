// mgstab command-line front end. Talks to the engine exclusively through the
// shared-library C API.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mgstab.h"

namespace {

constexpr double kRadToDeg = 57.295779513082323;

int exit_code_for(mgstab_status st) {
    switch (st) {
        case MGSTAB_OK: return 0;
        case MGSTAB_ERR_PARSE:
        case MGSTAB_ERR_INVALID_ARG: return 2;
        default: return 1;
    }
}

int fail(mgstab_status st) {
    std::cerr << "error: " << mgstab_last_error() << "\n";
    return exit_code_for(st);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CaseHandle {
    mgstab_case* ptr = nullptr;
    ~CaseHandle() { mgstab_case_free(ptr); }
};

// scenario/config flags shared by the dynamic subcommands
struct RunFlags {
    std::string case_path;
    int fault_bus = 0;
    double fault_g = 1e6, fault_b = -1e6;
    double t_fault = 2.0, t_clear = 0.0;
    std::vector<int> island_branches;
    std::vector<std::string> trips;
    double dt = 1e-3, t_end = 0.0, angle_limit = 0.0, v_recover = 0.9, t_settle = 3.0;

    void attach(CLI::App* cmd, bool need_clear) {
        cmd->add_option("--case", case_path, "case file (JSON)")->required();
        cmd->add_option("--fault-bus", fault_bus, "faulted bus id")->required();
        cmd->add_option("--fault-g", fault_g, "fault shunt conductance, pu (default 1e6)");
        cmd->add_option("--fault-b", fault_b, "fault shunt susceptance, pu (default -1e6)");
        cmd->add_option("--t-fault", t_fault, "fault inception time, s (default 2.0)");
        auto* tc = cmd->add_option("--t-clear", t_clear, "fault clearing time, s");
        if (need_clear) tc->required();
        cmd->add_option("--island-branch", island_branches,
                        "branch index opened at t_fault (repeatable)");
        cmd->add_option("--trip", trips, "element removed at t_fault: pv:<i> or load:<i>");
        cmd->add_option("--dt", dt, "integration step, s (default 1e-3)");
        cmd->add_option("--t-end", t_end, "simulation horizon, s (default t_clear + t_settle + 3)");
        cmd->add_option("--angle-limit", angle_limit, "instability angle threshold, rad (default pi)");
        cmd->add_option("--v-recover", v_recover, "voltage recovery threshold, pu (default 0.9)");
        cmd->add_option("--t-settle", t_settle, "settling window, s (default 3.0)");
    }

    mgstab_scenario scenario() const {
        mgstab_scenario sc;
        mgstab_scenario_init(&sc);
        sc.fault_bus = fault_bus;
        sc.fault_g = fault_g;
        sc.fault_b = fault_b;
        sc.t_fault = t_fault;
        sc.t_clear = t_clear;
        sc.island_branches = island_branches.empty() ? nullptr : island_branches.data();
        sc.n_island_branches = static_cast<int>(island_branches.size());
        trip_ptrs.clear();
        for (const std::string& t : trips) trip_ptrs.push_back(t.c_str());
        sc.trip_elements = trip_ptrs.empty() ? nullptr : trip_ptrs.data();
        sc.n_trip_elements = static_cast<int>(trip_ptrs.size());
        return sc;
    }

    mgstab_sim_config config() const {
        mgstab_sim_config cfg;
        mgstab_sim_config_init(&cfg);
        cfg.dt = dt;
        cfg.v_recover = v_recover;
        cfg.t_settle = t_settle;
        if (angle_limit > 0.0) cfg.angle_limit = angle_limit;
        cfg.t_end = t_end > 0.0 ? t_end : t_clear + t_settle + 3.0;
        return cfg;
    }

private:
    mutable std::vector<const char*> trip_ptrs;
};

int env_threads() {
    const char* v = std::getenv("MGSTAB_THREADS");
    if (!v || !*v) return 1;
    return std::max(0, std::atoi(v));  // 0 = auto
}

// ---------------------------------------------------------------- emitters

int write_timeseries_csv(const mgstab_result* r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 1;
    }
    int nm = mgstab_result_machine_count(r);
    int nb = mgstab_result_bus_count(r);
    int steps = mgstab_result_steps(r);

    out << "t_s";
    for (int m = 0; m < nm; ++m) out << "," << mgstab_result_machine_name(r, m) << "_delta_deg";
    for (int m = 0; m < nm; ++m) out << "," << mgstab_result_machine_name(r, m) << "_omega_dev";
    for (int b = 0; b < nb; ++b) out << "," << mgstab_result_bus_name(r, b) << "_vm_pu";
    out << ",maxreldev_deg,fault_i_pu\n";

    const double* t = mgstab_result_time(r);
    const double* maxrel = mgstab_result_max_rel_dev(r);
    const double* fi = mgstab_result_fault_current(r);
    for (int k = 0; k < steps; ++k) {
        out << fmt(t[k]);
        for (int m = 0; m < nm; ++m) out << "," << fmt(mgstab_result_delta(r, m)[k] * kRadToDeg);
        for (int m = 0; m < nm; ++m) out << "," << fmt(mgstab_result_omega_dev(r, m)[k]);
        for (int b = 0; b < nb; ++b) out << "," << fmt(mgstab_result_bus_vm(r, b)[k]);
        out << "," << fmt(maxrel[k] * kRadToDeg) << "," << fmt(fi[k]) << "\n";
    }
    return 0;
}

int write_study_csv(const mgstab_study* s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 1;
    }
    out << "label,cct_s,peak_fault_current_pu\n";
    for (int i = 0; i < mgstab_study_row_count(s); ++i) {
        double cct = mgstab_study_cct(s, i);
        if (!mgstab_study_feasible(s, i) || mgstab_study_cct_status(s, i) != MGSTAB_CCT_OK)
            cct = std::nan("");
        out << mgstab_study_label(s, i) << "," << fmt(cct) << ","
            << fmt(mgstab_study_peak_fault_current(s, i)) << "\n";
    }
    return 0;
}

int write_trials_csv(const mgstab_cct* r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 1;
    }
    out << "t_clear_s,verdict\n";
    for (int i = 0; i < mgstab_cct_trial_count(r); ++i)
        out << fmt(mgstab_cct_trial_t_clear(r, i)) << ","
            << (mgstab_cct_trial_stable(r, i) ? "stable" : "unstable") << "\n";
    return 0;
}

const char* cct_status_text(int st) {
    switch (st) {
        case MGSTAB_CCT_OK: return "ok";
        case MGSTAB_CCT_EXCEEDS_HORIZON: return "exceeds-horizon";
        default: return "below-resolution";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mgstab — transient-stability and critical-clearing-time studies "
                 "for small microgrid cases"};
    app.require_subcommand(1);

    // validate -------------------------------------------------------------
    auto* c_validate = app.add_subcommand("validate", "check a case file against the schema rules");
    std::string val_path;
    c_validate->add_option("--case", val_path, "case file (JSON)")->required();

    // powerflow ------------------------------------------------------------
    auto* c_pf = app.add_subcommand("powerflow", "solve the pre-fault operating point");
    std::string pf_path;
    c_pf->add_option("--case", pf_path, "case file (JSON)")->required();

    // simulate -------------------------------------------------------------
    auto* c_sim = app.add_subcommand("simulate", "one fault/clearing trial, time series out");
    RunFlags sim_flags;
    sim_flags.attach(c_sim, /*need_clear=*/true);
    std::string sim_out;
    c_sim->add_option("--out", sim_out, "time-series CSV path");

    // cct ------------------------------------------------------------------
    auto* c_cct = app.add_subcommand("cct", "critical clearing time search");
    RunFlags cct_flags;
    cct_flags.attach(c_cct, /*need_clear=*/false);
    std::string cct_method = "bisect";
    double cct_resolution = 0.01, cct_tmax = 6.0;
    std::string cct_out;
    c_cct->add_option("--method", cct_method, "bisect | sweep")
        ->check(CLI::IsMember({"bisect", "sweep"}));
    c_cct->add_option("--resolution", cct_resolution, "bracket width / sweep step, s (default 0.01)");
    c_cct->add_option("--t-max", cct_tmax, "largest clearing delay tried, s (default 6.0)");
    c_cct->add_option("--out", cct_out, "trial log CSV path");

    // sweep-pv -------------------------------------------------------------
    auto* c_sweep = app.add_subcommand("sweep-pv", "CCT vs centralized PV share");
    RunFlags sw_flags;
    sw_flags.attach(c_sweep, /*need_clear=*/false);
    int sw_bus = 0;
    std::string sw_shares = "0,5,10,15,20,25,30";
    double sw_resolution = 0.01, sw_tmax = 6.0, sw_probe = 0.1;
    std::string sw_method = "bisect", sw_out;
    c_sweep->add_option("--pv-bus", sw_bus, "bus hosting the centralized unit")->required();
    c_sweep->add_option("--shares", sw_shares, "comma-separated MW list (default 0..30 by 5)");
    c_sweep->add_option("--method", sw_method, "bisect | sweep")
        ->check(CLI::IsMember({"bisect", "sweep"}));
    c_sweep->add_option("--resolution", sw_resolution, "CCT resolution, s (default 0.01)");
    c_sweep->add_option("--t-max", sw_tmax, "search horizon after the fault, s (default 6.0)");
    c_sweep->add_option("--probe-window", sw_probe, "fault duration for the current probe, s");
    c_sweep->add_option("--out", sw_out, "study CSV path");

    // compare --------------------------------------------------------------
    auto* c_cmp = app.add_subcommand("compare", "centralized vs distributed PV at equal MW");
    RunFlags cmp_flags;
    cmp_flags.attach(c_cmp, /*need_clear=*/false);
    double cmp_total = 30.0, cmp_resolution = 0.01, cmp_tmax = 6.0, cmp_probe = 0.1;
    int cmp_bus = 0;
    std::string cmp_dist, cmp_method = "bisect", cmp_out;
    c_cmp->add_option("--total-mw", cmp_total, "total PV MW in both layouts (default 30)");
    c_cmp->add_option("--centralized-bus", cmp_bus, "bus of the single unit")->required();
    c_cmp->add_option("--dist", cmp_dist,
                      "distributed layout bus:mw,bus:mw,... (default: the case's own PV fleet)");
    c_cmp->add_option("--method", cmp_method, "bisect | sweep")
        ->check(CLI::IsMember({"bisect", "sweep"}));
    c_cmp->add_option("--resolution", cmp_resolution, "CCT resolution, s (default 0.01)");
    c_cmp->add_option("--t-max", cmp_tmax, "search horizon after the fault, s (default 6.0)");
    c_cmp->add_option("--probe-window", cmp_probe, "fault duration for the current probe, s");
    c_cmp->add_option("--out", cmp_out, "study CSV path");

    // probe-fault ----------------------------------------------------------
    auto* c_probe = app.add_subcommand("probe-fault", "peak fault current and source breakdown");
    RunFlags pr_flags;
    pr_flags.attach(c_probe, /*need_clear=*/true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage/parse errors exit 2; --help exits 0
    }

    // ---------------------------------------------------------------------
    if (*c_validate) {
        mgstab_case* handle = nullptr;
        mgstab_status st = mgstab_case_parse_file(val_path.c_str(), &handle);
        if (st != MGSTAB_OK) return fail(st);
        CaseHandle guard{handle};
        int n = 0;
        st = mgstab_case_validate(handle, &n);
        if (st != MGSTAB_OK) return fail(st);
        for (int i = 0; i < n; ++i)
            std::cout << mgstab_case_diagnostic(handle, i) << "\n";
        std::cout << n << " diagnostics\n";
        return n == 0 ? 0 : 1;
    }

    if (*c_pf) {
        CaseHandle cs;
        mgstab_status st = mgstab_case_load(pf_path.c_str(), &cs.ptr);
        if (st != MGSTAB_OK) return fail(st);
        mgstab_powerflow* pf = nullptr;
        st = mgstab_powerflow_run(cs.ptr, &pf);
        if (st != MGSTAB_OK) return fail(st);
        std::cout << "converged in " << mgstab_powerflow_iterations(pf)
                  << " iterations, max mismatch " << fmt(mgstab_powerflow_max_mismatch(pf))
                  << " pu\n";
        std::cout << "bus,name,vm_pu,va_deg,p_pu,q_pu\n";
        for (int i = 0; i < mgstab_case_bus_count(cs.ptr); ++i)
            std::cout << mgstab_case_bus_id(cs.ptr, i) << "," << mgstab_case_bus_name(cs.ptr, i)
                      << "," << fmt(mgstab_powerflow_bus_vm(pf, i)) << ","
                      << fmt(mgstab_powerflow_bus_va(pf, i) * kRadToDeg) << ","
                      << fmt(mgstab_powerflow_bus_p(pf, i)) << ","
                      << fmt(mgstab_powerflow_bus_q(pf, i)) << "\n";
        mgstab_powerflow_free(pf);
        return 0;
    }

    if (*c_sim) {
        CaseHandle cs;
        mgstab_status st = mgstab_case_load(sim_flags.case_path.c_str(), &cs.ptr);
        if (st != MGSTAB_OK) return fail(st);
        mgstab_scenario sc = sim_flags.scenario();
        mgstab_sim_config cfg = sim_flags.config();
        mgstab_result* r = nullptr;
        st = mgstab_simulate(cs.ptr, &sc, &cfg, &r);
        if (st != MGSTAB_OK) return fail(st);
        std::cout << "case: " << sim_flags.case_path << "\n";
        std::cout << "scenario: fault at bus " << sc.fault_bus << " t=" << fmt(sc.t_fault)
                  << " s, cleared t=" << fmt(sc.t_clear) << " s";
        if (sc.n_island_branches > 0) {
            std::cout << ", opening branch";
            for (int i = 0; i < sc.n_island_branches; ++i) std::cout << " " << sc.island_branches[i];
        }
        std::cout << "\n";
        std::cout << "verdict: " << (mgstab_result_stable(r) ? "stable" : "unstable") << "\n";
        std::cout << "max rotor angle deviation: "
                  << fmt(mgstab_result_max_rel_angle_dev(r) * kRadToDeg) << " deg\n";
        std::cout << "peak fault current: " << fmt(mgstab_result_peak_fault_current(r)) << " pu\n";
        int rc = 0;
        if (!sim_out.empty()) {
            rc = write_timeseries_csv(r, sim_out);
            if (rc == 0) std::cout << "wrote: " << sim_out << "\n";
        }
        mgstab_result_free(r);
        return rc;
    }

    if (*c_cct) {
        CaseHandle cs;
        mgstab_status st = mgstab_case_load(cct_flags.case_path.c_str(), &cs.ptr);
        if (st != MGSTAB_OK) return fail(st);
        mgstab_scenario sc = cct_flags.scenario();
        sc.t_clear = sc.t_fault + cct_tmax;  // search horizon
        mgstab_sim_config cfg = cct_flags.config();
        mgstab_cct* r = nullptr;
        st = cct_method == "bisect"
                 ? mgstab_find_cct_bisect(cs.ptr, &sc, &cfg, cct_resolution, &r)
                 : mgstab_find_cct_sweep(cs.ptr, &sc, &cfg, cct_resolution, env_threads(), &r);
        if (st != MGSTAB_OK) return fail(st);
        int status = mgstab_cct_status_of(r);
        int rc = 0;
        if (status == MGSTAB_CCT_OK) {
            std::cout << "cct: " << fmt(mgstab_cct_value(r)) << " s (bracket "
                      << fmt(mgstab_cct_bracket_low(r)) << ".." << fmt(mgstab_cct_bracket_high(r))
                      << " s, resolution " << fmt(mgstab_cct_resolution(r)) << " s, "
                      << mgstab_cct_trial_count(r) << " trials)\n";
        } else {
            std::cout << "cct: " << cct_status_text(status) << "\n";
            rc = 1;
        }
        if (!cct_out.empty() && rc == 0) {
            rc = write_trials_csv(r, cct_out);
            if (rc == 0) std::cout << "wrote: " << cct_out << "\n";
        }
        mgstab_cct_free(r);
        return rc;
    }

    if (*c_sweep || *c_cmp) {
        const bool sweep = static_cast<bool>(*c_sweep);
        RunFlags& fl = sweep ? sw_flags : cmp_flags;
        double tmax = sweep ? sw_tmax : cmp_tmax;
        CaseHandle cs;
        mgstab_status st = mgstab_case_load(fl.case_path.c_str(), &cs.ptr);
        if (st != MGSTAB_OK) return fail(st);
        mgstab_scenario sc = fl.scenario();
        sc.t_clear = sc.t_fault + tmax;
        mgstab_sim_config cfg = fl.config();
        mgstab_study* study = nullptr;

        if (sweep) {
            std::vector<double> shares;
            std::stringstream ss(sw_shares);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    shares.push_back(std::stod(tok));
                } catch (...) {
                    std::cerr << "error: bad --shares entry '" << tok << "'\n";
                    return 2;
                }
            }
            st = mgstab_sweep_pv_share(cs.ptr, shares.data(), static_cast<int>(shares.size()),
                                       sw_bus, &sc, &cfg, sw_resolution, sw_method == "bisect",
                                       sw_probe, env_threads(), &study);
        } else {
            std::vector<int> buses;
            std::vector<double> mws;
            if (cmp_dist.empty()) {
                // default layout: the case's own PV fleet at its rated MW
                int n = mgstab_case_pv_count(cs.ptr);
                if (n == 0) {
                    std::cerr << "error: case has no PV fleet; pass --dist bus:mw,...\n";
                    return 2;
                }
                for (int i = 0; i < n; ++i) {
                    buses.push_back(mgstab_case_pv_bus(cs.ptr, i));
                    mws.push_back(mgstab_case_pv_rating_mva(cs.ptr, i));
                }
            } else {
                std::stringstream ss(cmp_dist);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    auto colon = tok.find(':');
                    if (colon == std::string::npos) {
                        std::cerr << "error: bad --dist entry '" << tok << "' (want bus:mw)\n";
                        return 2;
                    }
                    try {
                        buses.push_back(std::stoi(tok.substr(0, colon)));
                        mws.push_back(std::stod(tok.substr(colon + 1)));
                    } catch (...) {
                        std::cerr << "error: bad --dist entry '" << tok << "'\n";
                        return 2;
                    }
                }
            }
            st = mgstab_compare_topologies(cs.ptr, cmp_total, cmp_bus, buses.data(), mws.data(),
                                           static_cast<int>(buses.size()), &sc, &cfg,
                                           cmp_resolution, cmp_method == "bisect", cmp_probe,
                                           env_threads(), &study);
        }
        if (st != MGSTAB_OK) return fail(st);

        std::cout << "label,cct_s,peak_fault_current_pu\n";
        for (int i = 0; i < mgstab_study_row_count(study); ++i) {
            std::string cct = mgstab_study_feasible(study, i) &&
                                      mgstab_study_cct_status(study, i) == MGSTAB_CCT_OK
                                  ? fmt(mgstab_study_cct(study, i))
                                  : cct_status_text(mgstab_study_cct_status(study, i));
            if (!mgstab_study_feasible(study, i)) cct = "infeasible";
            std::cout << mgstab_study_label(study, i) << "," << cct << ","
                      << fmt(mgstab_study_peak_fault_current(study, i)) << "\n";
        }
        int rc = 0;
        const std::string& out = sweep ? sw_out : cmp_out;
        if (!out.empty()) {
            rc = write_study_csv(study, out);
            if (rc == 0) std::cout << "wrote: " << out << "\n";
        }
        mgstab_study_free(study);
        return rc;
    }

    if (*c_probe) {
        CaseHandle cs;
        mgstab_status st = mgstab_case_load(pr_flags.case_path.c_str(), &cs.ptr);
        if (st != MGSTAB_OK) return fail(st);
        mgstab_scenario sc = pr_flags.scenario();
        mgstab_sim_config cfg = pr_flags.config();
        mgstab_probe* p = nullptr;
        st = mgstab_fault_current_probe(cs.ptr, &sc, &cfg, &p);
        if (st != MGSTAB_OK) return fail(st);
        std::cout << "peak fault current: " << fmt(mgstab_probe_peak(p)) << " pu\n";
        for (int i = 0; i < mgstab_probe_source_count(p); ++i)
            std::cout << "  " << mgstab_probe_source_name(p, i) << ": "
                      << fmt(mgstab_probe_source_peak(p, i)) << " pu\n";
        mgstab_probe_free(p);
        return 0;
    }

    return 2;
}
