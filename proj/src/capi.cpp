#include "mgstab.h"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "cctstudy.hpp"
#include "common.hpp"
#include "netcase.hpp"
#include "powerflow.hpp"
#include "simengine.hpp"

using namespace mgstab;

struct mgstab_case {
    Case impl;
    mutable std::vector<std::string> diagnostics;  // filled by mgstab_case_validate
};
struct mgstab_powerflow {
    PowerflowSolution impl;
};
struct mgstab_result {
    SimResult impl;
};
struct mgstab_cct {
    CctResult impl;
};
struct mgstab_study {
    std::vector<StudyRow> rows;
};
struct mgstab_probe {
    ProbeResult impl;
};

namespace {

thread_local std::string g_last_error = "no error";

mgstab_status to_status(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Parse: return MGSTAB_ERR_PARSE;
        case ErrorKind::Validation: return MGSTAB_ERR_VALIDATION;
        case ErrorKind::Numeric: return MGSTAB_ERR_NUMERIC;
        case ErrorKind::Domain: return MGSTAB_ERR_DOMAIN;
        case ErrorKind::Io: return MGSTAB_ERR_IO;
    }
    return MGSTAB_ERR_INTERNAL;
}

template <typename F>
mgstab_status wrap(F&& f) {
    try {
        f();
        return MGSTAB_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MGSTAB_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return MGSTAB_ERR_INTERNAL;
    }
}

mgstab_status bad_arg(const char* what) {
    g_last_error = what;
    return MGSTAB_ERR_INVALID_ARG;
}

Scenario to_scenario(const mgstab_scenario* sc) {
    Scenario out;
    out.fault_bus = sc->fault_bus;
    out.fault_admittance = Complex(sc->fault_g, sc->fault_b);
    out.t_fault = sc->t_fault;
    out.t_clear = sc->t_clear;
    for (int i = 0; i < sc->n_island_branches; ++i)
        out.island_branches.push_back(sc->island_branches[i]);
    for (int i = 0; i < sc->n_trip_elements; ++i)
        out.trip_elements.emplace_back(sc->trip_elements[i]);
    return out;
}

SimConfig to_config(const mgstab_sim_config* cfg) {
    SimConfig out;
    out.dt = cfg->dt;
    out.t_end = cfg->t_end;
    out.angle_limit = cfg->angle_limit;
    out.v_recover = cfg->v_recover;
    out.t_settle = cfg->t_settle;
    return out;
}

StudyConfig to_study(const mgstab_sim_config* cfg, double resolution, int use_bisection,
                     double probe_window, int threads) {
    StudyConfig out;
    out.sim = to_config(cfg);
    out.resolution = resolution;
    out.use_bisection = use_bisection != 0;
    out.probe_window = probe_window;
    out.threads = threads < 0 ? 1u : static_cast<unsigned>(threads);
    return out;
}

}  // namespace

extern "C" {

const char* mgstab_last_error(void) { return g_last_error.c_str(); }

// ------------------------------------------------------------------ cases

mgstab_status mgstab_case_load(const char* path, mgstab_case** out) {
    if (!path || !out) return bad_arg("mgstab_case_load: null argument");
    return wrap([&] { *out = new mgstab_case{load_case(path), {}}; });
}

mgstab_status mgstab_case_load_text(const char* json_text, mgstab_case** out) {
    if (!json_text || !out) return bad_arg("mgstab_case_load_text: null argument");
    return wrap([&] { *out = new mgstab_case{load_case_text(json_text), {}}; });
}

mgstab_status mgstab_case_parse_file(const char* path, mgstab_case** out) {
    if (!path || !out) return bad_arg("mgstab_case_parse_file: null argument");
    return wrap([&] { *out = new mgstab_case{parse_case_file(path), {}}; });
}

void mgstab_case_free(mgstab_case* c) { delete c; }

int mgstab_case_bus_count(const mgstab_case* c) {
    return c ? static_cast<int>(c->impl.buses.size()) : 0;
}
int mgstab_case_branch_count(const mgstab_case* c) {
    return c ? static_cast<int>(c->impl.branches.size()) : 0;
}
int mgstab_case_gen_count(const mgstab_case* c) {
    return c ? static_cast<int>(c->impl.gens.size()) : 0;
}
int mgstab_case_pv_count(const mgstab_case* c) {
    return c ? static_cast<int>(c->impl.pvs.size()) : 0;
}
int mgstab_case_load_count(const mgstab_case* c) {
    return c ? static_cast<int>(c->impl.loads.size()) : 0;
}
int mgstab_case_bus_id(const mgstab_case* c, int index) {
    if (!c || index < 0 || index >= static_cast<int>(c->impl.buses.size())) return -1;
    return c->impl.buses[index].id;
}
const char* mgstab_case_bus_name(const mgstab_case* c, int index) {
    if (!c || index < 0 || index >= static_cast<int>(c->impl.buses.size())) return "";
    return c->impl.buses[index].name.c_str();
}
int mgstab_case_pv_bus(const mgstab_case* c, int index) {
    if (!c || index < 0 || index >= static_cast<int>(c->impl.pvs.size())) return -1;
    return c->impl.pvs[index].bus;
}
double mgstab_case_pv_rating_mva(const mgstab_case* c, int index) {
    if (!c || index < 0 || index >= static_cast<int>(c->impl.pvs.size())) return std::nan("");
    return c->impl.pvs[index].rating_mva;
}

mgstab_status mgstab_case_validate(const mgstab_case* c, int* n_diagnostics) {
    if (!c || !n_diagnostics) return bad_arg("mgstab_case_validate: null argument");
    return wrap([&] {
        c->diagnostics.clear();
        for (const Diagnostic& d : validate_case(c->impl))
            c->diagnostics.push_back(d.rule + ": " + d.message);
        *n_diagnostics = static_cast<int>(c->diagnostics.size());
    });
}

const char* mgstab_case_diagnostic(const mgstab_case* c, int index) {
    if (!c || index < 0 || index >= static_cast<int>(c->diagnostics.size())) return "";
    return c->diagnostics[index].c_str();
}

// -------------------------------------------------------------- powerflow

mgstab_status mgstab_powerflow_run(const mgstab_case* c, mgstab_powerflow** out) {
    if (!c || !out) return bad_arg("mgstab_powerflow_run: null argument");
    return wrap([&] { *out = new mgstab_powerflow{run_powerflow(c->impl)}; });
}

void mgstab_powerflow_free(mgstab_powerflow* pf) { delete pf; }

int mgstab_powerflow_iterations(const mgstab_powerflow* pf) {
    return pf ? pf->impl.iterations : -1;
}
double mgstab_powerflow_max_mismatch(const mgstab_powerflow* pf) {
    return pf ? pf->impl.max_mismatch : std::nan("");
}

#define MGSTAB_PF_ACCESSOR(name, expr)                                               \
    double name(const mgstab_powerflow* pf, int i) {                                 \
        if (!pf || i < 0 || i >= static_cast<int>(pf->impl.v.size())) return std::nan(""); \
        return expr;                                                                 \
    }

MGSTAB_PF_ACCESSOR(mgstab_powerflow_bus_vm, std::abs(pf->impl.v[i]))
MGSTAB_PF_ACCESSOR(mgstab_powerflow_bus_va, std::arg(pf->impl.v[i]))
MGSTAB_PF_ACCESSOR(mgstab_powerflow_bus_p, pf->impl.bus_injection[i].real())
MGSTAB_PF_ACCESSOR(mgstab_powerflow_bus_q, pf->impl.bus_injection[i].imag())
#undef MGSTAB_PF_ACCESSOR

double mgstab_powerflow_gen_p(const mgstab_powerflow* pf, int g) {
    if (!pf || g < 0 || g >= static_cast<int>(pf->impl.gen_p.size())) return std::nan("");
    return pf->impl.gen_p[g];
}
double mgstab_powerflow_gen_q(const mgstab_powerflow* pf, int g) {
    if (!pf || g < 0 || g >= static_cast<int>(pf->impl.gen_q.size())) return std::nan("");
    return pf->impl.gen_q[g];
}

// ------------------------------------------------------------- simulation

void mgstab_scenario_init(mgstab_scenario* sc) {
    if (!sc) return;
    std::memset(sc, 0, sizeof(*sc));
    sc->fault_g = 1e6;
    sc->fault_b = -1e6;
}

void mgstab_sim_config_init(mgstab_sim_config* cfg) {
    if (!cfg) return;
    SimConfig d;
    cfg->dt = d.dt;
    cfg->t_end = d.t_end;
    cfg->angle_limit = d.angle_limit;
    cfg->v_recover = d.v_recover;
    cfg->t_settle = d.t_settle;
}

mgstab_status mgstab_simulate(const mgstab_case* c, const mgstab_scenario* sc,
                              const mgstab_sim_config* cfg, mgstab_result** out) {
    if (!c || !sc || !cfg || !out) return bad_arg("mgstab_simulate: null argument");
    return wrap([&] { *out = new mgstab_result{simulate(c->impl, to_scenario(sc), to_config(cfg))}; });
}

void mgstab_result_free(mgstab_result* r) { delete r; }

int mgstab_result_steps(const mgstab_result* r) {
    return r ? static_cast<int>(r->impl.time.size()) : 0;
}
int mgstab_result_machine_count(const mgstab_result* r) {
    return r ? static_cast<int>(r->impl.machine_names.size()) : 0;
}
int mgstab_result_bus_count(const mgstab_result* r) {
    return r ? static_cast<int>(r->impl.bus_names.size()) : 0;
}
int mgstab_result_source_count(const mgstab_result* r) {
    return r ? static_cast<int>(r->impl.source_names.size()) : 0;
}
const char* mgstab_result_machine_name(const mgstab_result* r, int m) {
    if (!r || m < 0 || m >= static_cast<int>(r->impl.machine_names.size())) return "";
    return r->impl.machine_names[m].c_str();
}
const char* mgstab_result_bus_name(const mgstab_result* r, int b) {
    if (!r || b < 0 || b >= static_cast<int>(r->impl.bus_names.size())) return "";
    return r->impl.bus_names[b].c_str();
}
const char* mgstab_result_source_name(const mgstab_result* r, int s) {
    if (!r || s < 0 || s >= static_cast<int>(r->impl.source_names.size())) return "";
    return r->impl.source_names[s].c_str();
}

const double* mgstab_result_time(const mgstab_result* r) {
    return r && !r->impl.time.empty() ? r->impl.time.data() : nullptr;
}
const double* mgstab_result_delta(const mgstab_result* r, int m) {
    if (!r || m < 0 || m >= static_cast<int>(r->impl.delta.size())) return nullptr;
    return r->impl.delta[m].data();
}
const double* mgstab_result_omega_dev(const mgstab_result* r, int m) {
    if (!r || m < 0 || m >= static_cast<int>(r->impl.omega_dev.size())) return nullptr;
    return r->impl.omega_dev[m].data();
}
const double* mgstab_result_bus_vm(const mgstab_result* r, int b) {
    if (!r || b < 0 || b >= static_cast<int>(r->impl.bus_vm.size())) return nullptr;
    return r->impl.bus_vm[b].data();
}
const double* mgstab_result_source_current(const mgstab_result* r, int s) {
    if (!r || s < 0 || s >= static_cast<int>(r->impl.source_current.size())) return nullptr;
    return r->impl.source_current[s].data();
}
const double* mgstab_result_max_rel_dev(const mgstab_result* r) {
    return r && !r->impl.max_rel_dev.empty() ? r->impl.max_rel_dev.data() : nullptr;
}
const double* mgstab_result_fault_current(const mgstab_result* r) {
    return r && !r->impl.fault_current.empty() ? r->impl.fault_current.data() : nullptr;
}

int mgstab_result_stable(const mgstab_result* r) {
    return r && r->impl.verdict == Verdict::Stable ? 1 : 0;
}
double mgstab_result_max_rel_angle_dev(const mgstab_result* r) {
    return r ? r->impl.max_rel_angle_dev : std::nan("");
}
double mgstab_result_peak_fault_current(const mgstab_result* r) {
    return r ? r->impl.peak_fault_current : std::nan("");
}

// ---------------------------------------------------------------- studies

mgstab_status mgstab_find_cct_bisect(const mgstab_case* c, const mgstab_scenario* sc,
                                     const mgstab_sim_config* cfg, double resolution,
                                     mgstab_cct** out) {
    if (!c || !sc || !cfg || !out) return bad_arg("mgstab_find_cct_bisect: null argument");
    return wrap([&] {
        *out = new mgstab_cct{find_cct_bisect(c->impl, to_scenario(sc), to_config(cfg), resolution)};
    });
}

mgstab_status mgstab_find_cct_sweep(const mgstab_case* c, const mgstab_scenario* sc,
                                    const mgstab_sim_config* cfg, double t_step, int threads,
                                    mgstab_cct** out) {
    if (!c || !sc || !cfg || !out) return bad_arg("mgstab_find_cct_sweep: null argument");
    return wrap([&] {
        *out = new mgstab_cct{find_cct_sweep(c->impl, to_scenario(sc), to_config(cfg), t_step,
                                             threads < 0 ? 1u : static_cast<unsigned>(threads))};
    });
}

void mgstab_cct_free(mgstab_cct* r) { delete r; }

int mgstab_cct_status_of(const mgstab_cct* r) {
    if (!r) return -1;
    switch (r->impl.status) {
        case CctStatus::Ok: return MGSTAB_CCT_OK;
        case CctStatus::ExceedsHorizon: return MGSTAB_CCT_EXCEEDS_HORIZON;
        default: return MGSTAB_CCT_BELOW_RESOLUTION;
    }
}
double mgstab_cct_value(const mgstab_cct* r) { return r ? r->impl.cct : std::nan(""); }
double mgstab_cct_bracket_low(const mgstab_cct* r) {
    return r ? r->impl.bracket_low : std::nan("");
}
double mgstab_cct_bracket_high(const mgstab_cct* r) {
    return r ? r->impl.bracket_high : std::nan("");
}
double mgstab_cct_resolution(const mgstab_cct* r) {
    return r ? r->impl.resolution : std::nan("");
}
int mgstab_cct_trial_count(const mgstab_cct* r) {
    return r ? static_cast<int>(r->impl.trials.size()) : 0;
}
double mgstab_cct_trial_t_clear(const mgstab_cct* r, int t) {
    if (!r || t < 0 || t >= static_cast<int>(r->impl.trials.size())) return std::nan("");
    return r->impl.trials[t].t_clear;
}
int mgstab_cct_trial_stable(const mgstab_cct* r, int t) {
    if (!r || t < 0 || t >= static_cast<int>(r->impl.trials.size())) return -1;
    return r->impl.trials[t].verdict == Verdict::Stable ? 1 : 0;
}

mgstab_status mgstab_sweep_pv_share(const mgstab_case* c, const double* shares_mw, int n_shares,
                                    int pv_bus, const mgstab_scenario* sc,
                                    const mgstab_sim_config* cfg, double resolution,
                                    int use_bisection, double probe_window, int threads,
                                    mgstab_study** out) {
    if (!c || !shares_mw || n_shares <= 0 || !sc || !cfg || !out)
        return bad_arg("mgstab_sweep_pv_share: null or empty argument");
    return wrap([&] {
        std::vector<double> shares(shares_mw, shares_mw + n_shares);
        *out = new mgstab_study{sweep_pv_share(
            c->impl, shares, pv_bus, to_scenario(sc),
            to_study(cfg, resolution, use_bisection, probe_window, threads))};
    });
}

mgstab_status mgstab_compare_topologies(const mgstab_case* c, double total_mw, int centralized_bus,
                                        const int* dist_buses, const double* dist_mw, int n_dist,
                                        const mgstab_scenario* sc, const mgstab_sim_config* cfg,
                                        double resolution, int use_bisection, double probe_window,
                                        int threads, mgstab_study** out) {
    if (!c || !dist_buses || !dist_mw || n_dist <= 0 || !sc || !cfg || !out)
        return bad_arg("mgstab_compare_topologies: null or empty argument");
    return wrap([&] {
        std::vector<std::pair<int, double>> layout;
        for (int i = 0; i < n_dist; ++i) layout.emplace_back(dist_buses[i], dist_mw[i]);
        *out = new mgstab_study{compare_topologies(
            c->impl, total_mw, centralized_bus, layout, to_scenario(sc),
            to_study(cfg, resolution, use_bisection, probe_window, threads))};
    });
}

void mgstab_study_free(mgstab_study* s) { delete s; }

int mgstab_study_row_count(const mgstab_study* s) {
    return s ? static_cast<int>(s->rows.size()) : 0;
}
const char* mgstab_study_label(const mgstab_study* s, int row) {
    if (!s || row < 0 || row >= static_cast<int>(s->rows.size())) return "";
    return s->rows[row].label.c_str();
}
int mgstab_study_feasible(const mgstab_study* s, int row) {
    if (!s || row < 0 || row >= static_cast<int>(s->rows.size())) return 0;
    return s->rows[row].feasible ? 1 : 0;
}
int mgstab_study_cct_status(const mgstab_study* s, int row) {
    if (!s || row < 0 || row >= static_cast<int>(s->rows.size())) return -1;
    switch (s->rows[row].status) {
        case CctStatus::Ok: return MGSTAB_CCT_OK;
        case CctStatus::ExceedsHorizon: return MGSTAB_CCT_EXCEEDS_HORIZON;
        default: return MGSTAB_CCT_BELOW_RESOLUTION;
    }
}
double mgstab_study_cct(const mgstab_study* s, int row) {
    if (!s || row < 0 || row >= static_cast<int>(s->rows.size())) return std::nan("");
    return s->rows[row].cct;
}
double mgstab_study_peak_fault_current(const mgstab_study* s, int row) {
    if (!s || row < 0 || row >= static_cast<int>(s->rows.size())) return std::nan("");
    return s->rows[row].peak_fault_current;
}

mgstab_status mgstab_fault_current_probe(const mgstab_case* c, const mgstab_scenario* sc,
                                         const mgstab_sim_config* cfg, mgstab_probe** out) {
    if (!c || !sc || !cfg || !out) return bad_arg("mgstab_fault_current_probe: null argument");
    return wrap([&] {
        *out = new mgstab_probe{fault_current_probe(c->impl, to_scenario(sc), to_config(cfg))};
    });
}

void mgstab_probe_free(mgstab_probe* p) { delete p; }

double mgstab_probe_peak(const mgstab_probe* p) { return p ? p->impl.peak : std::nan(""); }
int mgstab_probe_source_count(const mgstab_probe* p) {
    return p ? static_cast<int>(p->impl.per_source.size()) : 0;
}
const char* mgstab_probe_source_name(const mgstab_probe* p, int s) {
    if (!p || s < 0 || s >= static_cast<int>(p->impl.per_source.size())) return "";
    return p->impl.per_source[s].first.c_str();
}
double mgstab_probe_source_peak(const mgstab_probe* p, int s) {
    if (!p || s < 0 || s >= static_cast<int>(p->impl.per_source.size())) return std::nan("");
    return p->impl.per_source[s].second;
}

}  // extern "C"
