/* mgstab — microgrid transient-stability simulator, C interface.
 *
 * Every object is an opaque handle created and destroyed by this library.
 * Functions return MGSTAB_OK (0) on success; on failure they return a
 * nonzero status and leave a human-readable message in mgstab_last_error()
 * (thread-local). Out-pointers are written only on success.
 */
#ifndef MGSTAB_H
#define MGSTAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MGSTAB_API __declspec(dllexport)
#else
#define MGSTAB_API __attribute__((visibility("default")))
#endif

typedef enum mgstab_status {
    MGSTAB_OK = 0,
    MGSTAB_ERR_PARSE = 1,      /* malformed file or argument text */
    MGSTAB_ERR_VALIDATION = 2, /* case/scenario violates a schema rule */
    MGSTAB_ERR_NUMERIC = 3,    /* singular matrix, overflow, inner divergence */
    MGSTAB_ERR_DOMAIN = 4,     /* well-formed request with no answer */
    MGSTAB_ERR_IO = 5,
    MGSTAB_ERR_INVALID_ARG = 6, /* null handle or bad index */
    MGSTAB_ERR_INTERNAL = 7
} mgstab_status;

typedef struct mgstab_case mgstab_case;
typedef struct mgstab_powerflow mgstab_powerflow;
typedef struct mgstab_result mgstab_result;
typedef struct mgstab_cct mgstab_cct;
typedef struct mgstab_study mgstab_study;
typedef struct mgstab_probe mgstab_probe;

/* Message for the most recent failure on this thread; never NULL. */
MGSTAB_API const char* mgstab_last_error(void);

/* ------------------------------------------------------------------ cases */

MGSTAB_API mgstab_status mgstab_case_load(const char* path, mgstab_case** out);
MGSTAB_API mgstab_status mgstab_case_load_text(const char* json_text, mgstab_case** out);
/* Parse without applying the semantic rules (pair with mgstab_case_validate). */
MGSTAB_API mgstab_status mgstab_case_parse_file(const char* path, mgstab_case** out);
MGSTAB_API void mgstab_case_free(mgstab_case* c);

MGSTAB_API int mgstab_case_bus_count(const mgstab_case* c);
MGSTAB_API int mgstab_case_branch_count(const mgstab_case* c);
MGSTAB_API int mgstab_case_gen_count(const mgstab_case* c);
MGSTAB_API int mgstab_case_pv_count(const mgstab_case* c);
MGSTAB_API int mgstab_case_load_count(const mgstab_case* c);
MGSTAB_API int mgstab_case_bus_id(const mgstab_case* c, int index);
MGSTAB_API const char* mgstab_case_bus_name(const mgstab_case* c, int index);
MGSTAB_API int mgstab_case_pv_bus(const mgstab_case* c, int index);
MGSTAB_API double mgstab_case_pv_rating_mva(const mgstab_case* c, int index);

/* Number of rule violations; fetch each as "rule: message". */
MGSTAB_API mgstab_status mgstab_case_validate(const mgstab_case* c, int* n_diagnostics);
MGSTAB_API const char* mgstab_case_diagnostic(const mgstab_case* c, int index);

/* ------------------------------------------------------------- powerflow */

MGSTAB_API mgstab_status mgstab_powerflow_run(const mgstab_case* c, mgstab_powerflow** out);
MGSTAB_API void mgstab_powerflow_free(mgstab_powerflow* pf);
MGSTAB_API int mgstab_powerflow_iterations(const mgstab_powerflow* pf);
MGSTAB_API double mgstab_powerflow_max_mismatch(const mgstab_powerflow* pf);
/* Per bus (case order): voltage magnitude (pu), angle (rad), net P, Q (pu). */
MGSTAB_API double mgstab_powerflow_bus_vm(const mgstab_powerflow* pf, int bus_index);
MGSTAB_API double mgstab_powerflow_bus_va(const mgstab_powerflow* pf, int bus_index);
MGSTAB_API double mgstab_powerflow_bus_p(const mgstab_powerflow* pf, int bus_index);
MGSTAB_API double mgstab_powerflow_bus_q(const mgstab_powerflow* pf, int bus_index);
MGSTAB_API double mgstab_powerflow_gen_p(const mgstab_powerflow* pf, int gen_index);
MGSTAB_API double mgstab_powerflow_gen_q(const mgstab_powerflow* pf, int gen_index);

/* ------------------------------------------------------------ simulation */

typedef struct mgstab_scenario {
    int fault_bus;
    double fault_g, fault_b;   /* fault shunt admittance, pu; (0,0) = no fault */
    double t_fault, t_clear;   /* s; t_clear doubles as the CCT search horizon */
    const int* island_branches; /* branch indices opened at t_fault */
    int n_island_branches;
    const char* const* trip_elements; /* "pv:<idx>" / "load:<idx>" removed at t_fault */
    int n_trip_elements;
} mgstab_scenario;

typedef struct mgstab_sim_config {
    double dt;          /* s */
    double t_end;       /* s */
    double angle_limit; /* rad */
    double v_recover;   /* pu; 0 disables the voltage criterion */
    double t_settle;    /* s */
} mgstab_sim_config;

/* "Bolted" fault at bus 0, defaults for everything else. */
MGSTAB_API void mgstab_scenario_init(mgstab_scenario* sc);
MGSTAB_API void mgstab_sim_config_init(mgstab_sim_config* cfg);

MGSTAB_API mgstab_status mgstab_simulate(const mgstab_case* c, const mgstab_scenario* sc,
                                         const mgstab_sim_config* cfg, mgstab_result** out);
MGSTAB_API void mgstab_result_free(mgstab_result* r);

MGSTAB_API int mgstab_result_steps(const mgstab_result* r);
MGSTAB_API int mgstab_result_machine_count(const mgstab_result* r);
MGSTAB_API int mgstab_result_bus_count(const mgstab_result* r);
MGSTAB_API int mgstab_result_source_count(const mgstab_result* r);
MGSTAB_API const char* mgstab_result_machine_name(const mgstab_result* r, int machine);
MGSTAB_API const char* mgstab_result_bus_name(const mgstab_result* r, int bus);
MGSTAB_API const char* mgstab_result_source_name(const mgstab_result* r, int source);

/* Series pointers stay valid until the handle is freed; length = steps. */
MGSTAB_API const double* mgstab_result_time(const mgstab_result* r);
MGSTAB_API const double* mgstab_result_delta(const mgstab_result* r, int machine);      /* rad */
MGSTAB_API const double* mgstab_result_omega_dev(const mgstab_result* r, int machine);  /* rad/s */
MGSTAB_API const double* mgstab_result_bus_vm(const mgstab_result* r, int bus);         /* pu */
MGSTAB_API const double* mgstab_result_source_current(const mgstab_result* r, int source);
MGSTAB_API const double* mgstab_result_max_rel_dev(const mgstab_result* r);             /* rad */
MGSTAB_API const double* mgstab_result_fault_current(const mgstab_result* r);           /* pu */

MGSTAB_API int mgstab_result_stable(const mgstab_result* r); /* 1 stable, 0 unstable */
MGSTAB_API double mgstab_result_max_rel_angle_dev(const mgstab_result* r);
MGSTAB_API double mgstab_result_peak_fault_current(const mgstab_result* r);

/* --------------------------------------------------------------- studies */

typedef enum mgstab_cct_status {
    MGSTAB_CCT_OK = 0,
    MGSTAB_CCT_EXCEEDS_HORIZON = 1,
    MGSTAB_CCT_BELOW_RESOLUTION = 2
} mgstab_cct_status;

MGSTAB_API mgstab_status mgstab_find_cct_bisect(const mgstab_case* c, const mgstab_scenario* sc,
                                                const mgstab_sim_config* cfg, double resolution,
                                                mgstab_cct** out);
MGSTAB_API mgstab_status mgstab_find_cct_sweep(const mgstab_case* c, const mgstab_scenario* sc,
                                               const mgstab_sim_config* cfg, double t_step,
                                               int threads, mgstab_cct** out);
MGSTAB_API void mgstab_cct_free(mgstab_cct* r);
MGSTAB_API int mgstab_cct_status_of(const mgstab_cct* r);
MGSTAB_API double mgstab_cct_value(const mgstab_cct* r); /* last stable clearing - t_fault */
MGSTAB_API double mgstab_cct_bracket_low(const mgstab_cct* r);
MGSTAB_API double mgstab_cct_bracket_high(const mgstab_cct* r);
MGSTAB_API double mgstab_cct_resolution(const mgstab_cct* r);
MGSTAB_API int mgstab_cct_trial_count(const mgstab_cct* r);
MGSTAB_API double mgstab_cct_trial_t_clear(const mgstab_cct* r, int trial);
MGSTAB_API int mgstab_cct_trial_stable(const mgstab_cct* r, int trial);

/* One CCT per PV share (MW, single unit at pv_bus replacing the case's PV
 * fleet); use_bisection 0 runs the plain sweep at `resolution` steps. */
MGSTAB_API mgstab_status mgstab_sweep_pv_share(const mgstab_case* c, const double* shares_mw,
                                               int n_shares, int pv_bus,
                                               const mgstab_scenario* sc,
                                               const mgstab_sim_config* cfg, double resolution,
                                               int use_bisection, double probe_window,
                                               int threads, mgstab_study** out);
MGSTAB_API mgstab_status mgstab_compare_topologies(const mgstab_case* c, double total_mw,
                                                   int centralized_bus, const int* dist_buses,
                                                   const double* dist_mw, int n_dist,
                                                   const mgstab_scenario* sc,
                                                   const mgstab_sim_config* cfg,
                                                   double resolution, int use_bisection,
                                                   double probe_window, int threads,
                                                   mgstab_study** out);
MGSTAB_API void mgstab_study_free(mgstab_study* s);
MGSTAB_API int mgstab_study_row_count(const mgstab_study* s);
MGSTAB_API const char* mgstab_study_label(const mgstab_study* s, int row);
MGSTAB_API int mgstab_study_feasible(const mgstab_study* s, int row);
MGSTAB_API int mgstab_study_cct_status(const mgstab_study* s, int row);
MGSTAB_API double mgstab_study_cct(const mgstab_study* s, int row);
MGSTAB_API double mgstab_study_peak_fault_current(const mgstab_study* s, int row);

MGSTAB_API mgstab_status mgstab_fault_current_probe(const mgstab_case* c,
                                                    const mgstab_scenario* sc,
                                                    const mgstab_sim_config* cfg,
                                                    mgstab_probe** out);
MGSTAB_API void mgstab_probe_free(mgstab_probe* p);
MGSTAB_API double mgstab_probe_peak(const mgstab_probe* p);
MGSTAB_API int mgstab_probe_source_count(const mgstab_probe* p);
MGSTAB_API const char* mgstab_probe_source_name(const mgstab_probe* p, int source);
MGSTAB_API double mgstab_probe_source_peak(const mgstab_probe* p, int source);

#ifdef __cplusplus
}
#endif

#endif /* MGSTAB_H */
