#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace mgstab {

enum class BusKind { Slack, PvGen, Pq };
enum class BranchStatus { Closed, Open };

struct Bus {
    int id = 0;
    std::string name;
    double base_kv = 0.0;
    BusKind kind = BusKind::Pq;
    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double b_shunt = 0.0;  // total line charging, split half per end
    BranchStatus status = BranchStatus::Closed;
    bool operator==(const Branch&) const = default;
};

/// Converted to a constant shunt admittance at the pre-fault solved voltage
/// before any dynamics run.
struct StaticLoad {
    int bus = 0;
    double p = 0.0;
    double q = 0.0;
    bool operator==(const StaticLoad&) const = default;
};

struct GenUnit {
    int bus = 0;
    double h = 0.0;         // inertia constant, s, on the machine base
    double d = 0.0;         // damping, pu torque per pu speed deviation
    double xdp = 0.0;       // transient reactance, pu on system base
    double s_rating = 0.0;  // MVA
    double pm = 0.0;        // dispatch target, pu; slack units get theirs from the powerflow
    double v_set = 1.0;
    double h_sys = 0.0;     // h * s_rating / base_mva, filled at load time
    bool operator==(const GenUnit&) const = default;
};

struct PvParams {
    int bus = 0;
    double n_p = 0.0;         // parallel strings
    double n_s = 0.0;         // series cells per string
    double i_sc_stc = 0.0;    // string short-circuit current at 1000 W/m², A
    double i_rs = 0.0;        // cell reverse saturation current, A
    double t_cell = 0.0;      // K
    double a_ideality = 1.5;
    double c_dc = 0.0;        // DC-link capacitance, F
    double rating_mva = 0.0;
    double i_max = 1.1;       // inverter current ceiling, multiple of rated current
    bool operator==(const PvParams&) const = default;
};

struct Case {
    double base_mva = 100.0;
    double f_nom = 60.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<StaticLoad> loads;
    std::vector<GenUnit> gens;
    std::vector<PvParams> pvs;

    int bus_index(int id) const;        // -1 when absent
    const Bus& bus_at(int id) const;    // throws Validation when absent
    double omega_s() const { return 2.0 * kPi * f_nom; }

    bool operator==(const Case&) const = default;
};

struct Diagnostic {
    std::string rule;
    std::string message;
};

/// Structural JSON -> Case. Rejects malformed JSON, wrong types and unknown
/// keys; does not apply the semantic rules (see validate_case).
Case parse_case_text(const std::string& json_text);
Case parse_case_file(const std::string& path);

/// parse + validate + per-unit finalization; throws on any diagnostic.
Case load_case(const std::string& path);
Case load_case_text(const std::string& json_text);

std::string case_to_json(const Case& c);
void save_case(const Case& c, const std::string& path);

/// Empty iff every schema invariant holds.
std::vector<Diagnostic> validate_case(const Case& c);

// ---------------------------------------------------------------------------
// Admittance matrices

struct NodeRef {
    enum class Kind { Bus, GenInternal };
    Kind kind = Kind::Bus;
    int id = 0;  // bus id, or generator index for internal nodes
    bool operator==(const NodeRef&) const = default;
};

std::string node_label(const NodeRef& n);

class YbusMatrix {
public:
    YbusMatrix() = default;
    YbusMatrix(Eigen::MatrixXcd m, std::vector<NodeRef> nodes);

    const Eigen::MatrixXcd& matrix() const { return m_; }
    Eigen::MatrixXcd& matrix() { return m_; }
    const std::vector<NodeRef>& nodes() const { return nodes_; }
    int index_of(const NodeRef& n) const;  // -1 when absent
    int size() const { return static_cast<int>(nodes_.size()); }

private:
    Eigen::MatrixXcd m_;
    std::vector<NodeRef> nodes_;
};

struct TopologyOverlay {
    std::vector<int> opened_branches;                  // indices into Case::branches
    std::vector<std::pair<int, Complex>> added_shunts; // (bus id, admittance pu)
};

/// Standard nodal assembly over all buses. A node left with an all-zero row
/// (no closed branch, no shunt) is an error, not a silent drop.
YbusMatrix build_ybus(const Case& c, const TopologyOverlay& overlay = {});

/// Schur complement onto `retained`; throws when the eliminated block is
/// singular, naming the eliminated node set.
YbusMatrix kron_reduce(const YbusMatrix& y, const std::vector<NodeRef>& retained);

}  // namespace mgstab
