#include "netcase.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace mgstab {

using json = nlohmann::json;

int Case::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

const Bus& Case::bus_at(int id) const {
    int i = bus_index(id);
    if (i < 0) raise(ErrorKind::Validation, "unknown bus " + std::to_string(id));
    return buses[i];
}

// ---------------------------------------------------------------------------
// JSON parsing

namespace {

void check_keys(const json& obj, const char* what,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok)
            raise(ErrorKind::Parse,
                  std::string("unknown key '") + item.key() + "' in " + what);
    }
}

double num(const json& obj, const char* what, const char* key) {
    if (!obj.contains(key))
        raise(ErrorKind::Parse, std::string(what) + " missing required key '" + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number())
        raise(ErrorKind::Parse, std::string(what) + " key '" + key + "' must be a number");
    return v.get<double>();
}

double num_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number())
        raise(ErrorKind::Parse, std::string("key '") + key + "' must be a number");
    return obj.at(key).get<double>();
}

int integer(const json& obj, const char* what, const char* key) {
    double v = num(obj, what, key);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        raise(ErrorKind::Parse, std::string(what) + " key '" + key + "' must be an integer");
    return i;
}

std::string text_or(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string())
        raise(ErrorKind::Parse, std::string("key '") + key + "' must be a string");
    return obj.at(key).get<std::string>();
}

BusKind parse_kind(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv_gen") return BusKind::PvGen;
    if (s == "pq") return BusKind::Pq;
    raise(ErrorKind::Parse, "bus kind must be one of slack|pv_gen|pq, got '" + s + "'");
}

const char* kind_name(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::PvGen: return "pv_gen";
        default: return "pq";
    }
}

}  // namespace

Case parse_case_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse, std::string("case file is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) raise(ErrorKind::Parse, "case file must be a JSON object");
    check_keys(root, "case", {"base_mva", "f_nom", "buses", "branches", "loads", "gens", "pvs"});

    Case c;
    c.base_mva = num(root, "case", "base_mva");
    c.f_nom = num(root, "case", "f_nom");

    if (!root.contains("buses") || !root.at("buses").is_array())
        raise(ErrorKind::Parse, "case requires a 'buses' array");
    for (const json& jb : root.at("buses")) {
        check_keys(jb, "bus", {"id", "name", "base_kv", "kind"});
        Bus b;
        b.id = integer(jb, "bus", "id");
        b.name = text_or(jb, "name", "b" + std::to_string(b.id));
        b.base_kv = num(jb, "bus", "base_kv");
        b.kind = parse_kind(text_or(jb, "kind", "pq"));
        c.buses.push_back(std::move(b));
    }

    auto arr = [&](const char* key) -> json {
        if (!root.contains(key)) return json::array();
        if (!root.at(key).is_array())
            raise(ErrorKind::Parse, std::string("'") + key + "' must be an array");
        return root.at(key);
    };

    for (const json& jb : arr("branches")) {
        check_keys(jb, "branch", {"from", "to", "r", "x", "b_shunt", "status"});
        Branch br;
        br.from_bus = integer(jb, "branch", "from");
        br.to_bus = integer(jb, "branch", "to");
        br.r = num(jb, "branch", "r");
        br.x = num(jb, "branch", "x");
        br.b_shunt = num_or(jb, "b_shunt", 0.0);
        std::string st = text_or(jb, "status", "closed");
        if (st != "closed" && st != "open")
            raise(ErrorKind::Parse, "branch status must be closed|open, got '" + st + "'");
        br.status = st == "open" ? BranchStatus::Open : BranchStatus::Closed;
        c.branches.push_back(br);
    }

    for (const json& jl : arr("loads")) {
        check_keys(jl, "load", {"bus", "p", "q", "representation"});
        StaticLoad l;
        l.bus = integer(jl, "load", "bus");
        l.p = num(jl, "load", "p");
        l.q = num(jl, "load", "q");
        std::string rep = text_or(jl, "representation", "constant_impedance");
        if (rep != "constant_impedance")
            raise(ErrorKind::Parse, "load representation must be constant_impedance");
        c.loads.push_back(l);
    }

    for (const json& jg : arr("gens")) {
        check_keys(jg, "gen", {"bus", "h", "d", "xdp", "s_rating", "pm", "v_set"});
        GenUnit g;
        g.bus = integer(jg, "gen", "bus");
        g.h = num(jg, "gen", "h");
        g.d = num_or(jg, "d", 0.0);
        g.xdp = num(jg, "gen", "xdp");
        g.s_rating = num(jg, "gen", "s_rating");
        g.pm = num_or(jg, "pm", 0.0);
        g.v_set = num_or(jg, "v_set", 1.0);
        if (c.base_mva > 0.0) g.h_sys = g.h * g.s_rating / c.base_mva;
        c.gens.push_back(g);
    }

    for (const json& jp : arr("pvs")) {
        check_keys(jp, "pv", {"bus", "n_p", "n_s", "i_sc_stc", "i_rs", "t_cell",
                              "a_ideality", "c_dc", "rating_mva", "i_max"});
        PvParams p;
        p.bus = integer(jp, "pv", "bus");
        p.n_p = num(jp, "pv", "n_p");
        p.n_s = num(jp, "pv", "n_s");
        p.i_sc_stc = num(jp, "pv", "i_sc_stc");
        p.i_rs = num(jp, "pv", "i_rs");
        p.t_cell = num(jp, "pv", "t_cell");
        p.a_ideality = num_or(jp, "a_ideality", 1.5);
        p.c_dc = num(jp, "pv", "c_dc");
        p.rating_mva = num(jp, "pv", "rating_mva");
        p.i_max = num_or(jp, "i_max", 1.1);
        c.pvs.push_back(p);
    }

    return c;
}

Case parse_case_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case_text(ss.str());
}

namespace {

Case checked(Case c) {
    auto diags = validate_case(c);
    if (!diags.empty()) {
        std::string msg = "case validation failed:";
        for (const auto& d : diags) msg += "\n  [" + d.rule + "] " + d.message;
        raise(ErrorKind::Validation, msg);
    }
    return c;
}

}  // namespace

Case load_case(const std::string& path) { return checked(parse_case_file(path)); }
Case load_case_text(const std::string& json_text) { return checked(parse_case_text(json_text)); }

std::string case_to_json(const Case& c) {
    json root;
    root["base_mva"] = c.base_mva;
    root["f_nom"] = c.f_nom;
    root["buses"] = json::array();
    for (const Bus& b : c.buses)
        root["buses"].push_back({{"id", b.id},
                                 {"name", b.name},
                                 {"base_kv", b.base_kv},
                                 {"kind", kind_name(b.kind)}});
    root["branches"] = json::array();
    for (const Branch& br : c.branches)
        root["branches"].push_back({{"from", br.from_bus},
                                    {"to", br.to_bus},
                                    {"r", br.r},
                                    {"x", br.x},
                                    {"b_shunt", br.b_shunt},
                                    {"status", br.status == BranchStatus::Open ? "open" : "closed"}});
    root["loads"] = json::array();
    for (const StaticLoad& l : c.loads)
        root["loads"].push_back({{"bus", l.bus}, {"p", l.p}, {"q", l.q}});
    root["gens"] = json::array();
    for (const GenUnit& g : c.gens)
        root["gens"].push_back({{"bus", g.bus},
                                {"h", g.h},
                                {"d", g.d},
                                {"xdp", g.xdp},
                                {"s_rating", g.s_rating},
                                {"pm", g.pm},
                                {"v_set", g.v_set}});
    root["pvs"] = json::array();
    for (const PvParams& p : c.pvs)
        root["pvs"].push_back({{"bus", p.bus},
                               {"n_p", p.n_p},
                               {"n_s", p.n_s},
                               {"i_sc_stc", p.i_sc_stc},
                               {"i_rs", p.i_rs},
                               {"t_cell", p.t_cell},
                               {"a_ideality", p.a_ideality},
                               {"c_dc", p.c_dc},
                               {"rating_mva", p.rating_mva},
                               {"i_max", p.i_max}});
    return root.dump(2) + "\n";
}

void save_case(const Case& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write case file: " + path);
    out << case_to_json(c);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char ch) {
        return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
    });
}

}  // namespace

std::vector<Diagnostic> validate_case(const Case& c) {
    std::vector<Diagnostic> out;
    auto add = [&](const char* rule, const std::string& msg) {
        out.push_back({rule, msg});
    };

    if (c.base_mva <= 0.0) add("case-base-positive", "base_mva must be > 0");
    if (c.f_nom <= 0.0) add("case-base-positive", "f_nom must be > 0");
    if (c.buses.empty()) add("no-buses", "case has no buses");

    std::unordered_set<int> ids;
    for (const Bus& b : c.buses) {
        if (!ids.insert(b.id).second)
            add("duplicate-bus-id", "bus id " + std::to_string(b.id) + " appears more than once");
        if (b.base_kv <= 0.0)
            add("bus-base-kv-positive", "bus " + std::to_string(b.id) + " has base_kv <= 0");
        if (!valid_name(b.name))
            add("bad-name", "bus " + std::to_string(b.id) + " name '" + b.name +
                                "' is not [A-Za-z0-9_.-]+");
    }

    auto known = [&](int id) { return ids.count(id) > 0; };

    for (size_t i = 0; i < c.branches.size(); ++i) {
        const Branch& br = c.branches[i];
        std::string tag = "branch " + std::to_string(i);
        if (!known(br.from_bus))
            add("dangling-branch-ref", tag + " references nonexistent bus " + std::to_string(br.from_bus));
        if (!known(br.to_bus))
            add("dangling-branch-ref", tag + " references nonexistent bus " + std::to_string(br.to_bus));
        if (br.from_bus == br.to_bus)
            add("branch-self-loop", tag + " connects bus " + std::to_string(br.from_bus) + " to itself");
        if (br.r == 0.0 && br.x == 0.0)
            add("branch-zero-impedance", tag + " has r = x = 0");
    }

    for (const StaticLoad& l : c.loads)
        if (!known(l.bus))
            add("dangling-load-ref", "load references nonexistent bus " + std::to_string(l.bus));

    std::unordered_set<int> gen_buses;
    for (size_t i = 0; i < c.gens.size(); ++i) {
        const GenUnit& g = c.gens[i];
        std::string tag = "gen " + std::to_string(i);
        if (!known(g.bus)) {
            add("dangling-gen-ref", tag + " references nonexistent bus " + std::to_string(g.bus));
            continue;
        }
        if (!gen_buses.insert(g.bus).second)
            add("duplicate-gen-bus", "more than one generator at bus " + std::to_string(g.bus));
        if (g.h <= 0.0 || g.xdp <= 0.0 || g.s_rating <= 0.0 || g.d < 0.0 || g.v_set <= 0.0)
            add("gen-params-positive", tag + " requires h > 0, xdp > 0, s_rating > 0, d >= 0, v_set > 0");
        int bi = c.bus_index(g.bus);
        if (bi >= 0 && c.buses[bi].kind == BusKind::Pq)
            add("gen-bus-kind", tag + " sits on pq bus " + std::to_string(g.bus) +
                                    "; generator buses must be slack or pv_gen");
    }

    for (size_t i = 0; i < c.pvs.size(); ++i) {
        const PvParams& p = c.pvs[i];
        std::string tag = "pv " + std::to_string(i);
        if (!known(p.bus))
            add("dangling-pv-ref", tag + " references nonexistent bus " + std::to_string(p.bus));
        if (p.n_p <= 0.0 || p.n_s <= 0.0 || p.i_sc_stc <= 0.0 || p.i_rs <= 0.0 ||
            p.t_cell <= 0.0 || p.a_ideality <= 0.0 || p.c_dc <= 0.0 || p.rating_mva <= 0.0 ||
            p.i_max <= 0.0)
            add("pv-params-positive", tag + " requires all physical parameters > 0");
    }

    // slack count per connected island of the closed-branch graph
    if (!c.buses.empty() && out.empty()) {
        std::unordered_map<int, int> comp;
        int nc = 0;
        for (const Bus& b : c.buses)
            if (!comp.count(b.id)) {
                std::vector<int> stack{b.id};
                comp[b.id] = nc;
                while (!stack.empty()) {
                    int u = stack.back();
                    stack.pop_back();
                    for (const Branch& br : c.branches) {
                        if (br.status == BranchStatus::Open) continue;
                        int v = br.from_bus == u ? br.to_bus : (br.to_bus == u ? br.from_bus : -1);
                        if (v >= 0 && !comp.count(v)) {
                            comp[v] = nc;
                            stack.push_back(v);
                        }
                    }
                }
                ++nc;
            }
        std::vector<int> slack_count(nc, 0);
        for (const Bus& b : c.buses)
            if (b.kind == BusKind::Slack) slack_count[comp[b.id]]++;
        for (int k = 0; k < nc; ++k)
            if (slack_count[k] != 1)
                add("island-slack-count",
                    "connected island " + std::to_string(k) + " has " +
                        std::to_string(slack_count[k]) + " slack buses (needs exactly 1)");
    }

    // capacity check only when no external boundary bus can make up the balance
    bool has_ext = false;
    for (const Bus& b : c.buses)
        if ((b.kind == BusKind::Slack || b.kind == BusKind::PvGen) && !gen_buses.count(b.id))
            has_ext = true;
    if (!has_ext && c.base_mva > 0.0) {
        double cap = 0.0, load = 0.0;
        for (const GenUnit& g : c.gens) cap += g.s_rating;
        for (const PvParams& p : c.pvs) cap += p.rating_mva;
        for (const StaticLoad& l : c.loads) load += l.p * c.base_mva;
        if (cap < load)
            add("capacity-below-load", "generation capacity " + std::to_string(cap) +
                                           " MVA < total load " + std::to_string(load) + " MW");
    }

    return out;
}

// ---------------------------------------------------------------------------
// Ybus / Kron

std::string node_label(const NodeRef& n) {
    if (n.kind == NodeRef::Kind::Bus) return "bus " + std::to_string(n.id);
    return "gen#" + std::to_string(n.id) + " internal";
}

YbusMatrix::YbusMatrix(Eigen::MatrixXcd m, std::vector<NodeRef> nodes)
    : m_(std::move(m)), nodes_(std::move(nodes)) {
    if (m_.rows() != m_.cols() || m_.rows() != static_cast<Eigen::Index>(nodes_.size()))
        raise(ErrorKind::Numeric, "YbusMatrix shape does not match node list");
}

int YbusMatrix::index_of(const NodeRef& n) const {
    for (size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == n) return static_cast<int>(i);
    return -1;
}

YbusMatrix build_ybus(const Case& c, const TopologyOverlay& overlay) {
    const int n = static_cast<int>(c.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);

    std::unordered_set<int> opened(overlay.opened_branches.begin(), overlay.opened_branches.end());
    for (int k : overlay.opened_branches)
        if (k < 0 || k >= static_cast<int>(c.branches.size()))
            raise(ErrorKind::Validation, "overlay opens nonexistent branch " + std::to_string(k));

    for (size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        if (br.status == BranchStatus::Open || opened.count(static_cast<int>(k))) continue;
        int i = c.bus_index(br.from_bus);
        int j = c.bus_index(br.to_bus);
        if (i < 0 || j < 0)
            raise(ErrorKind::Validation, "branch " + std::to_string(k) + " references unknown bus");
        Complex z(br.r, br.x);
        if (z == Complex(0.0, 0.0))
            raise(ErrorKind::Validation, "branch " + std::to_string(k) + " has zero impedance");
        Complex ys = 1.0 / z;
        Complex bc(0.0, br.b_shunt / 2.0);
        y(i, i) += ys + bc;
        y(j, j) += ys + bc;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }

    for (const auto& [bus, ysh] : overlay.added_shunts) {
        int i = c.bus_index(bus);
        if (i < 0) raise(ErrorKind::Validation, "overlay shunt at nonexistent bus " + std::to_string(bus));
        y(i, i) += ysh;
    }

    std::vector<NodeRef> nodes;
    nodes.reserve(n);
    for (const Bus& b : c.buses) nodes.push_back({NodeRef::Kind::Bus, b.id});

    std::string isolated;
    for (int i = 0; i < n; ++i)
        if (y.row(i).cwiseAbs().maxCoeff() == 0.0)
            isolated += (isolated.empty() ? "" : ", ") + std::to_string(c.buses[i].id);
    if (!isolated.empty())
        raise(ErrorKind::Numeric, "isolated node(s) with no shunt: bus " + isolated);

    return YbusMatrix(std::move(y), std::move(nodes));
}

YbusMatrix kron_reduce(const YbusMatrix& y, const std::vector<NodeRef>& retained) {
    std::vector<int> keep, drop;
    for (const NodeRef& n : retained) {
        int i = y.index_of(n);
        if (i < 0) raise(ErrorKind::Validation, "retained node not in matrix: " + node_label(n));
        keep.push_back(i);
    }
    std::set<int> keep_set(keep.begin(), keep.end());
    if (keep_set.size() != keep.size())
        raise(ErrorKind::Validation, "retained node list has duplicates");
    for (int i = 0; i < y.size(); ++i)
        if (!keep_set.count(i)) drop.push_back(i);

    std::vector<NodeRef> nodes;
    for (int i : keep) nodes.push_back(y.nodes()[i]);

    const Eigen::MatrixXcd& m = y.matrix();
    auto pick = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        Eigen::MatrixXcd out(rows.size(), cols.size());
        for (size_t a = 0; a < rows.size(); ++a)
            for (size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
        return out;
    };

    if (drop.empty()) return YbusMatrix(pick(keep, keep), std::move(nodes));

    Eigen::MatrixXcd yrr = pick(keep, keep);
    Eigen::MatrixXcd yre = pick(keep, drop);
    Eigen::MatrixXcd yer = pick(drop, keep);
    Eigen::MatrixXcd yee = pick(drop, drop);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
    if (!lu.isInvertible()) {
        std::string names;
        for (int i : drop) names += (names.empty() ? "" : ", ") + node_label(y.nodes()[i]);
        raise(ErrorKind::Numeric, "kron reduction: eliminated block is singular over {" + names + "}");
    }

    Eigen::MatrixXcd reduced = yrr - yre * lu.solve(yer);
    return YbusMatrix(std::move(reduced), std::move(nodes));
}

}  // namespace mgstab
