#include "mexp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mexp {

namespace {

namespace pt = boost::property_tree;
using nlohmann::json;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"model", {"mu", "sigma", "Q", "T", "alpha", "pi_lo", "pi_hi", "p0"}},
        {"cost", {"k0", "k1"}},
        {"noise", {"std_dev", "n_quad"}},
        {"grid", {"n_t", "time_substeps", "n_w", "w_max", "n_p", "n_q"}},
        {"solver",
         {"obstacle_tol", "region_tol", "cfl_safety", "sl_kappa", "cross_fallback", "n_pi", "max_sweeps",
          "psi_c_factor", "residual_c", "threads"}},
        {"mc", {"n_paths", "dt", "seed", "w0", "record_stride", "allowance_c", "martingale_c", "threads"}},
    };
    return s;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        return *v;
    }

    [[nodiscard]] std::string need(const std::string& key) const {
        auto v = raw(key);
        if (!v) throw ConfigError(key, "missing required key");
        return *v;
    }

    [[nodiscard]] double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (fallback) return *fallback;
            throw ConfigError(key, "missing required key");
        }
        try {
            std::size_t used = 0;
            const double x = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing text");
            return x;
        } catch (const std::exception&) {
            throw ConfigError(key, "expected a number, got '" + *v + "'");
        }
    }

    [[nodiscard]] long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (fallback) return *fallback;
            throw ConfigError(key, "missing required key");
        }
        try {
            std::size_t used = 0;
            const long long x = std::stoll(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing text");
            return x;
        } catch (const std::exception&) {
            throw ConfigError(key, "expected an integer, got '" + *v + "'");
        }
    }

    [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        auto v = raw(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
            const unsigned long long x = std::stoull(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing text");
            return x;
        } catch (const std::exception&) {
            throw ConfigError(key, "expected a non-negative integer, got '" + *v + "'");
        }
    }

    [[nodiscard]] Eigen::VectorXd vector(const std::string& key) const {
        const json j = parse_json(key);
        if (!j.is_array() || j.empty()) throw ConfigError(key, "expected a non-empty array of numbers");
        Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
        for (std::size_t r = 0; r < j.size(); ++r) {
            if (!j[r].is_number()) throw ConfigError(key, "expected a non-empty array of numbers");
            out(static_cast<Eigen::Index>(r)) = j[r].get<double>();
        }
        return out;
    }

    [[nodiscard]] Eigen::MatrixXd matrix(const std::string& key) const {
        const json j = parse_json(key);
        if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(key, "expected an array of rows");
        const std::size_t rows = j.size(), cols = j[0].size();
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(key, "rows must have equal length");
            for (std::size_t c = 0; c < cols; ++c) {
                if (!j[r][c].is_number()) throw ConfigError(key, "matrix entries must be numbers");
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
            }
        }
        return out;
    }

private:
    [[nodiscard]] json parse_json(const std::string& key) const {
        const std::string text = need(key);
        try {
            return json::parse(text);
        } catch (const json::exception&) {
            throw ConfigError(key, "malformed array '" + text + "'");
        }
    }

    const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree) {
    const auto& s = schema();
    for (const auto& [section, body] : tree) {
        auto it = s.find(section);
        if (it == s.end()) throw ConfigError(section, "unknown section");
        if (!body.data().empty() && body.empty()) throw ConfigError(section, "expected a [section]");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
}

// Re-raise model invariant failures as schema errors; messages start with the key.
template <class F>
void as_config_error(F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                          colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

int to_int(const Reader& r, const std::string& key, long long fallback, long long lo) {
    const long long v = r.integer(key, fallback);
    if (v < lo || v > 1'000'000'000) throw ConfigError(key, "out of range");
    return static_cast<int>(v);
}

double positive(const Reader& r, const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = r.number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
    return v;
}

}  // namespace

Config parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", std::string("cannot parse: ") + e.message() + " at line " +
                                        std::to_string(e.line()));
    }
    check_schema(tree);
    const Reader r(tree);
    Config cfg;

    auto& m = cfg.problem.model;
    m.mu = r.vector("model.mu");
    m.sigma = r.number("model.sigma");
    m.Q = r.matrix("model.Q");
    m.T = r.number("model.T");
    m.alpha = r.number("model.alpha");
    m.pi_lo = r.number("model.pi_lo");
    m.pi_hi = r.number("model.pi_hi");
    m.p0 = r.vector("model.p0");
    as_config_error([&] { m.validate(); });

    as_config_error([&] { cfg.problem.cost = CostModel(r.number("cost.k0"), r.number("cost.k1")); });
    const double sd = positive(r, "noise.std_dev", 1.0);
    const int nq = to_int(r, "noise.n_quad", 16, 1);
    if (nq > 512) throw ConfigError("noise.n_quad", "at most 512 nodes");
    cfg.problem.noise = NoiseModel(sd, nq);

    auto& g = cfg.grid;
    g.n_t = to_int(r, "grid.n_t", g.n_t, 2);
    g.time_substeps = to_int(r, "grid.time_substeps", g.time_substeps, 1);
    g.n_w = to_int(r, "grid.n_w", g.n_w, 3);
    g.w_max = positive(r, "grid.w_max", g.w_max);
    g.n_p = to_int(r, "grid.n_p", g.n_p, 3);
    g.n_q = to_int(r, "grid.n_q", g.n_q, 1);

    auto& s = cfg.solver;
    s.obstacle_tol = positive(r, "solver.obstacle_tol", s.obstacle_tol);
    s.region_tol = positive(r, "solver.region_tol", 10.0 * s.obstacle_tol);
    s.cfl_safety = positive(r, "solver.cfl_safety", s.cfl_safety);
    if (s.cfl_safety > 1.0) throw ConfigError("solver.cfl_safety", "must not exceed 1");
    s.sl_kappa = positive(r, "solver.sl_kappa", s.sl_kappa);
    const std::string fb = r.raw("solver.cross_fallback").value_or("directional");
    if (fb == "directional") s.cross_fallback = CrossFallback::kDirectional;
    else if (fb == "drop") s.cross_fallback = CrossFallback::kDrop;
    else throw ConfigError("solver.cross_fallback", "expected 'directional' or 'drop'");
    s.n_pi = to_int(r, "solver.n_pi", s.n_pi, 0);
    s.max_sweeps = to_int(r, "solver.max_sweeps", s.max_sweeps, 0);
    s.psi_c_factor = r.number("solver.psi_c_factor", s.psi_c_factor);
    if (!(s.psi_c_factor > 1.0)) throw ConfigError("solver.psi_c_factor", "must exceed 1");
    s.residual_c = positive(r, "solver.residual_c", s.residual_c);
    s.threads = to_int(r, "solver.threads", s.threads, 1);

    auto& mc = cfg.mc;
    mc.n_paths = r.integer("mc.n_paths", mc.n_paths);
    if (mc.n_paths < 2) throw ConfigError("mc.n_paths", "need at least 2 paths");
    mc.dt = positive(r, "mc.dt", mc.dt);
    mc.seed = r.unsigned_integer("mc.seed", mc.seed);
    mc.w0 = r.number("mc.w0", mc.w0);
    if (!(mc.w0 >= 0.0)) throw ConfigError("mc.w0", "must be non-negative");
    mc.record_stride = to_int(r, "mc.record_stride", mc.record_stride, 1);
    mc.allowance_c = r.number("mc.allowance_c", mc.allowance_c);
    if (!(mc.allowance_c >= 0.0)) throw ConfigError("mc.allowance_c", "must be non-negative");
    mc.martingale_c = r.number("mc.martingale_c", mc.martingale_c);
    if (!(mc.martingale_c >= 0.0)) throw ConfigError("mc.martingale_c", "must be non-negative");
    mc.threads = to_int(r, "mc.threads", mc.threads, 1);
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

std::string canonical_solve_params(const Config& cfg) {
    const auto& m = cfg.problem.model;
    auto vec = [](const Eigen::VectorXd& v) {
        json a = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
        return a;
    };
    json q = json::array();
    for (Eigen::Index r = 0; r < m.Q.rows(); ++r) q.push_back(vec(m.Q.row(r).transpose()));
    json j;
    j["model"] = {{"mu", vec(m.mu)}, {"sigma", m.sigma}, {"Q", q},          {"T", m.T},
                  {"alpha", m.alpha}, {"pi_lo", m.pi_lo}, {"pi_hi", m.pi_hi}, {"p0", vec(m.p0)}};
    j["cost"] = {{"k0", cfg.problem.cost.k0()}, {"k1", cfg.problem.cost.k1()}};
    j["noise"] = {{"std_dev", cfg.problem.noise.std_dev()}, {"n_quad", cfg.problem.noise.n_quad()}};
    const auto& g = cfg.grid;
    j["grid"] = {{"n_t", g.n_t}, {"time_substeps", g.time_substeps}, {"n_w", g.n_w},
                 {"w_max", g.w_max}, {"n_p", g.n_p}, {"n_q", g.n_q}};
    const auto& s = cfg.solver;
    j["solver"] = {{"obstacle_tol", s.obstacle_tol},
                   {"region_tol", s.region_tol},
                   {"cfl_safety", s.cfl_safety},
                   {"sl_kappa", s.sl_kappa},
                   {"cross_fallback", s.cross_fallback == CrossFallback::kDirectional ? "directional" : "drop"},
                   {"n_pi", s.n_pi},
                   {"max_sweeps", s.max_sweeps},
                   {"psi_c_factor", s.psi_c_factor},
                   {"residual_c", s.residual_c}};
    return j.dump();
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string params_hash(const Config& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_solve_params(cfg))));
    return buf;
}

}  // namespace mexp
