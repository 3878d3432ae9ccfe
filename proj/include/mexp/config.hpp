#pragma once

// INI-style run configuration with sections [model], [cost], [noise], [grid],
// [solver], [mc]. Vector and matrix values use JSON array syntax, e.g.
//   mu = [0.4, -0.2]
//   Q  = [[-1, 1], [1, -1]]

#include "mexp/model.hpp"
#include "mexp/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace mexp {

struct McSettings {
    long long n_paths = 50000;
    double dt = 1e-3;
    std::uint64_t seed = 20240601;
    double w0 = 1.0;
    int record_stride = 10;
    double allowance_c = 1.0;   // PDE-vs-MC scheme allowance constant
    double martingale_c = 1.0;  // martingale diagnostic allowance constant
    int threads = 1;
};

struct Config {
    Problem problem;
    GridSpec grid;
    SolverSettings solver;
    McSettings mc;
};

/// Schema violation; `key()` is the offending "section.name".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

[[nodiscard]] Config parse_config(std::istream& in);
[[nodiscard]] Config load_config(const std::string& path);

/// Canonical JSON of everything that determines a solve (model, cost, noise,
/// grid, solver numerics; not thread counts or MC settings).
[[nodiscard]] std::string canonical_solve_params(const Config& cfg);

/// 16 hex digits of FNV-1a/64 over canonical_solve_params.
[[nodiscard]] std::string params_hash(const Config& cfg);

[[nodiscard]] std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace mexp
