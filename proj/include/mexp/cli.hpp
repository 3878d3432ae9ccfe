#pragma once

// Batch front-end behind the `mexp` binary. Each command returns a process
// exit code and writes diagnostics to `err`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace mexp::cli {

enum ExitCode : int {
    kOk = 0,
    kIoError = 1,
    kUsage = 2,         // schema violation, hash mismatch, bad slice index
    kSolverFailure = 3,
    kCheckFailed = 4,   // hard invariant or verdict failed
};

struct SolveArgs {
    std::string config;
    std::string out_dir = ".";
    int threads = 0;  // 0 keeps the config value
};

/// value.mexp, policy.mexp, manifest.json, invariants.json, timing.json.
int cmd_solve(const SolveArgs& args, std::ostream& log, std::ostream& err);

struct SimulateArgs {
    std::string config;
    std::string policy;
    std::string value;  // empty: value.mexp beside the policy container
    std::string out_dir = ".";
    std::optional<long long> n_paths;
    std::optional<std::uint64_t> seed;
    int sample_paths = 5;
    int threads = 0;
};

/// report.json, outcomes.csv, events.csv, paths.csv.
int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err);

/// Purchase-region segments {t, p, w_lo, w_hi} of a policy container.
int cmd_regions(const std::string& policy, const std::string& out_path, std::ostream& out, std::ostream& err);

struct SliceArgs {
    std::string file;
    std::string array;
    // Fixed node indices; negative counts from the end. At least one is set.
    std::optional<int> t, w, p;
    std::string out_path;  // empty: `out`
};

/// 1-D or 2-D slice in long format: one row per node with its coordinates.
int cmd_slice(const SliceArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. MEXP_OUTPUT_DIR and MEXP_THREADS supply
/// defaults for --out and --threads.
int run(int argc, char** argv);

}  // namespace mexp::cli
