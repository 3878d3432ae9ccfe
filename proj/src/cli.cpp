#include "mexp/cli.hpp"

#include "mexp/config.hpp"
#include "mexp/invariants.hpp"
#include "mexp/io.hpp"
#include "mexp/montecarlo.hpp"
#include "mexp/policy.hpp"
#include "mexp/simulate.hpp"
#include "mexp/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace mexp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string csv_preamble(const std::string& hash) { return "# params_hash " + hash + "\n"; }

json solver_settings_json(const Config& cfg) { return json::parse(canonical_solve_params(cfg)); }

bool check_hash(const Container& c, const std::string& hash, const std::string& what, std::ostream& err) {
    if (c.params_hash == hash) return true;
    err << "error: params hash mismatch for " << what << ": container " << c.params_hash << ", config " << hash
        << '\n';
    return false;
}

}  // namespace

int cmd_solve(const SolveArgs& args, std::ostream& log, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    Config cfg;
    try {
        cfg = load_config(args.config);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    if (args.threads > 0) cfg.solver.threads = args.threads;
    const std::string hash = params_hash(cfg);

    Solution sol;
    try {
        sol = solve_hjbqvi(cfg.problem, cfg.grid, cfg.solver);
    } catch (const SolverError& e) {
        err << "error: solver failed: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    const double solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Policy pol = extract_policy(cfg.problem, sol, cfg.solver.region_tol);
    const InvariantReport inv = check_invariants(cfg.problem, cfg.grid, cfg.solver, sol, pol);
    const long long buy_nodes = purchase_node_count(pol);
    const std::vector<double> min_buy = min_purchase_wealth(pol);

    const json settings = solver_settings_json(cfg);
    fs::create_directories(args.out_dir);
    write_container(path_in(args.out_dir, "value.mexp"), sol.axes, hash, settings, {{"values", &sol.value}});
    write_container(path_in(args.out_dir, "policy.mexp"), sol.axes, hash, settings,
                    {{"region", &pol.region},
                     {"pi_hat", &pol.pi_hat},
                     {"q_hat", &pol.q_hat},
                     {"gap", &pol.gap},
                     {"m_value", &sol.m_value}});

    json min_buy_json = json::array();
    for (double w : min_buy) min_buy_json.push_back(std::isnan(w) ? json(nullptr) : json(w));
    const SolverDiagnostics& d = sol.diag;
    const json manifest = {
        {"params_hash", hash},
        {"params", settings},
        {"grid",
         {{"n_t", cfg.grid.n_t},
          {"time_substeps", cfg.grid.time_substeps},
          {"n_w", cfg.grid.n_w},
          {"w_max", cfg.grid.w_max},
          {"n_p", cfg.grid.n_p},
          {"n_q", cfg.grid.n_q}}},
        {"tolerances",
         {{"obstacle_tol", cfg.solver.obstacle_tol},
          {"region_tol", cfg.solver.region_tol},
          {"residual_c", cfg.solver.residual_c}}},
        {"diagnostics",
         {{"dt", d.dt},
          {"cfl_number", d.cfl_number},
          {"node_steps", d.node_steps},
          {"directional_node_steps", d.directional_node_steps},
          {"dropped_cross_node_steps", d.dropped_cross_node_steps},
          {"max_obstacle_passes", d.max_sweeps_used},
          {"total_obstacle_passes", d.total_sweeps}}},
        {"intervention_region", {{"purchase_nodes", buy_nodes}, {"empty", buy_nodes == 0}, {"min_wealth_by_t", min_buy_json}}},
        {"invariants_pass", inv.pass()},
        {"files", {"value.mexp", "policy.mexp", "invariants.json", "timing.json"}}};
    json inv_json = inv.to_json();
    inv_json["params_hash"] = hash;
    write_text(path_in(args.out_dir, "manifest.json"), manifest.dump(2) + "\n");
    write_text(path_in(args.out_dir, "invariants.json"), inv_json.dump(2) + "\n");
    const double total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(path_in(args.out_dir, "timing.json"),
               json{{"params_hash", hash}, {"solve_seconds", solve_seconds}, {"total_seconds", total_seconds}}.dump(2) +
                   "\n");

    log << "params_hash " << hash << '\n';
    log << "purchase nodes " << buy_nodes << (buy_nodes == 0 ? " (intervention region empty)" : "") << '\n';
    for (const auto& c : inv.checks)
        log << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << std::setprecision(6) << c.measure << ")\n";
    if (!inv.pass()) {
        const auto& r = inv.residuals;
        err << "error: hard invariant failed; worst residual node (k,i,j) = (" << r.worst_k << ',' << r.worst_i << ','
            << r.worst_j << ")\n";
        return kCheckFailed;
    }
    return kOk;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err) {
    Config cfg;
    try {
        cfg = load_config(args.config);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    if (args.threads > 0) cfg.mc.threads = args.threads;
    if (args.n_paths) cfg.mc.n_paths = *args.n_paths;
    if (args.seed) cfg.mc.seed = *args.seed;
    if (cfg.mc.n_paths < 2) {
        err << "error: mc.n_paths: need at least 2 paths\n";
        return kUsage;
    }
    const std::string hash = params_hash(cfg);
    const std::string value_path =
        args.value.empty() ? (fs::path(args.policy).parent_path() / "value.mexp").string() : args.value;

    Container pc, vc;
    try {
        pc = read_container(args.policy);
        vc = read_container(value_path);
    } catch (const ContainerError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    }
    if (!check_hash(pc, hash, args.policy, err) || !check_hash(vc, hash, value_path, err)) return kUsage;

    const Problem& pr = cfg.problem;
    const Policy pol =
        policy_from_fields(pr, pc.array("gap"), pc.array("pi_hat"), pc.array("q_hat"), cfg.solver.region_tol);
    const NodeField& value = vc.array("values");
    const State x0(cfg.mc.w0, Belief(pr.model.p0));
    const PathConfig pcfg = PathConfig::for_horizon(pr.model.T, cfg.mc.dt, cfg.mc.seed, cfg.mc.record_stride);
    const RunOptions opt{cfg.mc.threads, true};

    const Strategy policy = policy_strategy(pol);
    const Strategy myopic = myopic_strategy(pr);
    const StrategyEstimate est = evaluate_strategy(pr, policy, x0, cfg.mc.n_paths, pcfg, opt);
    const StrategyEstimate base = evaluate_strategy(pr, myopic, x0, cfg.mc.n_paths, pcfg, opt);
    const PairedComparison dom = paired_dominance(est, base);
    const MartingaleReport mart = martingale_diagnostic(pr, value, est, x0, cfg.mc.martingale_c);
    const PdeMcVerdict cmp = compare_pde_mc(value, est, 0.0, x0, cfg.mc.allowance_c);
    const bool structural = est.structural_violations == 0;

    const json report = {{"params_hash", hash},
                         {"n_paths", cfg.mc.n_paths},
                         {"seed", cfg.mc.seed},
                         {"dt", pcfg.dt},
                         {"n_steps", pcfg.n_steps},
                         {"w0", cfg.mc.w0},
                         {"policy", to_json(est)},
                         {"baseline", to_json(base)},
                         {"dominance", to_json(dom)},
                         {"martingale", to_json(mart)},
                         {"pde_vs_mc", to_json(cmp)},
                         {"structural_ok", structural},
                         {"pass", mart.pass && cmp.pass && structural}};

    fs::create_directories(args.out_dir);
    write_text(path_in(args.out_dir, "report.json"), report.dump(2) + "\n");
    {
        std::ostringstream s;
        s << csv_preamble(hash);
        write_outcomes_csv(s, est);
        write_text(path_in(args.out_dir, "outcomes.csv"), s.str());
    }
    {
        std::ostringstream s;
        s << csv_preamble(hash);
        write_events_csv(s, est);
        write_text(path_in(args.out_dir, "events.csv"), s.str());
    }
    {
        std::vector<PathRecord> recs;
        const int n = static_cast<int>(std::min<long long>(args.sample_paths, cfg.mc.n_paths));
        for (int i = 0; i < n; ++i)
            recs.push_back(simulate_innovations_state(pr, x0, policy.trade, policy.purchase, pcfg,
                                                      static_cast<std::uint64_t>(i)));
        std::ostringstream s;
        s << csv_preamble(hash);
        write_paths_csv(s, recs);
        write_text(path_in(args.out_dir, "paths.csv"), s.str());
    }

    log << std::setprecision(6) << "policy mean " << est.mean << " (SE " << est.std_error << "), purchases "
        << est.total_purchases << '\n'
        << (dom.pass ? "PASS" : "FAIL") << " dominance over myopic: " << dom.mean_difference << " (SE " << dom.std_error
        << ")\n"
        << (mart.pass ? "PASS" : "FAIL") << " martingale: " << mart.mean_path_increment << " (SE " << mart.std_error
        << ", allowance " << mart.allowance << ")\n"
        << (cmp.pass ? "PASS" : "FAIL") << " pde vs mc: V " << cmp.v_grid << ", gap " << cmp.gap << " (SE "
        << cmp.std_error << ", allowance " << cmp.allowance << ")\n"
        << (structural ? "PASS" : "FAIL") << " structural\n";
    if (est.clamp_warning) err << "warning: " << est.clamped_paths << " paths hit the exposure clamp\n";
    return report["pass"].get<bool>() ? kOk : kCheckFailed;
}

int cmd_regions(const std::string& policy, const std::string& out_path, std::ostream& out, std::ostream& err) {
    Container c;
    try {
        c = read_container(policy);
    } catch (const ContainerError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    }
    const std::vector<BoundarySegment> segs = purchase_segments(c.array("region"));
    std::ostringstream s;
    s << csv_preamble(c.params_hash);
    write_segments_csv(s, segs);
    if (out_path.empty()) out << s.str();
    else write_text(out_path, s.str());
    return kOk;
}

int cmd_slice(const SliceArgs& args, std::ostream& out, std::ostream& err) {
    Container c;
    try {
        c = read_container(args.file);
    } catch (const ContainerError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    }
    if (!c.arrays.count(args.array)) {
        err << "error: no array '" << args.array << "' in " << args.file << '\n';
        return kUsage;
    }
    const NodeField& f = c.array(args.array);
    const GridAxes& a = c.axes;
    if (!args.t && !args.w && !args.p) {
        err << "error: fix at least one of --t, --w, --p\n";
        return kUsage;
    }
    struct Range {
        int lo, hi;
    };
    auto resolve = [&](const std::optional<int>& idx, const Axis& ax, const char* name, Range& r) {
        if (!idx) {
            r = {0, ax.n - 1};
            return true;
        }
        const int i = *idx < 0 ? ax.n + *idx : *idx;
        if (i < 0 || i >= ax.n) {
            err << "error: " << name << " index " << *idx << " out of range [0, " << ax.n - 1 << "]\n";
            return false;
        }
        r = {i, i};
        return true;
    };
    Range rt{}, rw{}, rp{};
    if (!resolve(args.t, a.t, "t", rt) || !resolve(args.w, a.w, "w", rw) || !resolve(args.p, a.p, "p", rp))
        return kUsage;

    std::ostringstream s;
    s << csv_preamble(c.params_hash) << "t,w,p," << args.array << '\n' << std::setprecision(17);
    for (int k = rt.lo; k <= rt.hi; ++k)
        for (int i = rw.lo; i <= rw.hi; ++i)
            for (int j = rp.lo; j <= rp.hi; ++j)
                s << a.t.node(k) << ',' << a.w.node(i) << ',' << a.p.node(j) << ',' << f.at(k, i, j) << '\n';
    if (args.out_path.empty()) out << s.str();
    else write_text(args.out_path, s.str());
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Merton portfolio with costly noisy expert opinions"};
    app.require_subcommand(1);
    int threads = 0;
    std::string out_dir = ".";
    app.add_option("--threads", threads, "Worker thread cap (0 keeps the config value)")
        ->envname("MEXP_THREADS")
        ->check(CLI::NonNegativeNumber);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Solve the HJBQVI and write value and policy grids");
    s->add_option("config", solve.config, "Config file")->required();
    s->add_option("-o,--out", out_dir, "Output directory")->envname("MEXP_OUTPUT_DIR");

    SimulateArgs sim;
    long long n_paths = 0;
    std::uint64_t seed = 0;
    auto* m = app.add_subcommand("simulate", "Monte-Carlo evaluation of a solved policy");
    m->add_option("config", sim.config, "Config file")->required();
    m->add_option("policy", sim.policy, "Policy container")->required();
    m->add_option("--value", sim.value, "Value container (default: value.mexp next to the policy)");
    auto* np_opt = m->add_option("-n,--paths", n_paths, "Number of paths");
    auto* seed_opt = m->add_option("--seed", seed, "Base seed");
    m->add_option("--sample-paths", sim.sample_paths, "Paths written to paths.csv");
    m->add_option("-o,--out", out_dir, "Output directory")->envname("MEXP_OUTPUT_DIR");

    std::string regions_policy, regions_out;
    auto* r = app.add_subcommand("regions", "Purchase-region segments per time slice");
    r->add_option("policy", regions_policy, "Policy container")->required();
    r->add_option("-o,--out", regions_out, "Output CSV (default: stdout)");

    SliceArgs slice;
    int st = 0, sw = 0, sp = 0;
    auto* c = app.add_subcommand("slice", "Export a 1-D or 2-D slice of a grid array");
    c->add_option("file", slice.file, "Container")->required();
    c->add_option("array", slice.array, "Array name (values, region, pi_hat, q_hat, gap, m_value)")->required();
    auto* t_opt = c->add_option("--t", st, "Time index (negative counts from the end)");
    auto* w_opt = c->add_option("--w", sw, "Wealth index");
    auto* p_opt = c->add_option("--p", sp, "Belief index");
    c->add_option("-o,--out", slice.out_path, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*s) {
            solve.out_dir = out_dir;
            solve.threads = threads;
            return cmd_solve(solve, std::cout, std::cerr);
        }
        if (*m) {
            sim.out_dir = out_dir;
            sim.threads = threads;
            if (*np_opt) sim.n_paths = n_paths;
            if (*seed_opt) sim.seed = seed;
            return cmd_simulate(sim, std::cout, std::cerr);
        }
        if (*r) return cmd_regions(regions_policy, regions_out, std::cout, std::cerr);
        if (*t_opt) slice.t = st;
        if (*w_opt) slice.w = sw;
        if (*p_opt) slice.p = sp;
        return cmd_slice(slice, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
}

}  // namespace mexp::cli
