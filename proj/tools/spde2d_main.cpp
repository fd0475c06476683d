// Experiment runner for the two-space-variable SPDE solvers: method
// comparisons, step-size sweeps, operator sparsity diagnostics and the
// built-in selftest.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spde2d/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string family;
    std::uint64_t d = 0;
    double T = 0.0;
    double dt = 0.0;
    double dt_leb = 0.0;
    int order = 0;
    std::vector<std::string> methods;
    std::uint64_t M = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<int> kappa;
    double a = 0.0;
    bool a_set = false;
    double sigma = -1.0;
    std::string out;
    int threads = -1;
    bool dump_paths = false;
};

void add_common_flags(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "flat key = value config file");
    app->add_option("--family", f.family, "langevin-constant | langevin-variable");
    app->add_option("--d", f.d, "grid points per axis");
    app->add_option("--T", f.T, "time horizon");
    app->add_option("--dt", f.dt, "step size for methods without an explicit one");
    app->add_option("--dt-leb", f.dt_leb, "Lebesgue grid spacing for the Brownian paths");
    app->add_option("--order", f.order, "shorthand for a single Magnus method of this order")
        ->check(CLI::Range(1, 3));
    app->add_option("--method", f.methods,
                    "method to run: euler|m1|m2|m3|m3-adaptive, optionally name=dt; repeatable");
    app->add_option("--M", f.M, "number of trajectories");
    auto* seed_opt = app->add_option("--seed", f.seed, "base seed for the Brownian batch");
    seed_opt->each([&f](const std::string&) { f.seed_set = true; });
    app->add_option("--kappa", f.kappa, "central-region parameter(s); repeatable");
    auto* a_opt = app->add_option("--a", f.a, "family parameter a");
    a_opt->each([&f](const std::string&) { f.a_set = true; });
    app->add_option("--sigma", f.sigma, "family parameter sigma");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    app->add_flag("--dump-paths", f.dump_paths, "write path_<m>.txt debug dumps");
}

spde2d::ExperimentConfig assemble_config(const CommonFlags& f) {
    spde2d::ExperimentConfig cfg;
    if (!f.config.empty()) cfg = spde2d::parse_config_file(f.config);
    if (!f.family.empty()) cfg.family = f.family;
    if (f.d > 0) cfg.d = f.d;
    if (f.T > 0.0) cfg.T = f.T;
    if (f.dt_leb > 0.0) cfg.dt_leb = f.dt_leb;
    if (f.M > 0) cfg.M = f.M;
    if (f.seed_set) cfg.seed = f.seed;
    if (!f.kappa.empty()) cfg.kappas = f.kappa;
    if (f.a_set) cfg.a = f.a;
    if (f.sigma >= 0.0) cfg.sigma = f.sigma;
    if (!f.out.empty()) cfg.out = f.out;
    if (f.threads >= 0) cfg.threads = f.threads;
    cfg.dump_paths = f.dump_paths;

    auto add_method = [&](const std::string& token) {
        spde2d::MethodSpec spec;
        std::string name = token;
        double dt = f.dt;
        const auto eq = token.find('=');
        if (eq != std::string::npos) {
            name = token.substr(0, eq);
            dt = std::stod(token.substr(eq + 1));
        }
        if (name == "euler") spec.kind = spde2d::MethodKind::Euler;
        else if (name == "m1") spec.kind = spde2d::MethodKind::M1;
        else if (name == "m2") spec.kind = spde2d::MethodKind::M2;
        else if (name == "m3") spec.kind = spde2d::MethodKind::M3;
        else if (name == "m3-adaptive") spec.kind = spde2d::MethodKind::M3Adaptive;
        else throw spde2d::ConfigError("unknown method '" + name + "'");
        if (dt <= 0.0) {
            throw spde2d::ConfigError("method '" + name + "' needs a dt (method=dt or --dt)");
        }
        spec.dt = dt;
        cfg.methods.push_back(spec);
    };
    for (const std::string& token : f.methods) add_method(token);
    if (f.order > 0) add_method("m" + std::to_string(f.order));
    if (cfg.methods.empty() && f.dt > 0.0) {
        // a bare --dt overrides every configured method's step
        for (auto& m : cfg.methods) m.dt = f.dt;
    }
    return cfg;
}

int run_selftest_cmd() {
    const auto results = spde2d::run_selftest();
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] %-32s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        all &= r.passed;
    }
    std::printf("%zu checks, %s\n", results.size(), all ? "all passed" : "FAILURES");
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"iterated stochastic Magnus and Euler-Maruyama solvers for "
                 "two-space-variable SPDEs"};
    app.require_subcommand(0, 1);

    bool selftest_flag = false;
    app.add_flag("--selftest", selftest_flag, "run the built-in invariant suites and exit");

    CommonFlags compare_flags;
    CLI::App* compare = app.add_subcommand("compare", "run the configured methods against the "
                                                      "reference and write results.csv");
    add_common_flags(compare, compare_flags);

    CommonFlags sweep_flags;
    std::vector<double> sweep_dts;
    CLI::App* sweep = app.add_subcommand("sweep", "step-size sweep of Magnus orders 2 and 3");
    add_common_flags(sweep, sweep_flags);
    sweep->add_option("--dts", sweep_dts, "step sizes to sweep; repeatable")->required();

    CommonFlags sparsity_flags;
    bool export_patterns = false;
    CLI::App* sparsity = app.add_subcommand("sparsity", "operator and commutator sparsity "
                                                        "diagnostics");
    add_common_flags(sparsity, sparsity_flags);
    sparsity->add_flag("--export", export_patterns, "write pattern_<name>.txt triplet files");

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest_flag || selftest->parsed()) {
            return run_selftest_cmd();
        }
        if (compare->parsed()) {
            const auto cfg = assemble_config(compare_flags);
            const auto report = spde2d::run_compare(cfg);
            std::printf("reference: %s\n", report.reference.c_str());
            for (const auto& row : report.rows) {
                std::printf("%-12s order=%d dt=%-10g kappa=%d err=%-12g ame=%-12g "
                            "t/sim=%.4gs blowups=%zu\n",
                            row.method.c_str(), row.order, row.dt, row.kappa, row.err,
                            row.ame, row.time_per_sim_s, row.blowups);
            }
            return 0;
        }
        if (sweep->parsed()) {
            const auto cfg = assemble_config(sweep_flags);
            const auto rows = spde2d::run_stepsize_sweep(cfg, sweep_dts);
            for (const auto& row : rows) {
                std::printf("dt=%-10g err_m2=%-12g err_m3=%-12g t_m2=%.4gs t_m3=%.4gs "
                            "blowups=%zu\n",
                            row.dt, row.err_m2, row.err_m3, row.time_m2, row.time_m3,
                            row.blowups);
            }
            return 0;
        }
        if (sparsity->parsed()) {
            const auto cfg = assemble_config(sparsity_flags);
            const auto infos = spde2d::run_sparsity(cfg, export_patterns);
            for (const auto& info : infos) {
                std::printf("%-4s nnz=%-10zu nonzero-diagonals=%zu\n", info.name.c_str(),
                            info.nnz, info.diagonals);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    std::cout << app.help();
    return 0;
}
