#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spde2d/analysis.hpp"
#include "spde2d/euler.hpp"
#include "spde2d/exact_langevin.hpp"
#include "spde2d/magnus.hpp"
#include "spde2d/operators.hpp"

namespace spde2d {

enum class MethodKind { Euler, M1, M2, M3, M3Adaptive };

std::string method_name(MethodKind kind);
int method_order(MethodKind kind); // 0 for Euler

struct MethodSpec {
    MethodKind kind = MethodKind::M3;
    double dt = 0.1;
    double expmv_tol = 1e-10;
    double expmv_theta = 1.0;
    double adaptive_tol = 1e-4;
    double adaptive_shrink = 0.5;
};

/// One experiment: family, grid, horizon, shared Brownian batch, and the
/// methods to run on it.
struct ExperimentConfig {
    std::string family = "langevin-constant";
    double a = 1.1;
    double sigma = 0.31622776601683794; // 1/sqrt(10)
    std::size_t d = 50;
    double a_x = -4.0, b_x = 4.0;
    double a_v = -4.0, b_v = 4.0;
    double T = 1.0;
    double dt_leb = 1e-4;
    std::size_t M = 10;
    std::uint64_t seed = 1;
    std::vector<int> kappas = {4};
    std::vector<double> record_times; // empty: terminal only
    std::string out = ".";
    double blowup_norm_cap = 1e10;
    int threads = 0;
    bool dump_paths = false;
    std::vector<MethodSpec> methods;

    GridSpec grid() const;
    CoefficientFamily make_family() const;
};

/// Parses the flat `key = value` config format. Keys before the first
/// `method = <name>` line are global; each method line opens a block whose
/// keys (dt, expmv_tol, expmv_theta, adaptive_tol, adaptive_shrink) apply to
/// that method. '#' starts a comment. All validation problems are collected
/// and reported together in one ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Validates cross-field constraints (commensurability, family parameters);
/// throws ConfigError listing every violation.
void validate_config(const ExperimentConfig& cfg);

struct MethodResult {
    MethodSpec spec;
    std::vector<SolutionEnsemble> snapshots; // one per record time
    double seconds_total = 0.0;
    double seconds_per_trajectory = 0.0;
};

struct CompareRow {
    std::string method;
    int order = 0;
    double dt = 0.0;
    int kappa = 0;
    double err = 0.0;
    double ame = 0.0;
    double time_per_sim_s = 0.0;
    std::size_t blowups = 0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    std::string reference; // "exact" or the reference method label
};

/// Runs every configured method on the shared batch and writes
/// `results.csv` (header: method,order,d,dt,dt_leb,M,seed,kappa,err,ame,
/// time_per_sim_s,blowups) plus one `me_<method>_<t>.txt` matrix per method
/// and record time into cfg.out. The reference is the exact benchmark for
/// the constant Langevin family, otherwise the finest-dt Euler method in the
/// config. Aborts when the reference itself blows up.
CompareReport run_compare(const ExperimentConfig& cfg);

struct SweepRow {
    double dt = 0.0;
    double err_m2 = 0.0, err_m3 = 0.0;
    double time_m2 = 0.0, time_m3 = 0.0;
    std::size_t blowups = 0;
};

/// For each dt, runs orders 2 and 3 on the shared batch against the same
/// reference policy as run_compare and writes `sweep.csv`.
std::vector<SweepRow> run_stepsize_sweep(const ExperimentConfig& cfg,
                                         const std::vector<double>& dts);

struct SparsityInfo {
    std::string name;
    std::size_t nnz = 0;
    std::size_t diagonals = 0;
};

/// Assembles A, B and the nested commutators, reporting nnz and
/// nonzero-diagonal counts; optionally exports `pattern_<name>.txt` triplet
/// files into cfg.out.
std::vector<SparsityInfo> run_sparsity(const ExperimentConfig& cfg, bool export_patterns);

struct SelftestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Built-in invariant suites (grid isomorphism, commutator algebra, expmv
/// contracts, path functionals, scalar and deterministic exactness). Used by
/// the CLI selftest command; any failure is a release blocker.
std::vector<SelftestResult> run_selftest();

} // namespace spde2d
