#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlap/dataset.hpp"
#include "overlap/processes.hpp"

// Verification suites (seeded random instances vs closed-form caps), the
// dimension-scaling sweep, and the CSV/JSON report plumbing shared by the
// CLI and the acceptance tests. Reports are byte-identical across runs for a
// fixed config and seed, with any worker count: every trial owns a derived
// seed and a preallocated output slot, and rows are merged in trial order.

namespace overlap::harness {

struct ReportRow {
    std::string scenario;
    std::size_t p = 0;
    std::string quantity;
    double observed = 0.0;
    double bound = 0.0;
    double margin = 0.0;  // bound - observed
    bool pass = false;    // margin >= -tolerance
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    int replicate = 0;
};

ReportRow make_row(std::string scenario, std::size_t p, std::string quantity,
                   double observed, double bound, double tolerance,
                   std::uint64_t seed, int replicate);

std::string csv_header();
std::string to_csv(const std::vector<ReportRow>& rows);
void write_file(const std::string& path, const std::string& content);

// Least-squares slope of log(y) on log(x); y must be positive.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Verify suites
// ---------------------------------------------------------------------------

struct VerifyOptions {
    int trials = 1000;
    std::uint64_t seed = 7;
    int workers = 0;  // 0 = all available
    std::vector<double> eta_grid = {0.05, 0.1, 0.25};
};

struct SuiteResult {
    std::vector<ReportRow> rows;
    bool all_pass = true;
    std::vector<std::string> violations;  // serialized offending instances
};

// Random pairs filtered to eta_star >= eta; every exact divergence
// (chi2, kl, chi^alpha for alpha in {1.5, 2, 3, 4}, tv; both directions)
// must stay under its cap.
SuiteResult verify_rukhin(const VerifyOptions& options);

// Chain-rule telescoping on random products and dependent joints, plus the
// data-processing direction (marginal KL <= joint KL).
SuiteResult verify_chainrule(const VerifyOptions& options);

// Exact moment checks on random pairs with numeric coordinates.
SuiteResult verify_theorem1(const VerifyOptions& options);

// retained_fraction(eta) <= (1 - bayes_accuracy_hat)/eta on synthetic
// propensity vectors.
SuiteResult verify_trimming(const VerifyOptions& options);

// name in {rukhin, chainrule, theorem1, trimming, all}
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

enum class ScenarioKind { lr_budgeted, ma1, factor, gaussian_shift };

struct SweepScenario {
    ScenarioKind kind = ScenarioKind::lr_budgeted;
    std::string id = "lr_budgeted";
    // lr_budgeted
    process::Allocation allocation = process::Allocation::anchored;
    // ma1
    double theta = 0.5;
    double sigma2 = 1.0;
    // factor
    std::size_t rank = 1;
    double loading = 1.0;
    double idio = 0.0;
    // gaussian_shift (per-coordinate mean gap, shared variance)
    double gap = 1.0;
    double var = 1.0;
};

struct SweepConfig {
    int schema_version = 1;
    SweepScenario scenario;
    std::vector<std::size_t> p_grid;
    double eta = 0.1;
    double pi = 0.5;
    std::size_t n = 0;  // 0 = exact-moment mode
    int replicates = 1;
    std::uint64_t seed = 7;
    int workers = 0;
    std::string rows_csv;      // "" = do not write
    std::string summary_json;  // "" = do not write
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& config);

struct SweepResult {
    std::vector<ReportRow> rows;
    nlohmann::json summary;  // fitted log-log slopes per quantity
};

SweepResult run_sweep(const SweepConfig& config);

// ---------------------------------------------------------------------------
// CSV dataset ingestion (header row; one named 0/1 treatment column; all
// remaining columns numeric covariates)
// ---------------------------------------------------------------------------

Dataset read_csv_dataset(const std::string& path, const std::string& treatment_col);

}  // namespace overlap::harness
