// overlap_lab: bound calculator, verification suites, scaling sweeps, and
// dataset overlap audits.
//
// Exit codes: 0 = OK / all properties hold, 1 = property violation,
// 2 = usage or config error.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "overlap/bounds.hpp"
#include "overlap/estimation.hpp"
#include "overlap/harness.hpp"
#include "overlap/serialization.hpp"

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("OVERLAP_LAB_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
        std::cerr << "warning: ignoring non-numeric OVERLAP_LAB_SEED\n";
    }
    return 7;
}

int cmd_bounds(double eta, double pi, const std::vector<double>& alphas, bool as_json) {
    using namespace overlap::bounds;
    const OverlapSpec spec(eta, pi);
    const auto band = lr_band(spec);
    const auto chi2 = chi2_bounds(band);
    const auto kl = kl_bounds(band);
    const auto tv = tv_bound(band);
    const double accuracy = classifier_accuracy_bound(eta);

    if (as_json) {
        nlohmann::json j{{"eta", eta},
                         {"pi", pi},
                         {"b_min", band.b_min},
                         {"b_max", band.b_max},
                         {"chi2_forward", chi2.forward},
                         {"chi2_reverse", chi2.reverse},
                         {"kl_forward", kl.forward},
                         {"kl_reverse", kl.reverse},
                         {"tv", tv.forward},
                         {"bayes_accuracy_bound", accuracy}};
        for (double alpha : alphas) {
            const auto cap = chi_alpha_bounds(band, alpha);
            j["chi_alpha"][std::to_string(alpha)] = {{"forward", cap.forward},
                                                     {"reverse", cap.reverse}};
        }
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    std::printf("strict overlap eta=%g, pi=%g\n", eta, pi);
    std::printf("  likelihood ratio band  [%.10g, %.10g]\n", band.b_min, band.b_max);
    std::printf("  chi^2 bound            %.10g (1||0)   %.10g (0||1)\n", chi2.forward,
                chi2.reverse);
    std::printf("  KL bound               %.10g (1||0)   %.10g (0||1)\n", kl.forward,
                kl.reverse);
    for (double alpha : alphas) {
        const auto cap = chi_alpha_bounds(band, alpha);
        std::printf("  chi^%-4g bound          %.10g (1||0)   %.10g (0||1)\n", alpha,
                    cap.forward, cap.reverse);
    }
    std::printf("  total variation bound  %.10g\n", tv.forward);
    std::printf("  Bayes accuracy bound   %.10g\n", accuracy);
    return 0;
}

int cmd_verify(const std::string& suite, int trials, std::uint64_t seed, int workers,
               const std::vector<double>& eta_grid, const std::string& out_csv) {
    overlap::harness::VerifyOptions options;
    options.trials = trials;
    options.seed = seed;
    options.workers = workers;
    if (!eta_grid.empty()) options.eta_grid = eta_grid;

    const auto result = overlap::harness::run_suite(suite, options);
    if (!out_csv.empty())
        overlap::harness::write_file(out_csv, overlap::harness::to_csv(result.rows));

    std::size_t failed = 0;
    for (const auto& row : result.rows)
        if (!row.pass) ++failed;
    std::printf("suite %-10s rows %zu  violations %zu\n", suite.c_str(),
                result.rows.size(), failed);
    if (!result.all_pass) {
        for (const auto& payload : result.violations)
            std::cerr << "violation instance: " << payload << "\n";
        return 1;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, int workers_override) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open config '" << config_path << "'\n";
        return 2;
    }
    nlohmann::json j;
    in >> j;
    auto config = overlap::harness::sweep_config_from_json(j);
    if (workers_override > 0) config.workers = workers_override;
    const auto result = overlap::harness::run_sweep(config);
    std::size_t failed = 0;
    for (const auto& row : result.rows)
        if (!row.pass) ++failed;
    std::printf("sweep %s: %zu rows, %zu bound misses\n", config.scenario.id.c_str(),
                result.rows.size(), failed);
    std::cout << result.summary.dump(2) << "\n";
    return 0;
}

int cmd_audit(const std::string& csv, const std::string& treatment,
              const std::vector<double>& eta_grid, const std::vector<double>& trim_grid,
              double l2, const std::string& out_json) {
    const auto data = overlap::harness::read_csv_dataset(csv, treatment);
    overlap::estimate::AuditConfig config;
    if (!eta_grid.empty()) config.eta_grid = eta_grid;
    if (!trim_grid.empty()) config.trim_grid = trim_grid;
    config.l2_penalty = l2;
    const auto audit = overlap::estimate::audit(data, config);
    const auto j = overlap::io::to_json(audit);
    if (!out_json.empty()) overlap::harness::write_file(out_json, j.dump(2) + "\n");

    std::printf("n=%zu p=%zu pi_hat=%.4f\n", audit.n, audit.p, audit.pi_hat);
    std::printf("eta_star_hat=%.4f (att %.4f, atc %.4f)  bayes_accuracy_hat=%.4f\n",
                audit.eta_hats.eta_star, audit.eta_hats.eta_att, audit.eta_hats.eta_atc,
                audit.bayes_accuracy_hat);
    if (!audit.fit.converged)
        std::printf("WARNING: propensity fit did not converge: %s\n",
                    audit.fit.diagnostic.c_str());
    std::printf("mad=%.6g  euclidean gap=%.6g\n", audit.imbalance.mad,
                audit.imbalance.euclidean_gap);
    std::printf("%-8s %-12s %s\n", "eta", "verdict", "failing checks");
    for (const auto& v : audit.verdicts) {
        std::string failing;
        for (const auto& c : v.checks)
            if (!c.pass) failing += c.quantity + " ";
        std::printf("%-8.3f %-12s %s\n", v.eta,
                    v.consistent ? "consistent" : "INCONSISTENT", failing.c_str());
    }
    std::printf("%-8s %-10s %s\n", "trim", "retained", "retention bound");
    for (const auto& pt : audit.trimming_curve)
        std::printf("%-8.3f %-10.4f %.4f\n", pt.eta_tilde, pt.retained_fraction,
                    pt.retention_bound);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-form overlap bounds, oracle verification, and dataset audits"};
    app.require_subcommand(1);

    double eta = 0.1, pi = 0.5;
    std::vector<double> alphas = {1.5, 3.0, 4.0};
    bool as_json = false;
    auto* bounds_cmd = app.add_subcommand("bounds", "print every bound for (eta, pi)");
    bounds_cmd->add_option("--eta", eta, "strict overlap bound in (0, 0.5]")->required();
    bounds_cmd->add_option("--pi", pi, "marginal treatment probability");
    bounds_cmd->add_option("--alpha", alphas, "chi^alpha orders");
    bounds_cmd->add_flag("--json", as_json, "emit JSON");

    std::string suite = "all";
    int trials = 1000;
    std::uint64_t seed = default_seed();
    int workers = 0;
    std::vector<double> eta_grid;
    std::string out_csv;
    auto* verify_cmd = app.add_subcommand("verify", "run a property suite on seeded instances");
    verify_cmd->add_option("--suite", suite, "rukhin | chainrule | theorem1 | trimming | all");
    verify_cmd->add_option("--trials", trials, "instances per suite")
        ->check(CLI::PositiveNumber);
    verify_cmd->add_option("--seed", seed, "base seed");
    verify_cmd->add_option("--workers", workers, "parallel workers (0 = all)");
    verify_cmd->add_option("--eta", eta_grid, "eta filter grid (rukhin suite)");
    verify_cmd->add_option("--out", out_csv, "write rows CSV here");

    std::string sweep_config;
    int sweep_workers = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "dimension-scaling sweep from a JSON config");
    sweep_cmd->add_option("--config", sweep_config, "JSON config path")->required();
    sweep_cmd->add_option("--workers", sweep_workers, "override config workers");

    std::string audit_csv, treatment = "treatment", audit_out;
    std::vector<double> audit_eta_grid, trim_grid;
    double l2 = -1.0;
    auto* audit_cmd = app.add_subcommand("audit", "overlap audit of a CSV dataset");
    audit_cmd->add_option("--csv", audit_csv, "dataset path")->required();
    audit_cmd->add_option("--treatment", treatment, "name of the 0/1 treatment column");
    audit_cmd->add_option("--eta-grid", audit_eta_grid, "candidate eta values");
    audit_cmd->add_option("--trim-grid", trim_grid, "trimming eta grid");
    audit_cmd->add_option("--l2", l2, "ridge penalty (default 1e-6 * n)");
    audit_cmd->add_option("--out", audit_out, "write audit JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (bounds_cmd->parsed()) return cmd_bounds(eta, pi, alphas, as_json);
        if (verify_cmd->parsed())
            return cmd_verify(suite, trials, seed, workers, eta_grid, out_csv);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, sweep_workers);
        if (audit_cmd->parsed())
            return cmd_audit(audit_csv, treatment, audit_eta_grid, trim_grid, l2, audit_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
