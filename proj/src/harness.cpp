#include "overlap/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "overlap/discrete.hpp"
#include "overlap/estimation.hpp"
#include "overlap/serialization.hpp"

namespace overlap::harness {

namespace {

using discrete::DiscretePair;
using discrete::Direction;
using bounds::DivergenceKind;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int resolve_workers(int workers) {
    return workers > 0 ? workers : omp_get_max_threads();
}

// Runs per_trial(t) for t in [0, trials) in parallel, merging rows and
// violations in trial order so the report is scheduling-independent.
template <typename Fn>
SuiteResult run_trials(int trials, int workers, Fn&& per_trial) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    std::vector<std::vector<ReportRow>> row_slots(trials);
    std::vector<std::vector<std::string>> violation_slots(trials);
    const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int t = 0; t < trials; ++t) {
        try {
            per_trial(t, row_slots[t], violation_slots[t]);
        } catch (const std::exception& e) {  // cannot leave the parallel region
            row_slots[t].push_back(
                make_row("suite", 0, std::string("exception: ") + e.what(), 1.0, 0.0, 0.0,
                         0, t));
        }
    }

    SuiteResult out;
    for (int t = 0; t < trials; ++t) {
        for (auto& row : row_slots[t]) {
            out.all_pass = out.all_pass && row.pass;
            out.rows.push_back(std::move(row));
        }
        for (auto& v : violation_slots[t]) out.violations.push_back(std::move(v));
    }
    return out;
}

void push_checked(std::vector<ReportRow>& rows, std::vector<std::string>& violations,
                  ReportRow row, const DiscretePair* instance) {
    if (!row.pass && instance) {
        nlohmann::json v;
        v["quantity"] = row.quantity;
        v["observed"] = row.observed;
        v["bound"] = row.bound;
        v["seed"] = row.seed;
        v["pair"] = io::to_json(*instance);
        violations.push_back(v.dump());
    }
    rows.push_back(std::move(row));
}

}  // namespace

ReportRow make_row(std::string scenario, std::size_t p, std::string quantity,
                   double observed, double bound, double tolerance,
                   std::uint64_t seed, int replicate) {
    ReportRow row;
    row.scenario = std::move(scenario);
    row.p = p;
    row.quantity = std::move(quantity);
    row.observed = observed;
    row.bound = bound;
    row.margin = bound - observed;
    row.tolerance = tolerance;
    row.pass = row.margin >= -tolerance;
    row.seed = seed;
    row.replicate = replicate;
    return row;
}

std::string csv_header() {
    return "scenario,p,quantity,observed,bound,margin,pass,tolerance,seed,replicate";
}

std::string to_csv(const std::vector<ReportRow>& rows) {
    std::string out = csv_header();
    out += '\n';
    for (const auto& r : rows) {
        out += r.scenario;
        out += ',';
        out += std::to_string(r.p);
        out += ',';
        out += r.quantity;
        out += ',';
        out += fmt17(r.observed);
        out += ',';
        out += fmt17(r.bound);
        out += ',';
        out += fmt17(r.margin);
        out += ',';
        out += r.pass ? '1' : '0';
        out += ',';
        out += fmt17(r.tolerance);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += std::to_string(r.replicate);
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log-log fit needs >= 2 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("log-log fit needs positive values");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LogLogFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

SuiteResult verify_rukhin(const VerifyOptions& options) {
    if (options.eta_grid.empty()) throw std::invalid_argument("eta grid must be nonempty");
    const int per_eta = options.trials;
    const int total = per_eta * static_cast<int>(options.eta_grid.size());
    const double tol = 1e-9;
    const std::vector<double> alphas = {1.5, 2.0, 3.0, 4.0};

    return run_trials(total, options.workers, [&](int t, std::vector<ReportRow>& rows,
                                                  std::vector<std::string>& violations) {
        const std::size_t eta_idx = static_cast<std::size_t>(t) / per_eta;
        const double eta = options.eta_grid[eta_idx];
        const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(t));
        Rng rng(seed);
        const std::size_t m = 2 + static_cast<std::size_t>(t % 5);
        const auto pair = discrete::random_overlap_pair(rng, m, eta);
        const auto band = bounds::lr_band({eta, pair.pi});
        const std::string scenario = "rukhin_eta" + std::to_string(eta);

        auto check = [&](const std::string& name, DivergenceKind kind, double alpha) {
            const auto caps = kind == DivergenceKind::chi2 ? bounds::chi2_bounds(band)
                              : kind == DivergenceKind::kl ? bounds::kl_bounds(band)
                              : kind == DivergenceKind::tv
                                  ? bounds::tv_bound(band)
                                  : bounds::chi_alpha_bounds(band, alpha);
            const double fwd = discrete::divergence(pair, kind, Direction::forward, alpha);
            const double rev = discrete::divergence(pair, kind, Direction::reverse, alpha);
            push_checked(rows, violations,
                         make_row(scenario, m, name + "_forward", fwd, caps.forward, tol,
                                  seed, t % per_eta),
                         &pair);
            push_checked(rows, violations,
                         make_row(scenario, m, name + "_reverse", rev, caps.reverse, tol,
                                  seed, t % per_eta),
                         &pair);
        };
        check("chi2", DivergenceKind::chi2, 2.0);
        check("kl", DivergenceKind::kl, 2.0);
        check("tv", DivergenceKind::tv, 2.0);
        for (double alpha : alphas)
            check(bounds::kind_name(DivergenceKind::chi_alpha, alpha),
                  DivergenceKind::chi_alpha, alpha);
    });
}

SuiteResult verify_chainrule(const VerifyOptions& options) {
    const double tol = 1e-9;
    return run_trials(options.trials, options.workers,
                      [&](int t, std::vector<ReportRow>& rows,
                          std::vector<std::string>& violations) {
        const std::uint64_t seed = derive_seed(options.seed ^ 0x1c5u, t);
        Rng rng(seed);
        DiscretePair joint;
        std::string scenario;
        if (t % 2 == 0) {
            // independent product, 2..4 coordinates
            const std::size_t d = 2 + static_cast<std::size_t>(t / 2 % 3);
            discrete::ProductPair prod;
            prod.pi = rng.uniform(0.2, 0.8);
            for (std::size_t k = 0; k < d; ++k) {
                DiscretePair coord;
                const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() < 0.5);
                coord.pi = prod.pi;
                coord.p0 = rng.simplex(m);
                coord.p1 = rng.simplex(m);
                for (std::size_t v = 0; v < m; ++v) {
                    coord.support.push_back(std::to_string(v));
                    coord.coords.push_back({static_cast<double>(v)});
                }
                prod.coordinates.push_back(std::move(coord));
            }
            scenario = "chainrule_product";
            joint = discrete::product_joint(prod);

            const auto chain = discrete::chain_rule_kl(prod);
            const double joint_kl =
                discrete::divergence(joint, DivergenceKind::kl, Direction::forward);
            push_checked(rows, violations,
                         make_row(scenario, d, "chain_total_gap",
                                  std::abs(chain.total - joint_kl), 0.0, tol, seed, t),
                         &joint);
            // for products the joint chain terms equal the marginal KLs
            const auto jchain = discrete::chain_rule_kl(joint);
            double worst = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                worst = std::max(worst, std::abs(jchain.terms[k] - chain.terms[k]));
            push_checked(rows, violations,
                         make_row(scenario, d, "product_term_gap", worst, 0.0, tol, seed, t),
                         &joint);
        } else {
            // dependent joint on a full 2 x m grid
            const std::size_t m = 2 + static_cast<std::size_t>(t % 3);
            joint.pi = rng.uniform(0.2, 0.8);
            joint.p0 = rng.simplex(2 * m);
            joint.p1 = rng.simplex(2 * m);
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < m; ++b) {
                    joint.support.push_back(std::to_string(a) + "," + std::to_string(b));
                    joint.coords.push_back(
                        {static_cast<double>(a), static_cast<double>(b)});
                }
            scenario = "chainrule_joint";
            const auto chain = discrete::chain_rule_kl(joint);
            const double joint_kl =
                discrete::divergence(joint, DivergenceKind::kl, Direction::forward);
            push_checked(rows, violations,
                         make_row(scenario, 2, "chain_total_gap",
                                  std::abs(chain.total - joint_kl), 0.0, tol, seed, t),
                         &joint);
        }
        // data-processing direction on every coordinate
        const double joint_kl =
            discrete::divergence(joint, DivergenceKind::kl, Direction::forward);
        const std::size_t d = joint.coords.front().size();
        for (std::size_t k = 0; k < d; ++k) {
            const auto marg = discrete::marginal(joint, k);
            const double marg_kl =
                discrete::divergence(marg, DivergenceKind::kl, Direction::forward);
            push_checked(rows, violations,
                         make_row(scenario, d, "data_processing_gap_" + std::to_string(k),
                                  marg_kl, joint_kl, tol, seed, t),
                         &joint);
        }
    });
}

SuiteResult verify_theorem1(const VerifyOptions& options) {
    const double tol = 1e-9;
    return run_trials(options.trials, options.workers,
                      [&](int t, std::vector<ReportRow>& rows,
                          std::vector<std::string>& violations) {
        const std::uint64_t seed = derive_seed(options.seed ^ 0x713u, t);
        Rng rng(seed);
        const double eta = 0.05;
        const std::size_t m = 2 + static_cast<std::size_t>(t % 5);
        const int dim = 1 + t % 3;
        const auto pair = discrete::random_overlap_pair(rng, m, eta, true, dim);
        const auto ext = discrete::overlap_extremes(pair);
        const auto band = bounds::lr_band({ext.eta_star, pair.pi});
        const auto moments = discrete::exact_moments(pair);

        const double op0 = process::operator_norm(
            process::CovarianceMatrix::dense(moments.cov0, moments.dim), 1e-13, 100000);
        const double op1 = process::operator_norm(
            process::CovarianceMatrix::dense(moments.cov1, moments.dim), 1e-13, 100000);
        double gap2 = 0.0;
        for (std::size_t j = 0; j < moments.dim; ++j) {
            const double g = moments.mean0[j] - moments.mean1[j];
            gap2 += g * g;
        }
        double mad = 0.0;
        for (std::size_t j = 0; j < moments.dim; ++j)
            mad += std::abs(moments.mean0[j] - moments.mean1[j]);
        mad /= static_cast<double>(moments.dim);

        const std::string scenario = "theorem1";
        push_checked(rows, violations,
                     make_row(scenario, moments.dim, "mean_gap_euclid", std::sqrt(gap2),
                              bounds::mean_discrepancy_bound(op0, op1, band), tol, seed, t),
                     &pair);
        push_checked(rows, violations,
                     make_row(scenario, moments.dim, "mad", mad,
                              bounds::mad_bound(moments.dim, op0, op1, band), tol, seed, t),
                     &pair);
    });
}

SuiteResult verify_trimming(const VerifyOptions& options) {
    const double tol = 1e-12;
    const std::vector<double> grid = {0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    return run_trials(options.trials, options.workers,
                      [&](int t, std::vector<ReportRow>& rows,
                          std::vector<std::string>& violations) {
        const std::uint64_t seed = derive_seed(options.seed ^ 0x721u, t);
        Rng rng(seed);
        const std::size_t n = 50 + static_cast<std::size_t>(t % 451);
        std::vector<double> fitted(n);
        switch (t % 3) {
            case 0:
                for (auto& e : fitted) e = rng.uniform(0.001, 0.999);
                break;
            case 1: {  // skewed toward the edges
                for (auto& e : fitted) {
                    const double u = rng.uniform();
                    e = std::clamp(u * u * u, 0.001, 0.999);
                }
                break;
            }
            default: {  // near-two-point mass
                const double lo = rng.uniform(0.01, 0.3);
                const double hi = rng.uniform(0.7, 0.99);
                for (auto& e : fitted) e = rng.uniform() < 0.5 ? lo : hi;
                break;
            }
        }
        const auto curve = estimate::trimming_analysis(fitted, grid);
        double prev = 2.0;
        for (const auto& pt : curve) {
            push_checked(rows, violations,
                         make_row("trimming", n, "retention_eta" + std::to_string(pt.eta_tilde),
                                  pt.retained_fraction, pt.retention_bound, tol, seed, t),
                         nullptr);
            // retained fraction is nonincreasing in eta
            push_checked(rows, violations,
                         make_row("trimming", n, "monotone_eta" + std::to_string(pt.eta_tilde),
                                  pt.retained_fraction, prev, tol, seed, t),
                         nullptr);
            prev = pt.retained_fraction;
        }
    });
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
    if (name == "rukhin") return verify_rukhin(options);
    if (name == "chainrule") return verify_chainrule(options);
    if (name == "theorem1") return verify_theorem1(options);
    if (name == "trimming") return verify_trimming(options);
    if (name == "all") {
        SuiteResult all;
        for (const char* suite : {"rukhin", "chainrule", "theorem1", "trimming"}) {
            auto part = run_suite(suite, options);
            all.all_pass = all.all_pass && part.all_pass;
            std::move(part.rows.begin(), part.rows.end(), std::back_inserter(all.rows));
            std::move(part.violations.begin(), part.violations.end(),
                      std::back_inserter(all.violations));
        }
        return all;
    }
    throw std::invalid_argument("unknown suite '" + name + "'");
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

const char* kind_tag(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::lr_budgeted: return "lr_budgeted";
        case ScenarioKind::ma1: return "ma1";
        case ScenarioKind::factor: return "factor";
        case ScenarioKind::gaussian_shift: return "gaussian_shift";
    }
    return "?";
}

// Rows for one (p, replicate) cell.
std::vector<ReportRow> sweep_cell(const SweepConfig& config, std::size_t p,
                                  int replicate) {
    const auto& sc = config.scenario;
    const std::uint64_t seed =
        derive_seed(config.seed, p * 1000003ull + static_cast<std::uint64_t>(replicate));
    std::vector<ReportRow> rows;
    const std::string id = sc.id;

    switch (sc.kind) {
        case ScenarioKind::lr_budgeted: {
            const auto family =
                process::lr_budget_allocator(config.eta, config.pi, p, sc.allocation);
            const auto band = bounds::lr_band({config.eta, config.pi});
            const auto moments = process::exact_product_moments(family);

            if (config.n == 0) {
                double gap2 = 0.0, mad = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                    const double g = family.q1[k] - family.q0[k];
                    gap2 += g * g;
                    mad += std::abs(g);
                }
                mad /= static_cast<double>(p);
                rows.push_back(make_row(id, p, "mean_gap_euclid", std::sqrt(gap2),
                                        bounds::mean_discrepancy_bound(moments, band), 1e-9,
                                        seed, replicate));
                rows.push_back(make_row(id, p, "mad", mad,
                                        bounds::mad_bound(p, moments, band), 1e-9, seed,
                                        replicate));
                // marginal KL per coordinate (independent, so conditionals
                // equal marginals); average must sit under B_KL / p
                double kl_total = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                    const double q0 = family.q0[k], q1 = family.q1[k];
                    kl_total += q1 * std::log(q1 / q0) +
                                (1.0 - q1) * std::log((1.0 - q1) / (1.0 - q0));
                }
                rows.push_back(make_row(id, p, "kl_per_coordinate_avg",
                                        kl_total / static_cast<double>(p),
                                        bounds::kl_bounds(band).forward /
                                            static_cast<double>(p),
                                        1e-9, seed, replicate));
                // interval certificate: joint log LR inside the band, and
                // the exact propensity range keeps eta_star >= eta
                const auto env = process::log_lr_envelope(family);
                const double defect =
                    std::max(env.hi - std::log(band.b_max), std::log(band.b_min) - env.lo);
                rows.push_back(make_row(id, p, "band_certificate", defect, 0.0, 1e-12,
                                        seed, replicate));
                const auto range = process::propensity_range(family, config.pi);
                rows.push_back(make_row(id, p, "eta_star_exact", config.eta,
                                        range.eta_star, 1e-12, seed, replicate));
            } else {
                const auto data = process::sample(
                    process::LrBudgetedBernoulli{config.eta, config.pi, p, sc.allocation},
                    config.n, seed);
                const auto imb = estimate::mean_imbalance(data);
                double max_se = 0.0, se2 = 0.0;
                for (double se : imb.gap_se) {
                    max_se = std::max(max_se, se);
                    se2 += se * se;
                }
                rows.push_back(make_row(id, p, "mad_sampled", imb.mad,
                                        bounds::mad_bound(p, moments, band), 4.0 * max_se,
                                        seed, replicate));
                rows.push_back(make_row(id, p, "mean_gap_euclid_sampled",
                                        imb.euclidean_gap,
                                        bounds::mean_discrepancy_bound(moments, band),
                                        4.0 * std::sqrt(se2), seed, replicate));
            }
            break;
        }
        case ScenarioKind::ma1: {
            const process::Ma1 spec{sc.theta, sc.sigma2, p};
            const auto cov = process::covariance(spec, 0);
            const double opnorm = process::operator_norm(cov, 1e-12, 4000000);
            const double cap = sc.sigma2 * (1.0 + std::abs(sc.theta)) *
                               (1.0 + std::abs(sc.theta));
            rows.push_back(make_row(id, p, "opnorm", opnorm, cap, 1e-9, seed, replicate));
            // tridiagonal Toeplitz eigenvalues are known in closed form
            const double gamma0 = sc.sigma2 * (1.0 + sc.theta * sc.theta);
            const double gamma1 = sc.sigma2 * sc.theta;
            const double analytic =
                gamma0 + 2.0 * std::abs(gamma1) *
                             std::cos(M_PI / static_cast<double>(p + 1));
            rows.push_back(make_row(id, p, "opnorm_analytic_gap",
                                    std::abs(opnorm - analytic), 0.0, 1e-8, seed,
                                    replicate));
            break;
        }
        case ScenarioKind::factor: {
            process::FactorModel spec;
            spec.loadings.assign(p, std::vector<double>(sc.rank, 0.0));
            for (std::size_t i = 0; i < p; ++i)
                spec.loadings[i][i % sc.rank] = sc.loading;
            spec.idiosyncratic.assign(p, sc.idio);
            const auto cov = process::covariance(spec, 0);
            const double opnorm = process::operator_norm(cov, 1e-12, 1000000);
            double avg_var = 0.0;
            for (std::size_t i = 0; i < p; ++i)
                avg_var += sc.loading * sc.loading + sc.idio;
            avg_var /= static_cast<double>(sc.rank);
            // restricted-rank direction: opnorm >= (1/s) sum of variances
            rows.push_back(
                make_row(id, p, "opnorm_lower", avg_var, opnorm, 1e-8, seed, replicate));
            break;
        }
        case ScenarioKind::gaussian_shift: {
            process::GaussianShift spec;
            spec.mean0.assign(p, 0.0);
            spec.mean1.assign(p, sc.gap);
            spec.variances.assign(p, sc.var);
            const auto band = bounds::lr_band({config.eta, config.pi});
            if (config.n == 0) {
                const double gap = std::abs(sc.gap) * std::sqrt(static_cast<double>(p));
                rows.push_back(make_row(id, p, "mean_gap_euclid", gap,
                                        bounds::mean_discrepancy_bound(sc.var, sc.var, band),
                                        1e-9, seed, replicate));
            } else {
                const auto data = process::sample(spec, config.n, seed, config.pi);
                const auto audit = estimate::audit(data, {});
                rows.push_back(make_row(id, p, "eta_star_hat", config.eta,
                                        audit.eta_hats.eta_star, 0.0, seed, replicate));
            }
            break;
        }
    }
    return rows;
}

}  // namespace

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig config;
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw io::ConfigError(std::string("/") + key, "missing field");
        return j.at(key);
    };
    const auto& version = need("schema_version");
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw io::ConfigError("/schema_version", "expected 1");

    const auto& sc = need("scenario");
    if (!sc.is_object()) throw io::ConfigError("/scenario", "expected an object");
    const std::string kind = sc.value("kind", "");
    if (kind == "lr_budgeted") config.scenario.kind = ScenarioKind::lr_budgeted;
    else if (kind == "ma1") config.scenario.kind = ScenarioKind::ma1;
    else if (kind == "factor") config.scenario.kind = ScenarioKind::factor;
    else if (kind == "gaussian_shift") config.scenario.kind = ScenarioKind::gaussian_shift;
    else throw io::ConfigError("/scenario/kind",
                               "expected lr_budgeted | ma1 | factor | gaussian_shift");
    config.scenario.id = sc.value("id", kind);
    if (sc.contains("allocation")) {
        const std::string a = sc.at("allocation").get<std::string>();
        if (a == "anchored") config.scenario.allocation = process::Allocation::anchored;
        else if (a == "symmetric") config.scenario.allocation = process::Allocation::symmetric;
        else throw io::ConfigError("/scenario/allocation", "expected anchored or symmetric");
    }
    config.scenario.theta = sc.value("theta", config.scenario.theta);
    config.scenario.sigma2 = sc.value("sigma2", config.scenario.sigma2);
    config.scenario.rank = sc.value("rank", config.scenario.rank);
    config.scenario.loading = sc.value("loading", config.scenario.loading);
    config.scenario.idio = sc.value("idio", config.scenario.idio);
    config.scenario.gap = sc.value("gap", config.scenario.gap);
    config.scenario.var = sc.value("var", config.scenario.var);

    const auto& grid = need("p_grid");
    if (!grid.is_array() || grid.empty())
        throw io::ConfigError("/p_grid", "expected a nonempty array");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid[i].is_number_unsigned() || grid[i].get<std::size_t>() == 0)
            throw io::ConfigError("/p_grid/" + std::to_string(i),
                                  "expected a positive integer");
        config.p_grid.push_back(grid[i].get<std::size_t>());
    }
    if (!std::is_sorted(config.p_grid.begin(), config.p_grid.end()) ||
        std::adjacent_find(config.p_grid.begin(), config.p_grid.end()) !=
            config.p_grid.end())
        throw io::ConfigError("/p_grid", "must be strictly ascending");

    config.eta = need("eta").get<double>();
    config.pi = need("pi").get<double>();
    bounds::OverlapSpec check(config.eta, config.pi);
    config.n = j.value("n", std::size_t{0});
    config.replicates = j.value("replicates", 1);
    if (config.replicates < 1) throw io::ConfigError("/replicates", "must be >= 1");
    config.seed = j.value("seed", std::uint64_t{7});
    config.workers = j.value("workers", 0);
    if (j.contains("outputs")) {
        const auto& outputs = j.at("outputs");
        config.rows_csv = outputs.value("rows_csv", "");
        config.summary_json = outputs.value("summary_json", "");
    }
    return config;
}

nlohmann::json to_json(const SweepConfig& config) {
    nlohmann::json sc{{"kind", kind_tag(config.scenario.kind)}, {"id", config.scenario.id}};
    switch (config.scenario.kind) {
        case ScenarioKind::lr_budgeted:
            sc["allocation"] = config.scenario.allocation == process::Allocation::anchored
                                   ? "anchored"
                                   : "symmetric";
            break;
        case ScenarioKind::ma1:
            sc["theta"] = config.scenario.theta;
            sc["sigma2"] = config.scenario.sigma2;
            break;
        case ScenarioKind::factor:
            sc["rank"] = config.scenario.rank;
            sc["loading"] = config.scenario.loading;
            sc["idio"] = config.scenario.idio;
            break;
        case ScenarioKind::gaussian_shift:
            sc["gap"] = config.scenario.gap;
            sc["var"] = config.scenario.var;
            break;
    }
    return nlohmann::json{{"schema_version", config.schema_version},
                          {"scenario", sc},
                          {"p_grid", config.p_grid},
                          {"eta", config.eta},
                          {"pi", config.pi},
                          {"n", config.n},
                          {"replicates", config.replicates},
                          {"seed", config.seed},
                          {"workers", config.workers},
                          {"outputs",
                           {{"rows_csv", config.rows_csv},
                            {"summary_json", config.summary_json}}}};
}

SweepResult run_sweep(const SweepConfig& config) {
    const int cells = static_cast<int>(config.p_grid.size()) * config.replicates;
    std::vector<std::vector<ReportRow>> slots(cells);
    const int threads = resolve_workers(config.workers);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int c = 0; c < cells; ++c) {
        const std::size_t p = config.p_grid[c / config.replicates];
        const int replicate = c % config.replicates;
        slots[c] = sweep_cell(config, p, replicate);
    }

    SweepResult out;
    for (auto& cell : slots)
        std::move(cell.begin(), cell.end(), std::back_inserter(out.rows));

    // per-quantity mean observed/bound at each p, then log-log slopes
    std::map<std::string, std::map<std::size_t, std::pair<std::vector<double>,
                                                          std::vector<double>>>> series;
    for (const auto& row : out.rows) {
        auto& cell = series[row.quantity][row.p];
        cell.first.push_back(row.observed);
        cell.second.push_back(row.bound);
    }
    nlohmann::json slopes = nlohmann::json::object();
    for (const auto& [quantity, by_p] : series) {
        if (by_p.size() < 2) continue;
        std::vector<double> ps, obs, bnd;
        bool positive = true;
        for (const auto& [p, cell] : by_p) {
            double o = 0.0, b = 0.0;
            for (double v : cell.first) o += v;
            for (double v : cell.second) b += v;
            o /= static_cast<double>(cell.first.size());
            b /= static_cast<double>(cell.second.size());
            positive = positive && o > 0.0 && b > 0.0;
            ps.push_back(static_cast<double>(p));
            obs.push_back(o);
            bnd.push_back(b);
        }
        if (!positive) continue;
        slopes[quantity] = {{"observed", fit_loglog(ps, obs).slope},
                            {"bound", fit_loglog(ps, bnd).slope}};
    }
    out.summary = {{"schema_version", 1},
                   {"scenario", config.scenario.id},
                   {"eta", config.eta},
                   {"pi", config.pi},
                   {"n", config.n},
                   {"seed", config.seed},
                   {"rows", out.rows.size()},
                   {"loglog_slopes", slopes}};

    if (!config.rows_csv.empty()) write_file(config.rows_csv, to_csv(out.rows));
    if (!config.summary_json.empty())
        write_file(config.summary_json, out.summary.dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

Dataset read_csv_dataset(const std::string& path, const std::string& treatment_col) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::size_t t_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == treatment_col) t_col = i;
    if (t_col == header.size())
        throw std::runtime_error("treatment column '" + treatment_col + "' not found in '" +
                                 path + "'");
    const std::size_t p = header.size() - 1;
    if (p == 0) throw std::runtime_error("no covariate columns in '" + path + "'");

    Dataset data;
    data.p = p;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        std::vector<double> covariates(p);
        std::size_t cov_idx = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= header.size())
                throw std::runtime_error("row " + std::to_string(row_no) +
                                         ": too many columns");
            double value = 0.0;
            const auto [ptr, ec] =
                std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw std::runtime_error("row " + std::to_string(row_no) + ", column '" +
                                         header[col] + "': cannot parse '" + cell + "'");
            if (col == t_col) {
                if (value != 0.0 && value != 1.0)
                    throw std::runtime_error("row " + std::to_string(row_no) + ", column '" +
                                             header[col] + "': treatment must be 0 or 1");
                data.t.push_back(static_cast<std::uint8_t>(value));
            } else {
                covariates[cov_idx++] = value;
            }
            ++col;
        }
        if (col != header.size())
            throw std::runtime_error("row " + std::to_string(row_no) + ": expected " +
                                     std::to_string(header.size()) + " columns, got " +
                                     std::to_string(col));
        data.x.insert(data.x.end(), covariates.begin(), covariates.end());
        ++data.n;
    }
    data.validate();
    return data;
}

}  // namespace overlap::harness
