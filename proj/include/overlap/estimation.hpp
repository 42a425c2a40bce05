#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "overlap/bounds.hpp"
#include "overlap/dataset.hpp"

// Sample-based overlap diagnostics: fit a propensity model, read off the
// plug-in eta*, compare observed imbalance to the closed-form caps, and
// trace the trimming retention curve. All audit math consumes only fitted
// probabilities, so the logistic model is swappable behind PropensityFit.

namespace overlap::estimate {

struct PropensityFit {
    std::vector<double> coefficients;  // intercept first, then slopes
    std::vector<double> fitted;        // strictly inside (0, 1)
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    std::string diagnostic;  // nonempty when something went wrong
};

// Penalized Bernoulli likelihood, linear log-odds, damped Newton steps from
// a zero start. The l2 penalty applies to slopes only. Perfect separation
// without a penalty surfaces as converged = false plus a diagnostic.
PropensityFit fit_logistic_propensity(const Dataset& data, double l2_penalty,
                                      double tol = 1e-8, int max_iter = 500);

// Gradient and Hessian of the penalized log-likelihood at beta, accumulated
// over fixed-size row chunks in parallel and combined in chunk order, so the
// result is bitwise identical for any worker count. Exposed for the serial
// reference comparison and the kernel benchmark.
void logistic_accumulate(const Dataset& data, const std::vector<double>& beta,
                         double l2_penalty, std::vector<double>& grad,
                         std::vector<double>& hess, double* neg_loglik = nullptr);

struct EtaStarPlugin {
    double eta_star = 0.0;  // = min(eta_att, eta_atc), capped at 0.5
    double eta_att = 0.0;   // 1 - max fitted
    double eta_atc = 0.0;   // min fitted
};
EtaStarPlugin eta_star_plugin(std::span<const double> fitted);
EtaStarPlugin eta_star_plugin(const PropensityFit& fit);

struct ImbalanceReport {
    std::vector<double> abs_gaps;  // per-covariate |mean0 - mean1|
    std::vector<double> gap_se;    // se of each gap (Welch)
    double mad = 0.0;
    double euclidean_gap = 0.0;
    double opnorm0 = 0.0;  // largest eigenvalue of each sample covariance
    double opnorm1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
};
ImbalanceReport mean_imbalance(const Dataset& data);

struct TrimmingPoint {
    double eta_tilde = 0.0;
    double retained_fraction = 0.0;
    double retention_bound = 0.0;  // (1 - bayes_accuracy_hat)/eta_tilde, unclamped
};
std::vector<TrimmingPoint> trimming_analysis(std::span<const double> fitted,
                                             std::span<const double> eta_grid);

// mean of max(e, 1-e) over fitted values
double bayes_accuracy_plugin(std::span<const double> fitted);

struct ConsistencyCheck {
    std::string quantity;
    double observed = 0.0;
    double bound = 0.0;
    double slack = 0.0;  // sampling allowance added to the bound
    bool pass = false;
};

struct EtaVerdict {
    double eta = 0.0;
    bool consistent = false;
    std::vector<ConsistencyCheck> checks;
};

struct AuditConfig {
    std::vector<double> eta_grid = {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> trim_grid = {0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
    double l2_penalty = -1.0;  // < 0 means the 1e-6 * n default
    double tol = 1e-8;
    int max_iter = 500;
};

struct OverlapAudit {
    std::size_t n = 0, p = 0;
    double pi_hat = 0.0;
    EtaStarPlugin eta_hats;
    double bayes_accuracy_hat = 0.0;
    ImbalanceReport imbalance;
    std::map<double, double> mad_bound_at;  // candidate eta -> Cor.1 cap
    std::vector<TrimmingPoint> trimming_curve;
    std::vector<EtaVerdict> verdicts;
    PropensityFit fit;
};

// fit -> eta* plug-in -> imbalance -> trimming, then one consistency verdict
// per candidate eta. Inconsistency at eta is evidence that eta* < eta.
OverlapAudit audit(const Dataset& data, const AuditConfig& config = {});

}  // namespace overlap::estimate
