#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

// Closed-form bounds implied by strict overlap: a propensity score confined
// to [eta, 1-eta] pins the treated/control covariate likelihood ratio inside
// a band, and the band caps every f-divergence between the two covariate
// measures. Everything here is pure arithmetic on (eta, pi) and the band;
// no data, no sampling.

namespace overlap::bounds {

// Strict-overlap regime: propensity in [eta, 1-eta], marginal treatment
// probability pi in [eta, 1-eta]. Constructor validates.
struct OverlapSpec {
    double eta;
    double pi;

    OverlapSpec(double eta_, double pi_);
};

// Band on dP1/dP0. Always 0 < b_min <= 1 <= b_max; all equal to 1 only in
// the degenerate eta = pi = 0.5 regime.
struct LikelihoodRatioBand {
    double b_min;
    double b_max;

    LikelihoodRatioBand(double b_min_, double b_max_);

    bool degenerate() const { return b_min == 1.0 && b_max == 1.0; }
};

enum class DivergenceKind { chi2, kl, chi_alpha, tv };

std::string kind_name(DivergenceKind kind, double alpha = 2.0);

// forward bounds D(P1||P0)-style divergences (base measure P0), reverse the
// opposite direction.
struct DivergenceBounds {
    double forward;
    double reverse;
};

// b_min = ((1-pi)/pi) * (eta/(1-eta)),  b_max = ((1-pi)/pi) * ((1-eta)/eta)
LikelihoodRatioBand lr_band(const OverlapSpec& spec);

// chi^2 caps: forward (1-b_min)(b_max-1), reverse with the inverted band.
// At pi = 0.5 both reduce to 1/(eta(1-eta)) - 4.
DivergenceBounds chi2_bounds(const LikelihoodRatioBand& band);

// KL caps; at pi = 0.5 both reduce to (1-2 eta) |log(eta/(1-eta))|.
DivergenceBounds kl_bounds(const LikelihoodRatioBand& band);

// chi^alpha caps, alpha >= 1; coincides with chi2_bounds at alpha = 2.
DivergenceBounds chi_alpha_bounds(const LikelihoodRatioBand& band, double alpha);

// Extremal two-point cap for any f-divergence with f convex and minimal at 1:
//   forward = ((b_max-1) f(b_min) + (1-b_min) f(b_max)) / (b_max - b_min)
// reverse is the same formula on the inverted band. Degenerate band returns
// f(1) for both directions.
DivergenceBounds rukhin_f_bound(const LikelihoodRatioBand& band,
                                const std::function<double(double)>& f);

// Total-variation cap, the f = |t-1|/2 specialization; 1-2 eta at pi = 0.5.
DivergenceBounds tv_bound(const LikelihoodRatioBand& band);

// Group-wise moment inputs for the mean-discrepancy bounds.
struct MomentSummary {
    std::vector<double> mean0;
    std::vector<double> mean1;
    double opnorm0 = 0.0;
    double opnorm1 = 0.0;
    std::size_t dim = 0;
};

// || mu0 - mu1 || <= min{ sqrt(opnorm0 * Bchi2_fwd), sqrt(opnorm1 * Bchi2_rev) }
double mean_discrepancy_bound(double opnorm0, double opnorm1,
                              const LikelihoodRatioBand& band);
double mean_discrepancy_bound(const MomentSummary& moments,
                              const LikelihoodRatioBand& band);

// Per-covariate average |mean gap| cap: mean_discrepancy_bound / sqrt(p).
double mad_bound(std::size_t p, double opnorm0, double opnorm1,
                 const LikelihoodRatioBand& band);
double mad_bound(std::size_t p, const MomentSummary& moments,
                 const LikelihoodRatioBand& band);

// |E_P0 g - E_P1 g| <= min over branches of sqrt(var) * sqrt(chi2 cap).
// Infinite variances are legal inputs; the bound is then carried by the
// other branch, or is +inf (vacuous, not an error).
double functional_discrepancy_bound(double var0, double var1,
                                    const LikelihoodRatioBand& band);

// Hoelder variant: central q_alpha-moment times (chi^alpha cap)^(1/alpha).
// direction 0 pairs a P0-moment with the forward cap, 1 with the reverse.
double holder_discrepancy_bound(double central_moment_q, double alpha,
                                const LikelihoodRatioBand& band, int direction);

// No classifier of treated vs control covariates beats 1 - eta.
double classifier_accuracy_bound(double eta);

// Retention cap for trimming to [eta_tilde, 1-eta_tilde]:
// raw = (1 - bayes_accuracy)/eta_tilde; raw > 1 means the cap is vacuous.
struct TrimmingRetention {
    double raw;
    double clamped;
};
TrimmingRetention trimming_retention_bound(double bayes_accuracy, double eta_tilde);

// Integrand of the semiparametric efficiency bound at one covariate value:
// var1/e + var0/(1-e) + (tau_x - tau_ate)^2. Diverges (+inf) when e hits
// 0 or 1 with the matching variance positive. Population-level: no sample
// size prefactor.
double efficiency_bound_term(double e, double var1, double var0,
                             double tau_x, double tau_ate);

}  // namespace overlap::bounds
