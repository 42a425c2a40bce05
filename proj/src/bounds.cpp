#include "overlap/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace overlap::bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

OverlapSpec::OverlapSpec(double eta_, double pi_) : eta(eta_), pi(pi_) {
    if (!(eta > 0.0 && eta <= 0.5)) fail("eta must lie in (0, 0.5]");
    if (!(pi >= eta && pi <= 1.0 - eta)) fail("pi must lie in [eta, 1-eta]");
}

LikelihoodRatioBand::LikelihoodRatioBand(double b_min_, double b_max_)
    : b_min(b_min_), b_max(b_max_) {
    if (!(b_min > 0.0 && b_min <= 1.0)) fail("b_min must lie in (0, 1]");
    if (!(b_max >= 1.0)) fail("b_max must be >= 1");
}

std::string kind_name(DivergenceKind kind, double alpha) {
    switch (kind) {
        case DivergenceKind::chi2: return "chi2";
        case DivergenceKind::kl: return "kl";
        case DivergenceKind::tv: return "tv";
        case DivergenceKind::chi_alpha: {
            std::ostringstream os;
            os << "chi_alpha(" << alpha << ")";
            return os.str();
        }
    }
    return "unknown";
}

LikelihoodRatioBand lr_band(const OverlapSpec& spec) {
    const double odds = (1.0 - spec.pi) / spec.pi;
    if (spec.eta == 0.5) return {1.0, 1.0};  // forces pi = 0.5 too
    // rounding can push the boundary cases (pi == eta or pi == 1-eta) a few
    // ulp past 1; the exact values satisfy b_min <= 1 <= b_max
    return {std::min(1.0, odds * spec.eta / (1.0 - spec.eta)),
            std::max(1.0, odds * (1.0 - spec.eta) / spec.eta)};
}

DivergenceBounds chi2_bounds(const LikelihoodRatioBand& band) {
    const double fwd = (1.0 - band.b_min) * (band.b_max - 1.0);
    const double rev = (1.0 - 1.0 / band.b_max) * (1.0 / band.b_min - 1.0);
    return {fwd, rev};
}

DivergenceBounds rukhin_f_bound(const LikelihoodRatioBand& band,
                                const std::function<double(double)>& f) {
    if (band.degenerate()) {
        const double at_one = f(1.0);
        return {at_one, at_one};
    }
    const double span = band.b_max - band.b_min;
    if (span == 0.0) fail("band with b_min == b_max != 1 has no extremal cap");
    const double fwd =
        ((band.b_max - 1.0) * f(band.b_min) + (1.0 - band.b_min) * f(band.b_max)) / span;
    // reverse direction = forward formula on the inverted band
    const double inv_min = 1.0 / band.b_max;
    const double inv_max = 1.0 / band.b_min;
    const double inv_span = inv_max - inv_min;
    const double rev = ((inv_max - 1.0) * f(inv_min) + (1.0 - inv_min) * f(inv_max)) / inv_span;
    return {fwd, rev};
}

DivergenceBounds kl_bounds(const LikelihoodRatioBand& band) {
    if (band.degenerate()) return {0.0, 0.0};
    return rukhin_f_bound(band, [](double t) { return t * std::log(t); });
}

DivergenceBounds chi_alpha_bounds(const LikelihoodRatioBand& band, double alpha) {
    if (alpha < 1.0) fail("alpha must be >= 1");
    if (band.degenerate()) return {0.0, 0.0};
    return rukhin_f_bound(
        band, [alpha](double t) { return std::pow(std::abs(t - 1.0), alpha); });
}

DivergenceBounds tv_bound(const LikelihoodRatioBand& band) {
    if (band.degenerate()) return {0.0, 0.0};
    return rukhin_f_bound(band, [](double t) { return std::abs(t - 1.0) / 2.0; });
}

double mean_discrepancy_bound(double opnorm0, double opnorm1,
                              const LikelihoodRatioBand& band) {
    if (opnorm0 < 0.0 || opnorm1 < 0.0) fail("operator norms must be nonnegative");
    const DivergenceBounds chi2 = chi2_bounds(band);
    return std::min(std::sqrt(opnorm0) * std::sqrt(chi2.forward),
                    std::sqrt(opnorm1) * std::sqrt(chi2.reverse));
}

double mean_discrepancy_bound(const MomentSummary& moments,
                              const LikelihoodRatioBand& band) {
    return mean_discrepancy_bound(moments.opnorm0, moments.opnorm1, band);
}

double mad_bound(std::size_t p, double opnorm0, double opnorm1,
                 const LikelihoodRatioBand& band) {
    if (p == 0) fail("p must be >= 1");
    return mean_discrepancy_bound(opnorm0, opnorm1, band) / std::sqrt(static_cast<double>(p));
}

double mad_bound(std::size_t p, const MomentSummary& moments,
                 const LikelihoodRatioBand& band) {
    return mad_bound(p, moments.opnorm0, moments.opnorm1, band);
}

double functional_discrepancy_bound(double var0, double var1,
                                    const LikelihoodRatioBand& band) {
    if ((std::isfinite(var0) && var0 < 0.0) || (std::isfinite(var1) && var1 < 0.0))
        fail("variances must be nonnegative");
    const DivergenceBounds chi2 = chi2_bounds(band);
    const double branch0 = std::isfinite(var0) ? std::sqrt(var0) * std::sqrt(chi2.forward) : kInf;
    const double branch1 = std::isfinite(var1) ? std::sqrt(var1) * std::sqrt(chi2.reverse) : kInf;
    return std::min(branch0, branch1);
}

double holder_discrepancy_bound(double central_moment_q, double alpha,
                                const LikelihoodRatioBand& band, int direction) {
    if (alpha <= 1.0) fail("alpha must be > 1");
    if (central_moment_q < 0.0) fail("central moment must be nonnegative");
    if (direction != 0 && direction != 1) fail("direction must be 0 or 1");
    const DivergenceBounds cap = chi_alpha_bounds(band, alpha);
    const double b = direction == 0 ? cap.forward : cap.reverse;
    return central_moment_q * std::pow(b, 1.0 / alpha);
}

double classifier_accuracy_bound(double eta) {
    if (!(eta > 0.0 && eta <= 0.5)) fail("eta must lie in (0, 0.5]");
    return 1.0 - eta;
}

TrimmingRetention trimming_retention_bound(double bayes_accuracy, double eta_tilde) {
    if (!(bayes_accuracy >= 0.5 && bayes_accuracy <= 1.0))
        fail("bayes accuracy must lie in [0.5, 1]");
    if (!(eta_tilde > 0.0 && eta_tilde <= 0.5)) fail("eta_tilde must lie in (0, 0.5]");
    const double raw = (1.0 - bayes_accuracy) / eta_tilde;
    return {raw, std::min(1.0, std::max(0.0, raw))};
}

double efficiency_bound_term(double e, double var1, double var0,
                             double tau_x, double tau_ate) {
    if (!(e >= 0.0 && e <= 1.0)) fail("propensity must lie in [0, 1]");
    if (var1 < 0.0 || var0 < 0.0) fail("variances must be nonnegative");
    const double het = (tau_x - tau_ate) * (tau_x - tau_ate);
    double treated = 0.0;
    if (var1 > 0.0) {
        if (e == 0.0) return kInf;
        treated = var1 / e;
    }
    double control = 0.0;
    if (var0 > 0.0) {
        if (e == 1.0) return kInf;
        control = var0 / (1.0 - e);
    }
    return treated + control + het;
}

}  // namespace overlap::bounds
