#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "overlap/bounds.hpp"

// Expected values are frozen from exact-rational evaluation of the closed
// forms (b_min, b_max built from integer ratios), independent of the
// implementation path.

using namespace overlap::bounds;

namespace {
constexpr double kTight = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

LikelihoodRatioBand band_of(double eta, double pi) { return lr_band({eta, pi}); }
}  // namespace

TEST_CASE("lr_band closed form") {
    auto b = band_of(0.5, 0.5);
    CHECK(b.b_min == 1.0);
    CHECK(b.b_max == 1.0);

    b = band_of(0.1, 0.5);
    CHECK(b.b_min == doctest::Approx(1.0 / 9.0).epsilon(kTight));
    CHECK(b.b_max == doctest::Approx(9.0).epsilon(kTight));

    // (0.6/0.4)*(0.2/0.8) and (0.6/0.4)*(0.8/0.2)
    b = band_of(0.2, 0.4);
    CHECK(b.b_min == doctest::Approx(0.375).epsilon(kTight));
    CHECK(b.b_max == doctest::Approx(6.0).epsilon(kTight));

    CHECK_THROWS_AS(OverlapSpec(0.6, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(OverlapSpec(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(OverlapSpec(0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(OverlapSpec(0.2, 0.9), std::invalid_argument);
}

TEST_CASE("lr_band invariants on a grid") {
    for (double eta = 0.01; eta < 0.50; eta += 0.02) {
        for (double pi = eta; pi <= 1.0 - eta + 1e-15; pi += (1.0 - 2 * eta) / 7 + 1e-9) {
            const auto b = band_of(eta, std::min(pi, 1.0 - eta));
            CHECK(b.b_min <= 1.0 + kTight);
            CHECK(b.b_max >= 1.0 - kTight);
            const double odds = (1.0 - std::min(pi, 1.0 - eta)) / std::min(pi, 1.0 - eta);
            CHECK(b.b_min * b.b_max == doctest::Approx(odds * odds).epsilon(1e-12));
        }
    }
}

TEST_CASE("chi2_bounds") {
    CHECK(chi2_bounds({1.0, 1.0}).forward == 0.0);
    CHECK(chi2_bounds({1.0, 1.0}).reverse == 0.0);

    // two independent closed forms at pi = 0.5 must agree
    const auto c = chi2_bounds(band_of(0.1, 0.5));
    CHECK(c.forward == doctest::Approx(64.0 / 9.0).epsilon(kTight));
    CHECK(c.reverse == doctest::Approx(64.0 / 9.0).epsilon(kTight));
    CHECK(c.forward == doctest::Approx(1.0 / (0.1 * 0.9) - 4.0).epsilon(kTight));

    const auto a = chi2_bounds(band_of(0.2, 0.4));
    CHECK(a.forward == doctest::Approx(0.625 * 5.0).epsilon(kTight));
    CHECK(a.reverse == doctest::Approx((5.0 / 6.0) * (5.0 / 3.0)).epsilon(kTight));
}

TEST_CASE("kl_bounds dual formulas") {
    CHECK(kl_bounds({1.0, 1.0}).forward == 0.0);

    // general formula vs the pi = 0.5 simple form (1-2eta)|log(eta/(1-eta))|
    const auto quarter = kl_bounds(band_of(0.25, 0.5));
    CHECK(quarter.forward == doctest::Approx(0.5 * std::log(3.0)).epsilon(kTight));
    CHECK(quarter.reverse == doctest::Approx(0.5 * std::log(3.0)).epsilon(kTight));

    const auto tenth = kl_bounds(band_of(0.1, 0.5));
    CHECK(tenth.forward == doctest::Approx(0.8 * std::log(9.0)).epsilon(kTight));
    CHECK(tenth.reverse == doctest::Approx(0.8 * std::log(9.0)).epsilon(kTight));
}

TEST_CASE("chi_alpha_bounds") {
    const auto b = band_of(0.1, 0.5);
    const auto at2 = chi_alpha_bounds(b, 2.0);
    const auto chi2 = chi2_bounds(b);
    CHECK(at2.forward == doctest::Approx(chi2.forward).epsilon(kTight));
    CHECK(at2.reverse == doctest::Approx(chi2.reverse).epsilon(kTight));

    CHECK(chi_alpha_bounds({1.0, 1.0}, 3.0).forward == 0.0);

    // alpha = 3: (b_max-1)(1-b_min)[(1-b_min)^2 + (b_max-1)^2]/(b_max-b_min)
    // = 8*(8/9)*((8/9)^2 + 64)/(80/9) = 64*64*82/(81*80)
    const double expected = 64.0 * 64.0 * 82.0 / (81.0 * 80.0);
    CHECK(chi_alpha_bounds(b, 3.0).forward == doctest::Approx(expected).epsilon(kTight));

    CHECK_THROWS_AS(chi_alpha_bounds(b, 0.5), std::invalid_argument);
}

TEST_CASE("rukhin_f_bound specializations") {
    const auto b = band_of(0.1, 0.5);

    const auto sq = rukhin_f_bound(b, [](double t) { return (t - 1.0) * (t - 1.0); });
    CHECK(sq.forward == doctest::Approx(chi2_bounds(b).forward).epsilon(kTight));
    CHECK(sq.reverse == doctest::Approx(chi2_bounds(b).reverse).epsilon(kTight));

    const auto ent = rukhin_f_bound(b, [](double t) { return t * std::log(t); });
    CHECK(ent.forward == doctest::Approx(kl_bounds(b).forward).epsilon(kTight));

    const auto tv = rukhin_f_bound(b, [](double t) { return std::abs(t - 1.0) / 2.0; });
    CHECK(tv.forward == doctest::Approx(0.8).epsilon(kTight));
    CHECK(tv.reverse == doctest::Approx(0.8).epsilon(kTight));
    CHECK(tv_bound(b).forward == doctest::Approx(0.8).epsilon(kTight));

    const auto degen = rukhin_f_bound({1.0, 1.0}, [](double t) { return (t - 1.0) * (t - 1.0); });
    CHECK(degen.forward == 0.0);
    CHECK(degen.reverse == 0.0);
}

TEST_CASE("monotone in eta and symmetric at pi = 0.5") {
    for (double pi : {0.3, 0.5}) {
        double prev_chi2 = kInf, prev_kl = kInf, prev_chia = kInf;
        for (double eta = 0.01; eta <= std::min(pi, 1.0 - pi) + 1e-12; eta += 0.02) {
            const auto b = band_of(eta, pi);
            const auto c = chi2_bounds(b);
            const auto k = kl_bounds(b);
            const auto a = chi_alpha_bounds(b, 3.0);
            CHECK(c.forward <= prev_chi2 + kTight);
            CHECK(k.forward <= prev_kl + kTight);
            CHECK(a.forward <= prev_chia + kTight);
            if (pi == 0.5) {
                CHECK(c.forward == doctest::Approx(c.reverse).epsilon(1e-12));
                CHECK(k.forward == doctest::Approx(k.reverse).epsilon(1e-12));
            }
            prev_chi2 = c.forward;
            prev_kl = k.forward;
            prev_chia = a.forward;
        }
    }
}

TEST_CASE("mean_discrepancy_bound and mad_bound") {
    const auto b = band_of(0.1, 0.5);
    CHECK(mean_discrepancy_bound(3.0, 7.0, {1.0, 1.0}) == 0.0);
    CHECK(mean_discrepancy_bound(1.0, 1.0, b) == doctest::Approx(8.0 / 3.0).epsilon(kTight));
    // min branch exercised
    CHECK(mean_discrepancy_bound(4.0, 100.0, b) ==
          doctest::Approx(2.0 * 8.0 / 3.0).epsilon(kTight));

    CHECK(mad_bound(1, 1.0, 1.0, b) == doctest::Approx(mean_discrepancy_bound(1.0, 1.0, b)));
    CHECK(mad_bound(100, 1.0, 1.0, b) == doctest::Approx(8.0 / 30.0).epsilon(kTight));
    CHECK(mad_bound(10000, 1.0, 1.0, b) == doctest::Approx(8.0 / 300.0).epsilon(kTight));
    CHECK_THROWS_AS(mad_bound(0, 1.0, 1.0, b), std::invalid_argument);

    // mad_bound * sqrt(p) constant in p
    const double base = mad_bound(1, 2.0, 3.0, b);
    for (std::size_t p : {4u, 9u, 256u, 4096u})
        CHECK(mad_bound(p, 2.0, 3.0, b) * std::sqrt(double(p)) ==
              doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("functional_discrepancy_bound with infinite variances") {
    const auto b = band_of(0.1, 0.5);
    CHECK(functional_discrepancy_bound(0.0, 0.0, b) == 0.0);
    CHECK(functional_discrepancy_bound(kInf, 1.0, b) ==
          doctest::Approx(8.0 / 3.0).epsilon(kTight));
    CHECK(functional_discrepancy_bound(kInf, kInf, b) == kInf);
}

TEST_CASE("holder_discrepancy_bound") {
    const auto b = band_of(0.1, 0.5);
    CHECK(holder_discrepancy_bound(1.0, 2.0, b, 0) ==
          doctest::Approx(std::sqrt(64.0 / 9.0)).epsilon(kTight));
    CHECK(holder_discrepancy_bound(0.0, 3.0, b, 0) == 0.0);
    const double chi3 = 64.0 * 64.0 * 82.0 / (81.0 * 80.0);
    CHECK(holder_discrepancy_bound(1.0, 3.0, b, 0) ==
          doctest::Approx(std::cbrt(chi3)).epsilon(kTight));
    CHECK_THROWS_AS(holder_discrepancy_bound(1.0, 1.0, b, 0), std::invalid_argument);
}

TEST_CASE("classifier_accuracy_bound") {
    CHECK(classifier_accuracy_bound(0.5) == doctest::Approx(0.5));
    CHECK(classifier_accuracy_bound(0.1) == doctest::Approx(0.9));
    CHECK(classifier_accuracy_bound(0.25) == doctest::Approx(0.75));
    CHECK_THROWS_AS(classifier_accuracy_bound(0.0), std::invalid_argument);
}

TEST_CASE("trimming_retention_bound") {
    auto r = trimming_retention_bound(0.9, 0.3);
    CHECK(r.raw == doctest::Approx(1.0 / 3.0).epsilon(kTight));
    CHECK(r.clamped == doctest::Approx(1.0 / 3.0).epsilon(kTight));

    r = trimming_retention_bound(0.5, 0.5);
    CHECK(r.raw == doctest::Approx(1.0));

    r = trimming_retention_bound(1.0, 0.2);
    CHECK(r.raw == 0.0);
    CHECK(r.clamped == 0.0);

    CHECK_THROWS_AS(trimming_retention_bound(0.9, 0.6), std::invalid_argument);

    // raw * eta_tilde + accuracy = 1 is an algebraic identity
    for (double acc : {0.5, 0.7, 0.93, 1.0})
        for (double et : {0.05, 0.2, 0.5}) {
            const auto t = trimming_retention_bound(acc, et);
            CHECK(t.raw * et + acc == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("efficiency_bound_term") {
    CHECK(efficiency_bound_term(0.5, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(4.0));
    CHECK(efficiency_bound_term(0.0, 1.0, 0.0, 0.0, 0.0) == kInf);
    CHECK(efficiency_bound_term(1.0, 0.0, 1.0, 0.0, 0.0) == kInf);
    CHECK(efficiency_bound_term(0.5, 0.0, 0.0, 3.0, 1.0) == doctest::Approx(4.0));
    // zero variance on the divergent side is harmless
    CHECK(efficiency_bound_term(0.0, 0.0, 1.0, 0.0, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(efficiency_bound_term(0.5, -1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}
