#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "overlap/bounds.hpp"
#include "overlap/discrete.hpp"

using namespace overlap;
using namespace overlap::discrete;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

DiscretePair extremal_010() {
    return extremal_pair(bounds::lr_band({0.1, 0.5}), 0.5);
}
}  // namespace

TEST_CASE("propensity per point") {
    DiscretePair balanced{{"a", "b"}, {0.3, 0.7}, {0.3, 0.7}, 0.3, {}};
    for (double e : propensity(balanced)) CHECK(e == doctest::Approx(0.3).epsilon(1e-12));

    const auto e = propensity(extremal_010());
    CHECK(e[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(0.9).epsilon(1e-12));

    DiscretePair disjoint{{"a", "b"}, {1.0, 0.0}, {0.0, 1.0}, 0.5, {}};
    const auto ed = propensity(disjoint);
    CHECK(ed[0] == 0.0);
    CHECK(ed[1] == 1.0);
}

TEST_CASE("pair validation") {
    DiscretePair bad{{"a", "b"}, {0.5, 0.5}, {0.6, 0.5}, 0.5, {}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    DiscretePair dead{{"a", "b"}, {1.0, 0.0}, {1.0, 0.0}, 0.5, {}};
    CHECK_THROWS_AS(dead.validate(), std::invalid_argument);
    DiscretePair neg{{"a", "b"}, {1.5, -0.5}, {0.5, 0.5}, 0.5, {}};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("overlap_extremes") {
    const auto ext = overlap_extremes(extremal_010());
    CHECK(ext.e_min == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ext.e_max == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(ext.eta_star == doctest::Approx(0.1).epsilon(1e-12));

    DiscretePair balanced{{"a"}, {1.0}, {1.0}, 0.5, {}};
    const auto b = overlap_extremes(balanced);
    CHECK(b.eta_star == doctest::Approx(0.5));

    DiscretePair disjoint{{"a", "b"}, {1.0, 0.0}, {0.0, 1.0}, 0.5, {}};
    CHECK(overlap_extremes(disjoint).eta_star == 0.0);
}

TEST_CASE("divergence exact sums") {
    DiscretePair same{{"a", "b"}, {0.4, 0.6}, {0.4, 0.6}, 0.5, {}};
    for (auto kind : {DivergenceKind::chi2, DivergenceKind::kl, DivergenceKind::tv})
        CHECK(divergence(same, kind, Direction::forward) == doctest::Approx(0.0));

    // extremal pair attains the closed-form caps exactly
    const auto pair = extremal_010();
    CHECK(divergence(pair, DivergenceKind::kl, Direction::forward) ==
          doctest::Approx(0.1 * std::log(1.0 / 9.0) + 0.9 * std::log(9.0)).epsilon(1e-12));
    CHECK(divergence(pair, DivergenceKind::kl, Direction::forward) ==
          doctest::Approx(0.8 * std::log(9.0)).epsilon(1e-12));
    CHECK(divergence(pair, DivergenceKind::chi2, Direction::forward) ==
          doctest::Approx(0.64 / 0.9 + 0.64 / 0.1).epsilon(1e-12));

    // infinities are values, not errors
    DiscretePair half_disjoint{{"a", "b", "c"}, {0.5, 0.5, 0.0}, {0.25, 0.25, 0.5}, 0.5, {}};
    CHECK(divergence(half_disjoint, DivergenceKind::kl, Direction::forward) == kInf);
    CHECK(divergence(half_disjoint, DivergenceKind::kl, Direction::reverse) <
          kInf);  // 0 log 0 = 0
    CHECK(divergence(half_disjoint, DivergenceKind::tv, Direction::forward) <
          kInf);  // tv limit is finite
}

TEST_CASE("bayes_accuracy") {
    DiscretePair coin{{"a"}, {1.0}, {1.0}, 0.5, {}};
    CHECK(bayes_accuracy(coin) == doctest::Approx(0.5));

    CHECK(bayes_accuracy(extremal_010()) == doctest::Approx(0.9).epsilon(1e-12));

    DiscretePair disjoint{{"a", "b"}, {1.0, 0.0}, {0.0, 1.0}, 0.5, {}};
    CHECK(bayes_accuracy(disjoint) == doctest::Approx(1.0));
}

TEST_CASE("overlap_mass") {
    DiscretePair coin{{"a"}, {1.0}, {1.0}, 0.5, {}};
    CHECK(overlap_mass(coin, 0.3) == doctest::Approx(1.0));

    const auto pair = extremal_010();
    CHECK(overlap_mass(pair, 0.1) == doctest::Approx(1.0));
    CHECK(overlap_mass(pair, 0.2) == doctest::Approx(0.0));

    // extremal points at mass 0.7, balanced point (e = 0.5) at 0.3
    DiscretePair mixed{{"lo", "hi", "mid"},
                       {0.63, 0.07, 0.3},
                       {0.07, 0.63, 0.3},
                       0.5,
                       {}};
    CHECK(overlap_mass(mixed, 0.2) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("chain rule on products") {
    DiscretePair coord{{"0", "1"}, {0.6, 0.4}, {0.5, 0.5}, 0.5, {{0.0}, {1.0}}};
    ProductPair prod{{coord, coord}, 0.5};

    const auto chain = chain_rule_kl(prod);
    const double single = 0.5 * std::log(0.5 / 0.4) + 0.5 * std::log(0.5 / 0.6);
    CHECK(single == doctest::Approx(0.020410997260127).epsilon(1e-12));
    CHECK(chain.terms[0] == doctest::Approx(single).epsilon(1e-12));
    CHECK(chain.terms[1] == doctest::Approx(single).epsilon(1e-12));
    CHECK(chain.total == doctest::Approx(2 * single).epsilon(1e-12));

    // enumerating the 4-point joint must agree
    const auto joint = product_joint(prod);
    CHECK(joint.size() == 4);
    CHECK(divergence(joint, DivergenceKind::kl, Direction::forward) ==
          doctest::Approx(chain.total).epsilon(1e-9));
    const auto jchain = chain_rule_kl(joint);
    CHECK(jchain.total == doctest::Approx(chain.total).epsilon(1e-9));

    DiscretePair same{{"0", "1"}, {0.5, 0.5}, {0.5, 0.5}, 0.5, {{0.0}, {1.0}}};
    const auto zero = chain_rule_kl(ProductPair{{same, same, same}, 0.5});
    for (double t : zero.terms) CHECK(t == doctest::Approx(0.0));
}

TEST_CASE("chain rule on a dependent joint") {
    // 2-coordinate dependent table: conditionals differ from marginals but
    // the terms still telescope to the joint KL.
    DiscretePair joint;
    joint.support = {"00", "01", "10", "11"};
    joint.coords = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    joint.p0 = {0.40, 0.10, 0.10, 0.40};
    joint.p1 = {0.25, 0.25, 0.30, 0.20};
    joint.pi = 0.5;

    const auto chain = chain_rule_kl(joint);
    const double joint_kl = divergence(joint, DivergenceKind::kl, Direction::forward);
    CHECK(chain.total == doctest::Approx(joint_kl).epsilon(1e-9));

    // term 1 differs from the marginal KL of coordinate 1 (dependence)
    const auto marg1 = marginal(joint, 1);
    const double marg1_kl = divergence(marg1, DivergenceKind::kl, Direction::forward);
    CHECK(std::abs(chain.terms[1] - marg1_kl) > 1e-6);

    // data-processing: marginal KL of each coordinate <= joint KL
    for (std::size_t k : {0u, 1u}) {
        const auto m = marginal(joint, k);
        CHECK(divergence(m, DivergenceKind::kl, Direction::forward) <= joint_kl + 1e-9);
    }
}

TEST_CASE("extremal_pair construction") {
    const auto pair = extremal_010();
    CHECK(pair.p0[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(pair.p0[1] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pair.p1[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pair.p1[1] == doctest::Approx(0.9).epsilon(1e-12));

    const auto quarter = extremal_pair(bounds::lr_band({0.25, 0.5}), 0.5);
    CHECK(quarter.p0[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(quarter.p1[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(overlap_extremes(quarter).eta_star == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(overlap_extremes(pair).eta_star == doctest::Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(extremal_pair({1.0, 1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("extremal_pair attains every Rukhin cap") {
    for (double eta : {0.05, 0.1, 0.25})
        for (double pi : {0.35, 0.5, 0.6}) {
            const auto band = bounds::lr_band({eta, pi});
            const auto pair = extremal_pair(band, pi);
            CHECK(divergence(pair, DivergenceKind::chi2, Direction::forward) ==
                  doctest::Approx(bounds::chi2_bounds(band).forward).epsilon(1e-9));
            CHECK(divergence(pair, DivergenceKind::chi2, Direction::reverse) ==
                  doctest::Approx(bounds::chi2_bounds(band).reverse).epsilon(1e-9));
            CHECK(divergence(pair, DivergenceKind::kl, Direction::forward) ==
                  doctest::Approx(bounds::kl_bounds(band).forward).epsilon(1e-9));
            CHECK(divergence(pair, DivergenceKind::tv, Direction::forward) ==
                  doctest::Approx(bounds::tv_bound(band).forward).epsilon(1e-9));
        }
}

TEST_CASE("efficiency_bound") {
    DiscretePair single{{"a"}, {1.0}, {1.0}, 0.5, {}};
    OutcomeMoments m{{1.0}, {1.0}, {2.0}};
    CHECK(efficiency_bound(single, m) == doctest::Approx(4.0));

    DiscretePair disjoint{{"a", "b"}, {1.0, 0.0}, {0.0, 1.0}, 0.5, {}};
    OutcomeMoments md{{1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0}};
    CHECK(efficiency_bound(disjoint, md) == kInf);

    const auto pair = extremal_010();
    OutcomeMoments me{{1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0}};
    CHECK(efficiency_bound(pair, me) ==
          doctest::Approx(0.5 * (1 / 0.1 + 1 / 0.9) + 0.5 * (1 / 0.9 + 1 / 0.1))
              .epsilon(1e-12));

    OutcomeMoments bad{{1.0}, {1.0}, {0.0}};
    CHECK_THROWS_AS(efficiency_bound(pair, bad), std::invalid_argument);
}

TEST_CASE("random_overlap_pair respects the eta floor") {
    Rng rng(20240901);
    for (double eta : {0.05, 0.25}) {
        for (int i = 0; i < 50; ++i) {
            const auto pair = random_overlap_pair(rng, 2 + (i % 3), eta);
            const auto ext = overlap_extremes(pair);
            CHECK(ext.eta_star >= eta);
            CHECK(pair.pi >= eta);
            CHECK(pair.pi <= 1.0 - eta);
        }
    }
}

TEST_CASE("random pairs never violate the Rukhin caps (property)") {
    Rng rng(7);
    const double eta = 0.1;
    for (int i = 0; i < 200; ++i) {
        const auto pair = random_overlap_pair(rng, 2 + (i % 4), eta);
        const auto band = bounds::lr_band({eta, pair.pi});
        const auto chi2 = bounds::chi2_bounds(band);
        const auto kl = bounds::kl_bounds(band);
        CHECK(divergence(pair, DivergenceKind::chi2, Direction::forward) <=
              chi2.forward + 1e-9);
        CHECK(divergence(pair, DivergenceKind::chi2, Direction::reverse) <=
              chi2.reverse + 1e-9);
        CHECK(divergence(pair, DivergenceKind::kl, Direction::forward) <= kl.forward + 1e-9);
        CHECK(divergence(pair, DivergenceKind::kl, Direction::reverse) <= kl.reverse + 1e-9);

        // Prop. 1 with the pair's own exact eta_star
        const auto ext = overlap_extremes(pair);
        CHECK(bayes_accuracy(pair) <= 1.0 - ext.eta_star + 1e-12);
    }
}

TEST_CASE("trimming proposition on discrete pairs") {
    Rng rng(99);
    for (int i = 0; i < 100; ++i) {
        const auto pair = random_overlap_pair(rng, 3, 0.05);
        const double acc = bayes_accuracy(pair);
        for (double et : {0.05, 0.1, 0.2, 0.3, 0.5})
            CHECK(overlap_mass(pair, et) <= (1.0 - acc) / et + 1e-12);
    }
}
