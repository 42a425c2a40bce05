#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "overlap/bounds.hpp"
#include "overlap/dataset.hpp"
#include "overlap/rng.hpp"

// Exact computations on finite-support distribution pairs. This is the
// brute-force side of every inequality in overlap::bounds: enumerate the
// support, evaluate the divergence / accuracy / moment exactly, and compare
// against the closed form.

namespace overlap::discrete {

using bounds::DivergenceKind;
using bounds::LikelihoodRatioBand;

enum class Direction { forward, reverse };  // forward = D(P1 || P0), base P0

// A pair of distributions on a shared finite support plus the treatment
// fraction pi. Points may carry numeric coordinate vectors (coords) so the
// moment-based bounds can be verified exactly on discrete pairs.
struct DiscretePair {
    std::vector<std::string> support;
    std::vector<double> p0;
    std::vector<double> p1;
    double pi = 0.5;
    std::vector<std::vector<double>> coords;  // empty, or one vector per point

    std::size_t size() const { return support.size(); }
    bool has_coords() const { return !coords.empty(); }
    void validate() const;
};

// Independent product structure: one DiscretePair per coordinate, shared pi.
struct ProductPair {
    std::vector<DiscretePair> coordinates;
    double pi = 0.5;

    void validate() const;
};

// Conditional outcome moments aligned with a pair's support, for the
// efficiency-bound evaluator.
struct OutcomeMoments {
    std::vector<double> var1;
    std::vector<double> var0;
    std::vector<double> tau_x;
};

// e_i = pi p1_i / (pi p1_i + (1-pi) p0_i), per support point.
std::vector<double> propensity(const DiscretePair& pair);

struct OverlapExtremes {
    double e_min;
    double e_max;
    double eta_star;  // min(e_min, 1 - e_max)
};
OverlapExtremes overlap_extremes(const DiscretePair& pair);

// Exact f-divergence by summation over the support. forward uses base P0 and
// ratio p1/p0. Mass on p==0/q>0 contributes 0; p>0/q==0 gives +inf except
// for tv (and chi_alpha at alpha == 1) where the limit is finite.
double divergence(const DiscretePair& pair, DivergenceKind kind, Direction dir,
                  double alpha = 2.0);

// Accuracy of the Bayes classifier e >= 0.5 under the P mixture.
double bayes_accuracy(const DiscretePair& pair);

// P-mixture mass of { eta <= e(x) <= 1-eta }.
double overlap_mass(const DiscretePair& pair, double eta);

struct ChainRuleKl {
    std::vector<double> terms;  // expected conditional KL added by coordinate k
    double total = 0.0;
};

// Product form: term k is the marginal KL of coordinate k.
ChainRuleKl chain_rule_kl(const ProductPair& pair);

// Joint form: support points must carry coordinate tuples. Terms are the
// P1-expected conditional KLs; total telescopes to the joint KL.
ChainRuleKl chain_rule_kl(const DiscretePair& joint);

// Two-point pair whose likelihood ratio takes exactly {b_min, b_max}; it
// attains every Rukhin-family cap, and its propensity takes {eta, 1-eta}
// when the band comes from (eta, pi).
DiscretePair extremal_pair(const LikelihoodRatioBand& band, double pi);

// P-mixture expectation of the efficiency-bound term over the support.
double efficiency_bound(const DiscretePair& pair, const OutcomeMoments& moments);

// Enumerate the full product support (throws above 2^16 points). Points are
// labeled by coordinate tuples and carry coords.
DiscretePair product_joint(const ProductPair& pair);

// Marginal pair of one coordinate of a joint with coords.
DiscretePair marginal(const DiscretePair& joint, std::size_t coordinate);

// Uniform-simplex (p0, p1) with pi ~ U[eta, 1-eta], rejection-sampled until
// eta_star >= eta. Optional integer grid coords for moment checks.
// Deterministic given the Rng state; throws if max_attempts exhausted.
DiscretePair random_overlap_pair(Rng& rng, std::size_t m, double eta,
                                 bool with_coords = false, int coord_dim = 1,
                                 int max_attempts = 100000);

// Exact group means and covariance matrices (dense, row-major d x d) of the
// coordinate vectors; needs coords.
struct PairMoments {
    std::vector<double> mean0, mean1;
    std::vector<double> cov0, cov1;
    std::size_t dim = 0;
};
PairMoments exact_moments(const DiscretePair& pair);

// Draw (X, T) rows from the pair: T ~ Bernoulli(pi), then a support point
// from P_T; X is the point's coordinate vector. Deterministic given seed.
Dataset sample_dataset(const DiscretePair& pair, std::size_t n, std::uint64_t seed);

}  // namespace overlap::discrete
