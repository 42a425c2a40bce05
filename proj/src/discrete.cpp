#include "overlap/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace overlap::discrete {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassTol = 1e-12;
constexpr std::size_t kEnumerationCap = 1u << 16;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double check_simplex(const std::vector<double>& p, const char* name) {
    double total = 0.0;
    for (double v : p) {
        if (v < 0.0) fail(std::string(name) + " has a negative entry");
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTol)
        fail(std::string(name) + " does not sum to 1");
    return total;
}

// One term of an f-divergence sum with base mass q and ratio p/q, handling
// the measure-theoretic limits at zero.
double f_term(double q, double p, DivergenceKind kind, double alpha) {
    if (q == 0.0) {
        if (p == 0.0) return 0.0;
        switch (kind) {
            case DivergenceKind::tv: return p / 2.0;              // f(t)/t -> 1/2
            case DivergenceKind::chi_alpha:
                if (alpha == 1.0) return p;                       // f(t)/t -> 1
                return kInf;
            default: return kInf;
        }
    }
    const double t = p / q;
    switch (kind) {
        case DivergenceKind::chi2: return q * (t - 1.0) * (t - 1.0);
        case DivergenceKind::kl: return p == 0.0 ? 0.0 : q * t * std::log(t);
        case DivergenceKind::tv: return q * std::abs(t - 1.0) / 2.0;
        case DivergenceKind::chi_alpha: return q * std::pow(std::abs(t - 1.0), alpha);
    }
    return 0.0;
}

// KL(a || b) for two distributions given as parallel mass vectors.
double kl_sum(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        if (b[i] == 0.0) return kInf;
        total += a[i] * std::log(a[i] / b[i]);
    }
    return total;
}

}  // namespace

void DiscretePair::validate() const {
    const std::size_t m = support.size();
    if (m == 0) fail("support must be nonempty");
    if (p0.size() != m || p1.size() != m) fail("p0/p1 length must match support");
    if (!(pi > 0.0 && pi < 1.0)) fail("pi must lie in (0, 1)");
    check_simplex(p0, "p0");
    check_simplex(p1, "p1");
    for (std::size_t i = 0; i < m; ++i)
        if (p0[i] == 0.0 && p1[i] == 0.0)
            fail("support points with zero mass under both measures are disallowed");
    if (!coords.empty()) {
        if (coords.size() != m) fail("coords length must match support");
        const std::size_t d = coords.front().size();
        for (const auto& c : coords)
            if (c.size() != d) fail("coords must share a common dimension");
    }
}

void ProductPair::validate() const {
    if (coordinates.empty()) fail("product pair needs at least one coordinate");
    for (const auto& c : coordinates) {
        c.validate();
        if (c.pi != pi) fail("every coordinate must share the product pair's pi");
    }
}

std::vector<double> propensity(const DiscretePair& pair) {
    pair.validate();
    std::vector<double> e(pair.size());
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const double treated = pair.pi * pair.p1[i];
        const double mass = treated + (1.0 - pair.pi) * pair.p0[i];
        e[i] = treated / mass;  // mass > 0 by the no-dead-point invariant
    }
    return e;
}

OverlapExtremes overlap_extremes(const DiscretePair& pair) {
    const auto e = propensity(pair);
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    return {*lo, *hi, std::min(*lo, 1.0 - *hi)};
}

double divergence(const DiscretePair& pair, DivergenceKind kind, Direction dir,
                  double alpha) {
    pair.validate();
    if (kind == DivergenceKind::chi_alpha && alpha < 1.0) fail("alpha must be >= 1");
    const auto& base = dir == Direction::forward ? pair.p0 : pair.p1;
    const auto& top = dir == Direction::forward ? pair.p1 : pair.p0;
    double total = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const double term = f_term(base[i], top[i], kind, alpha);
        if (term == kInf) return kInf;
        total += term;
    }
    return total;
}

double bayes_accuracy(const DiscretePair& pair) {
    const auto e = propensity(pair);
    double acc = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const double mass = pair.pi * pair.p1[i] + (1.0 - pair.pi) * pair.p0[i];
        acc += std::max(e[i], 1.0 - e[i]) * mass;
    }
    return acc;
}

double overlap_mass(const DiscretePair& pair, double eta) {
    if (!(eta > 0.0 && eta <= 0.5)) fail("eta must lie in (0, 0.5]");
    const auto e = propensity(pair);
    double mass = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        if (e[i] >= eta - kMassTol && e[i] <= 1.0 - eta + kMassTol)
            mass += pair.pi * pair.p1[i] + (1.0 - pair.pi) * pair.p0[i];
    }
    return mass;
}

ChainRuleKl chain_rule_kl(const ProductPair& pair) {
    pair.validate();
    ChainRuleKl out;
    out.terms.reserve(pair.coordinates.size());
    for (const auto& coord : pair.coordinates) {
        const double term = kl_sum(coord.p1, coord.p0);
        out.terms.push_back(term);
        out.total += term;
    }
    return out;
}

ChainRuleKl chain_rule_kl(const DiscretePair& joint) {
    joint.validate();
    if (!joint.has_coords()) fail("joint chain rule needs coordinate tuples");
    const std::size_t m = joint.size();
    const std::size_t d = joint.coords.front().size();
    if (d == 0) fail("coordinate tuples must be nonempty");
    {
        std::map<std::vector<double>, int> seen;
        for (const auto& c : joint.coords)
            if (++seen[c] > 1) fail("support does not factor into distinct coordinate tuples");
    }

    ChainRuleKl out;
    out.terms.assign(d, 0.0);
    // term k = sum over prefixes x_{1:k-1} of P1(prefix) * KL over the k-th
    // coordinate's conditionals. Marginalize by grouping tuples on prefixes.
    for (std::size_t k = 0; k < d; ++k) {
        struct Cell { double p0 = 0.0, p1 = 0.0; };
        std::map<std::vector<double>, std::map<double, Cell>> groups;
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> prefix(joint.coords[i].begin(), joint.coords[i].begin() + k);
            auto& cell = groups[std::move(prefix)][joint.coords[i][k]];
            cell.p0 += joint.p0[i];
            cell.p1 += joint.p1[i];
        }
        double term = 0.0;
        for (const auto& [prefix, values] : groups) {
            double w0 = 0.0, w1 = 0.0;
            for (const auto& [v, cell] : values) {
                w0 += cell.p0;
                w1 += cell.p1;
            }
            if (w1 == 0.0) continue;  // prefix unreachable under P1
            double kl = 0.0;
            for (const auto& [v, cell] : values) {
                const double c1 = cell.p1 / w1;
                if (c1 == 0.0) continue;
                if (w0 == 0.0 || cell.p0 == 0.0) {
                    kl = kInf;
                    break;
                }
                kl += c1 * std::log(c1 / (cell.p0 / w0));
            }
            if (kl == kInf) {
                term = kInf;
                break;
            }
            term += w1 * kl;
        }
        out.terms[k] = term;
        out.total += term;
    }
    if (std::any_of(out.terms.begin(), out.terms.end(),
                    [](double t) { return t == kInf; }))
        out.total = kInf;
    return out;
}

DiscretePair extremal_pair(const LikelihoodRatioBand& band, double pi) {
    if (band.degenerate() || band.b_min >= 1.0 || band.b_max <= 1.0)
        fail("extremal pair needs b_min < 1 < b_max");
    if (!(pi > 0.0 && pi < 1.0)) fail("pi must lie in (0, 1)");
    const double span = band.b_max - band.b_min;
    DiscretePair pair;
    pair.support = {"lo", "hi"};
    pair.p0 = {(band.b_max - 1.0) / span, (1.0 - band.b_min) / span};
    pair.p1 = {band.b_min * pair.p0[0], band.b_max * pair.p0[1]};
    pair.pi = pi;
    pair.coords = {{0.0}, {1.0}};
    return pair;
}

double efficiency_bound(const DiscretePair& pair, const OutcomeMoments& moments) {
    pair.validate();
    const std::size_t m = pair.size();
    if (moments.var1.size() != m || moments.var0.size() != m || moments.tau_x.size() != m)
        fail("outcome moments must align with the support");
    const auto e = propensity(pair);
    double tau_ate = 0.0;
    std::vector<double> mass(m);
    for (std::size_t i = 0; i < m; ++i) {
        mass[i] = pair.pi * pair.p1[i] + (1.0 - pair.pi) * pair.p0[i];
        tau_ate += mass[i] * moments.tau_x[i];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (mass[i] == 0.0) continue;
        const double term = bounds::efficiency_bound_term(
            e[i], moments.var1[i], moments.var0[i], moments.tau_x[i], tau_ate);
        if (term == kInf) return kInf;
        total += mass[i] * term;
    }
    return total;
}

DiscretePair product_joint(const ProductPair& pair) {
    pair.validate();
    std::size_t m = 1;
    for (const auto& coord : pair.coordinates) {
        m *= coord.size();
        if (m > kEnumerationCap)
            fail("product support exceeds the enumeration cap (2^16 points)");
    }
    const std::size_t d = pair.coordinates.size();
    DiscretePair joint;
    joint.pi = pair.pi;
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t point = 0; point < m; ++point) {
        double q0 = 1.0, q1 = 1.0;
        std::vector<double> coord(d);
        std::string label;
        for (std::size_t k = 0; k < d; ++k) {
            const auto& c = pair.coordinates[k];
            q0 *= c.p0[idx[k]];
            q1 *= c.p1[idx[k]];
            coord[k] = c.has_coords() ? c.coords[idx[k]][0]
                                      : static_cast<double>(idx[k]);
            label += (k ? "," : "") + c.support[idx[k]];
        }
        if (q0 > 0.0 || q1 > 0.0) {
            joint.support.push_back(label);
            joint.p0.push_back(q0);
            joint.p1.push_back(q1);
            joint.coords.push_back(std::move(coord));
        }
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < pair.coordinates[k].size()) break;
            idx[k] = 0;
        }
    }
    return joint;
}

DiscretePair marginal(const DiscretePair& joint, std::size_t coordinate) {
    joint.validate();
    if (!joint.has_coords()) fail("marginal needs coordinate tuples");
    if (coordinate >= joint.coords.front().size()) fail("coordinate out of range");
    std::map<double, std::pair<double, double>> cells;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        auto& cell = cells[joint.coords[i][coordinate]];
        cell.first += joint.p0[i];
        cell.second += joint.p1[i];
    }
    DiscretePair out;
    out.pi = joint.pi;
    for (const auto& [v, cell] : cells) {
        out.support.push_back(std::to_string(v));
        out.p0.push_back(cell.first);
        out.p1.push_back(cell.second);
        out.coords.push_back({v});
    }
    return out;
}

PairMoments exact_moments(const DiscretePair& pair) {
    pair.validate();
    if (!pair.has_coords()) fail("exact moments need coordinate vectors");
    const std::size_t m = pair.size();
    const std::size_t d = pair.coords.front().size();
    PairMoments out;
    out.dim = d;
    out.mean0.assign(d, 0.0);
    out.mean1.assign(d, 0.0);
    out.cov0.assign(d * d, 0.0);
    out.cov1.assign(d * d, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            out.mean0[j] += pair.p0[i] * pair.coords[i][j];
            out.mean1[j] += pair.p1[i] * pair.coords[i][j];
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k) {
                out.cov0[j * d + k] += pair.p0[i] * (pair.coords[i][j] - out.mean0[j]) *
                                       (pair.coords[i][k] - out.mean0[k]);
                out.cov1[j * d + k] += pair.p1[i] * (pair.coords[i][j] - out.mean1[j]) *
                                       (pair.coords[i][k] - out.mean1[k]);
            }
    return out;
}

Dataset sample_dataset(const DiscretePair& pair, std::size_t n, std::uint64_t seed) {
    pair.validate();
    if (!pair.has_coords()) fail("sampling a dataset needs coordinate vectors");
    if (n == 0) fail("n must be >= 1");
    const std::size_t d = pair.coords.front().size();
    Dataset data;
    data.n = n;
    data.p = d;
    data.x.assign(n * d, 0.0);
    data.t.assign(n, 0);
    Rng rng(splitmix64(seed));
    for (std::size_t i = 0; i < n; ++i) {
        const bool treated = rng.bernoulli(pair.pi);
        data.t[i] = treated;
        const auto& mass = treated ? pair.p1 : pair.p0;
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = pair.size() - 1;
        for (std::size_t k = 0; k < pair.size(); ++k) {
            acc += mass[k];
            if (u < acc) {
                pick = k;
                break;
            }
        }
        for (std::size_t j = 0; j < d; ++j) data.x[i * d + j] = pair.coords[pick][j];
    }
    return data;
}

DiscretePair random_overlap_pair(Rng& rng, std::size_t m, double eta,
                                 bool with_coords, int coord_dim,
                                 int max_attempts) {
    if (m < 1) fail("support size must be >= 1");
    if (!(eta > 0.0 && eta <= 0.5)) fail("eta must lie in (0, 0.5]");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        DiscretePair pair;
        pair.pi = rng.uniform(eta, 1.0 - eta);
        pair.p0 = rng.simplex(m);
        pair.p1 = rng.simplex(m);
        pair.support.resize(m);
        for (std::size_t i = 0; i < m; ++i) pair.support[i] = "x" + std::to_string(i);
        if (with_coords) {
            pair.coords.resize(m);
            for (auto& c : pair.coords) {
                c.resize(coord_dim);
                for (auto& v : c) v = rng.uniform(-1.0, 1.0);
            }
        }
        if (overlap_extremes(pair).eta_star >= eta) return pair;
    }
    fail("rejection sampling failed to find a pair with eta_star >= eta");
}

}  // namespace overlap::discrete
