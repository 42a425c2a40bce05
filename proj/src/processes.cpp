#include "overlap/processes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "overlap/rng.hpp"

namespace overlap::process {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_prob_open(double q, const char* what) {
    if (!(q > 0.0 && q < 1.0)) fail(std::string(what) + " must lie in (0, 1)");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

void IndependentBernoulli::validate() const {
    if (q0.empty() || q0.size() != q1.size())
        fail("independent family needs matching nonempty q0/q1");
    for (double q : q0) check_prob_open(q, "q0");
    for (double q : q1) check_prob_open(q, "q1");
}

void GaussianShift::validate() const {
    if (mean0.empty() || mean0.size() != mean1.size() || mean0.size() != variances.size())
        fail("gaussian shift needs matching nonempty mean/variance vectors");
    for (double v : variances)
        if (!(v > 0.0)) fail("gaussian variances must be positive");
}

void Ma1::validate() const {
    if (!(theta > -1.0 && theta < 1.0)) fail("ma1 theta must lie in (-1, 1)");
    if (!(sigma2 > 0.0)) fail("ma1 sigma2 must be positive");
    if (p == 0) fail("ma1 needs p >= 1");
}

void FactorModel::validate() const {
    if (loadings.empty()) fail("factor model needs at least one row of loadings");
    const std::size_t s = loadings.front().size();
    if (s == 0) fail("factor rank must be >= 1");
    if (s > loadings.size()) fail("factor rank must not exceed the dimension");
    for (const auto& row : loadings)
        if (row.size() != s) fail("loading rows must share the rank");
    if (idiosyncratic.size() != loadings.size())
        fail("idiosyncratic variances must match the dimension");
    for (double v : idiosyncratic)
        if (v < 0.0) fail("idiosyncratic variances must be nonnegative");
}

void BalancingScenario::validate() const {
    if (p == 0) fail("balancing scenario needs p >= 1");
    if (const auto* sparse = std::get_if<SparseScore>(&score)) {
        if (sparse->s > p) fail("sparse score uses more coordinates than p");
        if (sparse->s > 16) fail("sparse score support too large to enumerate");
        if (sparse->e_table.size() != (std::size_t{1} << sparse->s))
            fail("sparse e_table must have 2^s entries");
        for (double e : sparse->e_table) check_prob_open(e, "e_table entry");
        check_prob_open(sparse->q, "sparse base probability");
    } else {
        const auto& latent = std::get<LatentClassScore>(score);
        const std::size_t k = latent.prior.size();
        if (k < 2) fail("latent class score needs K >= 2");
        if (latent.e_u.size() != k || latent.class_probs.size() != k)
            fail("latent class fields must share K");
        double total = 0.0;
        for (double w : latent.prior) {
            if (w < 0.0) fail("latent prior weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) fail("latent prior must sum to 1");
        for (double e : latent.e_u) check_prob_open(e, "e_u entry");
        for (const auto& row : latent.class_probs) {
            if (row.size() != p) fail("class_probs rows must have length p");
            for (double q : row) check_prob_open(q, "class probability");
        }
    }
}

std::size_t dimension(const ProcessSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndependentBernoulli>) return s.dim();
            else if constexpr (std::is_same_v<T, LrBudgetedBernoulli>) return s.p;
            else if constexpr (std::is_same_v<T, GaussianShift>) return s.dim();
            else if constexpr (std::is_same_v<T, Ma1>) return s.p;
            else if constexpr (std::is_same_v<T, FactorModel>) return s.dim();
            else return s.p;
        },
        spec);
}

void validate(const ProcessSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LrBudgetedBernoulli>) {
                bounds::OverlapSpec check(s.eta, s.pi);
                if (s.p == 0) fail("lr_budgeted needs p >= 1");
            } else {
                s.validate();
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// CovarianceMatrix
// ---------------------------------------------------------------------------

CovarianceMatrix CovarianceMatrix::dense(std::vector<double> a, std::size_t p) {
    if (a.size() != p * p) fail("dense storage must be p*p");
    CovarianceMatrix s;
    s.layout_ = Layout::dense;
    s.p_ = p;
    s.dense_ = std::move(a);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (std::abs(s.dense_[i * p + j] - s.dense_[j * p + i]) > 1e-12)
                fail("dense covariance must be symmetric");
    return s;
}

CovarianceMatrix CovarianceMatrix::diagonal(std::vector<double> d) {
    CovarianceMatrix s;
    s.layout_ = Layout::diagonal;
    s.p_ = d.size();
    s.diag_ = std::move(d);
    return s;
}

CovarianceMatrix CovarianceMatrix::tridiagonal(std::size_t p, double diag, double off) {
    if (p == 0) fail("tridiagonal needs p >= 1");
    CovarianceMatrix s;
    s.layout_ = Layout::tridiagonal;
    s.p_ = p;
    s.tri_diag_ = diag;
    s.tri_off_ = off;
    return s;
}

CovarianceMatrix CovarianceMatrix::low_rank(std::vector<std::vector<double>> loadings,
                                            std::vector<double> idio) {
    if (loadings.empty() || loadings.size() != idio.size())
        fail("low-rank storage needs matching loadings/idiosyncratic sizes");
    CovarianceMatrix s;
    s.layout_ = Layout::low_rank;
    s.p_ = loadings.size();
    s.loadings_ = std::move(loadings);
    s.diag_ = std::move(idio);
    return s;
}

void CovarianceMatrix::matvec(const double* x, double* y) const {
    const std::size_t p = p_;
    switch (layout_) {
        case Layout::dense: {
            // rows independent: bitwise reproducible for any thread count
            const double* a = dense_.data();
#pragma omp parallel for schedule(static)
            for (long long i = 0; i < static_cast<long long>(p); ++i) {
                const double* row = a + static_cast<std::size_t>(i) * p;
                double acc = 0.0;
                for (std::size_t j = 0; j < p; ++j) acc += row[j] * x[j];
                y[i] = acc;
            }
            break;
        }
        case Layout::diagonal:
            for (std::size_t i = 0; i < p; ++i) y[i] = diag_[i] * x[i];
            break;
        case Layout::tridiagonal:
            for (std::size_t i = 0; i < p; ++i) {
                double acc = tri_diag_ * x[i];
                if (i > 0) acc += tri_off_ * x[i - 1];
                if (i + 1 < p) acc += tri_off_ * x[i + 1];
                y[i] = acc;
            }
            break;
        case Layout::low_rank: {
            const std::size_t s = loadings_.front().size();
            std::vector<double> proj(s, 0.0);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t r = 0; r < s; ++r) proj[r] += loadings_[i][r] * x[i];
            for (std::size_t i = 0; i < p; ++i) {
                double acc = diag_[i] * x[i];
                for (std::size_t r = 0; r < s; ++r) acc += loadings_[i][r] * proj[r];
                y[i] = acc;
            }
            break;
        }
    }
}

std::vector<double> CovarianceMatrix::to_dense() const {
    std::vector<double> a(p_ * p_, 0.0);
    switch (layout_) {
        case Layout::dense: return dense_;
        case Layout::diagonal:
            for (std::size_t i = 0; i < p_; ++i) a[i * p_ + i] = diag_[i];
            break;
        case Layout::tridiagonal:
            for (std::size_t i = 0; i < p_; ++i) {
                a[i * p_ + i] = tri_diag_;
                if (i + 1 < p_) {
                    a[i * p_ + i + 1] = tri_off_;
                    a[(i + 1) * p_ + i] = tri_off_;
                }
            }
            break;
        case Layout::low_rank: {
            const std::size_t s = loadings_.front().size();
            for (std::size_t i = 0; i < p_; ++i)
                for (std::size_t j = 0; j < p_; ++j) {
                    double acc = i == j ? diag_[i] : 0.0;
                    for (std::size_t r = 0; r < s; ++r)
                        acc += loadings_[i][r] * loadings_[j][r];
                    a[i * p_ + j] = acc;
                }
            break;
        }
    }
    return a;
}

double CovarianceMatrix::entry(std::size_t i, std::size_t j) const {
    switch (layout_) {
        case Layout::dense: return dense_[i * p_ + j];
        case Layout::diagonal: return i == j ? diag_[i] : 0.0;
        case Layout::tridiagonal:
            if (i == j) return tri_diag_;
            return (i + 1 == j || j + 1 == i) ? tri_off_ : 0.0;
        case Layout::low_rank: {
            double acc = i == j ? diag_[i] : 0.0;
            for (std::size_t r = 0; r < loadings_.front().size(); ++r)
                acc += loadings_[i][r] * loadings_[j][r];
            return acc;
        }
    }
    return 0.0;
}

double CovarianceMatrix::symmetry_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = i + 1; j < p_; ++j)
            worst = std::max(worst, std::abs(entry(i, j) - entry(j, i)));
    return worst;
}

CovarianceMatrix covariance(const ProcessSpec& spec, int group) {
    if (group != 0 && group != 1) fail("group must be 0 or 1");
    validate(spec);
    return std::visit(
        [group](const auto& s) -> CovarianceMatrix {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndependentBernoulli>) {
                const auto& q = group == 0 ? s.q0 : s.q1;
                std::vector<double> v(q.size());
                for (std::size_t k = 0; k < q.size(); ++k) v[k] = q[k] * (1.0 - q[k]);
                return CovarianceMatrix::diagonal(std::move(v));
            } else if constexpr (std::is_same_v<T, LrBudgetedBernoulli>) {
                return covariance(ProcessSpec{resolve_bernoulli(s)}, group);
            } else if constexpr (std::is_same_v<T, GaussianShift>) {
                return CovarianceMatrix::diagonal(s.variances);
            } else if constexpr (std::is_same_v<T, Ma1>) {
                // MA(1) autocovariances: gamma0 = sigma2 (1 + theta^2),
                // gamma1 = sigma2 theta
                return CovarianceMatrix::tridiagonal(
                    s.p, s.sigma2 * (1.0 + s.theta * s.theta), s.sigma2 * s.theta);
            } else if constexpr (std::is_same_v<T, FactorModel>) {
                return CovarianceMatrix::low_rank(s.loadings, s.idiosyncratic);
            } else {
                fail("balancing scenarios have no analytic covariance");
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

PowerIterationResult power_iteration(const CovarianceMatrix& s, double tol,
                                     int max_iter, std::uint64_t seed) {
    const std::size_t p = s.dim();
    if (p == 0) fail("empty matrix");
    if (!(tol > 0.0)) fail("tolerance must be positive");
    Rng rng(splitmix64(seed));
    std::vector<double> v(p), w(p);
    for (auto& vi : v) vi = rng.uniform(-1.0, 1.0);
    double nv = norm2(v);
    if (nv == 0.0) v[0] = 1.0, nv = 1.0;
    for (auto& vi : v) vi /= nv;

    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    PowerIterationResult out;
    for (int it = 1; it <= max_iter; ++it) {
        s.matvec(v.data(), w.data());
        const double lambda = dot(v, w);
        out.value = lambda;
        out.iterations = it;
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::max(1.0, std::abs(lambda))) {
            out.converged = true;
            return out;
        }
        lambda_prev = lambda;
        const double nw = norm2(w);
        if (nw == 0.0) {  // v in the null space; for PSD input that means lambda = 0
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        for (std::size_t i = 0; i < p; ++i) w[i] /= nw;
        if (dot(w, v) < 0.0) {
            // oscillation (tied +/- extremes); average the iterates
            for (std::size_t i = 0; i < p; ++i) w[i] = v[i] + w[i];
            const double na = norm2(w);
            if (na > 1e-12)
                for (std::size_t i = 0; i < p; ++i) w[i] /= na;
            else
                continue;  // keep previous v
        }
        v.swap(w);
    }
    return out;  // converged stays false; value holds the last iterate
}

double operator_norm(const CovarianceMatrix& s, double tol, int max_iter) {
    return power_iteration(s, tol, max_iter).value;
}

double min_eigenvalue_estimate(const CovarianceMatrix& s, double tol, int max_iter) {
    const std::size_t p = s.dim();
    auto a = s.to_dense();
    double shift = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p; ++j) row += std::abs(a[i * p + j]);
        shift = std::max(shift, row);
    }
    // lambda_min(S) = shift - lambda_max(shift I - S)
    std::vector<double> flipped(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            flipped[i * p + j] = (i == j ? shift : 0.0) - a[i * p + j];
    const auto top = power_iteration(CovarianceMatrix::dense(std::move(flipped), p),
                                     tol, max_iter);
    return shift - top.value;
}

// ---------------------------------------------------------------------------
// Budgeted families and product moments
// ---------------------------------------------------------------------------

IndependentBernoulli lr_budget_allocator(double eta, double pi, std::size_t p,
                                         Allocation allocation) {
    bounds::OverlapSpec spec(eta, pi);
    if (p == 0) fail("p must be >= 1");
    const auto band = bounds::lr_band(spec);
    const double budget =
        std::min(std::log(band.b_max), -std::log(band.b_min));  // >= 0
    const double beta = budget / static_cast<double>(p);

    IndependentBernoulli out;
    out.q0.assign(p, 0.0);
    out.q1.assign(p, 0.0);
    if (allocation == Allocation::anchored) {
        // q0 pinned at eta keeps the control variance flat in p; the x = 1
        // side uses the whole per-coordinate budget, the x = 0 side stays
        // inside it (eta <= 1/(e^beta + 1) holds for every valid spec).
        const double q1 = eta * std::exp(beta);
        std::fill(out.q0.begin(), out.q0.end(), eta);
        std::fill(out.q1.begin(), out.q1.end(), q1);
    } else {
        const double d = 0.5 * std::tanh(beta / 2.0);
        std::fill(out.q0.begin(), out.q0.end(), 0.5 - d);
        std::fill(out.q1.begin(), out.q1.end(), 0.5 + d);
    }
    out.validate();
    return out;
}

IndependentBernoulli resolve_bernoulli(const LrBudgetedBernoulli& spec) {
    return lr_budget_allocator(spec.eta, spec.pi, spec.p, spec.allocation);
}

MomentSummary exact_product_moments(const IndependentBernoulli& spec) {
    spec.validate();
    MomentSummary m;
    m.dim = spec.dim();
    m.mean0 = spec.q0;
    m.mean1 = spec.q1;
    for (std::size_t k = 0; k < m.dim; ++k) {
        m.opnorm0 = std::max(m.opnorm0, spec.q0[k] * (1.0 - spec.q0[k]));
        m.opnorm1 = std::max(m.opnorm1, spec.q1[k] * (1.0 - spec.q1[k]));
    }
    return m;
}

MomentSummary exact_product_moments(const LrBudgetedBernoulli& spec) {
    return exact_product_moments(resolve_bernoulli(spec));
}

LogLrEnvelope log_lr_envelope(const IndependentBernoulli& spec) {
    spec.validate();
    LogLrEnvelope env;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        const double one = std::log(spec.q1[k] / spec.q0[k]);
        const double zero = std::log((1.0 - spec.q1[k]) / (1.0 - spec.q0[k]));
        env.lo += std::min(one, zero);
        env.hi += std::max(one, zero);
    }
    return env;
}

PropensityRange propensity_range(const IndependentBernoulli& spec, double pi) {
    check_prob_open(pi, "pi");
    const auto env = log_lr_envelope(spec);
    PropensityRange out;
    out.e_min = sigmoid(logit(pi) + env.lo);
    out.e_max = sigmoid(logit(pi) + env.hi);
    out.eta_star = std::min(out.e_min, 1.0 - out.e_max);
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

std::size_t draw_categorical(Rng& rng, const std::vector<double>& weights) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace

Dataset sample(const ProcessSpec& spec, std::size_t n, std::uint64_t seed, double pi) {
    if (n == 0) fail("n must be >= 1");
    validate(spec);
    const std::size_t p = dimension(spec);
    Dataset data;
    data.n = n;
    data.p = p;
    data.x.assign(n * p, 0.0);
    data.t.assign(n, 0);
    Rng rng(splitmix64(seed));

    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndependentBernoulli>) {
                check_prob_open(pi, "pi");
                for (std::size_t i = 0; i < n; ++i) {
                    const bool treated = rng.bernoulli(pi);
                    data.t[i] = treated;
                    const auto& q = treated ? s.q1 : s.q0;
                    for (std::size_t k = 0; k < p; ++k)
                        data.at(i, k) = rng.bernoulli(q[k]) ? 1.0 : 0.0;
                }
            } else if constexpr (std::is_same_v<T, LrBudgetedBernoulli>) {
                const auto resolved = resolve_bernoulli(s);
                for (std::size_t i = 0; i < n; ++i) {
                    const bool treated = rng.bernoulli(s.pi);
                    data.t[i] = treated;
                    const auto& q = treated ? resolved.q1 : resolved.q0;
                    for (std::size_t k = 0; k < p; ++k)
                        data.at(i, k) = rng.bernoulli(q[k]) ? 1.0 : 0.0;
                }
            } else if constexpr (std::is_same_v<T, GaussianShift>) {
                check_prob_open(pi, "pi");
                for (std::size_t i = 0; i < n; ++i) {
                    const bool treated = rng.bernoulli(pi);
                    data.t[i] = treated;
                    const auto& mean = treated ? s.mean1 : s.mean0;
                    for (std::size_t k = 0; k < p; ++k)
                        data.at(i, k) = mean[k] + std::sqrt(s.variances[k]) * rng.normal();
                }
            } else if constexpr (std::is_same_v<T, Ma1>) {
                check_prob_open(pi, "pi");
                const double sd = std::sqrt(s.sigma2);
                for (std::size_t i = 0; i < n; ++i) {
                    data.t[i] = rng.bernoulli(pi);
                    double prev = sd * rng.normal();
                    for (std::size_t k = 0; k < p; ++k) {
                        const double eps = sd * rng.normal();
                        data.at(i, k) = eps + s.theta * prev;
                        prev = eps;
                    }
                }
            } else if constexpr (std::is_same_v<T, FactorModel>) {
                check_prob_open(pi, "pi");
                const std::size_t r = s.rank();
                std::vector<double> f(r);
                for (std::size_t i = 0; i < n; ++i) {
                    data.t[i] = rng.bernoulli(pi);
                    for (auto& fr : f) fr = rng.normal();
                    for (std::size_t k = 0; k < p; ++k) {
                        double v = std::sqrt(s.idiosyncratic[k]) * rng.normal();
                        for (std::size_t q = 0; q < r; ++q) v += s.loadings[k][q] * f[q];
                        data.at(i, k) = v;
                    }
                }
            } else {  // BalancingScenario: score first, then T | score, then X
                if (const auto* sparse = std::get_if<SparseScore>(&s.score)) {
                    for (std::size_t i = 0; i < n; ++i) {
                        std::size_t idx = 0;
                        for (std::size_t k = 0; k < sparse->s; ++k) {
                            const bool bit = rng.bernoulli(sparse->q);
                            data.at(i, k) = bit ? 1.0 : 0.0;
                            idx |= static_cast<std::size_t>(bit) << k;
                        }
                        data.t[i] = rng.bernoulli(sparse->e_table[idx]);
                        for (std::size_t k = sparse->s; k < p; ++k)
                            data.at(i, k) = rng.bernoulli(sparse->q) ? 1.0 : 0.0;
                    }
                } else {
                    const auto& latent = std::get<LatentClassScore>(s.score);
                    for (std::size_t i = 0; i < n; ++i) {
                        const std::size_t u = draw_categorical(rng, latent.prior);
                        data.t[i] = rng.bernoulli(latent.e_u[u]);
                        for (std::size_t k = 0; k < p; ++k)
                            data.at(i, k) = rng.bernoulli(latent.class_probs[u][k]) ? 1.0 : 0.0;
                    }
                }
            }
        },
        spec);
    return data;
}

// ---------------------------------------------------------------------------
// Balancing-score overlap
// ---------------------------------------------------------------------------

BalancingOverlapReport balancing_overlap_check(const BalancingScenario& scenario) {
    scenario.validate();
    BalancingOverlapReport out;

    if (const auto* sparse = std::get_if<SparseScore>(&scenario.score)) {
        // every score state has positive probability, and e(x) depends on
        // x only through the score bits, so the joint range equals the
        // table range no matter how large p is
        double e_min = 1.0, e_max = 0.0;
        for (double e : sparse->e_table) {
            e_min = std::min(e_min, e);
            e_max = std::max(e_max, e);
        }
        out.eta_star_score = std::min(e_min, 1.0 - e_max);
        out.eta_star_joint = out.eta_star_score;
    } else {
        const auto& latent = std::get<LatentClassScore>(scenario.score);
        const std::size_t k = latent.prior.size();
        double score_min = 1.0, score_max = 0.0;
        for (std::size_t u = 0; u < k; ++u) {
            if (latent.prior[u] == 0.0) continue;
            score_min = std::min(score_min, latent.e_u[u]);
            score_max = std::max(score_max, latent.e_u[u]);
        }
        out.eta_star_score = std::min(score_min, 1.0 - score_max);

        const std::size_t p = scenario.p;
        if (k == 2) {
            // posterior odds of class 0 vs 1 extremized coordinate-wise
            double lo = std::log(latent.prior[0] / latent.prior[1]);
            double hi = lo;
            for (std::size_t j = 0; j < p; ++j) {
                const double a = latent.class_probs[0][j], b = latent.class_probs[1][j];
                const double one = std::log(a / b);
                const double zero = std::log((1.0 - a) / (1.0 - b));
                lo += std::min(one, zero);
                hi += std::max(one, zero);
            }
            const double w_lo = sigmoid(lo), w_hi = sigmoid(hi);
            const double e0 = latent.e_u[0], e1 = latent.e_u[1];
            const double at_lo = w_lo * e0 + (1.0 - w_lo) * e1;
            const double at_hi = w_hi * e0 + (1.0 - w_hi) * e1;
            const double e_min = std::min(at_lo, at_hi);
            const double e_max = std::max(at_lo, at_hi);
            out.eta_star_joint = std::min(e_min, 1.0 - e_max);
        } else {
            if (p > 16) fail("latent-class joint with K > 2 and p > 16 is not enumerable");
            double e_min = 1.0, e_max = 0.0;
            for (std::size_t x = 0; x < (std::size_t{1} << p); ++x) {
                double mass = 0.0, treated = 0.0;
                for (std::size_t u = 0; u < k; ++u) {
                    double w = latent.prior[u];
                    for (std::size_t j = 0; j < p; ++j) {
                        const double q = latent.class_probs[u][j];
                        w *= (x >> j) & 1 ? q : 1.0 - q;
                    }
                    mass += w;
                    treated += w * latent.e_u[u];
                }
                if (mass == 0.0) continue;
                const double e = treated / mass;
                e_min = std::min(e_min, e);
                e_max = std::max(e_max, e);
            }
            out.eta_star_joint = std::min(e_min, 1.0 - e_max);
        }
    }

    if (out.eta_star_joint < out.eta_star_score - 1e-12)
        throw std::logic_error("balancing overlap lost on the joint scale");
    return out;
}

}  // namespace overlap::process
