#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "overlap/bounds.hpp"
#include "overlap/dataset.hpp"

// Generative covariate-process families with analytic covariance structure,
// plus the operator-norm machinery the mean-discrepancy bounds consume.
// Samplers are single-threaded and seed-deterministic; parallelism lives at
// the replicate level (distinct seeds per instance).

namespace overlap::process {

using bounds::MomentSummary;

// ---------------------------------------------------------------------------
// Process specifications
// ---------------------------------------------------------------------------

struct IndependentBernoulli {
    std::vector<double> q0;  // per-coordinate success prob under P0
    std::vector<double> q1;  // and under P1

    std::size_t dim() const { return q0.size(); }
    void validate() const;
};

// Shape of the equal per-coordinate log-likelihood-ratio budget split.
// anchored keeps q0 = eta (control variance constant in p, the bound decay
// is exactly p^{-1/2}); symmetric centers the pair on 0.5.
enum class Allocation { anchored, symmetric };

struct LrBudgetedBernoulli {
    double eta = 0.1;
    double pi = 0.5;
    std::size_t p = 1;
    Allocation allocation = Allocation::anchored;
};

// Deliberately overlap-violating family (Gaussian group shift): used to
// demonstrate eta-hat collapsing toward 0 as n grows, never "fixed".
struct GaussianShift {
    std::vector<double> mean0;
    std::vector<double> mean1;
    std::vector<double> variances;  // shared diagonal

    std::size_t dim() const { return mean0.size(); }
    void validate() const;
};

struct Ma1 {
    double theta = 0.5;   // in (-1, 1)
    double sigma2 = 1.0;  // innovation variance
    std::size_t p = 1;

    void validate() const;
};

struct FactorModel {
    std::vector<std::vector<double>> loadings;  // p x s
    std::vector<double> idiosyncratic;          // length p, >= 0

    std::size_t dim() const { return loadings.size(); }
    std::size_t rank() const { return loadings.empty() ? 0 : loadings.front().size(); }
    void validate() const;
};

// Treatment depends on the first s coordinates only; e_table has 2^s entries
// indexed by the bits of X_{1:s}. s = 0 is the randomized-trial case.
struct SparseScore {
    std::size_t s = 0;
    std::vector<double> e_table;  // size 2^s, values in (0, 1)
    double q = 0.5;               // base Bernoulli prob for every covariate
};

// Treatment depends on a latent class only; covariates are class-conditional
// product Bernoulli.
struct LatentClassScore {
    std::vector<double> prior;                     // K, sums to 1
    std::vector<double> e_u;                       // K, values in (0, 1)
    std::vector<std::vector<double>> class_probs;  // K x p
};

struct BalancingScenario {
    std::variant<SparseScore, LatentClassScore> score;
    std::size_t p = 1;

    void validate() const;
};

using ProcessSpec = std::variant<IndependentBernoulli, LrBudgetedBernoulli,
                                 GaussianShift, Ma1, FactorModel, BalancingScenario>;

std::size_t dimension(const ProcessSpec& spec);
void validate(const ProcessSpec& spec);

// ---------------------------------------------------------------------------
// Covariance and operator norm
// ---------------------------------------------------------------------------

// Symmetric PSD matrix in one of a few analytic layouts. matvec dispatches on
// the layout; the dense path is the OpenMP kernel (rows are independent, so
// the result is bitwise reproducible for any thread count).
class CovarianceMatrix {
public:
    enum class Layout { dense, diagonal, tridiagonal, low_rank };

    static CovarianceMatrix dense(std::vector<double> a, std::size_t p);
    static CovarianceMatrix diagonal(std::vector<double> d);
    static CovarianceMatrix tridiagonal(std::size_t p, double diag, double off);
    // lambda lambda^T + diag(idio)
    static CovarianceMatrix low_rank(std::vector<std::vector<double>> loadings,
                                     std::vector<double> idio);

    std::size_t dim() const { return p_; }
    Layout layout() const { return layout_; }

    void matvec(const double* x, double* y) const;
    std::vector<double> to_dense() const;
    double entry(std::size_t i, std::size_t j) const;

    // max |S_ij - S_ji| over the dense export (0 by construction here).
    double symmetry_defect() const;

private:
    Layout layout_ = Layout::dense;
    std::size_t p_ = 0;
    std::vector<double> dense_;                    // dense
    std::vector<double> diag_;                     // diagonal / tridiagonal / low_rank idio
    double tri_diag_ = 0.0, tri_off_ = 0.0;        // tridiagonal
    std::vector<std::vector<double>> loadings_;    // low_rank
};

// Analytic covariance of the group law. ma1/factor/gaussian families share
// one law across groups; balancing scenarios have no analytic form and are
// rejected.
CovarianceMatrix covariance(const ProcessSpec& spec, int group);

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Largest eigenvalue by power iteration with Rayleigh-quotient estimates.
// Stops when |lambda_t - lambda_{t-1}| <= tol * max(1, lambda_t). Start
// vector is derived deterministically from seed; sign-flip oscillation is
// damped by iterate averaging.
PowerIterationResult power_iteration(const CovarianceMatrix& s, double tol,
                                     int max_iter, std::uint64_t seed = 42);

double operator_norm(const CovarianceMatrix& s, double tol = 1e-12,
                     int max_iter = 2000000);

// Smallest-eigenvalue estimate via the Gershgorin shift trick (dense export);
// used by the PSD sanity checks in tests.
double min_eigenvalue_estimate(const CovarianceMatrix& s, double tol = 1e-10,
                               int max_iter = 200000);

// ---------------------------------------------------------------------------
// Budgeted families, moments, sampling
// ---------------------------------------------------------------------------

// Equal per-coordinate split of the log-likelihood-ratio budget
// min(log b_max, -log b_min): every outcome of the product family keeps the
// joint log LR inside the band, so eta_star >= eta for every p.
IndependentBernoulli lr_budget_allocator(double eta, double pi, std::size_t p,
                                         Allocation allocation = Allocation::anchored);

IndependentBernoulli resolve_bernoulli(const LrBudgetedBernoulli& spec);

// Exact product-law moments: Bernoulli means and max-variance operator norms.
MomentSummary exact_product_moments(const IndependentBernoulli& spec);
MomentSummary exact_product_moments(const LrBudgetedBernoulli& spec);

// Largest and smallest joint log likelihood ratio over the product support,
// summed coordinate-wise (the interval certificate for eta_star >= eta).
struct LogLrEnvelope {
    double lo = 0.0;
    double hi = 0.0;
};
LogLrEnvelope log_lr_envelope(const IndependentBernoulli& spec);

// Exact propensity extremes of a product-Bernoulli family under treatment
// fraction pi (attained at hypercube corners).
struct PropensityRange {
    double e_min = 0.0;
    double e_max = 0.0;
    double eta_star = 0.0;
};
PropensityRange propensity_range(const IndependentBernoulli& spec, double pi);

// Draw (X, T): T ~ Bernoulli(pi), then X | T from the group law. Families
// that do not carry their own treatment fraction use the pi argument;
// balancing scenarios draw T from the score. Deterministic given seed.
Dataset sample(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
               double pi = 0.5);

// Strict-overlap bound on the score scale and on the full covariate scale
// (exact; latent-class posteriors extremized coordinate-wise for K = 2,
// enumerated otherwise). Always eta_star_joint >= eta_star_score.
struct BalancingOverlapReport {
    double eta_star_score = 0.0;
    double eta_star_joint = 0.0;
};
BalancingOverlapReport balancing_overlap_check(const BalancingScenario& scenario);

}  // namespace overlap::process
