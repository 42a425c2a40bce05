#include "overlap/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "overlap/rng.hpp"

namespace overlap::reference {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

}  // namespace

void matvec_dense(const std::vector<double>& a, const std::vector<double>& x,
                  std::vector<double>& y, std::size_t p) {
    y.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j) acc += a[i * p + j] * x[j];
        y[i] = acc;
    }
}

double operator_norm_dense(const std::vector<double>& a, std::size_t p, double tol,
                           int max_iter, std::uint64_t seed) {
    if (a.size() != p * p) throw std::invalid_argument("dense storage must be p*p");
    Rng rng(splitmix64(seed));
    std::vector<double> v(p), w(p);
    double nv = 0.0;
    for (auto& vi : v) {
        vi = rng.uniform(-1.0, 1.0);
        nv += vi * vi;
    }
    nv = std::sqrt(nv);
    for (auto& vi : v) vi /= nv;

    double lambda = 0.0, lambda_prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        matvec_dense(a, v, w, p);
        lambda = 0.0;
        for (std::size_t i = 0; i < p; ++i) lambda += v[i] * w[i];
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::max(1.0, std::abs(lambda)))
            return lambda;
        lambda_prev = lambda;
        double nw = 0.0;
        for (double wi : w) nw += wi * wi;
        nw = std::sqrt(nw);
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < p; ++i) v[i] = w[i] / nw;
    }
    return lambda;
}

void logistic_accumulate(const Dataset& data, const std::vector<double>& beta,
                         double l2_penalty, std::vector<double>& grad,
                         std::vector<double>& hess, double* neg_loglik) {
    const std::size_t n = data.n, p = data.p, d = p + 1;
    grad.assign(d, 0.0);
    hess.assign(d * d, 0.0);
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.x.data() + i * p;
        double z = beta[0];
        for (std::size_t j = 0; j < p; ++j) z += beta[j + 1] * row[j];
        const double mu = sigmoid(z);
        const double resid = static_cast<double>(data.t[i]) - mu;
        const double w = mu * (1.0 - mu);
        nll += log1pexp(z) - static_cast<double>(data.t[i]) * z;
        grad[0] += resid;
        hess[0] += w;
        for (std::size_t j = 0; j < p; ++j) {
            grad[j + 1] += resid * row[j];
            hess[j + 1] += w * row[j];
        }
        for (std::size_t j = 0; j < p; ++j) {
            const double wj = w * row[j];
            for (std::size_t k = j; k < p; ++k) hess[(j + 1) * d + 1 + k] += wj * row[k];
        }
    }
    for (std::size_t j = 1; j < d; ++j) hess[j * d] = hess[j];
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k) hess[k * d + j] = hess[j * d + k];
    for (std::size_t j = 1; j < d; ++j) {
        grad[j] -= l2_penalty * beta[j];
        hess[j * d + j] += l2_penalty;
        nll += 0.5 * l2_penalty * beta[j] * beta[j];
    }
    if (neg_loglik) *neg_loglik = nll;
}

}  // namespace overlap::reference
