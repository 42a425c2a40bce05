#pragma once

#include <cstddef>
#include <vector>

#include "overlap/dataset.hpp"

// Plain serial implementations of the OpenMP kernels, kept as the
// correctness baseline for tests and the benchmark target.

namespace overlap::reference {

// y = A x for a dense symmetric p x p matrix, one straight loop.
void matvec_dense(const std::vector<double>& a, const std::vector<double>& x,
                  std::vector<double>& y, std::size_t p);

// Largest eigenvalue by serial power iteration on dense storage.
double operator_norm_dense(const std::vector<double>& a, std::size_t p,
                           double tol = 1e-12, int max_iter = 2000000,
                           std::uint64_t seed = 42);

// Gradient/Hessian of the penalized logistic log-likelihood, single loop
// over rows (no chunking).
void logistic_accumulate(const Dataset& data, const std::vector<double>& beta,
                         double l2_penalty, std::vector<double>& grad,
                         std::vector<double>& hess, double* neg_loglik = nullptr);

}  // namespace overlap::reference
