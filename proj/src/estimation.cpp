#include "overlap/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "overlap/processes.hpp"

namespace overlap::estimate {

namespace {

constexpr std::size_t kChunk = 2048;  // fixed so the reduction order is fixed
constexpr double kFittedFloor = 1e-15;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Cholesky solve of the (d x d) SPD system a x = b; false if a pivot fails.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t d,
                    std::vector<double>& x) {
    for (std::size_t j = 0; j < d; ++j) {
        double pivot = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) pivot -= a[j * d + k] * a[j * d + k];
        if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
        const double root = std::sqrt(pivot);
        a[j * d + j] = root;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = v / root;
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * d + k] * b[k];
        b[i] = v / a[i * d + i];
    }
    x.assign(d, 0.0);
    for (std::size_t i = d; i-- > 0;) {
        double v = b[i];
        for (std::size_t k = i + 1; k < d; ++k) v -= a[k * d + i] * x[k];
        x[i] = v / a[i * d + i];
    }
    return true;
}

}  // namespace

void logistic_accumulate(const Dataset& data, const std::vector<double>& beta,
                         double l2_penalty, std::vector<double>& grad,
                         std::vector<double>& hess, double* neg_loglik) {
    const std::size_t n = data.n, p = data.p, d = p + 1;
    if (beta.size() != d) fail("beta must have length p + 1");
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> cg(chunks), ch(chunks);
    std::vector<double> cl(chunks, 0.0);

#pragma omp parallel for schedule(static)
    for (long long ci = 0; ci < static_cast<long long>(chunks); ++ci) {
        const std::size_t c = static_cast<std::size_t>(ci);
        const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
        auto& g = cg[c];
        auto& h = ch[c];
        g.assign(d, 0.0);
        h.assign(d * d, 0.0);
        double ll = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double* row = data.x.data() + i * p;
            double z = beta[0];
            for (std::size_t j = 0; j < p; ++j) z += beta[j + 1] * row[j];
            const double mu = sigmoid(z);
            const double resid = static_cast<double>(data.t[i]) - mu;
            const double w = mu * (1.0 - mu);
            ll += log1pexp(z) - static_cast<double>(data.t[i]) * z;
            g[0] += resid;
            h[0] += w;
            for (std::size_t j = 0; j < p; ++j) {
                g[j + 1] += resid * row[j];
                h[j + 1] += w * row[j];  // first row of the Hessian block
            }
            for (std::size_t j = 0; j < p; ++j) {
                const double wj = w * row[j];
                double* hrow = h.data() + (j + 1) * d + 1;  // slope block, upper triangle
                for (std::size_t k = j; k < p; ++k) hrow[k] += wj * row[k];
            }
        }
        cl[c] = ll;
    }

    grad.assign(d, 0.0);
    hess.assign(d * d, 0.0);
    double nll = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {  // fixed combine order
        for (std::size_t j = 0; j < d; ++j) grad[j] += cg[c][j];
        for (std::size_t j = 0; j < d * d; ++j) hess[j] += ch[c][j];
        nll += cl[c];
    }
    // mirror the intercept row/upper triangle into a full symmetric matrix
    for (std::size_t j = 1; j < d; ++j) hess[j * d] = hess[j];
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k) hess[k * d + j] = hess[j * d + k];
    // slope-only ridge
    for (std::size_t j = 1; j < d; ++j) {
        grad[j] -= l2_penalty * beta[j];
        hess[j * d + j] += l2_penalty;
        nll += 0.5 * l2_penalty * beta[j] * beta[j];
    }
    if (neg_loglik) *neg_loglik = nll;
}

PropensityFit fit_logistic_propensity(const Dataset& data, double l2_penalty,
                                      double tol, int max_iter) {
    data.validate();
    if (l2_penalty < 0.0) fail("l2 penalty must be nonnegative");
    if (!(tol > 0.0)) fail("tolerance must be positive");
    const std::size_t n = data.n, p = data.p, d = p + 1;

    PropensityFit fit;
    fit.coefficients.assign(d, 0.0);
    std::vector<double> grad, hess, step, trial(d);
    double nll = 0.0;
    logistic_accumulate(data, fit.coefficients, l2_penalty, grad, hess, &nll);

    for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;
        fit.final_gradient_norm = norm2(grad);
        if (fit.final_gradient_norm <= tol) {
            fit.converged = true;
            break;
        }
        if (!cholesky_solve(hess, grad, d, step)) {
            fit.diagnostic = "hessian not positive definite (likely separation)";
            break;
        }
        // backtracking on the penalized objective
        double scale = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t j = 0; j < d; ++j)
                trial[j] = fit.coefficients[j] + scale * step[j];
            std::vector<double> g2, h2;
            double nll2 = 0.0;
            logistic_accumulate(data, trial, l2_penalty, g2, h2, &nll2);
            if (nll2 < nll) {
                fit.coefficients = trial;
                grad.swap(g2);
                hess.swap(h2);
                nll = nll2;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!moved) {
            fit.diagnostic = "line search stalled";
            break;
        }
    }
    if (!fit.converged && fit.diagnostic.empty()) {
        const double size = norm2(fit.coefficients);
        fit.diagnostic = size > 1e3
                             ? "no convergence; coefficients diverging (likely separation)"
                             : "no convergence within max_iter";
    }

    fit.fitted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.x.data() + i * p;
        double z = fit.coefficients[0];
        for (std::size_t j = 0; j < p; ++j) z += fit.coefficients[j + 1] * row[j];
        fit.fitted[i] = std::clamp(sigmoid(z), kFittedFloor, 1.0 - kFittedFloor);
    }
    return fit;
}

EtaStarPlugin eta_star_plugin(std::span<const double> fitted) {
    if (fitted.empty()) fail("no fitted values");
    double lo = 1.0, hi = 0.0;
    for (double e : fitted) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    EtaStarPlugin out;
    out.eta_att = std::min(1.0 - hi, 0.5);
    out.eta_atc = std::min(lo, 0.5);
    out.eta_star = std::min(out.eta_att, out.eta_atc);
    return out;
}

EtaStarPlugin eta_star_plugin(const PropensityFit& fit) {
    return eta_star_plugin(std::span<const double>(fit.fitted));
}

ImbalanceReport mean_imbalance(const Dataset& data) {
    data.validate();
    const std::size_t n = data.n, p = data.p;
    ImbalanceReport out;
    std::vector<double> mean0(p, 0.0), mean1(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& mean = data.t[i] ? mean1 : mean0;
        (data.t[i] ? out.n1 : out.n0)++;
        for (std::size_t j = 0; j < p; ++j) mean[j] += data.at(i, j);
    }
    for (std::size_t j = 0; j < p; ++j) {
        mean0[j] /= static_cast<double>(out.n0);
        mean1[j] /= static_cast<double>(out.n1);
    }

    // group sample covariances (n_t - 1 denominator)
    std::vector<double> cov0(p * p, 0.0), cov1(p * p, 0.0), centered(p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mean = data.t[i] ? mean1 : mean0;
        auto& cov = data.t[i] ? cov1 : cov0;
        for (std::size_t j = 0; j < p; ++j) centered[j] = data.at(i, j) - mean[j];
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) cov[j * p + k] += centered[j] * centered[k];
    }
    const double d0 = out.n0 > 1 ? static_cast<double>(out.n0 - 1) : 1.0;
    const double d1 = out.n1 > 1 ? static_cast<double>(out.n1 - 1) : 1.0;
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) {
            cov0[j * p + k] /= d0;
            cov0[k * p + j] = cov0[j * p + k];
            cov1[j * p + k] /= d1;
            cov1[k * p + j] = cov1[j * p + k];
        }

    out.abs_gaps.resize(p);
    out.gap_se.resize(p);
    double sq = 0.0, mad = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double gap = mean0[j] - mean1[j];
        out.abs_gaps[j] = std::abs(gap);
        out.gap_se[j] = std::sqrt(cov0[j * p + j] / static_cast<double>(out.n0) +
                                  cov1[j * p + j] / static_cast<double>(out.n1));
        sq += gap * gap;
        mad += out.abs_gaps[j];
    }
    out.euclidean_gap = std::sqrt(sq);
    out.mad = mad / static_cast<double>(p);
    out.opnorm0 = process::operator_norm(
        process::CovarianceMatrix::dense(std::move(cov0), p), 1e-10, 200000);
    out.opnorm1 = process::operator_norm(
        process::CovarianceMatrix::dense(std::move(cov1), p), 1e-10, 200000);
    return out;
}

double bayes_accuracy_plugin(std::span<const double> fitted) {
    if (fitted.empty()) fail("no fitted values");
    double acc = 0.0;
    for (double e : fitted) acc += std::max(e, 1.0 - e);
    return acc / static_cast<double>(fitted.size());
}

std::vector<TrimmingPoint> trimming_analysis(std::span<const double> fitted,
                                             std::span<const double> eta_grid) {
    if (fitted.empty()) fail("no fitted values");
    const double acc = bayes_accuracy_plugin(fitted);
    std::vector<TrimmingPoint> curve;
    curve.reserve(eta_grid.size());
    for (double et : eta_grid) {
        if (!(et > 0.0 && et <= 0.5)) fail("trim grid values must lie in (0, 0.5]");
        std::size_t kept = 0;
        for (double e : fitted)
            if (e >= et && e <= 1.0 - et) ++kept;
        TrimmingPoint pt;
        pt.eta_tilde = et;
        pt.retained_fraction = static_cast<double>(kept) / static_cast<double>(fitted.size());
        pt.retention_bound = (1.0 - acc) / et;
        // exact in plug-in terms: each retained unit contributes at least
        // eta_tilde of plug-in misclassification mass
        if (pt.retained_fraction > pt.retention_bound + 1e-12)
            throw std::logic_error("trimming retention bound violated in plug-in terms");
        curve.push_back(pt);
    }
    std::sort(curve.begin(), curve.end(),
              [](const auto& a, const auto& b) { return a.eta_tilde < b.eta_tilde; });
    return curve;
}

OverlapAudit audit(const Dataset& data, const AuditConfig& config) {
    data.validate();
    OverlapAudit out;
    out.n = data.n;
    out.p = data.p;
    double treated = 0.0;
    for (auto t : data.t) treated += t;
    out.pi_hat = treated / static_cast<double>(data.n);

    const double l2 = config.l2_penalty < 0.0
                          ? 1e-6 * static_cast<double>(data.n)
                          : config.l2_penalty;
    out.fit = fit_logistic_propensity(data, l2, config.tol, config.max_iter);
    out.eta_hats = eta_star_plugin(out.fit);
    out.bayes_accuracy_hat = bayes_accuracy_plugin(out.fit.fitted);
    out.imbalance = mean_imbalance(data);
    out.trimming_curve = trimming_analysis(out.fit.fitted, config.trim_grid);

    const double n = static_cast<double>(data.n);
    const double acc_se = std::sqrt(std::max(
        out.bayes_accuracy_hat * (1.0 - out.bayes_accuracy_hat), 1e-12) / n);
    const double pi_se = std::sqrt(std::max(out.pi_hat * (1.0 - out.pi_hat), 1e-12) / n);
    double max_gap_se = 0.0, sum_gap_se2 = 0.0;
    for (double se : out.imbalance.gap_se) {
        max_gap_se = std::max(max_gap_se, se);
        sum_gap_se2 += se * se;
    }
    const double euclid_se = std::sqrt(sum_gap_se2);

    for (double eta : config.eta_grid) {
        if (!(eta > 0.0 && eta <= 0.5)) fail("eta grid values must lie in (0, 0.5]");
        EtaVerdict verdict;
        verdict.eta = eta;

        // strict overlap at eta also requires eta <= pi <= 1 - eta
        ConsistencyCheck pi_check;
        pi_check.quantity = "treatment_fraction";
        pi_check.observed = eta;
        pi_check.bound = std::min(out.pi_hat, 1.0 - out.pi_hat);
        pi_check.slack = 4.0 * pi_se;
        pi_check.pass = pi_check.observed <= pi_check.bound + pi_check.slack;
        verdict.checks.push_back(pi_check);

        ConsistencyCheck acc_check;
        acc_check.quantity = "bayes_accuracy";
        acc_check.observed = out.bayes_accuracy_hat;
        acc_check.bound = bounds::classifier_accuracy_bound(eta);
        acc_check.slack = 4.0 * acc_se;
        acc_check.pass = acc_check.observed <= acc_check.bound + acc_check.slack;
        verdict.checks.push_back(acc_check);

        if (pi_check.pass) {
            const double pi_c =
                std::clamp(out.pi_hat, eta, 1.0 - eta);  // band needs a legal pi
            const auto band = bounds::lr_band({eta, pi_c});

            ConsistencyCheck mad_check;
            mad_check.quantity = "mad";
            mad_check.observed = out.imbalance.mad;
            mad_check.bound = bounds::mad_bound(data.p, out.imbalance.opnorm0,
                                                out.imbalance.opnorm1, band);
            mad_check.slack = 4.0 * max_gap_se;
            mad_check.pass = mad_check.observed <= mad_check.bound + mad_check.slack;
            out.mad_bound_at[eta] = mad_check.bound;
            verdict.checks.push_back(mad_check);

            ConsistencyCheck gap_check;
            gap_check.quantity = "mean_gap_euclid";
            gap_check.observed = out.imbalance.euclidean_gap;
            gap_check.bound = bounds::mean_discrepancy_bound(
                out.imbalance.opnorm0, out.imbalance.opnorm1, band);
            gap_check.slack = 4.0 * euclid_se;
            gap_check.pass = gap_check.observed <= gap_check.bound + gap_check.slack;
            verdict.checks.push_back(gap_check);
        }

        verdict.consistent = std::all_of(verdict.checks.begin(), verdict.checks.end(),
                                         [](const auto& c) { return c.pass; });
        out.verdicts.push_back(verdict);
    }
    return out;
}

}  // namespace overlap::estimate
