#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace overlap {

// Covariate matrix (row-major n x p) plus binary treatment indicator.
struct Dataset {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> x;       // n * p
    std::vector<std::uint8_t> t;

    double at(std::size_t i, std::size_t j) const { return x[i * p + j]; }
    double& at(std::size_t i, std::size_t j) { return x[i * p + j]; }

    void validate() const {
        if (n == 0 || p == 0) throw std::invalid_argument("dataset must be nonempty");
        if (x.size() != n * p || t.size() != n)
            throw std::invalid_argument("dataset storage does not match (n, p)");
        std::size_t treated = 0;
        for (auto ti : t) {
            if (ti > 1) throw std::invalid_argument("treatment indicator must be 0/1");
            treated += ti;
        }
        if (treated == 0 || treated == n)
            throw std::invalid_argument("both treatment groups must be nonempty");
    }
};

}  // namespace overlap
