#include "bsvc/kernels.hpp"

#include <cmath>

namespace bsvc::kernels::detail {

double sqdist_scalar(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

void sqdist_batch_scalar(const double* const* cols, std::size_t n, std::size_t d,
                         const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = cols[j][i] - x[j];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

void rbf_batch_scalar(const double* const* cols, std::size_t n, std::size_t d,
                      const double* x, double gamma, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = cols[j][i] - x[j];
            acc += diff * diff;
        }
        out[i] = std::exp(-gamma * acc);
    }
}

double rbf_weighted_sum_scalar(const double* const* cols, std::size_t n, std::size_t d,
                               const double* alphas, const double* x, double gamma) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = cols[j][i] - x[j];
            acc += diff * diff;
        }
        sum += alphas[i] * std::exp(-gamma * acc);
    }
    return sum;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace bsvc::kernels::detail
