#pragma once

#include <cstddef>
#include <cstdint>

// Low-level arithmetic kernels behind the model and assignment code.
//
// Support points are stored column-major (one contiguous array per input
// dimension), which lets the batched routines walk four support vectors per
// iteration. Every routine has a scalar reference implementation and an AVX2
// variant; the active backend is picked once at startup (overridable with
// set_backend() or the BSVC_BACKEND environment variable) and the two are
// equivalence-tested against each other.

namespace bsvc::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
// Force a backend (throws invalid_state if unsupported on this CPU).
void set_backend(Backend b);
const char* backend_name(Backend b);

// Squared Euclidean distance between two d-vectors.
double sqdist(const double* a, const double* b, std::size_t d);

// out[i] = ||p_i - x||^2 for n column-major points.
void sqdist_batch(const double* const* cols, std::size_t n, std::size_t d,
                  const double* x, double* out);

// out[i] = exp(-gamma * ||p_i - x||^2). Counts n kernel evaluations.
void rbf_batch(const double* const* cols, std::size_t n, std::size_t d,
               const double* x, double gamma, double* out);

// Returns sum_i alphas[i] * exp(-gamma * ||p_i - x||^2).
// Counts n kernel evaluations.
double rbf_weighted_sum(const double* const* cols, std::size_t n, std::size_t d,
                        const double* alphas, const double* x, double gamma);

double dot(const double* a, const double* b, std::size_t n);

// Thread-local count of RBF evaluations performed through this module;
// used by the budgeted-cost tests.
std::uint64_t eval_count();
void reset_eval_count();

namespace detail {

void bump_eval_count(std::uint64_t n);

double sqdist_scalar(const double* a, const double* b, std::size_t d);
void sqdist_batch_scalar(const double* const* cols, std::size_t n, std::size_t d,
                         const double* x, double* out);
void rbf_batch_scalar(const double* const* cols, std::size_t n, std::size_t d,
                      const double* x, double gamma, double* out);
double rbf_weighted_sum_scalar(const double* const* cols, std::size_t n, std::size_t d,
                               const double* alphas, const double* x, double gamma);
double dot_scalar(const double* a, const double* b, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
double sqdist_avx2(const double* a, const double* b, std::size_t d);
void sqdist_batch_avx2(const double* const* cols, std::size_t n, std::size_t d,
                       const double* x, double* out);
void rbf_batch_avx2(const double* const* cols, std::size_t n, std::size_t d,
                    const double* x, double gamma, double* out);
double rbf_weighted_sum_avx2(const double* const* cols, std::size_t n, std::size_t d,
                             const double* alphas, const double* x, double gamma);
double dot_avx2(const double* a, const double* b, std::size_t n);
#endif

}  // namespace detail

}  // namespace bsvc::kernels
