#include "bsvc/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "bsvc/errors.hpp"

namespace bsvc::kernels {

namespace {

thread_local std::uint64_t tl_eval_count = 0;

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() {
    if (const char* env = std::getenv("BSVC_BACKEND")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return Backend::avx2;
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = detect();

}  // namespace

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported()) {
        throw invalid_state("AVX2 backend not supported on this CPU");
    }
    g_backend = b;
}

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

std::uint64_t eval_count() { return tl_eval_count; }
void reset_eval_count() { tl_eval_count = 0; }

void detail::bump_eval_count(std::uint64_t n) { tl_eval_count += n; }

double sqdist(const double* a, const double* b, std::size_t d) {
#if defined(__x86_64__) || defined(_M_X64)
    if (g_backend == Backend::avx2) return detail::sqdist_avx2(a, b, d);
#endif
    return detail::sqdist_scalar(a, b, d);
}

void sqdist_batch(const double* const* cols, std::size_t n, std::size_t d,
                  const double* x, double* out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (g_backend == Backend::avx2) {
        detail::sqdist_batch_avx2(cols, n, d, x, out);
        return;
    }
#endif
    detail::sqdist_batch_scalar(cols, n, d, x, out);
}

void rbf_batch(const double* const* cols, std::size_t n, std::size_t d,
               const double* x, double gamma, double* out) {
    tl_eval_count += n;
#if defined(__x86_64__) || defined(_M_X64)
    if (g_backend == Backend::avx2) {
        detail::rbf_batch_avx2(cols, n, d, x, gamma, out);
        return;
    }
#endif
    detail::rbf_batch_scalar(cols, n, d, x, gamma, out);
}

double rbf_weighted_sum(const double* const* cols, std::size_t n, std::size_t d,
                        const double* alphas, const double* x, double gamma) {
    tl_eval_count += n;
#if defined(__x86_64__) || defined(_M_X64)
    if (g_backend == Backend::avx2) {
        return detail::rbf_weighted_sum_avx2(cols, n, d, alphas, x, gamma);
    }
#endif
    return detail::rbf_weighted_sum_scalar(cols, n, d, alphas, x, gamma);
}

double dot(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (g_backend == Backend::avx2) return detail::dot_avx2(a, b, n);
#endif
    return detail::dot_scalar(a, b, n);
}

}  // namespace bsvc::kernels
