#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bsvc {

enum class KernelKind { rbf };

// RBF kernel K(x,x') = exp(-gamma ||x-x'||^2). K(x,x) = 1, so the feature
// norm bound R is 1. The enum leaves room for other kernels, but the
// clustering phase is derived for the Gaussian kernel and nothing else is
// wired up.
struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;

    void validate() const;  // throws invalid_input on gamma <= 0 or non-finite
};

// K(x,y) for a single pair; counts one kernel evaluation.
double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y);

// Sparse kernel expansion w = sum_i alpha_i phi(x_i) with the bias fixed at
// rho = 1. Support points are stored column-major so the batched kernels can
// stream them; ||w||^2 is cached and maintained incrementally with a
// periodic from-scratch refresh to bound drift.
//
// The model is safe for any number of concurrent readers; mutations need
// exclusive access.
class KernelExpansion {
  public:
    KernelExpansion(KernelSpec kernel, std::size_t dim);

    const KernelSpec& kernel() const { return kernel_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return alphas_.size(); }
    bool empty() const { return alphas_.empty(); }
    double rho() const { return 1.0; }
    double norm_sq() const { return norm_sq_; }
    double norm() const;

    double alpha(std::size_t i) const { return alphas_[i]; }
    const std::vector<double>& alphas() const { return alphas_; }
    // Copies support point i into a fresh vector (row extraction from the
    // column-major store).
    std::vector<double> point(std::size_t i) const;
    double coord(std::size_t i, std::size_t j) const { return cols_[j][i]; }
    // Column-major view for the batched kernels.
    const std::vector<const double*>& col_ptrs() const { return col_ptrs_; }

    // sum_i alpha_i K(x_i, x); 0 on empty support.
    double margin_score(std::span<const double> x) const;
    // margin_score(x) - rho. f(x) >= 0 means x is inside the domain of novelty.
    double decision_value(std::span<const double> x) const;

    // K(x_i, x) for every support point, written to out (size() entries).
    void kernel_row(std::span<const double> x, double* out) const;

    // Multiplies every coefficient by factor; ||w||^2 scales by factor^2.
    void scale_coefficients(double factor);

    // Adds coeff * phi(x). If x matches an existing support point exactly
    // the coefficients merge; a new point with coeff == 0 is not stored.
    void add_term(std::span<const double> x, double coeff);
    // Same, with the caller supplying margin_score(*this, x) to avoid
    // recomputing it (the trainer already has it in hand).
    void add_term(std::span<const double> x, double coeff, double margin_at_x);

    // alpha_i += delta, positional (no coordinate matching).
    void increment_coefficient(std::size_t index, double delta);

    // Deletes support term at index.
    void remove_term(std::size_t index);

    // Exact position of a support point with these coordinates, or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find_exact(std::span<const double> x) const;

    // Positional append without merging or norm bookkeeping; used by
    // deserialization so duplicates and zero alphas survive a round trip.
    // Call refresh_norm() once loading completes.
    void append_raw(std::span<const double> x, double alpha);
    void refresh_norm();

    // O(b^2) Gram-form recomputation of ||w||^2 (also the test oracle).
    double recompute_norm_sq() const;

    // Mutations between from-scratch norm refreshes (default 1000). The
    // refresh runs through maybe_refresh_norm(), which the trainer calls
    // between steps so the O(b^2) work never lands inside an SGD update.
    void set_norm_refresh_every(std::size_t every);
    void maybe_refresh_norm();

    bool operator==(const KernelExpansion& other) const;

  private:
    void check_dim(std::span<const double> x) const;
    void after_mutation();

    KernelSpec kernel_;
    std::size_t dim_;
    std::vector<std::vector<double>> cols_;   // dim_ columns of size()
    std::vector<const double*> col_ptrs_;     // cached cols_[j].data()
    std::vector<double> alphas_;
    double norm_sq_ = 0.0;
    std::size_t mutations_ = 0;
    std::size_t norm_refresh_every_ = 1000;
};

// JSON (de)serialization; round-trips are bit-faithful for finite doubles.
std::string to_json(const KernelExpansion& model);
KernelExpansion model_from_json(const std::string& text);
void save_model(const KernelExpansion& model, const std::string& path);
KernelExpansion load_model(const std::string& path);

}  // namespace bsvc
