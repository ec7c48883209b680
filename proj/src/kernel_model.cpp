#include "bsvc/kernel_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bsvc/errors.hpp"
#include "bsvc/kernels.hpp"

namespace bsvc {

void KernelSpec::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw invalid_input("kernel gamma must be positive and finite");
    }
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y) {
    spec.validate();
    if (x.size() != y.size()) {
        throw invalid_input("kernel_eval: dimension mismatch (" +
                            std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    }
    kernels::detail::bump_eval_count(1);
    double sq = kernels::sqdist(x.data(), y.data(), x.size());
    return std::exp(-spec.gamma * sq);
}

KernelExpansion::KernelExpansion(KernelSpec kernel, std::size_t dim)
    : kernel_(kernel), dim_(dim), cols_(dim), col_ptrs_(dim) {
    kernel_.validate();
    if (dim == 0) throw invalid_input("model dimension must be positive");
    for (std::size_t j = 0; j < dim_; ++j) col_ptrs_[j] = cols_[j].data();
}

double KernelExpansion::norm() const {
    return std::sqrt(norm_sq_ < 0.0 ? 0.0 : norm_sq_);
}

std::vector<double> KernelExpansion::point(std::size_t i) const {
    std::vector<double> p(dim_);
    for (std::size_t j = 0; j < dim_; ++j) p[j] = cols_[j][i];
    return p;
}

void KernelExpansion::check_dim(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw invalid_input("point dimension " + std::to_string(x.size()) +
                            " does not match model dimension " + std::to_string(dim_));
    }
}

double KernelExpansion::margin_score(std::span<const double> x) const {
    check_dim(x);
    if (alphas_.empty()) return 0.0;
    return kernels::rbf_weighted_sum(col_ptrs_.data(), alphas_.size(), dim_,
                                     alphas_.data(), x.data(), kernel_.gamma);
}

double KernelExpansion::decision_value(std::span<const double> x) const {
    return margin_score(x) - rho();
}

void KernelExpansion::kernel_row(std::span<const double> x, double* out) const {
    check_dim(x);
    if (alphas_.empty()) return;
    kernels::rbf_batch(col_ptrs_.data(), alphas_.size(), dim_, x.data(),
                       kernel_.gamma, out);
}

void KernelExpansion::scale_coefficients(double factor) {
    if (!std::isfinite(factor)) throw invalid_input("scale factor must be finite");
    for (double& a : alphas_) a *= factor;
    norm_sq_ *= factor * factor;
    after_mutation();
}

std::size_t KernelExpansion::find_exact(std::span<const double> x) const {
    check_dim(x);
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
        bool same = true;
        for (std::size_t j = 0; j < dim_; ++j) {
            if (cols_[j][i] != x[j]) {
                same = false;
                break;
            }
        }
        if (same) return i;
    }
    return npos;
}

void KernelExpansion::add_term(std::span<const double> x, double coeff) {
    add_term(x, coeff, margin_score(x));
}

void KernelExpansion::add_term(std::span<const double> x, double coeff,
                               double margin_at_x) {
    check_dim(x);
    if (!std::isfinite(coeff)) throw invalid_input("coefficient must be finite");
    if (coeff == 0.0) return;  // zero coefficients are never stored

    // ||w + c phi(x)||^2 = ||w||^2 + 2 c <w, phi(x)> + c^2 K(x,x), and the
    // expansion is the same whether the term merges or appends.
    double kxx = std::exp(-kernel_.gamma * 0.0);  // K(x,x) = 1 for RBF
    norm_sq_ += 2.0 * coeff * margin_at_x + coeff * coeff * kxx;

    std::size_t at = find_exact(x);
    if (at != npos) {
        alphas_[at] += coeff;
    } else {
        for (std::size_t j = 0; j < dim_; ++j) {
            cols_[j].push_back(x[j]);
            col_ptrs_[j] = cols_[j].data();
        }
        alphas_.push_back(coeff);
    }
    after_mutation();
}

void KernelExpansion::increment_coefficient(std::size_t index, double delta) {
    if (index >= alphas_.size()) throw invalid_input("coefficient index out of range");
    if (delta == 0.0) return;
    std::vector<double> p = point(index);
    double margin = margin_score(p);
    norm_sq_ += 2.0 * delta * margin + delta * delta;
    alphas_[index] += delta;
    after_mutation();
}

void KernelExpansion::remove_term(std::size_t index) {
    if (index >= alphas_.size()) throw invalid_input("support index out of range");
    std::vector<double> p = point(index);
    double a = alphas_[index];
    double margin = margin_score(p);
    // ||w - a phi(x_p)||^2 = ||w||^2 - 2 a <w, phi(x_p)> + a^2
    norm_sq_ += a * a - 2.0 * a * margin;
    for (std::size_t j = 0; j < dim_; ++j) {
        cols_[j].erase(cols_[j].begin() + static_cast<std::ptrdiff_t>(index));
        col_ptrs_[j] = cols_[j].data();
    }
    alphas_.erase(alphas_.begin() + static_cast<std::ptrdiff_t>(index));
    if (alphas_.empty()) norm_sq_ = 0.0;
    after_mutation();
}

void KernelExpansion::append_raw(std::span<const double> x, double alpha) {
    check_dim(x);
    for (std::size_t j = 0; j < dim_; ++j) {
        cols_[j].push_back(x[j]);
        col_ptrs_[j] = cols_[j].data();
    }
    alphas_.push_back(alpha);
}

void KernelExpansion::refresh_norm() { norm_sq_ = recompute_norm_sq(); }

double KernelExpansion::recompute_norm_sq() const {
    const std::size_t b = alphas_.size();
    if (b == 0) return 0.0;
    std::vector<double> row(b);
    std::vector<double> p(dim_);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) p[j] = cols_[j][i];
        kernels::rbf_batch(col_ptrs_.data(), b, dim_, p.data(), kernel_.gamma, row.data());
        double inner = kernels::dot(alphas_.data(), row.data(), b);
        total += alphas_[i] * inner;
    }
    return total;
}

void KernelExpansion::set_norm_refresh_every(std::size_t every) {
    if (every == 0) throw invalid_input("norm refresh cadence must be positive");
    norm_refresh_every_ = every;
}

void KernelExpansion::maybe_refresh_norm() {
    if (mutations_ >= norm_refresh_every_) {
        norm_sq_ = recompute_norm_sq();
        mutations_ = 0;
    }
}

void KernelExpansion::after_mutation() {
    ++mutations_;
    if (norm_sq_ < 0.0 && norm_sq_ > -1e-12) norm_sq_ = 0.0;
}

bool KernelExpansion::operator==(const KernelExpansion& other) const {
    return kernel_.kind == other.kernel_.kind && kernel_.gamma == other.kernel_.gamma &&
           dim_ == other.dim_ && alphas_ == other.alphas_ && cols_ == other.cols_;
}

std::string to_json(const KernelExpansion& model) {
    nlohmann::json j;
    j["kernel"] = {{"kind", "rbf"}, {"gamma", model.kernel().gamma}};
    j["rho"] = 1.0;
    j["dim"] = model.dim();
    nlohmann::json support = nlohmann::json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        nlohmann::json term;
        term["x"] = model.point(i);
        term["alpha"] = model.alpha(i);
        support.push_back(std::move(term));
    }
    j["support"] = std::move(support);
    return j.dump();
}

KernelExpansion model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model JSON: ") + e.what());
    }
    try {
        if (j.at("kernel").at("kind").get<std::string>() != "rbf") {
            throw parse_error("model JSON: unsupported kernel kind");
        }
        KernelSpec spec{KernelKind::rbf, j.at("kernel").at("gamma").get<double>()};
        auto dim = j.at("dim").get<std::size_t>();
        KernelExpansion model(spec, dim);
        for (const auto& term : j.at("support")) {
            auto x = term.at("x").get<std::vector<double>>();
            if (x.size() != dim) throw parse_error("model JSON: support point dimension mismatch");
            // positional reconstruction, no merging: duplicates and zero
            // alphas survive the round trip exactly as serialized
            model.append_raw(x, term.at("alpha").get<double>());
        }
        model.refresh_norm();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("model JSON: ") + e.what());
    }
}

void save_model(const KernelExpansion& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << to_json(model) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

KernelExpansion load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace bsvc
