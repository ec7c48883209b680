#include "bsvc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bsvc/errors.hpp"
#include "bsvc/kernels.hpp"

namespace bsvc {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::removal: return "removal";
        case Strategy::projection_knn: return "projection_knn";
        case Strategy::projection_random: return "projection_random";
    }
    return "removal";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "removal") return Strategy::removal;
    if (name == "projection_knn" || name == "proj-knn") return Strategy::projection_knn;
    if (name == "projection_random" || name == "proj-rand") return Strategy::projection_random;
    throw config_error("unknown strategy '" + name + "'");
}

void TrainConfig::validate() const {
    try {
        kernel.validate();
    } catch (const invalid_input& e) {
        throw config_error(e.what());
    }
    if (!(C > 0.0) || !std::isfinite(C)) throw config_error("C must be positive and finite");
    if (budget && *budget == 0) throw config_error("budget must be >= 1 (omit for unbounded)");
    if (k == 0) throw config_error("k must be >= 1");
    bool projecting = strategy == Strategy::projection_knn || strategy == Strategy::projection_random;
    if (projecting && budget && k >= *budget) {
        throw config_error("projection requires k < budget (k=" + std::to_string(k) +
                           ", budget=" + std::to_string(*budget) + ")");
    }
    if (!(stop_theta >= 0.0)) throw config_error("stop_theta must be >= 0");
    if (max_steps == 0) throw config_error("max_steps must be >= 1");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw config_error("ridge must be >= 0 and finite");
    if (norm_refresh_every == 0) throw config_error("norm_refresh_every must be >= 1");
}

double objective(const KernelExpansion& model, const Dataset& data, double C) {
    data.validate();
    if (data.dim != model.dim()) throw invalid_input("objective: dimension mismatch");
    const std::size_t n = data.n();
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double margin = model.margin_score(data.row(i));
        if (margin < 1.0) hinge += 1.0 - margin;
    }
    return 0.5 * model.norm_sq() + (C / static_cast<double>(n)) * hinge;
}

SgdStepOutcome sgd_step(KernelExpansion& model, const Dataset& data, std::uint64_t t,
                        double C, SplitMix64& rng) {
    if (t == 0) throw invalid_input("sgd_step: t starts at 1");
    if (data.dim != model.dim()) throw invalid_input("sgd_step: dimension mismatch");
    const std::size_t n_t = static_cast<std::size_t>(rng.next_below(data.n()));
    auto x = data.row(n_t);

    const double margin = model.margin_score(x);  // w.r.t. w_t, pre-shrink
    const double old_norm_sq = model.norm_sq();
    const double td = static_cast<double>(t);
    const double shrink = (td - 1.0) / td;
    model.scale_coefficients(shrink);

    SgdStepOutcome out{};
    out.sampled_index = n_t;
    out.margin = margin;
    out.fired = margin < 1.0;  // strict; subgradient 0 at exactly 1

    double delta_sq = old_norm_sq / (td * td);
    if (out.fired) {
        out.alpha = C / td;
        const double kxx = kernel_eval(model.kernel(), x, x);
        const std::size_t before = model.size();
        model.add_term(x, out.alpha, margin * shrink);
        out.new_point = model.size() > before;
        delta_sq += -2.0 * out.alpha / td * margin + out.alpha * out.alpha * kxx;
    }
    out.step_delta = std::sqrt(std::max(delta_sq, 0.0));
    return out;
}

std::size_t select_redundant(const KernelExpansion& model) {
    if (model.empty()) throw invalid_state("select_redundant: empty support");
    // |alpha_i| K(x_i, x_i); the RBF diagonal is identically 1
    std::size_t best = 0;
    double best_v = std::abs(model.alpha(0));
    for (std::size_t i = 1; i < model.size(); ++i) {
        double v = std::abs(model.alpha(i));
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

MaintenanceEvent maintain_removal(KernelExpansion& model) {
    std::size_t p = select_redundant(model);
    MaintenanceEvent ev{p, std::abs(model.alpha(p)), Strategy::removal};
    model.remove_term(p);
    return ev;
}

std::vector<double> solve_projection_coeffs(std::vector<double> gram,
                                            std::span<const double> cross, double ridge) {
    const std::size_t k = cross.size();
    if (k == 0 || gram.size() != k * k) {
        throw invalid_input("solve_projection_coeffs: gram must be k x k with k >= 1");
    }
    if (ridge < 0.0) throw invalid_input("ridge must be >= 0");

    double max_diag = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        gram[i * k + i] += ridge;
        max_diag = std::max(max_diag, std::abs(gram[i * k + i]));
    }
    // Cholesky on the (symmetric PSD) regularized Gram; a non-positive pivot
    // means the system is numerically singular.
    const double pivot_floor = static_cast<double>(k) * 2.220446049250313e-16 * max_diag;
    std::vector<double> L(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double diag = gram[j * k + j];
        for (std::size_t m = 0; m < j; ++m) diag -= L[j * k + m] * L[j * k + m];
        if (!(diag > pivot_floor)) {
            throw numerical_failure(
                "projection system is singular; retry with a positive ridge");
        }
        L[j * k + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < k; ++i) {
            double v = gram[i * k + j];
            for (std::size_t m = 0; m < j; ++m) v -= L[i * k + m] * L[j * k + m];
            L[i * k + j] = v / L[j * k + j];
        }
    }
    // L y = cross, then L^T d = y
    std::vector<double> d(cross.begin(), cross.end());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t m = 0; m < i; ++m) d[i] -= L[i * k + m] * d[m];
        d[i] /= L[i * k + i];
    }
    for (std::size_t ii = k; ii-- > 0;) {
        for (std::size_t m = ii + 1; m < k; ++m) d[ii] -= L[m * k + ii] * d[m];
        d[ii] /= L[ii * k + ii];
    }
    return d;
}

namespace {

std::vector<std::size_t> knn_neighbors(const KernelExpansion& model, std::size_t p,
                                       std::uint32_t k) {
    const std::size_t b = model.size();
    std::vector<double> xp = model.point(p);
    std::vector<double> dist(b);
    kernels::sqdist_batch(model.col_ptrs().data(), b, model.dim(), xp.data(), dist.data());
    std::vector<std::size_t> order;
    order.reserve(b - 1);
    for (std::size_t i = 0; i < b; ++i) {
        if (i != p) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (dist[a] != dist[c]) return dist[a] < dist[c];
        return a < c;  // equidistant ties to the lowest support index
    });
    order.resize(k);
    return order;
}

std::vector<std::size_t> random_neighbors(const KernelExpansion& model, std::size_t p,
                                          std::uint32_t k, SplitMix64& rng) {
    std::vector<std::size_t> pool;
    pool.reserve(model.size() - 1);
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (i != p) pool.push_back(i);
    }
    for (std::uint32_t j = 0; j < k; ++j) {  // partial Fisher-Yates
        std::size_t pick = j + static_cast<std::size_t>(rng.next_below(pool.size() - j));
        std::swap(pool[j], pool[pick]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace

MaintenanceEvent maintain_projection(KernelExpansion& model, NeighborSelector selector,
                                     std::uint32_t k, SplitMix64& rng, double ridge) {
    if (model.size() < static_cast<std::size_t>(k) + 1) {
        throw invalid_state("projection needs at least k+1 support vectors");
    }
    const std::size_t p = select_redundant(model);
    const double alpha_p = model.alpha(p);
    std::vector<std::size_t> nbrs = selector == NeighborSelector::knn
                                        ? knn_neighbors(model, p, k)
                                        : random_neighbors(model, p, k, rng);
    if (alpha_p != 0.0) {
        const auto& spec = model.kernel();
        std::vector<std::vector<double>> pts(k);
        for (std::uint32_t i = 0; i < k; ++i) pts[i] = model.point(nbrs[i]);
        std::vector<double> xp = model.point(p);
        std::vector<double> gram(static_cast<std::size_t>(k) * k);
        std::vector<double> cross(k);
        for (std::uint32_t i = 0; i < k; ++i) {
            gram[i * k + i] = kernel_eval(spec, pts[i], pts[i]);
            for (std::uint32_t j = i + 1; j < k; ++j) {
                double v = kernel_eval(spec, pts[i], pts[j]);
                gram[i * k + j] = v;
                gram[j * k + i] = v;
            }
            cross[i] = kernel_eval(spec, pts[i], xp);
        }
        std::vector<double> d = solve_projection_coeffs(std::move(gram), cross, ridge);
        for (std::uint32_t i = 0; i < k; ++i) {
            model.increment_coefficient(nbrs[i], d[i] * alpha_p);
        }
    }
    MaintenanceEvent ev{p, std::abs(alpha_p),
                        selector == NeighborSelector::knn ? Strategy::projection_knn
                                                          : Strategy::projection_random};
    model.remove_term(p);
    return ev;
}

namespace {

// Running average of the iterates, keyed by exact support coordinates so
// mass survives budget removals.
class IterateAverager {
  public:
    explicit IterateAverager(std::size_t dim) : dim_(dim) {}

    void on_new_support_point(std::span<const double> x) {
        std::vector<double> key(x.begin(), x.end());
        auto it = index_.find(key);
        if (it == index_.end()) {
            index_.emplace(key, points_.size());
            slot_of_support_.push_back(points_.size());
            points_.push_back(std::move(key));
            coefs_.push_back(0.0);
        } else {
            slot_of_support_.push_back(it->second);
        }
    }

    void on_support_removed(std::size_t position) {
        slot_of_support_.erase(slot_of_support_.begin() +
                               static_cast<std::ptrdiff_t>(position));
    }

    // Folds w_t into the average with weight 1/t: wbar <- wbar (t-1)/t + w_t/t.
    void absorb(const KernelExpansion& model, std::uint64_t t) {
        const double td = static_cast<double>(t);
        const double decay = (td - 1.0) / td;
        for (double& c : coefs_) c *= decay;
        for (std::size_t i = 0; i < model.size(); ++i) {
            coefs_[slot_of_support_[i]] += model.alpha(i) / td;
        }
    }

    KernelExpansion build(const KernelSpec& spec) const {
        KernelExpansion avg(spec, dim_);
        for (std::size_t s = 0; s < points_.size(); ++s) {
            if (coefs_[s] != 0.0) avg.append_raw(points_[s], coefs_[s]);
        }
        avg.refresh_norm();
        return avg;
    }

  private:
    std::size_t dim_;
    std::map<std::vector<double>, std::size_t> index_;
    std::vector<std::vector<double>> points_;
    std::vector<double> coefs_;
    std::vector<std::size_t> slot_of_support_;
};

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    data.validate();
    cfg.validate();

    KernelExpansion model(cfg.kernel, data.dim);
    model.set_norm_refresh_every(cfg.norm_refresh_every);
    SplitMix64 rng = SplitMix64::derive(cfg.seed, /*tag=*/0x545241494e);  // "TRAIN"

    TrainTrace trace;
    std::uint32_t max_updates = 0;
    IterateAverager averager(data.dim);

    std::uint64_t steps_run = 0;
    bool stopped = false;
    for (std::uint64_t t = 1; t <= cfg.max_steps; ++t) {
        if (cfg.track_average) averager.absorb(model, t);

        SgdStepOutcome out = sgd_step(model, data, t, cfg.C, rng);
        auto x = data.row(out.sampled_index);
        if (out.fired) {
            std::vector<double> key(x.begin(), x.end());
            std::uint32_t c = ++trace.update_counts[key];
            max_updates = std::max(max_updates, c);
            if (cfg.track_average && out.new_point) averager.on_new_support_point(x);
        }

        std::optional<MaintenanceEvent> event;
        if (cfg.budget && out.new_point && model.size() > *cfg.budget) {
            switch (cfg.strategy) {
                case Strategy::removal:
                    event = maintain_removal(model);
                    break;
                case Strategy::projection_knn:
                    event = maintain_projection(model, NeighborSelector::knn, cfg.k, rng,
                                                cfg.ridge);
                    break;
                case Strategy::projection_random:
                    event = maintain_projection(model, NeighborSelector::random, cfg.k, rng,
                                                cfg.ridge);
                    break;
            }
            if (cfg.track_average) averager.on_support_removed(event->removed_index);
        }

        steps_run = t;
        if (cfg.record_trace) {
            double s_t = 0.0;
            for (double a : model.alphas()) s_t += std::abs(a);
            trace.steps.push_back(StepRecord{t, out.sampled_index, out.alpha, model.size(),
                                             s_t, model.norm(), out.step_delta, max_updates,
                                             event});
        }
        model.maybe_refresh_norm();
        if (out.step_delta <= cfg.stop_theta) {
            stopped = true;
            break;
        }
    }

    TrainResult result{std::move(model), std::move(trace), std::nullopt, steps_run, stopped};
    if (cfg.track_average) result.averaged_model = averager.build(cfg.kernel);
    return result;
}

void save_trace_jsonl(const TrainTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    for (const StepRecord& r : trace.steps) {
        nlohmann::json j{{"t", r.t},
                         {"n", r.sampled_index},
                         {"alpha", r.alpha},
                         {"b", r.support_size},
                         {"s", r.coeff_abs_sum},
                         {"w", r.w_norm},
                         {"delta", r.step_delta},
                         {"m", r.max_update_count}};
        if (r.maintenance) {
            j["maint"] = {{"p", r.maintenance->removed_index},
                          {"alpha_abs", r.maintenance->alpha_abs},
                          {"strategy", strategy_name(r.maintenance->strategy)}};
        }
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

TrainTrace load_trace_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    TrainTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            StepRecord r{};
            r.t = j.at("t").get<std::uint64_t>();
            r.sampled_index = j.at("n").get<std::size_t>();
            r.alpha = j.at("alpha").get<double>();
            r.support_size = j.at("b").get<std::size_t>();
            r.coeff_abs_sum = j.at("s").get<double>();
            r.w_norm = j.at("w").get<double>();
            r.step_delta = j.at("delta").get<double>();
            r.max_update_count = j.at("m").get<std::uint32_t>();
            if (j.contains("maint")) {
                const auto& m = j.at("maint");
                r.maintenance = MaintenanceEvent{
                    m.at("p").get<std::size_t>(), m.at("alpha_abs").get<double>(),
                    strategy_from_name(m.at("strategy").get<std::string>())};
            }
            trace.steps.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("trace line " + std::to_string(line_no) + ": " + e.what());
        } catch (const config_error& e) {
            throw parse_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

}  // namespace bsvc
