#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsvc/data.hpp"
#include "bsvc/kernel_model.hpp"
#include "bsvc/rng.hpp"

namespace bsvc {

enum class Strategy { removal, projection_knn, projection_random };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct TrainConfig {
    KernelSpec kernel;
    double C = 1.0;
    std::optional<std::uint32_t> budget;  // nullopt = unbounded
    Strategy strategy = Strategy::removal;
    std::uint32_t k = 5;          // projection neighbor count
    double stop_theta = 0.01;     // stop once ||w_{t+1} - w_t|| <= theta
    std::uint64_t max_steps = 100000;
    std::uint64_t seed = 0;
    double ridge = 1e-10;         // regularizer for the projection solve
    std::size_t norm_refresh_every = 1000;
    bool record_trace = true;
    bool track_average = false;   // maintain the running average of iterates

    void validate() const;  // throws config_error
};

struct MaintenanceEvent {
    std::size_t removed_index;
    double alpha_abs;  // |alpha_{p_t}| at removal
    Strategy strategy;
};

struct StepRecord {
    std::uint64_t t;
    std::size_t sampled_index;
    double alpha;                 // applied coefficient, C/t or 0
    std::size_t support_size;     // after maintenance
    double coeff_abs_sum;         // s_t = sum |alpha_i|
    double w_norm;                // ||w_{t+1}||
    double step_delta;            // ||w_{t+1} - w_t|| before maintenance
    std::uint32_t max_update_count;  // running max over support-point update counts
    std::optional<MaintenanceEvent> maintenance;
};

struct TrainTrace {
    std::vector<StepRecord> steps;
    // times each support point's coefficient was incremented, keyed by the
    // point's coordinates (in-memory only; the per-step running max is what
    // gets serialized)
    std::map<std::vector<double>, std::uint32_t> update_counts;
};

struct TrainResult {
    KernelExpansion model;           // last iterate w_{T+1}
    TrainTrace trace;
    std::optional<KernelExpansion> averaged_model;  // (1/T) sum_t w_t when tracked
    std::uint64_t steps_run = 0;
    bool stopped_by_theta = false;
};

// J(w) = 1/2 ||w||^2 + (C/N) sum_i max{0, 1 - w^T phi(x_i)}
double objective(const KernelExpansion& model, const Dataset& data, double C);

struct SgdStepOutcome {
    std::size_t sampled_index;
    double alpha;      // C/t if the hinge fired (margin < 1, strict), else 0
    bool fired;
    bool new_point;    // support gained a genuinely new point
    double step_delta; // closed-form ||w_{t+1} - w_t||
    double margin;     // margin of w_t at the sampled point
};

// One update: sample, shrink by (t-1)/t, conditionally add C/t at the sample.
SgdStepOutcome sgd_step(KernelExpansion& model, const Dataset& data, std::uint64_t t,
                        double C, SplitMix64& rng);

// argmin_i |alpha_i| K(x_i, x_i), ties to the lowest index.
std::size_t select_redundant(const KernelExpansion& model);

// Deletes the most redundant support term.
MaintenanceEvent maintain_removal(KernelExpansion& model);

// Solves (gram + ridge I) d = cross for the least-squares projection of
// phi(x_p) onto the span of the k neighbor features. gram is k x k row-major
// symmetric. Throws numerical_failure for a singular system with ridge = 0
// (retry with a positive ridge).
std::vector<double> solve_projection_coeffs(std::vector<double> gram,
                                            std::span<const double> cross, double ridge);

enum class NeighborSelector { knn, random };

// Projects the redundant term onto k neighbors (k-NN in input space or k
// uniform picks), folds the projection coefficients into the neighbors'
// alphas, then removes the term.
MaintenanceEvent maintain_projection(KernelExpansion& model, NeighborSelector selector,
                                     std::uint32_t k, SplitMix64& rng, double ridge);

// Full training loop: sgd_step for t = 1, 2, ...; budget maintenance after
// any step that pushes the support past B; stops at step_delta <= stop_theta
// or max_steps. Deterministic given (data, config).
TrainResult train(const Dataset& data, const TrainConfig& cfg);

// JSON-lines trace serialization, one record per step, maintenance events
// embedded. Loading does not reconstruct update_counts; audits use the
// per-step running max.
void save_trace_jsonl(const TrainTrace& trace, const std::string& path);
TrainTrace load_trace_jsonl(const std::string& path);

}  // namespace bsvc
