#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsvc/data.hpp"
#include "bsvc/kernel_model.hpp"

namespace bsvc {

struct AssignConfig {
    double epsilon = 0.0;          // extended-boundary tolerance
    double fp_tol = 1e-6;          // fixed-point convergence tolerance
    std::uint32_t fp_max_iter = 500;
    double merge_tol = 1e-3;       // equilibrium dedup radius (input space)
    std::uint32_t m_samples = 20;  // segment sample-point count

    void validate() const;
};

// P(x) = sum_i alpha_i e^{-gamma||x-x_i||^2} x_i / sum_i alpha_i e^{-gamma||x-x_i||^2}.
// Solving grad f(x) = 0 is equivalent to x = P(x). Throws degenerate_point
// when the denominator magnitude falls below 1e-300.
std::vector<double> fixed_point_map(const KernelExpansion& model, std::span<const double> x);

struct EquilibriumResult {
    std::vector<double> point;
    bool converged = false;
    std::uint32_t iterations = 0;
};

// Iterates x <- P(x) until the step is <= fp_tol (the returned point has a
// verified residual ||P(x*) - x*|| <= fp_tol) or the iteration cap. On a
// degenerate denominator the iteration restarts once from the nearest
// support vector with positive alpha; failing that the last iterate is
// returned flagged unconverged.
EquilibriumResult find_equilibrium(const KernelExpansion& model, std::span<const double> x0,
                                   const AssignConfig& cfg);

// B_eps = indices of data points with |f(x_i)| <= epsilon (inclusive).
std::vector<std::size_t> extended_boundary(const KernelExpansion& model, const Dataset& data,
                                           double epsilon);

struct DedupResult {
    std::vector<std::vector<double>> representatives;  // first-seen order
    std::vector<std::size_t> assignment;               // input index -> representative
};

// Greedy first-come clustering: a point joins the first representative
// within merge_tol (Euclidean), else becomes one. Unconverged trajectories
// are processed like any other terminus.
DedupResult dedup_equilibria(const std::vector<EquilibriumResult>& points, double merge_tol);

// True iff f >= 0 at all m interior samples j/(m+1) along [a, b]. For a == b
// this reduces to f(a) >= 0.
bool segment_connected(const KernelExpansion& model, std::span<const double> a,
                       std::span<const double> b, std::uint32_t m_samples);

struct ClusterSolution {
    std::vector<int> labels;                       // per data point, 0-based contiguous
    std::vector<std::vector<double>> equilibria;   // e_1..e_M
    std::vector<int> equilibrium_labels;
    std::vector<std::size_t> boundary_members;     // B_eps (ascending)
    std::vector<std::uint8_t> adjacency;           // M x M, row-major
    std::size_t num_clusters = 0;

    bool adjacent(std::size_t i, std::size_t j) const {
        return adjacency[i * equilibria.size() + j] != 0;
    }
};

// Algorithm: boundary seeds -> equilibrium trajectories -> dedup -> pairwise
// segment tests over equilibria -> connected components -> label propagation
// (boundary points take their equilibrium's label, the rest take the label of
// the Euclidean-nearest boundary member, ties to the lowest index). An empty
// boundary yields a single cluster labeled 0.
ClusterSolution assign_clusters(const KernelExpansion& model, const Dataset& data,
                                const AssignConfig& cfg);

// CSV of (point_index, cluster_id, in_boundary) plus a JSON sidecar with the
// equilibria, adjacency, M, and epsilon.
void save_cluster_csv(const ClusterSolution& solution, const std::string& path);
std::vector<int> load_cluster_labels(const std::string& path);
std::string cluster_sidecar_json(const ClusterSolution& solution, double epsilon);

// Practical starting epsilon: the 10th percentile of |f(x_i)| over the
// dataset. A heuristic default for the CLI, nothing more.
double suggest_epsilon(const KernelExpansion& model, const Dataset& data);

}  // namespace bsvc
