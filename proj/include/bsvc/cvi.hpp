#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsvc/data.hpp"

namespace bsvc::cvi {

struct LabeledPartition {
    std::vector<int> predicted;
    std::optional<std::vector<int>> truth;

    std::size_t n() const { return predicted.size(); }
    void validate() const;  // equal lengths, nonnegative ids
};

// Mean over clusters (weighted by size) of the average pairwise intra-cluster
// distance; singleton clusters contribute 0. Lower is better.
double compactness(const Dataset& data, std::span<const int> predicted);

// Size-weighted majority-class fraction, sum_i max_j N_ij / N, in [0, 1].
double purity(std::span<const int> predicted, std::span<const int> truth);

// (TP + TN) / all pairs over the n(n-1)/2 unordered point pairs.
double rand_index(std::span<const int> predicted, std::span<const int> truth);

// (1/m) sum_i max_{j != i} (D_i + D_j) / d(c_i, c_j) with D = mean distance
// to centroid and d = centroid distance. Needs >= 2 clusters with distinct
// centroids; smaller is better.
double davies_bouldin(const Dataset& data, std::span<const int> predicted);

// I(Omega, C) / ((H(C) + H(Omega)) / 2) with natural-log entropies and
// 0 log 0 = 0; defined as 1 when both entropies vanish.
double nmi(std::span<const int> predicted, std::span<const int> truth);

struct CviReport {
    double compactness = 0.0;
    std::optional<double> purity;
    std::optional<double> rand;
    std::optional<double> dbi;  // absent when undefined (single cluster or
                                // coincident centroids)
    std::optional<double> nmi;
};

// Bundles all five; truth-dependent indices are absent without truth.
CviReport make_report(const Dataset& data, std::span<const int> predicted,
                      std::optional<std::span<const int>> truth);

std::string to_json(const CviReport& report);
CviReport report_from_json(const std::string& text);

}  // namespace bsvc::cvi
