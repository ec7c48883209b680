#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsvc {

// Immutable after construction; freely shared across threads.
struct Dataset {
    std::vector<double> points;           // row-major, n() x dim
    std::size_t dim = 0;
    std::optional<std::vector<int>> labels;  // dense ids 0..K-1
    std::string name;

    std::size_t n() const { return dim == 0 ? 0 : points.size() / dim; }
    std::span<const double> row(std::size_t i) const {
        return {points.data() + i * dim, dim};
    }
    void validate() const;  // throws invalid_input on shape violations
};

// Parses a numeric CSV. The label column (if given) may hold arbitrary text;
// values are mapped to dense ids in first-appearance order. Parse failures
// report the 1-based line number.
Dataset load_csv(const std::string& path, bool has_header,
                 std::optional<std::size_t> label_column);

// Writes features (shortest round-trip decimal) plus the label column last,
// when present. load_csv(save_csv(d)) reproduces the points bit-for-bit.
void save_csv(const Dataset& data, const std::string& path);

struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;  // 1.0 recorded for zero-variance features
};

// Per-feature zero mean, unit variance (population stddev). Zero-variance
// features are centered with divisor 1.
std::pair<Dataset, Standardization> standardize(const Dataset& data);
Dataset apply_standardization(const Dataset& data, const Standardization& s);

// Synthetic generators reconstructing the usual toy figures: two concentric
// noisy rings with a Gaussian blob at the center (3 classes), two interleaved
// half-moons (2 classes), and a labeled Gaussian mixture. All are
// deterministic per seed; each call derives its own RNG stream.

// Center blob stddev is min(radii)/5. Ring radii must be distinct positive.
Dataset gen_rings(std::size_t n_per_ring, double radius1, double radius2,
                  double noise_sigma, std::size_t center_cluster_n, std::uint64_t seed);

Dataset gen_moons(std::size_t n_per_moon, double noise_sigma, std::uint64_t seed);

Dataset gen_gaussian_mixture(const std::vector<std::size_t>& counts,
                             const std::vector<std::vector<double>>& means,
                             const std::vector<double>& sigmas, std::uint64_t seed);

}  // namespace bsvc
