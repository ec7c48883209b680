#include "bsvc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "bsvc/errors.hpp"
#include "bsvc/rng.hpp"

namespace bsvc {

namespace {

constexpr double kPi = 3.14159265358979323846;

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last) {
        throw parse_error("line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    }
    return v;
}

}  // namespace

void Dataset::validate() const {
    if (dim == 0 || points.empty()) throw invalid_input("dataset is empty");
    if (points.size() % dim != 0) throw invalid_input("dataset rows are not uniform");
    if (labels && labels->size() != n()) {
        throw invalid_input("label count does not match point count");
    }
}

Dataset load_csv(const std::string& path, bool has_header,
                 std::optional<std::size_t> label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);

    Dataset out;
    out.name = path;
    std::map<std::string, int> label_ids;
    std::vector<int> labels;

    std::string line;
    std::size_t line_no = 0;
    std::size_t n_cols = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && has_header) continue;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (n_cols == 0) {
            n_cols = cells.size();
            if (label_column && *label_column >= n_cols) {
                throw parse_error("label column " + std::to_string(*label_column) +
                                  " out of range for " + std::to_string(n_cols) + " columns");
            }
            out.dim = n_cols - (label_column ? 1 : 0);
            if (out.dim == 0) throw parse_error("line " + std::to_string(line_no) + ": no feature columns");
        } else if (cells.size() != n_cols) {
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(n_cols) + " cells, got " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (label_column && c == *label_column) {
                auto it = label_ids.try_emplace(cells[c], static_cast<int>(label_ids.size())).first;
                labels.push_back(it->second);
            } else {
                out.points.push_back(parse_cell(cells[c], line_no));
            }
        }
    }
    if (out.points.empty()) throw parse_error("line 1: file has no data rows");
    if (label_column) out.labels = std::move(labels);
    out.validate();
    return out;
}

void save_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    std::string buf;
    for (std::size_t i = 0; i < data.n(); ++i) {
        buf.clear();
        auto r = data.row(i);
        for (std::size_t j = 0; j < data.dim; ++j) {
            if (j) buf += ',';
            append_double(buf, r[j]);
        }
        if (data.labels) {
            buf += ',';
            buf += std::to_string((*data.labels)[i]);
        }
        buf += '\n';
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path);
}

std::pair<Dataset, Standardization> standardize(const Dataset& data) {
    data.validate();
    if (data.n() < 2) throw invalid_input("standardize needs at least 2 points");
    const std::size_t n = data.n();
    const std::size_t d = data.dim;
    Standardization s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = data.row(i);
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = data.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double diff = r[j] - s.mean[j];
            s.stddev[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.stddev[j] = std::sqrt(s.stddev[j] / static_cast<double>(n));
        if (s.stddev[j] == 0.0) s.stddev[j] = 1.0;
    }
    return {apply_standardization(data, s), s};
}

Dataset apply_standardization(const Dataset& data, const Standardization& s) {
    data.validate();
    if (s.mean.size() != data.dim || s.stddev.size() != data.dim) {
        throw invalid_input("standardization dimension mismatch");
    }
    Dataset out = data;
    for (std::size_t i = 0; i < out.n(); ++i) {
        for (std::size_t j = 0; j < out.dim; ++j) {
            out.points[i * out.dim + j] = (out.points[i * out.dim + j] - s.mean[j]) / s.stddev[j];
        }
    }
    return out;
}

Dataset gen_rings(std::size_t n_per_ring, double radius1, double radius2,
                  double noise_sigma, std::size_t center_cluster_n, std::uint64_t seed) {
    if (!(radius1 > 0.0) || !(radius2 > 0.0) || radius1 == radius2) {
        throw invalid_input("ring radii must be distinct and positive");
    }
    if (n_per_ring == 0 || center_cluster_n == 0) throw invalid_input("counts must be >= 1");
    auto rng = SplitMix64::derive(seed, /*tag=*/0x52494e47);  // "RING"
    Dataset out;
    out.dim = 2;
    out.name = "rings";
    std::vector<int> labels;
    const double radii[2] = {radius1, radius2};
    for (int k = 0; k < 2; ++k) {
        // equispaced angles with Gaussian radial jitter: noisy circles with
        // even angular coverage
        for (std::size_t i = 0; i < n_per_ring; ++i) {
            double theta = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_per_ring);
            double r = radii[k] + noise_sigma * rng.next_gaussian();
            out.points.push_back(r * std::cos(theta));
            out.points.push_back(r * std::sin(theta));
            labels.push_back(k);
        }
    }
    const double center_sigma = std::min(radius1, radius2) / 5.0;
    for (std::size_t i = 0; i < center_cluster_n; ++i) {
        out.points.push_back(center_sigma * rng.next_gaussian());
        out.points.push_back(center_sigma * rng.next_gaussian());
        labels.push_back(2);
    }
    out.labels = std::move(labels);
    return out;
}

Dataset gen_moons(std::size_t n_per_moon, double noise_sigma, std::uint64_t seed) {
    if (n_per_moon == 0) throw invalid_input("counts must be >= 1");
    auto rng = SplitMix64::derive(seed, /*tag=*/0x4d4f4f4e);  // "MOON"
    Dataset out;
    out.dim = 2;
    out.name = "moons";
    std::vector<int> labels;
    // upper arc centered at the origin, lower arc at (1, 0.5), both radius 1;
    // equispaced arc positions with Gaussian radial jitter
    auto arc_t = [&](std::size_t i) {
        return n_per_moon == 1 ? 0.5 * kPi
                               : kPi * static_cast<double>(i) / static_cast<double>(n_per_moon - 1);
    };
    for (std::size_t i = 0; i < n_per_moon; ++i) {
        double t = arc_t(i);
        double r = 1.0 + noise_sigma * rng.next_gaussian();
        out.points.push_back(r * std::cos(t));
        out.points.push_back(r * std::sin(t));
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_per_moon; ++i) {
        double t = arc_t(i);
        double r = 1.0 + noise_sigma * rng.next_gaussian();
        out.points.push_back(1.0 - r * std::cos(t));
        out.points.push_back(0.5 - r * std::sin(t));
        labels.push_back(1);
    }
    out.labels = std::move(labels);
    return out;
}

Dataset gen_gaussian_mixture(const std::vector<std::size_t>& counts,
                             const std::vector<std::vector<double>>& means,
                             const std::vector<double>& sigmas, std::uint64_t seed) {
    if (counts.empty() || counts.size() != means.size() || counts.size() != sigmas.size()) {
        throw invalid_input("mixture parameter lists must be nonempty and parallel");
    }
    const std::size_t d = means[0].size();
    for (const auto& m : means) {
        if (m.size() != d || d == 0) throw invalid_input("mixture means must share a positive dimension");
    }
    auto rng = SplitMix64::derive(seed, /*tag=*/0x474d4958);  // "GMIX"
    Dataset out;
    out.dim = d;
    out.name = "gaussian_mixture";
    std::vector<int> labels;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out.points.push_back(means[k][j] + sigmas[k] * rng.next_gaussian());
            }
            labels.push_back(static_cast<int>(k));
        }
    }
    out.labels = std::move(labels);
    return out;
}

}  // namespace bsvc
