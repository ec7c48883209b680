#include "bsvc/cvi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "bsvc/errors.hpp"
#include "bsvc/kernels.hpp"

namespace bsvc::cvi {

namespace {

void check_ids(std::span<const int> ids, const char* what) {
    for (int v : ids) {
        if (v < 0) throw invalid_input(std::string(what) + " ids must be nonnegative");
    }
}

void check_pair(std::span<const int> predicted, std::span<const int> truth) {
    if (truth.empty()) throw invalid_input("truth labels are required");
    if (predicted.size() != truth.size()) {
        throw invalid_input("predicted and truth must have equal length");
    }
    check_ids(predicted, "cluster");
    check_ids(truth, "class");
}

std::map<int, std::vector<std::size_t>> group_by(std::span<const int> ids) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[ids[i]].push_back(i);
    return groups;
}

// contingency N_ij plus marginals, keyed (cluster, class)
struct Contingency {
    std::map<std::pair<int, int>, std::uint64_t> cells;
    std::map<int, std::uint64_t> cluster_sizes;
    std::map<int, std::uint64_t> class_sizes;
    std::uint64_t n = 0;
};

Contingency contingency(std::span<const int> predicted, std::span<const int> truth) {
    Contingency c;
    c.n = predicted.size();
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++c.cells[{predicted[i], truth[i]}];
        ++c.cluster_sizes[predicted[i]];
        ++c.class_sizes[truth[i]];
    }
    return c;
}

double euclid(const Dataset& data, std::size_t a, std::size_t b) {
    return std::sqrt(kernels::sqdist(data.row(a).data(), data.row(b).data(), data.dim));
}

}  // namespace

void LabeledPartition::validate() const {
    check_ids(predicted, "cluster");
    if (truth) {
        if (truth->size() != predicted.size()) {
            throw invalid_input("predicted and truth must have equal length");
        }
        check_ids(*truth, "class");
    }
}

double compactness(const Dataset& data, std::span<const int> predicted) {
    data.validate();
    if (predicted.size() != data.n()) throw invalid_input("label count mismatch");
    check_ids(predicted, "cluster");
    double total = 0.0;
    for (const auto& [id, members] : group_by(predicted)) {
        const std::size_t nk = members.size();
        if (nk < 2) continue;  // singletons contribute 0
        double pair_sum = 0.0;
        for (std::size_t a = 0; a < nk; ++a) {
            for (std::size_t b = a + 1; b < nk; ++b) {
                pair_sum += euclid(data, members[a], members[b]);
            }
        }
        double pairs = static_cast<double>(nk) * (static_cast<double>(nk) - 1.0) / 2.0;
        total += static_cast<double>(nk) * pair_sum / pairs;
    }
    return total / static_cast<double>(data.n());
}

double purity(std::span<const int> predicted, std::span<const int> truth) {
    check_pair(predicted, truth);
    Contingency c = contingency(predicted, truth);
    std::map<int, std::uint64_t> majority;
    for (const auto& [key, count] : c.cells) {
        auto& best = majority[key.first];
        best = std::max(best, count);
    }
    std::uint64_t sum = 0;
    for (const auto& [id, count] : majority) sum += count;
    return static_cast<double>(sum) / static_cast<double>(c.n);
}

double rand_index(std::span<const int> predicted, std::span<const int> truth) {
    check_pair(predicted, truth);
    if (predicted.size() < 2) throw invalid_input("rand_index needs n >= 2");
    Contingency c = contingency(predicted, truth);
    auto choose2 = [](std::uint64_t v) { return v * (v - 1) / 2; };
    std::uint64_t tp = 0;
    for (const auto& [key, count] : c.cells) tp += choose2(count);
    std::uint64_t same_cluster = 0;
    for (const auto& [id, count] : c.cluster_sizes) same_cluster += choose2(count);
    std::uint64_t same_class = 0;
    for (const auto& [id, count] : c.class_sizes) same_class += choose2(count);
    const std::uint64_t total = choose2(c.n);
    const std::uint64_t fp = same_cluster - tp;
    const std::uint64_t fn = same_class - tp;
    const std::uint64_t tn = total - tp - fp - fn;
    return static_cast<double>(tp + tn) / static_cast<double>(total);
}

double davies_bouldin(const Dataset& data, std::span<const int> predicted) {
    data.validate();
    if (predicted.size() != data.n()) throw invalid_input("label count mismatch");
    check_ids(predicted, "cluster");
    auto groups = group_by(predicted);
    const std::size_t m = groups.size();
    if (m < 2) throw invalid_input("davies_bouldin needs >= 2 clusters");

    const std::size_t d = data.dim;
    std::vector<std::vector<double>> centroids;
    std::vector<double> spreads;
    centroids.reserve(m);
    spreads.reserve(m);
    for (const auto& [id, members] : groups) {
        std::vector<double> c(d, 0.0);
        for (std::size_t idx : members) {
            auto r = data.row(idx);
            for (std::size_t j = 0; j < d; ++j) c[j] += r[j];
        }
        for (double& v : c) v /= static_cast<double>(members.size());
        double spread = 0.0;
        for (std::size_t idx : members) {
            spread += std::sqrt(kernels::sqdist(data.row(idx).data(), c.data(), d));
        }
        spread /= static_cast<double>(members.size());
        centroids.push_back(std::move(c));
        spreads.push_back(spread);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            double dist = std::sqrt(
                kernels::sqdist(centroids[i].data(), centroids[j].data(), d));
            if (dist == 0.0) {
                throw degenerate_clustering("davies_bouldin: coincident centroids");
            }
            worst = std::max(worst, (spreads[i] + spreads[j]) / dist);
        }
        total += worst;
    }
    return total / static_cast<double>(m);
}

double nmi(std::span<const int> predicted, std::span<const int> truth) {
    check_pair(predicted, truth);
    Contingency c = contingency(predicted, truth);
    const double n = static_cast<double>(c.n);

    auto entropy = [&](const std::map<int, std::uint64_t>& sizes) {
        double h = 0.0;
        for (const auto& [id, count] : sizes) {
            if (count == 0) continue;
            double Pxy = static_cast<double>(count) / n;
            h -= Pxy * std::log(Pxy);
        }
        return h;
    };
    const double h_clusters = entropy(c.cluster_sizes);
    const double h_classes = entropy(c.class_sizes);
    if (h_clusters + h_classes == 0.0) return 1.0;  // single class and cluster

    double mi = 0.0;
    for (const auto& [key, count] : c.cells) {
        if (count == 0) continue;
        double joint = static_cast<double>(count) / n;
        double pk = static_cast<double>(c.cluster_sizes[key.first]) / n;
        double pj = static_cast<double>(c.class_sizes[key.second]) / n;
        mi += joint * std::log(joint / (pk * pj));
    }
    double value = mi / ((h_clusters + h_classes) / 2.0);
    return std::clamp(value, 0.0, 1.0);
}

CviReport make_report(const Dataset& data, std::span<const int> predicted,
                      std::optional<std::span<const int>> truth) {
    CviReport report;
    report.compactness = compactness(data, predicted);
    try {
        report.dbi = davies_bouldin(data, predicted);
    } catch (const invalid_input&) {
    } catch (const degenerate_clustering&) {
    }
    if (truth) {
        report.purity = purity(predicted, *truth);
        if (predicted.size() >= 2) report.rand = rand_index(predicted, *truth);
        report.nmi = nmi(predicted, *truth);
    }
    return report;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string to_json(const CviReport& report) {
    nlohmann::json j;
    j["compactness"] = report.compactness;
    j["purity"] = opt_json(report.purity);
    j["rand"] = opt_json(report.rand);
    j["dbi"] = opt_json(report.dbi);
    j["nmi"] = opt_json(report.nmi);
    return j.dump();
}

CviReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        CviReport report;
        report.compactness = j.at("compactness").get<double>();
        report.purity = opt_from(j, "purity");
        report.rand = opt_from(j, "rand");
        report.dbi = opt_from(j, "dbi");
        report.nmi = opt_from(j, "nmi");
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("CVI report JSON: ") + e.what());
    }
}

}  // namespace bsvc::cvi
