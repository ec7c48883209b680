#include "bsvc/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "bsvc/errors.hpp"
#include "bsvc/kernels.hpp"

namespace bsvc {

void AssignConfig::validate() const {
    if (!(epsilon >= 0.0)) throw invalid_input("epsilon must be >= 0");
    if (!(fp_tol > 0.0)) throw invalid_input("fp_tol must be positive");
    if (fp_max_iter == 0) throw invalid_input("fp_max_iter must be >= 1");
    if (!(merge_tol > 0.0)) throw invalid_input("merge_tol must be positive");
    if (m_samples == 0) throw invalid_input("m_samples must be >= 1");
}

std::vector<double> fixed_point_map(const KernelExpansion& model, std::span<const double> x) {
    if (model.empty()) throw invalid_state("fixed_point_map: empty support");
    const std::size_t b = model.size();
    const std::size_t d = model.dim();
    std::vector<double> weights(b);
    model.kernel_row(x, weights.data());  // K(x_i, x)
    for (std::size_t i = 0; i < b; ++i) weights[i] *= model.alpha(i);

    double den = 0.0;
    for (double w : weights) den += w;
    if (std::abs(den) < 1e-300) {
        throw degenerate_point("fixed_point_map: vanishing denominator");
    }
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = kernels::dot(weights.data(), model.col_ptrs()[j], b) / den;
    }
    return out;
}

namespace {

// Nearest support vector with alpha > 0, or npos.
std::size_t nearest_positive_support(const KernelExpansion& model,
                                     std::span<const double> x) {
    std::size_t best = KernelExpansion::npos;
    double best_d = std::numeric_limits<double>::infinity();
    std::vector<double> p(model.dim());
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (!(model.alpha(i) > 0.0)) continue;
        for (std::size_t j = 0; j < model.dim(); ++j) p[j] = model.coord(i, j);
        double dsq = kernels::sqdist(p.data(), x.data(), model.dim());
        if (dsq < best_d) {
            best_d = dsq;
            best = i;
        }
    }
    return best;
}

}  // namespace

EquilibriumResult find_equilibrium(const KernelExpansion& model, std::span<const double> x0,
                                   const AssignConfig& cfg) {
    cfg.validate();
    if (model.empty()) throw invalid_state("find_equilibrium: empty support");
    if (x0.size() != model.dim()) throw invalid_input("find_equilibrium: dimension mismatch");

    std::vector<double> x(x0.begin(), x0.end());
    bool restarted = false;
    for (std::uint32_t iter = 1; iter <= cfg.fp_max_iter; ++iter) {
        std::vector<double> next;
        try {
            next = fixed_point_map(model, x);
        } catch (const degenerate_point&) {
            if (restarted) return {std::move(x), false, iter};
            std::size_t sv = nearest_positive_support(model, x);
            if (sv == KernelExpansion::npos) return {std::move(x), false, iter};
            x = model.point(sv);
            restarted = true;
            continue;
        }
        double step = std::sqrt(kernels::sqdist(next.data(), x.data(), x.size()));
        if (step <= cfg.fp_tol) {
            // return the pre-map point: its residual ||P(x)-x|| = step is the
            // quantity just verified
            return {std::move(x), true, iter};
        }
        x = std::move(next);
    }
    return {std::move(x), false, cfg.fp_max_iter};
}

std::vector<std::size_t> extended_boundary(const KernelExpansion& model, const Dataset& data,
                                           double epsilon) {
    data.validate();
    if (data.dim != model.dim()) throw invalid_input("extended_boundary: dimension mismatch");
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (std::abs(model.decision_value(data.row(i))) <= epsilon) members.push_back(i);
    }
    return members;
}

DedupResult dedup_equilibria(const std::vector<EquilibriumResult>& points, double merge_tol) {
    DedupResult out;
    out.assignment.reserve(points.size());
    for (const EquilibriumResult& eq : points) {
        std::size_t rep = out.representatives.size();
        for (std::size_t r = 0; r < out.representatives.size(); ++r) {
            const auto& cand = out.representatives[r];
            if (cand.size() != eq.point.size()) continue;
            double dsq = kernels::sqdist(cand.data(), eq.point.data(), cand.size());
            if (std::sqrt(dsq) <= merge_tol) {
                rep = r;
                break;
            }
        }
        if (rep == out.representatives.size()) out.representatives.push_back(eq.point);
        out.assignment.push_back(rep);
    }
    return out;
}

bool segment_connected(const KernelExpansion& model, std::span<const double> a,
                       std::span<const double> b, std::uint32_t m_samples) {
    if (a.size() != b.size() || a.size() != model.dim()) {
        throw invalid_input("segment_connected: dimension mismatch");
    }
    std::vector<double> p(a.size());
    for (std::uint32_t j = 1; j <= m_samples; ++j) {
        double frac = static_cast<double>(j) / (static_cast<double>(m_samples) + 1.0);
        for (std::size_t c = 0; c < a.size(); ++c) p[c] = a[c] + (b[c] - a[c]) * frac;
        if (model.decision_value(p) < 0.0) return false;
    }
    return true;
}

ClusterSolution assign_clusters(const KernelExpansion& model, const Dataset& data,
                                const AssignConfig& cfg) {
    cfg.validate();
    data.validate();
    if (model.empty()) throw invalid_state("assign_clusters: empty support");
    if (data.dim != model.dim()) throw invalid_input("assign_clusters: dimension mismatch");

    ClusterSolution sol;
    sol.boundary_members = extended_boundary(model, data, cfg.epsilon);
    const std::size_t n = data.n();

    if (sol.boundary_members.empty()) {
        sol.labels.assign(n, 0);
        sol.num_clusters = 1;
        return sol;
    }

    // one trajectory per boundary seed
    std::vector<EquilibriumResult> termini;
    termini.reserve(sol.boundary_members.size());
    for (std::size_t idx : sol.boundary_members) {
        termini.push_back(find_equilibrium(model, data.row(idx), cfg));
    }

    DedupResult dedup = dedup_equilibria(termini, cfg.merge_tol);
    sol.equilibria = dedup.representatives;
    const std::size_t M = sol.equilibria.size();

    sol.adjacency.assign(M * M, 0);
    for (std::size_t i = 0; i < M; ++i) {
        sol.adjacency[i * M + i] = 1;
        for (std::size_t j = i + 1; j < M; ++j) {
            bool conn = segment_connected(model, sol.equilibria[i], sol.equilibria[j],
                                          cfg.m_samples);
            sol.adjacency[i * M + j] = conn;
            sol.adjacency[j * M + i] = conn;
        }
    }

    // connected components over the adjacency, labeled in first-seen order
    sol.equilibrium_labels.assign(M, -1);
    int next_label = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < M; ++s) {
        if (sol.equilibrium_labels[s] != -1) continue;
        int label = next_label++;
        stack.push_back(s);
        sol.equilibrium_labels[s] = label;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < M; ++v) {
                if (sol.adjacency[u * M + v] && sol.equilibrium_labels[v] == -1) {
                    sol.equilibrium_labels[v] = label;
                    stack.push_back(v);
                }
            }
        }
    }
    sol.num_clusters = static_cast<std::size_t>(next_label);

    sol.labels.assign(n, -1);
    for (std::size_t q = 0; q < sol.boundary_members.size(); ++q) {
        sol.labels[sol.boundary_members[q]] = sol.equilibrium_labels[dedup.assignment[q]];
    }
    // everything else goes to its nearest boundary member (ties: lowest index)
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.labels[i] != -1) continue;
        auto xi = data.row(i);
        std::size_t best = sol.boundary_members[0];
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t member : sol.boundary_members) {
            double dsq = kernels::sqdist(xi.data(), data.row(member).data(), data.dim);
            if (dsq < best_d) {
                best_d = dsq;
                best = member;
            }
        }
        sol.labels[i] = sol.labels[best];
    }
    return sol;
}

void save_cluster_csv(const ClusterSolution& solution, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "point_index,cluster_id,in_boundary\n";
    std::vector<char> in_boundary(solution.labels.size(), 0);
    for (std::size_t idx : solution.boundary_members) in_boundary[idx] = 1;
    for (std::size_t i = 0; i < solution.labels.size(); ++i) {
        out << i << ',' << solution.labels[i] << ',' << int(in_boundary[i]) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

std::vector<int> load_cluster_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;  // header
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw parse_error("line " + std::to_string(line_no) + ": expected 3 columns");
        }
        try {
            labels.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
        } catch (const std::exception&) {
            throw parse_error("line " + std::to_string(line_no) + ": bad cluster id");
        }
    }
    if (labels.empty()) throw parse_error("line 1: no label rows");
    return labels;
}

double suggest_epsilon(const KernelExpansion& model, const Dataset& data) {
    data.validate();
    if (model.empty()) throw invalid_state("suggest_epsilon: empty support");
    std::vector<double> mags(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        mags[i] = std::abs(model.decision_value(data.row(i)));
    }
    std::sort(mags.begin(), mags.end());
    return mags[static_cast<std::size_t>(0.1 * static_cast<double>(mags.size() - 1))];
}

std::string cluster_sidecar_json(const ClusterSolution& solution, double epsilon) {
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["M"] = solution.equilibria.size();
    j["num_clusters"] = solution.num_clusters;
    j["boundary_size"] = solution.boundary_members.size();
    j["equilibria"] = solution.equilibria;
    j["equilibrium_labels"] = solution.equilibrium_labels;
    nlohmann::json adj = nlohmann::json::array();
    const std::size_t M = solution.equilibria.size();
    for (std::size_t i = 0; i < M; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t jj = 0; jj < M; ++jj) {
            row.push_back(static_cast<bool>(solution.adjacency[i * M + jj]));
        }
        adj.push_back(row);
    }
    j["adjacency"] = adj;
    return j.dump();
}

}  // namespace bsvc
