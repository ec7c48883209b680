// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs everything through the library plus the installed CLI binary
// where file-level determinism is the contract.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "bsvc/assignment.hpp"
#include "bsvc/cvi.hpp"
#include "bsvc/data.hpp"
#include "bsvc/errors.hpp"
#include "bsvc/kernels.hpp"
#include "bsvc/kernel_model.hpp"
#include "bsvc/rng.hpp"
#include "bsvc/theory.hpp"
#include "bsvc/trainer.hpp"

using namespace bsvc;

namespace {

int g_failures = 0;

struct Criterion {
    std::string name;
    std::chrono::steady_clock::time_point start;
    explicit Criterion(std::string n) : name(std::move(n)) {
        start = std::chrono::steady_clock::now();
    }
    void report(bool pass, const std::string& detail) const {
        auto elapsed = std::chrono::duration_cast<std::chrono::duration<double>>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        std::printf("%-4s %s (%.1fs) %s\n", pass ? "PASS" : "FAIL", name.c_str(), elapsed,
                    detail.c_str());
        std::fflush(stdout);
        if (!pass) ++g_failures;
    }
};

Dataset gaussian_data(std::size_t n, std::size_t d, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Dataset out;
    out.dim = d;
    for (std::size_t i = 0; i < n * d; ++i) out.points.push_back(rng.next_gaussian());
    return out;
}

// ---------------------------------------------------------------------------
// criterion 1: lemma invariants over randomized removal runs

void criterion1_lemma_invariants() {
    Criterion c("criterion 1 (lemma invariant suite)");
    const double Cs[] = {0.5, 1.0, 4.0};
    const std::uint32_t Bs[] = {10, 50};
    std::size_t runs = 0, violations = 0;
    SplitMix64 meta(20240101);
    for (int rep = 0; rep < 17; ++rep) {
        for (double C : Cs) {
            for (std::uint32_t B : Bs) {
                std::size_t d = 1 + meta.next_below(10);    // d <= 10
                std::size_t n = 20 + meta.next_below(481);  // N <= 500
                Dataset data = gaussian_data(n, d, meta.next_u64());
                TrainConfig cfg;
                cfg.kernel = {KernelKind::rbf, 0.25 + meta.next_double() * 2.0};
                cfg.C = C;
                cfg.budget = B;
                cfg.strategy = Strategy::removal;
                cfg.stop_theta = 0.0;
                cfg.max_steps = 700;
                cfg.seed = meta.next_u64();
                auto res = train(data, cfg);
                auto report = theory::audit_trace(res.trace, C, 1.0, Strategy::removal);
                violations += report.lemma1_violations.size() +
                              report.lemma2_violations.size() +
                              report.lemma4_violations.size();
                ++runs;
            }
        }
    }
    c.report(runs >= 100 && violations == 0,
             std::to_string(runs) + " runs, " + std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------------------
// criterion 2: O(log T / T) convergence of the averaged iterate

void criterion2_convergence_rate() {
    Criterion c("criterion 2 (convergence-rate property)");
    Dataset data = gaussian_data(200, 2, 777);
    const double C = 1.0;
    TrainConfig base;
    base.kernel = {KernelKind::rbf, 1.0};
    base.C = C;
    base.stop_theta = 0.0;
    base.record_trace = false;
    base.track_average = true;

    TrainConfig ref = base;
    ref.max_steps = 1000000;
    ref.seed = 9999;
    auto ref_run = train(data, ref);
    double j_star = std::min(objective(*ref_run.averaged_model, data, C),
                             objective(ref_run.model, data, C));

    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TrainConfig cfg3 = base;
        cfg3.max_steps = 1000;
        cfg3.seed = seed;
        TrainConfig cfg4 = base;
        cfg4.max_steps = 10000;
        cfg4.seed = seed;
        double gap3 = objective(*train(data, cfg3).averaged_model, data, C) - j_star;
        double gap4 = objective(*train(data, cfg4).averaged_model, data, C) - j_star;
        ratios.push_back(gap3 > 0.0 ? gap4 / gap3 : 0.0);
    }
    std::sort(ratios.begin(), ratios.end());
    double median = (ratios[4] + ratios[5]) / 2.0;
    c.report(median <= 0.5, "median gap(1e4)/gap(1e3) = " + std::to_string(median));
}

// ---------------------------------------------------------------------------
// criterion 3: projection correctness

void criterion3_projection() {
    Criterion c("criterion 3 (projection correctness)");
    SplitMix64 rng(333);
    const KernelSpec spec{KernelKind::rbf, 1.0};
    const std::uint32_t k = 5;
    bool ok = true;
    std::string detail;

    // residual orthogonality on 100 well-conditioned neighbor sets
    double worst_resid = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t d = 2 + rng.next_below(4);
        std::vector<std::vector<double>> pts(k);
        for (auto& p : pts) {
            p.resize(d);
            for (auto& v : p) v = 3.0 * rng.next_gaussian();
        }
        std::vector<double> xp(d);
        for (auto& v : xp) v = 3.0 * rng.next_gaussian();

        std::vector<double> gram(k * k), cross(k);
        for (std::uint32_t i = 0; i < k; ++i) {
            for (std::uint32_t j = 0; j < k; ++j) {
                gram[i * k + j] = kernel_eval(spec, pts[i], pts[j]);
            }
            cross[i] = kernel_eval(spec, pts[i], xp);
        }
        std::vector<double> dvec;
        try {
            dvec = solve_projection_coeffs(gram, cross, 0.0);
        } catch (const numerical_failure&) {
            --trial;  // resample an ill-conditioned draw; the criterion is about
            continue;  // well-conditioned sets
        }
        for (std::uint32_t j = 0; j < k; ++j) {
            double resid = cross[j];
            for (std::uint32_t i = 0; i < k; ++i) resid -= dvec[i] * gram[j * k + i];
            worst_resid = std::max(worst_resid, std::abs(resid));
        }
    }
    if (worst_resid > 1e-8) {
        ok = false;
        detail += "residual " + std::to_string(worst_resid) + "; ";
    }

    // x_p inside the neighbor set: ||w|| preserved through maintain_projection
    double worst_drift = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t d = 2;
        // build a model with an exact duplicate via serialization
        std::string json = R"({"kernel":{"kind":"rbf","gamma":1.0},"rho":1.0,"dim":2,"support":[)";
        std::vector<double> dup{rng.next_gaussian(), rng.next_gaussian()};
        auto point_json = [&](const std::vector<double>& p, double alpha) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), R"({"x":[%.17g,%.17g],"alpha":%.17g})", p[0], p[1],
                          alpha);
            return std::string(buf);
        };
        // the smallest-alpha term is the duplicate we remove
        json += point_json(dup, 0.05);
        json += "," + point_json(dup, 0.8);
        for (int extra = 0; extra < 4; ++extra) {
            std::vector<double> p{rng.next_gaussian() * 2.0, rng.next_gaussian() * 2.0};
            json += "," + point_json(p, 0.3 + rng.next_double());
        }
        json += "]}";
        auto model = model_from_json(json);
        (void)d;
        double norm_before = model.norm();
        SplitMix64 prng(trial);
        maintain_projection(model, NeighborSelector::knn, 5, prng, 0.0);
        worst_drift = std::max(worst_drift, std::abs(model.norm() - norm_before));
    }
    if (worst_drift > 1e-9) {
        ok = false;
        detail += "norm drift " + std::to_string(worst_drift) + "; ";
    }
    c.report(ok, detail.empty() ? "residual <= 1e-8, norm preserved <= 1e-9" : detail);
}

// ---------------------------------------------------------------------------
// criterion 4: CVI oracle equivalence

double rand_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::uint64_t agree = 0, total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            ++total;
            if ((pred[i] == pred[j]) == (truth[i] == truth[j])) ++agree;
        }
    }
    return double(agree) / double(total);
}

double purity_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::map<int, std::map<int, std::uint64_t>> table;
    for (std::size_t i = 0; i < pred.size(); ++i) ++table[pred[i]][truth[i]];
    std::uint64_t total = 0;
    for (const auto& [cl, classes] : table) {
        std::uint64_t best = 0;
        for (const auto& [id, cnt] : classes) best = std::max(best, cnt);
        total += best;
    }
    return double(total) / double(pred.size());
}

double nmi_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
    const double n = double(pred.size());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pk, pj;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        joint[{pred[i], truth[i]}] += 1.0;
        pk[pred[i]] += 1.0;
        pj[truth[i]] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, cnt] : joint) {
        mi += cnt / n * std::log(cnt * n / (pk[key.first] * pj[key.second]));
    }
    double hk = 0.0, hj = 0.0;
    for (const auto& [id, cnt] : pk) hk -= cnt / n * std::log(cnt / n);
    for (const auto& [id, cnt] : pj) hj -= cnt / n * std::log(cnt / n);
    if (hk + hj == 0.0) return 1.0;
    return std::clamp(mi / ((hk + hj) / 2.0), 0.0, 1.0);
}

void criterion4_cvi_oracles() {
    Criterion c("criterion 4 (CVI oracle equivalence)");
    SplitMix64 rng(444);
    bool ok = true;
    std::string detail = "200 pairs exact";
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::size_t n = 2 + rng.next_below(11);
        std::vector<int> pred(n), truth(n);
        for (auto& v : pred) v = int(rng.next_below(1 + rng.next_below(4)));
        for (auto& v : truth) v = int(rng.next_below(1 + rng.next_below(4)));

        if (cvi::rand_index(pred, truth) != rand_oracle(pred, truth)) {
            ok = false;
            detail = "rand mismatch";
        }
        if (cvi::purity(pred, truth) != purity_oracle(pred, truth)) {
            ok = false;
            detail = "purity mismatch";
        }
        if (std::abs(cvi::nmi(pred, truth) - nmi_oracle(pred, truth)) > 1e-12) {
            ok = false;
            detail = "nmi mismatch";
        }

        // relabeling invariance of all five on a small random geometry
        Dataset d;
        d.dim = 2;
        for (std::size_t i = 0; i < 2 * n; ++i) d.points.push_back(rng.next_gaussian());
        std::vector<int> pred2(pred), truth2(truth);
        for (auto& v : pred2) v = 7 - v;  // bijective relabel
        for (auto& v : truth2) v = 9 - v;
        if (cvi::purity(pred2, truth2) != cvi::purity(pred, truth) ||
            cvi::rand_index(pred2, truth2) != cvi::rand_index(pred, truth) ||
            std::abs(cvi::nmi(pred2, truth2) - cvi::nmi(pred, truth)) > 1e-12 ||
            std::abs(cvi::compactness(d, pred2) - cvi::compactness(d, pred)) > 1e-12) {
            ok = false;
            detail = "relabeling variance";
        }
        bool dbi_ok = true;
        try {
            double a = cvi::davies_bouldin(d, pred);
            double b = cvi::davies_bouldin(d, pred2);
            dbi_ok = std::abs(a - b) <= 1e-12;
        } catch (const std::exception&) {
            // single-cluster draws have no DBI; invariance holds trivially
        }
        if (!dbi_ok) {
            ok = false;
            detail = "dbi relabeling variance";
        }
    }
    c.report(ok, detail);
}

// ---------------------------------------------------------------------------
// criteria 5 + 7: synthetic figure reproduction and assignment reduction

struct SyntheticOutcome {
    std::size_t clusters = 0;
    double purity = 0.0;
    std::size_t M = 0;
    std::size_t boundary = 0;
    ClusterSolution solution;
    KernelExpansion model{KernelSpec{KernelKind::rbf, 1.0}, 2};
};

SyntheticOutcome run_synthetic(const Dataset& data, double gamma, double C,
                               std::uint32_t budget, double epsilon, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.kernel = {KernelKind::rbf, gamma};
    cfg.C = C;
    if (budget > 0) cfg.budget = budget;
    cfg.strategy = Strategy::removal;
    cfg.stop_theta = 0.01;
    cfg.max_steps = 100000;
    cfg.seed = seed;
    auto trained = train(data, cfg);

    AssignConfig acfg;
    acfg.epsilon = epsilon >= 0.0 ? epsilon : suggest_epsilon(trained.model, data);
    SyntheticOutcome out;
    out.solution = assign_clusters(trained.model, data, acfg);
    out.clusters = out.solution.num_clusters;
    out.purity = cvi::purity(out.solution.labels, *data.labels);
    out.M = out.solution.equilibria.size();
    out.boundary = out.solution.boundary_members.size();
    out.model = trained.model;
    return out;
}

// documented tuned settings (gamma and C from the paper grid {2^-5..2^5})
struct SynthSetup {
    double gamma, C, epsilon;
    std::uint32_t budget;
    std::uint64_t train_seed;
};
const SynthSetup kRings{8.0, 8.0, 0.35, 80, 5};
const SynthSetup kMoons{8.0, 8.0, 0.35, 60, 5};
const SynthSetup kGauss{2.0, 8.0, 0.35, 50, 5};

SyntheticOutcome g_rings_outcome;  // shared with criterion 7

void criterion5_synthetics() {
    Criterion c("criterion 5 (synthetic figure reproduction)");
    bool ok = true;
    std::string detail;

    Dataset rings = gen_rings(150, 1.0, 2.0, 0.05, 60, 42);
    auto t0 = std::chrono::steady_clock::now();
    g_rings_outcome = run_synthetic(rings, kRings.gamma, kRings.C, kRings.budget,
                                    kRings.epsilon, kRings.train_seed);
    double rings_s = std::chrono::duration_cast<std::chrono::duration<double>>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    if (g_rings_outcome.clusters != 3 || g_rings_outcome.purity < 0.95 || rings_s >= 10.0) {
        ok = false;
    }
    detail += "rings: " + std::to_string(g_rings_outcome.clusters) + " clusters, purity " +
              std::to_string(g_rings_outcome.purity) + "; ";

    Dataset moons = gen_moons(150, 0.05, 42);
    t0 = std::chrono::steady_clock::now();
    auto moons_out = run_synthetic(moons, kMoons.gamma, kMoons.C, kMoons.budget, kMoons.epsilon,
                                   kMoons.train_seed);
    double moons_s = std::chrono::duration_cast<std::chrono::duration<double>>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    if (moons_out.clusters != 2 || moons_out.purity < 0.95 || moons_s >= 10.0) ok = false;
    detail += "moons: " + std::to_string(moons_out.clusters) + " clusters, purity " +
              std::to_string(moons_out.purity) + "; ";

    Dataset g3 = gen_gaussian_mixture({100, 100, 100}, {{0, 0}, {4, 0}, {2, 3.5}},
                                      {0.35, 0.35, 0.35}, 42);
    auto g3_out = run_synthetic(g3, kGauss.gamma, kGauss.C, kGauss.budget, kGauss.epsilon,
                                kGauss.train_seed);
    if (g3_out.clusters != 3) ok = false;
    detail += "gauss3: " + std::to_string(g3_out.clusters) + "; ";

    Dataset g4 = gen_gaussian_mixture({100, 100, 100, 100},
                                      {{0, 0}, {4, 0}, {0, 4}, {4, 4}}, {0.35, 0.35, 0.35, 0.35},
                                      42);
    auto g4_out = run_synthetic(g4, kGauss.gamma, kGauss.C, kGauss.budget, kGauss.epsilon,
                                kGauss.train_seed);
    if (g4_out.clusters != 4) ok = false;
    detail += "gauss4: " + std::to_string(g4_out.clusters);

    c.report(ok, detail);
}

void criterion7_assignment_reduction() {
    Criterion c("criterion 7 (assignment reduction)");
    const auto& out = g_rings_outcome;
    bool ok = true;
    std::string detail = "M=" + std::to_string(out.M) +
                         ", |B_eps|=" + std::to_string(out.boundary);
    if (out.M == 0 || out.M > 0.2 * double(out.boundary)) ok = false;

    // every equilibrium satisfies the fixed-point residual bound
    double worst = 0.0;
    for (const auto& e : out.solution.equilibria) {
        auto mapped = fixed_point_map(out.model, e);
        worst = std::max(worst, std::sqrt(kernels::sqdist(mapped.data(), e.data(), e.size())));
    }
    if (worst > 1e-6) {
        ok = false;
        detail += ", residual " + std::to_string(worst);
    }

    // component labels match a transitive-closure oracle
    const std::size_t M = out.M;
    std::vector<std::vector<bool>> reach(M, std::vector<bool>(M));
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) reach[i][j] = out.solution.adjacency[i * M + j];
    }
    for (std::size_t k = 0; k < M; ++k) {
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = 0; j < M; ++j) {
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
            }
        }
    }
    for (std::size_t i = 0; i < M && ok; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            bool same = out.solution.equilibrium_labels[i] == out.solution.equilibrium_labels[j];
            if (same != reach[i][j]) {
                ok = false;
                detail += ", closure mismatch";
                break;
            }
        }
    }
    c.report(ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 6: Iris with grid search

void criterion6_iris() {
    Criterion c("criterion 6 (Iris reproduction)");
    Dataset iris = load_csv(std::string(BSVC_DATA_DIR) + "/iris.csv", true, 4);
    const std::vector<double> grid{0.03125, 0.125, 0.5, 2.0, 8.0, 32.0};

    double purity_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double best = 0.0;
        for (double gamma : grid) {
            for (double C : grid) {
                TrainConfig cfg;
                cfg.kernel = {KernelKind::rbf, gamma};
                cfg.C = C;
                cfg.budget = 50;
                cfg.strategy = Strategy::removal;
                cfg.stop_theta = 0.01;
                cfg.max_steps = 20000;
                cfg.seed = SplitMix64::derive(seed, std::uint64_t(gamma * 64) * 64 +
                                                        std::uint64_t(C * 64))
                               .next_u64();
                cfg.record_trace = false;
                auto trained = train(iris, cfg);
                AssignConfig acfg;
                acfg.epsilon = suggest_epsilon(trained.model, iris);
                auto sol = assign_clusters(trained.model, iris, acfg);
                best = std::max(best, cvi::purity(sol.labels, *iris.labels));
            }
        }
        purity_sum += best;
    }
    double mean = purity_sum / 5.0;
    c.report(mean >= 0.90, "mean grid-searched purity over 5 seeds = " + std::to_string(mean));
}

// ---------------------------------------------------------------------------
// criterion 8: determinism of train and gridsearch through the CLI

std::string run_shell(const std::string& cmd) {
    std::string full = cmd + " 2>&1";
    std::string output;
    char buf[4096];
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) return "(popen failed)";
    while (fgets(buf, sizeof(buf), pipe)) output += buf;
    pclose(pipe);
    return output;
}

std::string slurp_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return "(missing:" + path + ")";
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, got);
    std::fclose(f);
    return out;
}

void criterion8_determinism() {
    Criterion c("criterion 8 (determinism)");
#ifdef BSVC_CLI_PATH
    const std::string cli = BSVC_CLI_PATH;
    const std::string dir = "/tmp/bsvc_accept8_" + std::to_string(::getpid());
    run_shell("mkdir -p " + dir);
    const std::string data = dir + "/d.csv";
    run_shell(cli + " generate --shape moons --n 60 --seed 2 --out " + data);

    bool ok = true;
    std::string detail;
    run_shell(cli + " train --data " + data + " --label-col last --gamma 8 --C 8 --budget 40" +
              " --seed 6 --stop-theta 0 --max-steps 500 --out-model " + dir + "/m1.json");
    run_shell(cli + " train --data " + data + " --label-col last --gamma 8 --C 8 --budget 40" +
              " --seed 6 --stop-theta 0 --max-steps 500 --out-model " + dir + "/m2.json");
    if (slurp_file(dir + "/m1.json") != slurp_file(dir + "/m2.json")) {
        ok = false;
        detail += "train models differ; ";
    }

    const std::string grid_flags = " gridsearch --data " + data +
                                   " --label-col last --gamma-grid 2 8 --C-grid 2 8" +
                                   " --budget 40 --seed 3 --stop-theta 0 --max-steps 300";
    run_shell(cli + grid_flags + " --jobs 1 --out-table " + dir + "/t1.csv --out-model " + dir +
              "/g1.json");
    run_shell(cli + grid_flags + " --jobs 2 --out-table " + dir + "/t2.csv --out-model " + dir +
              "/g2.json");
    if (slurp_file(dir + "/g1.json") != slurp_file(dir + "/g2.json") ||
        slurp_file(dir + "/t1.csv") != slurp_file(dir + "/t2.csv")) {
        ok = false;
        detail += "gridsearch outputs differ across --jobs; ";
    }
    run_shell("rm -rf " + dir);
    c.report(ok, detail.empty() ? "byte-identical across runs and --jobs" : detail);
#else
    c.report(false, "CLI path not configured");
#endif
}

// ---------------------------------------------------------------------------
// criterion 9 (cost model): per-step kernel evaluations <= support size + 1

void criterion9_cost_model() {
    Criterion c("criterion 9 (budgeted cost model)");
    Dataset data = gaussian_data(300, 5, 54321);
    auto model = KernelExpansion(KernelSpec{KernelKind::rbf, 1.0}, 5);
    SplitMix64 rng(99);
    bool ok = true;
    std::uint64_t worst_excess = 0;
    for (std::uint64_t t = 1; t <= 500; ++t) {
        std::size_t b = model.size();
        kernels::reset_eval_count();
        sgd_step(model, data, t, 2.0, rng);
        std::uint64_t evals = kernels::eval_count();
        if (evals > b + 1) {
            ok = false;
            worst_excess = std::max(worst_excess, evals - b - 1);
        }
    }
    c.report(ok, ok ? "evals <= support+1 at every step"
                    : "worst excess " + std::to_string(worst_excess));
}

}  // namespace

int main() {
    std::printf("acceptance suite (backend: %s)\n",
                kernels::backend_name(kernels::active_backend()));
    criterion1_lemma_invariants();
    criterion2_convergence_rate();
    criterion3_projection();
    criterion4_cvi_oracles();
    criterion5_synthetics();
    criterion6_iris();
    criterion7_assignment_reduction();
    criterion8_determinism();
    criterion9_cost_model();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
