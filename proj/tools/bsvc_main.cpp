// bsvc: budgeted support-vector clustering toolkit.
//
// Subcommands: generate, train, cluster, evaluate, gridsearch, diagnose.
// Exit codes: 0 success, 1 assertion/violation, 2 usage/config, 3 I/O or parse.

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

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

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// FNV-1a 64 over the file bytes; good enough to notice changed inputs.
std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

// Every command writes exactly one manifest alongside its primary output.
class Manifest {
  public:
    Manifest(std::string command, int argc, char** argv) : command_(std::move(command)) {
        start_ = std::chrono::steady_clock::now();
        for (int i = 0; i < argc; ++i) argv_.push_back(argv[i]);
    }
    void set_config(nlohmann::json config) { config_ = std::move(config); }
    void add_input(const std::string& path) { inputs_[path] = file_digest(path); }
    void add_output(const std::string& path) { outputs_.push_back(path); }

    void write(const std::string& primary_output) const {
        nlohmann::json j;
        j["command"] = command_;
        j["argv"] = argv_;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        auto elapsed = std::chrono::steady_clock::now() - start_;
        j["wall_time_s"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        std::string path = primary_output + ".manifest.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write manifest: " + path);
        out << j.dump(2) << '\n';
    }

  private:
    std::string command_;
    std::vector<std::string> argv_;
    nlohmann::json config_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

std::optional<std::size_t> parse_label_col(const std::string& spec, std::size_t n_cols_hint) {
    if (spec == "none" || spec.empty()) return std::nullopt;
    if (spec == "last") return n_cols_hint;  // resolved by the caller
    std::size_t v = 0;
    auto res = std::from_chars(spec.data(), spec.data() + spec.size(), v);
    if (res.ec != std::errc() || res.ptr != spec.data() + spec.size()) {
        throw config_error("--label-col must be an index, 'last', or 'none'");
    }
    return v;
}

// Columns in the file = features + optional label; 'last' needs the count.
std::size_t count_columns(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("line 1: file has no data rows");
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

Dataset load_dataset(const std::string& path, bool has_header, const std::string& label_spec) {
    std::optional<std::size_t> col;
    if (label_spec == "last") {
        col = count_columns(path) - 1;
    } else {
        col = parse_label_col(label_spec, 0);
    }
    return load_csv(path, has_header, col);
}

struct ScalerFile {
    static void save(const Standardization& s, const std::string& path) {
        nlohmann::json j{{"mean", s.mean}, {"stddev", s.stddev}};
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write scaler: " + path);
        out << j.dump() << '\n';
    }
    static Standardization load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open scaler: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            auto j = nlohmann::json::parse(buf.str());
            return Standardization{j.at("mean").get<std::vector<double>>(),
                                   j.at("stddev").get<std::vector<double>>()};
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(std::string("scaler JSON: ") + e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string shape;
    std::size_t n = 150;
    std::size_t center_n = 60;
    std::vector<double> radii{1.0, 2.0};
    double noise = 0.05;
    std::vector<std::size_t> counts;
    std::vector<std::string> means;
    std::vector<double> sigmas;
    std::uint64_t seed = 0;
    std::string out;
};

Dataset build_shape(const GenerateArgs& a) {
    if (a.shape == "rings") {
        if (a.radii.size() != 2) throw config_error("--radii needs exactly two values");
        return gen_rings(a.n, a.radii[0], a.radii[1], a.noise, a.center_n, a.seed);
    }
    if (a.shape == "moons") return gen_moons(a.n, a.noise, a.seed);
    if (a.shape == "gauss3") {
        return gen_gaussian_mixture({a.n, a.n, a.n}, {{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.5}},
                                    {0.35, 0.35, 0.35}, a.seed);
    }
    if (a.shape == "gauss4") {
        return gen_gaussian_mixture({a.n, a.n, a.n, a.n},
                                    {{0.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}, {4.0, 4.0}},
                                    {0.35, 0.35, 0.35, 0.35}, a.seed);
    }
    if (a.shape == "gmm") {
        if (a.counts.empty() || a.means.empty() || a.sigmas.empty()) {
            throw config_error("--shape gmm needs --counts, --means, and --sigmas");
        }
        std::vector<std::vector<double>> means;
        for (const auto& text : a.means) {
            std::vector<double> m;
            std::stringstream ss(text);
            std::string cell;
            while (std::getline(ss, cell, ',')) m.push_back(std::stod(cell));
            means.push_back(std::move(m));
        }
        return gen_gaussian_mixture(a.counts, means, a.sigmas, a.seed);
    }
    throw config_error("unknown shape '" + a.shape + "' (rings|moons|gauss3|gauss4|gmm)");
}

int run_generate(const GenerateArgs& a, Manifest& manifest) {
    Dataset d = build_shape(a);
    save_csv(d, a.out);
    manifest.set_config({{"shape", a.shape},
                         {"n", a.n},
                         {"noise", a.noise},
                         {"seed", a.seed}});
    manifest.add_output(a.out);
    manifest.write(a.out);
    std::cout << "wrote " << d.n() << " points (" << d.dim << "d) to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    bool has_header = false;
    std::string label_col = "none";
    double gamma = 1.0;
    double C = 1.0;
    std::uint32_t budget = 0;  // 0 = unbounded
    std::string strategy = "removal";
    std::uint32_t k = 5;
    double stop_theta = 0.01;
    std::uint64_t max_steps = 100000;
    std::uint64_t seed = 0;
    bool standardize_flag = false;
    std::string out_model;
    std::string out_trace;
};

TrainConfig to_config(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.kernel = {KernelKind::rbf, a.gamma};
    cfg.C = a.C;
    if (a.budget > 0) cfg.budget = a.budget;
    cfg.strategy = strategy_from_name(a.strategy);
    cfg.k = a.k;
    cfg.stop_theta = a.stop_theta;
    cfg.max_steps = a.max_steps;
    cfg.seed = a.seed;
    return cfg;
}

nlohmann::json config_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["gamma"] = cfg.kernel.gamma;
    j["C"] = cfg.C;
    j["budget"] = cfg.budget ? nlohmann::json(*cfg.budget) : nlohmann::json(nullptr);
    j["strategy"] = strategy_name(cfg.strategy);
    j["k"] = cfg.k;
    j["stop_theta"] = cfg.stop_theta;
    j["max_steps"] = cfg.max_steps;
    j["seed"] = cfg.seed;
    j["ridge"] = cfg.ridge;
    j["backend"] = kernels::backend_name(kernels::active_backend());
    return j;
}

int run_train(const TrainArgs& a, Manifest& manifest) {
    TrainConfig cfg = to_config(a);
    cfg.validate();  // fail fast before touching data
    manifest.add_input(a.data);
    Dataset d = load_dataset(a.data, a.has_header, a.label_col);
    if (a.standardize_flag) {
        auto [scaled, scaler] = standardize(d);
        d = std::move(scaled);
        ScalerFile::save(scaler, a.out_model + ".scaler.json");
        manifest.add_output(a.out_model + ".scaler.json");
    }
    TrainResult res = train(d, cfg);
    save_model(res.model, a.out_model);
    manifest.add_output(a.out_model);
    if (!a.out_trace.empty()) {
        save_trace_jsonl(res.trace, a.out_trace);
        manifest.add_output(a.out_trace);
    }
    manifest.set_config(config_json(cfg));
    manifest.write(a.out_model);
    std::cout << "trained " << res.steps_run << " steps ("
              << (res.stopped_by_theta ? "stopped by theta" : "hit max_steps")
              << "), support " << res.model.size() << ", ||w|| "
              << format_double(res.model.norm()) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
    std::string model;
    std::string data;
    bool has_header = false;
    std::string label_col = "none";
    std::string scaler;
    double epsilon = -1.0;  // <0 = use the percentile heuristic
    double fp_tol = 1e-6;
    std::uint32_t fp_max_iter = 500;
    double merge_tol = 1e-3;
    std::uint32_t m_samples = 20;
    std::string out;
};

int run_cluster(const ClusterArgs& a, Manifest& manifest) {
    manifest.add_input(a.model);
    manifest.add_input(a.data);
    KernelExpansion model = load_model(a.model);
    Dataset d = load_dataset(a.data, a.has_header, a.label_col);
    if (!a.scaler.empty()) {
        manifest.add_input(a.scaler);
        d = apply_standardization(d, ScalerFile::load(a.scaler));
    }
    AssignConfig cfg;
    cfg.epsilon = a.epsilon >= 0.0 ? a.epsilon : suggest_epsilon(model, d);
    cfg.fp_tol = a.fp_tol;
    cfg.fp_max_iter = a.fp_max_iter;
    cfg.merge_tol = a.merge_tol;
    cfg.m_samples = a.m_samples;

    ClusterSolution sol = assign_clusters(model, d, cfg);
    save_cluster_csv(sol, a.out);
    std::string sidecar_path = a.out + ".json";
    {
        std::ofstream side(sidecar_path, std::ios::binary);
        if (!side) throw io_error("cannot write sidecar: " + sidecar_path);
        side << cluster_sidecar_json(sol, cfg.epsilon) << '\n';
    }
    manifest.add_output(a.out);
    manifest.add_output(sidecar_path);
    manifest.set_config({{"epsilon", cfg.epsilon},
                         {"fp_tol", cfg.fp_tol},
                         {"fp_max_iter", cfg.fp_max_iter},
                         {"merge_tol", cfg.merge_tol},
                         {"m_samples", cfg.m_samples}});
    manifest.write(a.out);
    std::cout << "clusters: " << sol.num_clusters << ", equilibria: " << sol.equilibria.size()
              << ", boundary: " << sol.boundary_members.size() << " of " << d.n() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string labels;
    std::string data;
    bool has_header = false;
    std::string label_col = "none";
    std::string out;
};

int run_evaluate(const EvaluateArgs& a, Manifest& manifest) {
    manifest.add_input(a.labels);
    manifest.add_input(a.data);
    std::vector<int> predicted = load_cluster_labels(a.labels);
    Dataset d = load_dataset(a.data, a.has_header, a.label_col);
    if (predicted.size() != d.n()) {
        throw invalid_input("labels file has " + std::to_string(predicted.size()) +
                            " rows but dataset has " + std::to_string(d.n()));
    }
    std::optional<std::span<const int>> truth;
    if (d.labels) truth = std::span<const int>(*d.labels);
    cvi::CviReport report = cvi::make_report(d, predicted, truth);
    {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw io_error("cannot write report: " + a.out);
        out << cvi::to_json(report) << '\n';
    }
    manifest.add_output(a.out);
    manifest.set_config({{"truth", d.labels.has_value()}});
    manifest.write(a.out);
    std::cout << cvi::to_json(report) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// gridsearch

struct GridArgs {
    std::string data;
    bool has_header = false;
    std::string label_col = "none";
    std::vector<double> gamma_grid;
    std::vector<double> C_grid;
    std::string metric = "purity";
    std::uint32_t budget = 0;
    std::string strategy = "removal";
    std::uint32_t k = 5;
    double stop_theta = 0.01;
    std::uint64_t max_steps = 100000;
    std::uint64_t seed = 0;
    double epsilon = -1.0;
    bool standardize_flag = false;
    unsigned jobs = 0;  // 0 = BSVC_JOBS env or 1
    std::string out_table;
    std::string out_model;
};

struct CellResult {
    double gamma = 0.0;
    double C = 0.0;
    cvi::CviReport report;
    std::size_t num_clusters = 0;
    std::size_t support = 0;
    std::uint64_t steps = 0;
    std::string model_json;
    std::string error;
};

// higher-is-better score for ranking; absent metrics rank last
double metric_score(const CellResult& cell, const std::string& metric) {
    const auto& r = cell.report;
    std::optional<double> v;
    bool lower_better = false;
    if (metric == "purity") v = r.purity;
    else if (metric == "rand") v = r.rand;
    else if (metric == "nmi") v = r.nmi;
    else if (metric == "dbi") { v = r.dbi; lower_better = true; }
    else if (metric == "compactness") { v = r.compactness; lower_better = true; }
    else throw config_error("unknown metric '" + metric + "'");
    if (!v) return -std::numeric_limits<double>::infinity();
    return lower_better ? -*v : *v;
}

int run_gridsearch(const GridArgs& a, Manifest& manifest) {
    if (a.gamma_grid.empty() || a.C_grid.empty()) throw config_error("grids must be nonempty");
    const bool truth_needed = a.metric == "purity" || a.metric == "rand" || a.metric == "nmi";
    manifest.add_input(a.data);
    Dataset d = load_dataset(a.data, a.has_header, a.label_col);
    if (truth_needed && !d.labels) {
        throw config_error("metric '" + a.metric + "' needs a labeled dataset (--label-col)");
    }
    std::optional<Standardization> scaler;
    if (a.standardize_flag) {
        auto [scaled, s] = standardize(d);
        d = std::move(scaled);
        scaler = std::move(s);
    }

    unsigned jobs = a.jobs;
    if (jobs == 0) {
        if (const char* env = std::getenv("BSVC_JOBS")) jobs = std::atoi(env);
        if (jobs == 0) jobs = 1;
    }

    const std::size_t n_cells = a.gamma_grid.size() * a.C_grid.size();
    std::vector<CellResult> cells(n_cells);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t cell = next.fetch_add(1);
            if (cell >= n_cells) return;
            CellResult& res = cells[cell];
            res.gamma = a.gamma_grid[cell / a.C_grid.size()];
            res.C = a.C_grid[cell % a.C_grid.size()];
            try {
                TrainConfig cfg;
                cfg.kernel = {KernelKind::rbf, res.gamma};
                cfg.C = res.C;
                if (a.budget > 0) cfg.budget = a.budget;
                cfg.strategy = strategy_from_name(a.strategy);
                cfg.k = a.k;
                cfg.stop_theta = a.stop_theta;
                cfg.max_steps = a.max_steps;
                cfg.seed = SplitMix64::derive(a.seed, cell).next_u64();
                cfg.record_trace = false;
                TrainResult trained = train(d, cfg);
                res.support = trained.model.size();
                res.steps = trained.steps_run;

                AssignConfig acfg;
                acfg.epsilon =
                    a.epsilon >= 0.0 ? a.epsilon : suggest_epsilon(trained.model, d);
                ClusterSolution sol = assign_clusters(trained.model, d, acfg);
                res.num_clusters = sol.num_clusters;
                std::optional<std::span<const int>> truth;
                if (d.labels) truth = std::span<const int>(*d.labels);
                res.report = cvi::make_report(d, sol.labels, truth);
                res.model_json = to_json(trained.model);
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<std::size_t> order(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        double ls = cells[lhs].error.empty() ? metric_score(cells[lhs], a.metric)
                                             : -std::numeric_limits<double>::infinity();
        double rs = cells[rhs].error.empty() ? metric_score(cells[rhs], a.metric)
                                             : -std::numeric_limits<double>::infinity();
        if (ls != rs) return ls > rs;
        return lhs < rhs;  // deterministic tie-break: cell index
    });

    {
        std::ofstream table(a.out_table, std::ios::binary);
        if (!table) throw io_error("cannot write table: " + a.out_table);
        table << "rank,gamma,C,purity,rand,nmi,dbi,compactness,num_clusters,support_size,steps\n";
        auto cell_value = [](const std::optional<double>& v) {
            return v ? format_double(*v) : std::string();
        };
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const CellResult& c = cells[order[rank]];
            table << rank + 1 << ',' << format_double(c.gamma) << ',' << format_double(c.C)
                  << ',' << cell_value(c.report.purity) << ',' << cell_value(c.report.rand)
                  << ',' << cell_value(c.report.nmi) << ',' << cell_value(c.report.dbi) << ','
                  << format_double(c.report.compactness) << ',' << c.num_clusters << ','
                  << c.support << ',' << c.steps << '\n';
        }
    }
    manifest.add_output(a.out_table);

    const CellResult& best = cells[order[0]];
    if (!best.error.empty()) throw numerical_failure("every grid cell failed: " + best.error);
    {
        std::ofstream out(a.out_model, std::ios::binary);
        if (!out) throw io_error("cannot write model: " + a.out_model);
        out << best.model_json << '\n';
    }
    manifest.add_output(a.out_model);
    if (scaler) {
        ScalerFile::save(*scaler, a.out_model + ".scaler.json");
        manifest.add_output(a.out_model + ".scaler.json");
    }
    manifest.set_config({{"metric", a.metric},
                         {"gamma_grid", a.gamma_grid},
                         {"C_grid", a.C_grid},
                         {"budget", a.budget},
                         {"strategy", a.strategy},
                         {"seed", a.seed},
                         {"jobs", jobs}});
    manifest.write(a.out_table);
    std::cout << "best cell: gamma=" << format_double(best.gamma)
              << " C=" << format_double(best.C) << " " << a.metric << "="
              << format_double(metric_score(best, a.metric) *
                               ((a.metric == "dbi" || a.metric == "compactness") ? -1.0 : 1.0))
              << " clusters=" << best.num_clusters << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
    std::string trace;
    double C = 1.0;
    double R = 1.0;
    std::string strategy = "removal";
    std::string out;
};

int run_diagnose(const DiagnoseArgs& a, Manifest& manifest) {
    manifest.add_input(a.trace);
    TrainTrace trace = load_trace_jsonl(a.trace);
    theory::AuditReport report =
        theory::audit_trace(trace, a.C, a.R, strategy_from_name(a.strategy));
    {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw io_error("cannot write report: " + a.out);
        out << theory::to_json(report) << '\n';
    }
    manifest.add_output(a.out);
    manifest.set_config({{"C", a.C}, {"R", a.R}, {"strategy", a.strategy}});
    manifest.write(a.out);

    auto print_violations = [](const char* name, const std::vector<theory::BoundViolation>& vs) {
        for (const auto& v : vs) {
            std::cout << name << " violation at t=" << v.step << ": observed "
                      << format_double(v.observed) << " > bound " << format_double(v.bound)
                      << '\n';
        }
    };
    print_violations("lemma1", report.lemma1_violations);
    print_violations("lemma2", report.lemma2_violations);
    print_violations("lemma4", report.lemma4_violations);
    std::cout << "maintenance_rate " << format_double(report.maintenance_rate) << '\n';
    if (!report.clean()) {
        std::cout << "audit FAILED\n";
        return 1;
    }
    std::cout << "audit clean\n";
    return 0;
}

const std::vector<double> kPaperGrid{0.03125, 0.125, 0.5, 2.0, 8.0, 32.0};  // 2^{-5..5} odd

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"budgeted support-vector clustering toolkit"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate", "emit a synthetic labeled dataset");
    cmd_gen->add_option("--shape", gen.shape, "rings|moons|gauss3|gauss4|gmm")->required();
    cmd_gen->add_option("--n", gen.n, "points per component");
    cmd_gen->add_option("--center-n", gen.center_n, "rings: center blob size");
    cmd_gen->add_option("--radii", gen.radii, "rings: two radii")->expected(2);
    cmd_gen->add_option("--noise", gen.noise, "noise sigma");
    cmd_gen->add_option("--counts", gen.counts, "gmm: per-component counts");
    cmd_gen->add_option("--means", gen.means, "gmm: per-component means, comma-separated");
    cmd_gen->add_option("--sigmas", gen.sigmas, "gmm: per-component sigmas");
    cmd_gen->add_option("--seed", gen.seed, "RNG seed");
    cmd_gen->add_option("--out", gen.out, "output CSV")->required();

    TrainArgs tr;
    auto* cmd_tr = app.add_subcommand("train", "fit the one-class model with SGD");
    cmd_tr->add_option("--data", tr.data, "input CSV")->required();
    cmd_tr->add_flag("--has-header", tr.has_header, "skip the first row");
    cmd_tr->add_option("--label-col", tr.label_col, "index, 'last', or 'none'");
    cmd_tr->add_option("--gamma", tr.gamma, "RBF width")->required();
    cmd_tr->add_option("--C", tr.C, "hinge trade-off")->required();
    cmd_tr->add_option("--budget", tr.budget, "support budget B (0 = unbounded)");
    cmd_tr->add_option("--strategy", tr.strategy, "removal|proj-knn|proj-rand");
    cmd_tr->add_option("--k", tr.k, "projection neighbor count");
    cmd_tr->add_option("--stop-theta", tr.stop_theta, "stopping threshold on ||w_{t+1}-w_t||");
    cmd_tr->add_option("--max-steps", tr.max_steps, "iteration cap");
    cmd_tr->add_option("--seed", tr.seed, "RNG seed");
    cmd_tr->add_flag("--standardize", tr.standardize_flag, "standardize features first");
    cmd_tr->add_option("--out-model", tr.out_model, "model JSON path")->required();
    cmd_tr->add_option("--out-trace", tr.out_trace, "trace JSON-lines path");

    ClusterArgs cl;
    auto* cmd_cl = app.add_subcommand("cluster", "assign clusters via equilibrium points");
    cmd_cl->add_option("--model", cl.model, "model JSON")->required();
    cmd_cl->add_option("--data", cl.data, "input CSV")->required();
    cmd_cl->add_flag("--has-header", cl.has_header);
    cmd_cl->add_option("--label-col", cl.label_col, "index, 'last', or 'none'");
    cmd_cl->add_option("--scaler", cl.scaler, "scaler JSON from train --standardize");
    cmd_cl->add_option("--epsilon", cl.epsilon,
                       "extended-boundary tolerance (default: 10th percentile of |f|)");
    cmd_cl->add_option("--fp-tol", cl.fp_tol, "fixed-point tolerance");
    cmd_cl->add_option("--fp-max-iter", cl.fp_max_iter, "fixed-point iteration cap");
    cmd_cl->add_option("--merge-tol", cl.merge_tol, "equilibrium merge radius");
    cmd_cl->add_option("--m-samples", cl.m_samples, "segment sample count");
    cmd_cl->add_option("--out", cl.out, "labels CSV path")->required();

    EvaluateArgs ev;
    auto* cmd_ev = app.add_subcommand("evaluate", "compute validity indices for labels");
    cmd_ev->add_option("--labels", ev.labels, "cluster labels CSV")->required();
    cmd_ev->add_option("--data", ev.data, "dataset CSV")->required();
    cmd_ev->add_flag("--has-header", ev.has_header);
    cmd_ev->add_option("--label-col", ev.label_col, "truth column: index, 'last', or 'none'");
    cmd_ev->add_option("--out", ev.out, "report JSON path")->required();

    GridArgs gr;
    auto* cmd_gr = app.add_subcommand("gridsearch", "train/cluster/evaluate over a grid");
    cmd_gr->add_option("--data", gr.data, "input CSV")->required();
    cmd_gr->add_flag("--has-header", gr.has_header);
    cmd_gr->add_option("--label-col", gr.label_col, "index, 'last', or 'none'");
    cmd_gr->add_option("--gamma-grid", gr.gamma_grid, "gamma candidates");
    cmd_gr->add_option("--C-grid", gr.C_grid, "C candidates");
    cmd_gr->add_option("--metric", gr.metric, "purity|rand|nmi|dbi|compactness");
    cmd_gr->add_option("--budget", gr.budget, "support budget B (0 = unbounded)");
    cmd_gr->add_option("--strategy", gr.strategy, "removal|proj-knn|proj-rand");
    cmd_gr->add_option("--k", gr.k, "projection neighbor count");
    cmd_gr->add_option("--stop-theta", gr.stop_theta);
    cmd_gr->add_option("--max-steps", gr.max_steps);
    cmd_gr->add_option("--seed", gr.seed, "base seed; cells derive their own streams");
    cmd_gr->add_option("--epsilon", gr.epsilon, "boundary tolerance (default heuristic)");
    cmd_gr->add_flag("--standardize", gr.standardize_flag);
    cmd_gr->add_option("--jobs", gr.jobs, "parallel cells (default $BSVC_JOBS or 1)");
    cmd_gr->add_option("--out-table", gr.out_table, "ranked table CSV")->required();
    cmd_gr->add_option("--out-model", gr.out_model, "best model JSON")->required();

    DiagnoseArgs di;
    auto* cmd_di = app.add_subcommand("diagnose", "audit a training trace against the bounds");
    cmd_di->add_option("--trace", di.trace, "trace JSON-lines")->required();
    cmd_di->add_option("--C", di.C, "trade-off used in training")->required();
    cmd_di->add_option("--R", di.R, "feature-norm bound (1 for RBF)");
    cmd_di->add_option("--strategy", di.strategy, "removal|proj-knn|proj-rand");
    cmd_di->add_option("--out", di.out, "audit JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gr.gamma_grid.empty()) gr.gamma_grid = kPaperGrid;
        if (gr.C_grid.empty()) gr.C_grid = kPaperGrid;
        if (cmd_gen->parsed()) {
            Manifest m("generate", argc, argv);
            return run_generate(gen, m);
        }
        if (cmd_tr->parsed()) {
            Manifest m("train", argc, argv);
            return run_train(tr, m);
        }
        if (cmd_cl->parsed()) {
            Manifest m("cluster", argc, argv);
            return run_cluster(cl, m);
        }
        if (cmd_ev->parsed()) {
            Manifest m("evaluate", argc, argv);
            return run_evaluate(ev, m);
        }
        if (cmd_gr->parsed()) {
            Manifest m("gridsearch", argc, argv);
            return run_gridsearch(gr, m);
        }
        if (cmd_di->parsed()) {
            Manifest m("diagnose", argc, argv);
            return run_diagnose(di, m);
        }
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
