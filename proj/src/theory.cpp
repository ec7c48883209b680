#include "bsvc/theory.hpp"

#include <cmath>

#include <json.hpp>

#include "bsvc/errors.hpp"

namespace bsvc::theory {

namespace {

// Observed values come from floating-point accumulation, so the lemma
// comparisons allow a hair of relative slack; genuine violations are far
// above it.
bool exceeds(double observed, double bound) {
    return observed > bound * (1.0 + 1e-9) + 1e-12;
}

}  // namespace

BoundSet compute_bounds(double C, double R, std::uint32_t m) {
    if (!(C > 0.0) || !(R > 0.0) || m == 0) {
        throw invalid_input("compute_bounds: C, R, m must be positive");
    }
    BoundSet b;
    b.R = R;
    b.m = m;
    b.G = C * R + C * R * R;
    b.H = static_cast<double>(m) * C * R * R;
    b.W = b.H + std::sqrt(b.H * b.H + (b.G + b.H) * (b.G + b.H));
    return b;
}

double regret_bound(std::uint64_t T, const BoundSet& bounds, double R,
                    std::span<const double> maintenance_terms) {
    if (T == 0) throw invalid_input("regret_bound: T must be >= 1");
    const double Td = static_cast<double>(T);
    double sum = 0.0;
    for (double term : maintenance_terms) {
        if (term < 0.0) throw invalid_input("regret_bound: maintenance terms must be >= 0");
        sum += term;
    }
    const double gh = bounds.G + bounds.H;
    return gh * gh * (std::log(Td) + 1.0) / (2.0 * Td) + bounds.W * R / Td * sum;
}

AuditReport audit_trace(const TrainTrace& trace, double C, double R, Strategy strategy) {
    if (!(C > 0.0) || !(R > 0.0)) throw invalid_input("audit_trace: C and R must be positive");
    if (trace.steps.empty()) throw invalid_input("audit_trace: empty trace");

    const bool removal_analysis = strategy == Strategy::removal;
    AuditReport report;

    std::uint64_t expected_t = 1;
    std::uint64_t events = 0;
    double realized_term_sum = 0.0;  // sum over events of t |alpha_{p_t}|
    std::uint32_t m_running = 0;
    std::uint64_t next_checkpoint = 1;

    for (const StepRecord& rec : trace.steps) {
        if (rec.t != expected_t) {
            throw invalid_input("audit_trace: step indices must increase from 1 (got t=" +
                                std::to_string(rec.t) + ", expected " +
                                std::to_string(expected_t) + ")");
        }
        ++expected_t;
        if (rec.max_update_count < m_running) {
            throw invalid_input("audit_trace: running update-count max decreased at t=" +
                                std::to_string(rec.t));
        }
        m_running = rec.max_update_count;

        if (removal_analysis) {
            const double s_bound = C * R;
            if (exceeds(rec.coeff_abs_sum, s_bound)) {
                report.lemma1_violations.push_back({rec.t, rec.coeff_abs_sum, s_bound});
            }
            const double w_bound = C * R * R;
            if (exceeds(rec.w_norm, w_bound)) {
                report.lemma2_violations.push_back({rec.t, rec.w_norm, w_bound});
            }
        }
        if (rec.maintenance) {
            ++events;
            realized_term_sum +=
                static_cast<double>(rec.t) * rec.maintenance->alpha_abs;
            if (removal_analysis) {
                const double a_bound = static_cast<double>(std::max<std::uint32_t>(m_running, 1)) *
                                       C * R / static_cast<double>(rec.t);
                if (exceeds(rec.maintenance->alpha_abs, a_bound)) {
                    report.lemma4_violations.push_back(
                        {rec.t, rec.maintenance->alpha_abs, a_bound});
                }
            }
        }

        if (rec.t == next_checkpoint || rec.t == trace.steps.back().t) {
            // With no events so far the realized perturbation is zero and the
            // bound specializes to the plain log T / T rate.
            const double G = C * R + C * R * R;
            const double H = events > 0
                                 ? static_cast<double>(std::max<std::uint32_t>(m_running, 1)) *
                                       C * R * R
                                 : 0.0;
            const double W = H + std::sqrt(H * H + (G + H) * (G + H));
            const double Td = static_cast<double>(rec.t);
            double value = (G + H) * (G + H) * (std::log(Td) + 1.0) / (2.0 * Td) +
                           W * R / Td * realized_term_sum;
            report.regret_curve.emplace_back(rec.t, value);
            while (next_checkpoint <= rec.t) next_checkpoint *= 2;
        }
    }

    report.maintenance_rate =
        static_cast<double>(events) / static_cast<double>(trace.steps.size());
    return report;
}

std::string to_json(const AuditReport& report) {
    nlohmann::json j;
    auto violations = [](const std::vector<BoundViolation>& vs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : vs) {
            arr.push_back({{"step", v.step}, {"observed", v.observed}, {"bound", v.bound}});
        }
        return arr;
    };
    j["lemma1_violations"] = violations(report.lemma1_violations);
    j["lemma2_violations"] = violations(report.lemma2_violations);
    j["lemma4_violations"] = violations(report.lemma4_violations);
    j["maintenance_rate"] = report.maintenance_rate;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& [t, v] : report.regret_curve) curve.push_back({t, v});
    j["regret_curve"] = curve;
    return j.dump();
}

}  // namespace bsvc::theory
