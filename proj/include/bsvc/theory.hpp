#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsvc/trainer.hpp"

namespace bsvc::theory {

// Constants of the convergence analysis for the removal strategy:
//   G = CR + CR^2        gradient bound
//   H = mCR^2            maintenance perturbation bound
//   W = H + sqrt(H^2 + (G+H)^2)   iterate-to-optimum distance bound
struct BoundSet {
    double R = 1.0;
    double G = 0.0;
    double H = 0.0;
    double W = 0.0;
    std::uint32_t m = 1;
};

BoundSet compute_bounds(double C, double R, std::uint32_t m);

// Upper bound on the averaged objective gap after T steps:
//   (G+H)^2 (log T + 1) / (2T) + (W R / T) * sum(maintenance_terms)
// With no maintenance the bound decays as O(log T / T).
double regret_bound(std::uint64_t T, const BoundSet& bounds, double R,
                    std::span<const double> maintenance_terms);

struct BoundViolation {
    std::uint64_t step;
    double observed;
    double bound;
};

struct AuditReport {
    std::vector<BoundViolation> lemma1_violations;  // s_t <= CR
    std::vector<BoundViolation> lemma2_violations;  // ||w_t|| <= CR^2
    std::vector<BoundViolation> lemma4_violations;  // |alpha_{p_t}| <= m C R / t
    double maintenance_rate = 0.0;  // fraction of steps with an event
    // Realized upper-bound curve at power-of-two checkpoints: the theorem's
    // expectation terms are unobservable, so each event contributes its
    // realized |rho_{p_t}| = t |alpha_{p_t}| (a labeled proxy, not the
    // measured gap itself).
    std::vector<std::pair<std::uint64_t, double>> regret_curve;

    bool clean() const {
        return lemma1_violations.empty() && lemma2_violations.empty() &&
               lemma4_violations.empty();
    }
};

// Checks every step of a removal-strategy trace against the lemma bounds
// (with a ~1e-9 relative slack for accumulated float rounding) and computes
// the empirical maintenance rate and bound curve. The analysis covers the
// removal case only, so for projection strategies the lemma checks are
// skipped and just the rate and curve are reported.
AuditReport audit_trace(const TrainTrace& trace, double C, double R, Strategy strategy);

std::string to_json(const AuditReport& report);

}  // namespace bsvc::theory
