#pragma once

#include "cehis/estimators.hpp"

#include <span>
#include <vector>

namespace cehis {

struct RiskConfig {
    double alpha = 1.0;  // risk scale, >= 1
};

struct ERConfig {
    double penalty = 1.0;  // c, > 0
    int tolerance = 5;     // N, >= 1
};

struct CurvePoint {
    double coverage = 0.0;
    double risk = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

// One point per accepted-prefix size under the declared confidence order; the
// final point always has coverage 1. auc is normalized over the achieved
// coverage span and reported x100.
struct RiskCoverageCurve {
    std::vector<CurvePoint> points;
    double auc = 0.0;
};

// Declared total order for threshold sweeps: confidence descending, then raw
// certainty descending, then stable input order.
std::vector<std::size_t> descending_confidence_order(std::span<const ConfidenceReport> reports);

// Fraction of reports with confidence strictly above gamma.
double coverage(std::span<const ConfidenceReport> reports, double gamma);

// alpha * (1 - 1/gt_rank).
double prediction_risk(std::int64_t gt_rank, double alpha);

// Mean prediction risk over accepted reports; error when nothing is accepted.
double selective_risk(std::span<const ConfidenceReport> reports, double gamma, double alpha);

RiskCoverageCurve risk_coverage_curve(std::span<const ConfidenceReport> reports, double alpha);

// Largest coverage among curve points with risk <= target_risk; 0 when none qualifies.
double coverage_at_risk(const RiskCoverageCurve& curve, double target_risk);

// Reward 1/rank when accepted within tolerance, -penalty when accepted at or
// beyond it, 0 on abstention.
double effective_reliability(const ConfidenceReport& report, const ERConfig& config, double gamma);

// Mean of the per-query score over every report (abstentions count in the denominator).
double mean_effective_reliability(std::span<const ConfidenceReport> reports, const ERConfig& config, double gamma);

// Best mean effective reliability over every realizable threshold (each
// distinct confidence value, plus accept-all and abstain-all).
double best_effective_reliability(std::span<const ConfidenceReport> reports, const ERConfig& config);

} // namespace cehis
