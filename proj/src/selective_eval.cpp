#include "cehis/selective_eval.hpp"

#include "cehis/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cehis {

std::vector<std::size_t> descending_confidence_order(std::span<const ConfidenceReport> reports) {
    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (reports[a].confidence != reports[b].confidence) return reports[a].confidence > reports[b].confidence;
        if (reports[a].certainty != reports[b].certainty) return reports[a].certainty > reports[b].certainty;
        return a < b;
    });
    return order;
}

double coverage(std::span<const ConfidenceReport> reports, double gamma) {
    if (reports.empty()) throw MetricError("coverage is undefined on an empty report set");
    std::int64_t accepted = 0;
    for (const auto& r : reports)
        if (r.confidence > gamma) ++accepted;
    return static_cast<double>(accepted) / static_cast<double>(reports.size());
}

double prediction_risk(std::int64_t gt_rank, double alpha) {
    if (gt_rank < 1) throw ValidationError("gt_rank must be >= 1");
    if (alpha < 1) throw ValidationError("alpha must be >= 1");
    return alpha * (1.0 - 1.0 / static_cast<double>(gt_rank));
}

double selective_risk(std::span<const ConfidenceReport> reports, double gamma, double alpha) {
    if (reports.empty()) throw MetricError("selective risk is undefined on an empty report set");
    double sum = 0;
    std::int64_t accepted = 0;
    for (const auto& r : reports) {
        if (r.confidence > gamma) {
            sum += prediction_risk(r.gt_rank, alpha);
            ++accepted;
        }
    }
    if (accepted == 0) throw MetricError("selective risk is undefined when every prediction is abstained");
    return sum / static_cast<double>(accepted);
}

RiskCoverageCurve risk_coverage_curve(std::span<const ConfidenceReport> reports, double alpha) {
    if (reports.empty()) throw MetricError("risk-coverage curve is undefined on an empty report set");
    const auto order = descending_confidence_order(reports);
    const std::size_t n = reports.size();

    RiskCoverageCurve curve;
    curve.points.reserve(n);
    double risk_sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
        risk_sum += prediction_risk(reports[order[k]].gt_rank, alpha);
        curve.points.push_back(CurvePoint{static_cast<double>(k + 1) / static_cast<double>(n),
                                          risk_sum / static_cast<double>(k + 1)});
    }

    if (n == 1) {
        curve.auc = 100.0 * curve.points[0].risk;  // flat-curve convention for the degenerate sweep
        return curve;
    }
    double integral = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        integral += (b.coverage - a.coverage) * (a.risk + b.risk) / 2.0;
    }
    const double span = curve.points.back().coverage - curve.points.front().coverage;
    curve.auc = 100.0 * integral / span;
    return curve;
}

double coverage_at_risk(const RiskCoverageCurve& curve, double target_risk) {
    double best = 0;
    for (const auto& p : curve.points)
        if (p.risk <= target_risk) best = std::max(best, p.coverage);
    return best;
}

namespace {

void validate_er(const ERConfig& cfg) {
    if (!(cfg.penalty > 0)) throw ValidationError("effective-reliability penalty must be positive");
    if (cfg.tolerance < 1) throw ValidationError("effective-reliability tolerance must be >= 1");
}

double reward_or_penalty(const ConfidenceReport& r, const ERConfig& cfg) {
    return r.gt_rank < cfg.tolerance ? 1.0 / static_cast<double>(r.gt_rank) : -cfg.penalty;
}

} // namespace

double effective_reliability(const ConfidenceReport& report, const ERConfig& config, double gamma) {
    validate_er(config);
    if (report.confidence <= gamma) return 0.0;
    return reward_or_penalty(report, config);
}

double mean_effective_reliability(std::span<const ConfidenceReport> reports, const ERConfig& config, double gamma) {
    validate_er(config);
    if (reports.empty()) throw MetricError("effective reliability is undefined on an empty report set");
    double sum = 0;
    for (const auto& r : reports)
        if (r.confidence > gamma) sum += reward_or_penalty(r, config);
    return sum / static_cast<double>(reports.size());
}

double best_effective_reliability(std::span<const ConfidenceReport> reports, const ERConfig& config) {
    validate_er(config);
    if (reports.empty()) throw MetricError("effective reliability is undefined on an empty report set");
    const auto order = descending_confidence_order(reports);
    const std::size_t n = reports.size();

    // Prefix k is a realizable acceptance set only when a threshold can split
    // there, i.e. at confidence boundaries (plus accept-none and accept-all).
    double best = 0;  // k = 0: abstain on everything
    double sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += reward_or_penalty(reports[order[k]], config);
        const bool boundary = k + 1 == n || reports[order[k + 1]].confidence != reports[order[k]].confidence;
        if (boundary) best = std::max(best, sum / static_cast<double>(n));
    }
    return best;
}

} // namespace cehis
