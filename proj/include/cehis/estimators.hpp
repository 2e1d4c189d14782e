#pragma once

#include "cehis/accuracy.hpp"
#include "cehis/reasoner.hpp"

#include <functional>
#include <span>
#include <vector>

namespace cehis {

// Per-query confidence breakdown. `confidence` is the value the selective
// policy thresholds on; higher always means more confident.
struct ConfidenceReport {
    Query query;
    std::int32_t gt_rank = 1;
    double certainty = 0.0;            // S_c: maximum probability of the prediction
    double historical = 0.0;           // S_a: decayed related-query accuracy
    std::int64_t rank_certainty = 0;   // batch rank-score of certainty
    std::int64_t rank_historical = 0;  // batch rank-score of historical
    double confidence = 0.0;

    bool operator==(const ConfidenceReport&) const = default;
};

// Ablation toggles. Key masks follow the related_keys order: first slot,
// second slot (relation or object), pair.
struct AblationFlags {
    bool disable_certainty = false;
    bool disable_history = false;
    bool disable_hawkes = false;  // plain series mean instead of the Hawkes aggregation
    bool absolute_value_aggregation = false;
    bool mask_first_key = false;
    bool mask_second_key = false;
    bool mask_pair_key = false;
};

struct CEHisConfig {
    double beta = 0.5;  // weight of the certainty rank in the blend, in [0,1]
    HawkesConfig hawkes;
    AblationFlags ablation;
};

// Maximum probability of the prediction (SoftMax Response).
double certainty_score(const PredictionRecord& record);

// Negated entropy, so that larger is more confident like every other estimator.
double entropy_confidence(const PredictionRecord& record);

// rank[i] = number of values strictly smaller than values[i]; ties share a
// rank-score. Larger rank-score means more of the batch sits below the query.
std::vector<std::int64_t> rank_scores(std::span<const double> values);

// Scores the whole batch: certainty and historical scores per query, batch
// rank-scores, and the blended confidence g = beta * rank_c + (1-beta) * rank_a
// (or the absolute-value blend under that ablation).
std::vector<ConfidenceReport> estimate_confidences(std::span<const PredictionRecord> records,
                                                   const AccuracyStore& store, const CEHisConfig& config,
                                                   ExecMode exec = ExecMode::parallel);

using ReportsBuilder = std::function<std::vector<ConfidenceReport>(double beta)>;

struct CalibrationResult {
    double beta = 0.0;
    std::vector<std::pair<double, double>> auc_by_beta;  // grid order, ascending beta
};

// Sweeps the grid, scoring each beta by validation risk-coverage AUC; ties
// resolve to the smallest beta.
CalibrationResult calibrate_beta(const ReportsBuilder& build_reports, std::span<const double> grid, double alpha);

} // namespace cehis
