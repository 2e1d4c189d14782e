#include "cehis/estimators.hpp"

#include "cehis/errors.hpp"
#include "cehis/selective_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cehis {

double certainty_score(const PredictionRecord& record) {
    if (!(record.max_prob > 0) || record.max_prob > 1)
        throw ValidationError("certainty requires max_prob in (0,1], got " + std::to_string(record.max_prob));
    return record.max_prob;
}

double entropy_confidence(const PredictionRecord& record) {
    if (record.entropy < 0) throw ValidationError("negative entropy in prediction record");
    return -record.entropy;
}

std::vector<std::int64_t> rank_scores(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<std::int64_t> ranks(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = static_cast<std::int64_t>(i);
        i = j;
    }
    return ranks;
}

std::vector<ConfidenceReport> estimate_confidences(std::span<const PredictionRecord> records,
                                                   const AccuracyStore& store, const CEHisConfig& config,
                                                   ExecMode exec) {
    if (config.beta < 0 || config.beta > 1) throw ValidationError("beta must lie in [0,1]");
    if (config.ablation.disable_certainty && config.ablation.disable_history)
        throw ValidationError("cannot disable both the certainty and the history signal");

    double beta = config.beta;
    if (config.ablation.disable_certainty) beta = 0.0;
    if (config.ablation.disable_history) beta = 1.0;

    HistoryScoreOptions history_options;
    history_options.key_enabled = {!config.ablation.mask_first_key, !config.ablation.mask_second_key,
                                   !config.ablation.mask_pair_key};
    history_options.use_mean = config.ablation.disable_hawkes;

    const std::int64_t n = static_cast<std::int64_t>(records.size());
    std::vector<ConfidenceReport> reports(records.size());

    auto score_one = [&](std::int64_t i) {
        const PredictionRecord& rec = records[static_cast<std::size_t>(i)];
        ConfidenceReport& rep = reports[static_cast<std::size_t>(i)];
        rep.query = rec.query;
        rep.gt_rank = rec.gt_rank;
        rep.certainty = certainty_score(rec);
        rep.historical = historical_score(store, rec.query, config.hawkes, history_options);
    };

#ifdef _OPENMP
    if (exec == ExecMode::parallel) {
        std::exception_ptr error;
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                score_one(i);
            } catch (...) {
#pragma omp critical(cehis_estimate_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else
#endif
    {
        for (std::int64_t i = 0; i < n; ++i) score_one(i);
    }

    std::vector<double> certainty(records.size()), historical(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        certainty[i] = reports[i].certainty;
        historical[i] = reports[i].historical;
    }
    auto rank_c = rank_scores(certainty);
    auto rank_a = rank_scores(historical);

    for (std::size_t i = 0; i < records.size(); ++i) {
        reports[i].rank_certainty = rank_c[i];
        reports[i].rank_historical = rank_a[i];
        if (config.ablation.absolute_value_aggregation)
            reports[i].confidence = beta * reports[i].certainty + (1.0 - beta) * reports[i].historical;
        else
            reports[i].confidence = beta * static_cast<double>(rank_c[i]) +
                                    (1.0 - beta) * static_cast<double>(rank_a[i]);
    }
    return reports;
}

CalibrationResult calibrate_beta(const ReportsBuilder& build_reports, std::span<const double> grid, double alpha) {
    if (grid.empty()) throw CalibrationError("beta grid is empty");
    std::vector<double> betas(grid.begin(), grid.end());
    std::sort(betas.begin(), betas.end());
    for (double b : betas)
        if (b < 0 || b > 1) throw ValidationError("beta grid values must lie in [0,1]");

    CalibrationResult result;
    bool have_best = false;
    double best_auc = 0;
    for (double beta : betas) {
        auto reports = build_reports(beta);
        if (reports.empty()) throw CalibrationError("validation report set is empty");
        const double auc = risk_coverage_curve(reports, alpha).auc;
        result.auc_by_beta.emplace_back(beta, auc);
        if (!have_best || auc < best_auc) {
            have_best = true;
            best_auc = auc;
            result.beta = beta;
        }
    }
    return result;
}

} // namespace cehis
