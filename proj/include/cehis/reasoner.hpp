#pragma once

#include "cehis/dataset.hpp"

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cehis {

enum class ExecMode { serial, parallel };

// Output of the base reasoning model for one query: the summary of the
// candidate distribution that the confidence estimators consume.
struct PredictionRecord {
    Query query;
    std::int32_t gt_rank = 1;  // 1 + number of candidates scored strictly higher
    double gt_prob = 0.0;
    double max_prob = 0.0;
    double entropy = 0.0;                           // nats
    std::vector<std::pair<AnswerId, double>> topk;  // optional, probability-descending

    bool operator==(const PredictionRecord&) const = default;
};

struct ReasonerConfig {
    double decay_lambda = 0.0;  // recency weight on historical counts
    double smoothing = 1.0;     // added to every candidate; keeps full support
    double backoff_weight = 0.9;  // mix of exact-key counts vs subject-only counts
};

class Reasoner {
public:
    virtual ~Reasoner() = default;

    // history must contain only snapshots strictly before query.time.
    virtual PredictionRecord predict(const Query& query, std::span<const Snapshot> history) const = 0;
};

// Non-neural baseline: scores a candidate by smoothing plus exponentially
// time-decayed counts of matching historical facts, where a fact sharing the
// query's second slot (relation in entity mode, object in relation mode)
// counts fully and a subject-only match counts (1 - backoff_weight).
class FrequencyReasoner : public Reasoner {
public:
    // The dataset must outlive the reasoner.
    explicit FrequencyReasoner(const TemporalDataset& dataset, ReasonerConfig config = {});

    PredictionRecord predict(const Query& query, std::span<const Snapshot> history) const override;

    // Full normalized distribution over the answer space; test/debug path.
    std::vector<double> distribution(const Query& query, std::span<const Snapshot> history) const;

    const ReasonerConfig& config() const { return cfg_; }

private:
    struct IndexedFact {
        TimeIndex time;
        RelationId relation;
        EntityId object;
    };

    const TemporalDataset* dataset_;
    ReasonerConfig cfg_;
    std::vector<std::vector<IndexedFact>> by_subject_;  // snapshot order per subject

    template <typename MatchFn>
    void for_each_match(const Query& query, std::span<const Snapshot> history, MatchFn&& fn) const;
};

// Replays prediction records exported by an external model. Lookup is exact
// on (mode, subject, relation, object, timestamp); anything uncovered is an error.
class DumpReasoner : public Reasoner {
public:
    PredictionRecord predict(const Query& query, std::span<const Snapshot> history) const override;

    bool covers(const Query& query) const;
    std::size_t size() const { return records_.size(); }

    friend std::unique_ptr<DumpReasoner> load_external_dump(const std::filesystem::path& path);

private:
    struct KeyHash {
        std::size_t operator()(const Query& q) const;
    };
    std::unordered_map<Query, PredictionRecord, KeyHash> records_;
};

std::unique_ptr<DumpReasoner> load_external_dump(const std::filesystem::path& path);

void write_prediction_dump(std::span<const PredictionRecord> records, const std::filesystem::path& path);

// 1 + number of candidates scored strictly above the ground truth; ties take
// the optimistic rank. Invariant under any positive rescaling of the scores.
std::int32_t rank_from_scores(std::span<const double> scores, AnswerId ground_truth);

using HistoryProvider = std::function<std::span<const Snapshot>(const Query&)>;

// Provider serving every snapshot of the dataset strictly before the query time.
HistoryProvider dataset_history(const TemporalDataset& dataset);

// Order-preserving batch evaluation. The parallel kernel and the serial
// reference produce identical records; per-query errors carry the query index.
std::vector<PredictionRecord> batch_predict(const Reasoner& model, std::span<const Query> queries,
                                            const HistoryProvider& history, ExecMode mode = ExecMode::parallel);

} // namespace cehis
