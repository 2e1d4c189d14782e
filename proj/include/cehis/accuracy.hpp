#pragma once

#include "cehis/dataset.hpp"
#include "cehis/reasoner.hpp"

#include <array>
#include <map>
#include <span>

namespace cehis {

// Key kinds of related historical queries. Entity reasoning groups by subject,
// relation, and the (subject, relation) pair; relation reasoning by subject,
// object, and the (subject, object) pair.
enum class KeyKind : std::uint8_t { subject, relation, subject_relation, object, subject_object };

std::string to_string(KeyKind kind);
KeyKind parse_key_kind(std::string_view s);

struct RelatedKey {
    KeyKind kind = KeyKind::subject;
    std::int32_t a = -1;
    std::int32_t b = -1;  // second id for pair kinds, -1 otherwise

    auto operator<=>(const RelatedKey&) const = default;
};

// The three related-query keys of a query, in (first slot, second slot, pair) order.
std::array<RelatedKey, 3> related_keys(const Query& query);

struct AccuracyEntry {
    TimeIndex time = 0;
    double acc = 0.0;        // mean reciprocal rank over matching queries at `time`
    std::int64_t count = 0;  // number of matching queries

    bool operator==(const AccuracyEntry&) const = default;
};

using AccuracySeries = std::vector<AccuracyEntry>;

struct AccuracyStore {
    ReasoningMode mode = ReasoningMode::entity;
    TimeRange range;  // timestamps whose queries were scored into the store
    std::map<RelatedKey, AccuracySeries> series;

    bool operator==(const AccuracyStore&) const = default;

    // nullptr when the key never matched a query in range.
    const AccuracySeries* find(const RelatedKey& key) const;
};

struct HawkesConfig {
    enum class TimeMode { absolute_interval, relative_order };

    double delta = 0.5;    // decay rate, >= 0
    int short_window = 3;  // number of most recent entries in the decayed sum
    int long_window = 10;  // entries averaged into the base accuracy
    TimeMode time_mode = TimeMode::absolute_interval;
};

// Rolls over the snapshots in `range`, predicting every query with history
// strictly before its timestamp and recording per-key mean reciprocal rank.
// Timestamps are independent, so the parallel kernel distributes them; results
// are identical to the serial reference.
AccuracyStore build_accuracy_store(const Reasoner& model, const TemporalDataset& dataset, TimeRange range,
                                   ReasoningMode mode, ExecMode exec = ExecMode::parallel);

// Base accuracy (mean of the last long_window entries) plus the decayed
// contribution exp(-delta * gap) * acc of the last short_window entries.
// In relative-order mode the gap is the entry's distance from the end
// (1 = most recent). Every entry must precede t_q. Empty series scores 0.
double hawkes_score(std::span<const AccuracyEntry> series, TimeIndex t_q, const HawkesConfig& config);

struct HistoryScoreOptions {
    std::array<bool, 3> key_enabled = {true, true, true};  // aligned with related_keys order
    bool use_mean = false;  // replace the Hawkes aggregation with the plain series mean
};

// Sum of the per-key scores over the query's related keys. Each stored series
// is truncated to entries strictly before the query timestamp; keys with no
// usable entries contribute 0.
double historical_score(const AccuracyStore& store, const Query& query, const HawkesConfig& config,
                        const HistoryScoreOptions& options = {});

// Cache round-trip; reload reproduces the store bit-exactly.
void save_accuracy_store(const AccuracyStore& store, const std::filesystem::path& path);
AccuracyStore load_accuracy_store(const std::filesystem::path& path);

} // namespace cehis
