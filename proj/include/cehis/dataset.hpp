#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cehis {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using AnswerId = std::int32_t;
using TimeIndex = std::int32_t;

enum class ReasoningMode { entity, relation };

std::string to_string(ReasoningMode mode);
ReasoningMode parse_mode(std::string_view s);

struct Quadruple {
    EntityId subject = 0;
    RelationId relation = 0;
    EntityId object = 0;
    TimeIndex time = 0;

    auto operator<=>(const Quadruple&) const = default;
};

// All facts sharing one normalized timestamp, in file order (inverse block
// appended after the forward block when the dataset is augmented).
struct Snapshot {
    TimeIndex time = 0;
    std::vector<Quadruple> facts;

    bool operator==(const Snapshot&) const = default;
};

// Half-open window of normalized time indices.
struct TimeRange {
    TimeIndex begin = 0;
    TimeIndex end = 0;

    bool contains(TimeIndex t) const { return t >= begin && t < end; }
    bool operator==(const TimeRange&) const = default;
};

struct TemporalDataset {
    std::vector<std::string> entity_names;   // index == entity id
    std::vector<std::string> relation_names; // index == raw relation id

    // Time-ascending, possibly sparse. Facts include inverse copies when augmented.
    std::vector<Snapshot> snapshots;

    // Original (never augmented) facts per split, in file order, normalized times.
    std::vector<Quadruple> train_facts;
    std::vector<Quadruple> valid_facts;
    std::vector<Quadruple> test_facts;

    TimeRange train_range;
    TimeRange valid_range;
    TimeRange test_range;

    std::int64_t granularity = 1;  // raw time units per index step
    std::int64_t time_origin = 0;  // raw time of index 0
    bool inverse_augmented = false;

    bool operator==(const TemporalDataset&) const = default;

    std::int32_t num_entities() const { return static_cast<std::int32_t>(entity_names.size()); }
    std::int32_t num_relations_raw() const { return static_cast<std::int32_t>(relation_names.size()); }
    std::int32_t num_relations() const { return inverse_augmented ? 2 * num_relations_raw() : num_relations_raw(); }

    // nullptr when no snapshot exists at t.
    const Snapshot* snapshot_at(TimeIndex t) const;

    // Prefix of snapshots with time strictly before t.
    std::span<const Snapshot> history_before(TimeIndex t) const;

    // Snapshots whose time lies in [range.begin, range.end).
    std::span<const Snapshot> snapshots_in(TimeRange range) const;
};

// One hidden-slot prediction problem. Entity mode hides the object; relation
// mode hides the relation. The hidden slot holds the ground truth.
struct Query {
    ReasoningMode mode = ReasoningMode::entity;
    EntityId subject = 0;
    RelationId relation = 0;
    EntityId object = 0;
    TimeIndex time = 0;

    AnswerId ground_truth() const { return mode == ReasoningMode::entity ? object : relation; }

    bool operator==(const Query&) const = default;
};

std::string describe(const Query& q);

struct LoadOptions {
    bool inverse_augment = true;
};

// Reads train.txt/valid.txt/test.txt plus entity2id.txt/relation2id.txt.
// Timestamps are normalized to indices by (raw - min raw) / granularity, with
// the granularity inferred as the smallest positive gap between raw times.
TemporalDataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

// Writes the dataset back in the loader's file format (original facts only,
// raw timestamps reconstructed from granularity and origin).
void write_dataset(const TemporalDataset& dataset, const std::filesystem::path& dir);

// Rebuilds snapshots with an (o, r + |R|, s, t) copy of every fact. No-op flagwise
// if already augmented.
void apply_inverse_augmentation(TemporalDataset& dataset);

// Queries for the snapshot at t, deterministic file order; empty when no
// snapshot exists at t. Relation mode skips inverse facts so every ground
// truth stays inside the raw relation vocabulary.
std::vector<Query> queries_at(const TemporalDataset& dataset, TimeIndex t, ReasoningMode mode);

std::vector<Query> queries_in_range(const TemporalDataset& dataset, TimeRange range, ReasoningMode mode);

struct SynthParams {
    std::int32_t n_entities = 100;
    std::int32_t n_relations = 20;
    std::int32_t n_timestamps = 60;
    double recurrence_prob = 0.8;
    double noise_prob = 0.2;
};

// Seeded corpus with planted recurring (s,r,o) patterns: at each timestamp a
// pattern re-fires with recurrence_prob, otherwise a uniform noise fact is
// drawn with noise_prob. Timestamps split 70/15/15 into train/valid/test.
TemporalDataset generate_synthetic(std::uint64_t seed, const SynthParams& params = {});

} // namespace cehis
