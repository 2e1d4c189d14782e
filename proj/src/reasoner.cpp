#include "cehis/reasoner.hpp"

#include "cehis/errors.hpp"
#include "cehis/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cehis {

namespace {

void check_history(const Query& query, std::span<const Snapshot> history) {
    for (const auto& snap : history)
        if (snap.time >= query.time)
            throw TemporalLeakError("history contains snapshot at t=" + std::to_string(snap.time) +
                                    " for a query at t=" + std::to_string(query.time));
}

// Dense score accumulator reused across calls; epoch stamping avoids clearing
// the whole candidate range for every query.
struct Scratch {
    std::vector<double> score;
    std::vector<std::uint64_t> stamp;
    std::uint64_t epoch = 0;
};

Scratch& scratch_for(std::size_t n) {
    static thread_local Scratch s;
    if (s.score.size() < n) {
        s.score.resize(n);
        s.stamp.assign(n, 0);
    }
    ++s.epoch;
    return s;
}

struct DistributionSummary {
    double z = 0;
    double max_score = 0;
    double gt_score = 0;
    std::int32_t gt_rank = 1;
    double entropy = 0;
};

} // namespace

FrequencyReasoner::FrequencyReasoner(const TemporalDataset& dataset, ReasonerConfig config)
    : dataset_(&dataset), cfg_(config) {
    if (!(cfg_.smoothing > 0)) throw ValidationError("smoothing must be positive");
    if (cfg_.backoff_weight < 0 || cfg_.backoff_weight > 1)
        throw ValidationError("backoff_weight must lie in [0,1]");
    if (cfg_.decay_lambda < 0) throw ValidationError("decay_lambda must be non-negative");

    by_subject_.resize(static_cast<std::size_t>(dataset.num_entities()));
    for (const auto& snap : dataset.snapshots)
        for (const auto& f : snap.facts)
            by_subject_[static_cast<std::size_t>(f.subject)].push_back(IndexedFact{f.time, f.relation, f.object});
}

// Enumerates historical facts sharing the query subject, oldest first. When the
// history span is a prefix of the owning dataset's snapshots the per-subject
// index is used; otherwise the span is scanned directly. Both walks visit the
// same facts in the same order, so downstream arithmetic is identical.
template <typename MatchFn>
void FrequencyReasoner::for_each_match(const Query& query, std::span<const Snapshot> history, MatchFn&& fn) const {
    if (history.empty()) return;
    const bool dataset_prefix =
        history.data() == dataset_->snapshots.data() && history.size() <= dataset_->snapshots.size();
    if (dataset_prefix) {
        const TimeIndex cutoff = history.back().time + 1;
        const auto& facts = by_subject_[static_cast<std::size_t>(query.subject)];
        auto end = std::partition_point(facts.begin(), facts.end(),
                                        [cutoff](const IndexedFact& f) { return f.time < cutoff; });
        for (auto it = facts.begin(); it != end; ++it) fn(*it);
    } else {
        for (const auto& snap : history)
            for (const auto& f : snap.facts)
                if (f.subject == query.subject) fn(IndexedFact{f.time, f.relation, f.object});
    }
}

PredictionRecord FrequencyReasoner::predict(const Query& query, std::span<const Snapshot> history) const {
    check_history(query, history);
    const bool entity_mode = query.mode == ReasoningMode::entity;
    const std::int64_t n_candidates = entity_mode ? dataset_->num_entities() : dataset_->num_relations_raw();
    const RelationId n_rel_raw = dataset_->num_relations_raw();
    const AnswerId gt = query.ground_truth();
    if (query.subject < 0 || query.subject >= dataset_->num_entities())
        throw ValidationError("query subject outside entity vocabulary: " + describe(query));
    if (gt < 0 || gt >= n_candidates) throw ValidationError("ground truth outside answer space: " + describe(query));

    auto& sc = scratch_for(static_cast<std::size_t>(n_candidates));
    std::vector<AnswerId> touched;

    const double base = cfg_.smoothing;
    const double off_weight = 1.0 - cfg_.backoff_weight;
    for_each_match(query, history, [&](const IndexedFact& f) {
        AnswerId answer;
        bool second_slot_match;
        if (entity_mode) {
            answer = f.object;
            second_slot_match = f.relation == query.relation;
        } else {
            if (f.relation >= n_rel_raw) return;  // inverse copy; outside the relation answer space
            answer = f.relation;
            second_slot_match = f.object == query.object;
        }
        const double decay = std::exp(-cfg_.decay_lambda * static_cast<double>(query.time - f.time));
        const double w = second_slot_match ? decay : decay * off_weight;
        const auto a = static_cast<std::size_t>(answer);
        if (sc.stamp[a] != sc.epoch) {
            sc.stamp[a] = sc.epoch;
            sc.score[a] = base;
            touched.push_back(answer);
        }
        sc.score[a] += w;
    });

    // Candidates never touched all sit at the smoothing score; fold them in closed form.
    const std::int64_t n_background = n_candidates - static_cast<std::int64_t>(touched.size());
    double z = base * static_cast<double>(n_candidates);
    for (AnswerId a : touched) z += sc.score[static_cast<std::size_t>(a)] - base;

    double max_score = n_background > 0 ? base : -std::numeric_limits<double>::infinity();
    for (AnswerId a : touched) max_score = std::max(max_score, sc.score[static_cast<std::size_t>(a)]);

    const double gt_score = sc.stamp[static_cast<std::size_t>(gt)] == sc.epoch
                                ? sc.score[static_cast<std::size_t>(gt)]
                                : base;
    std::int32_t rank = 1;
    for (AnswerId a : touched)
        if (sc.score[static_cast<std::size_t>(a)] > gt_score) ++rank;

    double entropy = 0;
    if (n_background > 0) {
        const double p_bg = base / z;
        entropy -= static_cast<double>(n_background) * (p_bg * std::log(p_bg));
    }
    for (AnswerId a : touched) {
        const double p = sc.score[static_cast<std::size_t>(a)] / z;
        entropy -= p * std::log(p);
    }

    PredictionRecord rec;
    rec.query = query;
    rec.gt_rank = rank;
    rec.gt_prob = gt_score / z;
    rec.max_prob = max_score / z;
    rec.entropy = entropy;
    return rec;
}

std::vector<double> FrequencyReasoner::distribution(const Query& query, std::span<const Snapshot> history) const {
    check_history(query, history);
    const bool entity_mode = query.mode == ReasoningMode::entity;
    const std::size_t n = static_cast<std::size_t>(entity_mode ? dataset_->num_entities()
                                                               : dataset_->num_relations_raw());
    const RelationId n_rel_raw = dataset_->num_relations_raw();
    std::vector<double> scores(n, cfg_.smoothing);
    const double off_weight = 1.0 - cfg_.backoff_weight;
    for_each_match(query, history, [&](const IndexedFact& f) {
        AnswerId answer;
        bool second_slot_match;
        if (entity_mode) {
            answer = f.object;
            second_slot_match = f.relation == query.relation;
        } else {
            if (f.relation >= n_rel_raw) return;
            answer = f.relation;
            second_slot_match = f.object == query.object;
        }
        const double decay = std::exp(-cfg_.decay_lambda * static_cast<double>(query.time - f.time));
        scores[static_cast<std::size_t>(answer)] += second_slot_match ? decay : decay * off_weight;
    });
    double z = 0;
    for (double s : scores) z += s;
    for (double& s : scores) s /= z;
    return scores;
}

std::size_t DumpReasoner::KeyHash::operator()(const Query& q) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(q.mode));
    mix(static_cast<std::uint32_t>(q.subject));
    mix(static_cast<std::uint32_t>(q.relation));
    mix(static_cast<std::uint32_t>(q.object));
    mix(static_cast<std::uint32_t>(q.time));
    return static_cast<std::size_t>(h);
}

PredictionRecord DumpReasoner::predict(const Query& query, std::span<const Snapshot> history) const {
    check_history(query, history);
    auto it = records_.find(query);
    if (it == records_.end()) throw LookupError("prediction dump does not cover " + describe(query));
    return it->second;
}

bool DumpReasoner::covers(const Query& query) const { return records_.find(query) != records_.end(); }

namespace {

constexpr std::string_view kDumpHeader = "mode\tsubject\trelation\tobject\ttimestamp\tgt_rank\tgt_prob\tmax_prob\tentropy\ttopk";

std::vector<std::pair<AnswerId, double>> parse_topk(std::string_view field, const std::string& ctx) {
    std::vector<std::pair<AnswerId, double>> topk;
    if (field.empty()) return topk;
    std::size_t start = 0;
    while (start <= field.size()) {
        std::size_t end = field.find(';', start);
        std::string_view item = field.substr(start, end == std::string_view::npos ? end : end - start);
        std::size_t colon = item.find(':');
        if (colon == std::string_view::npos) throw FormatError(ctx + ": topk item '" + std::string(item) + "' is not id:prob");
        AnswerId id = static_cast<AnswerId>(parse_int(item.substr(0, colon), ctx));
        double prob = parse_double(item.substr(colon + 1), ctx);
        if (prob < 0 || prob > 1) throw ValidationError(ctx + ": topk probability outside [0,1]");
        if (!topk.empty() && prob > topk.back().second)
            throw ValidationError(ctx + ": topk probabilities must be descending");
        topk.emplace_back(id, prob);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return topk;
}

} // namespace

std::unique_ptr<DumpReasoner> load_external_dump(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open prediction dump " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDumpHeader)
        throw FormatError(path.string() + ": unexpected header; expected '" + std::string(kDumpHeader) + "'");

    auto reasoner = std::unique_ptr<DumpReasoner>(new DumpReasoner());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string ctx = path.filename().string() + ":" + std::to_string(lineno);
        auto cols = split_tabs(line);
        if (cols.size() != 9 && cols.size() != 10)
            throw FormatError(ctx + ": expected 9 or 10 columns, got " + std::to_string(cols.size()));

        PredictionRecord rec;
        rec.query.mode = parse_mode(cols[0]);
        rec.query.subject = static_cast<EntityId>(parse_int(cols[1], ctx));
        rec.query.relation = static_cast<RelationId>(parse_int(cols[2], ctx));
        rec.query.object = static_cast<EntityId>(parse_int(cols[3], ctx));
        rec.query.time = static_cast<TimeIndex>(parse_int(cols[4], ctx));
        rec.gt_rank = static_cast<std::int32_t>(parse_int(cols[5], ctx));
        rec.gt_prob = parse_double(cols[6], ctx);
        rec.max_prob = parse_double(cols[7], ctx);
        rec.entropy = parse_double(cols[8], ctx);
        if (cols.size() == 10) rec.topk = parse_topk(cols[9], ctx);

        if (rec.gt_rank < 1) throw ValidationError(ctx + ": gt_rank must be >= 1");
        if (rec.gt_prob < 0 || rec.gt_prob > 1 || rec.max_prob < 0 || rec.max_prob > 1)
            throw ValidationError(ctx + ": probabilities must lie in [0,1]");
        if (rec.max_prob < rec.gt_prob) throw ValidationError(ctx + ": max_prob below gt_prob");
        if (rec.gt_rank == 1 && rec.gt_prob != rec.max_prob)
            throw ValidationError(ctx + ": rank-1 record must have gt_prob == max_prob");
        if (rec.entropy < 0) throw ValidationError(ctx + ": negative entropy");

        if (!reasoner->records_.emplace(rec.query, rec).second)
            throw FormatError(ctx + ": duplicate dump entry for " + describe(rec.query));
    }
    return reasoner;
}

void write_prediction_dump(std::span<const PredictionRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write prediction dump " + path.string());
    out << kDumpHeader << '\n';
    for (const auto& rec : records) {
        const Query& q = rec.query;
        out << to_string(q.mode) << '\t' << q.subject << '\t' << q.relation << '\t' << q.object << '\t' << q.time
            << '\t' << rec.gt_rank << '\t' << format_double(rec.gt_prob) << '\t' << format_double(rec.max_prob)
            << '\t' << format_double(rec.entropy) << '\t';
        for (std::size_t i = 0; i < rec.topk.size(); ++i) {
            if (i > 0) out << ';';
            out << rec.topk[i].first << ':' << format_double(rec.topk[i].second);
        }
        out << '\n';
    }
}

std::int32_t rank_from_scores(std::span<const double> scores, AnswerId ground_truth) {
    if (ground_truth < 0 || static_cast<std::size_t>(ground_truth) >= scores.size())
        throw ValidationError("ground truth index outside the score vector");
    const double gt = scores[static_cast<std::size_t>(ground_truth)];
    std::int32_t rank = 1;
    for (double s : scores)
        if (s > gt) ++rank;
    return rank;
}

HistoryProvider dataset_history(const TemporalDataset& dataset) {
    return [&dataset](const Query& q) { return dataset.history_before(q.time); };
}

namespace {

[[noreturn]] void rethrow_with_index(std::exception_ptr ep, std::size_t index, const Query& query) {
    const std::string prefix = "query " + std::to_string(index) + " [" + describe(query) + "]: ";
    try {
        std::rethrow_exception(ep);
    } catch (const TemporalLeakError& e) {
        throw TemporalLeakError(prefix + e.what());
    } catch (const LookupError& e) {
        throw LookupError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const FormatError& e) {
        throw FormatError(prefix + e.what());
    } catch (const std::exception& e) {
        throw Error(prefix + e.what());
    }
}

} // namespace

std::vector<PredictionRecord> batch_predict(const Reasoner& model, std::span<const Query> queries,
                                            const HistoryProvider& history, ExecMode mode) {
    std::vector<PredictionRecord> out(queries.size());
    const std::int64_t n = static_cast<std::int64_t>(queries.size());

#ifdef _OPENMP
    if (mode == ExecMode::parallel) {
        std::atomic<std::size_t> first_bad{std::numeric_limits<std::size_t>::max()};
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(i) > first_bad.load(std::memory_order_relaxed)) continue;
            try {
                out[static_cast<std::size_t>(i)] = model.predict(queries[static_cast<std::size_t>(i)],
                                                                 history(queries[static_cast<std::size_t>(i)]));
            } catch (...) {
#pragma omp critical(cehis_batch_predict_error)
                if (static_cast<std::size_t>(i) < first_bad.load(std::memory_order_relaxed)) {
                    first_bad.store(static_cast<std::size_t>(i), std::memory_order_relaxed);
                    error = std::current_exception();
                }
            }
        }
        if (error) rethrow_with_index(error, first_bad.load(), queries[first_bad.load()]);
        return out;
    }
#else
    (void)mode;
#endif

    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = model.predict(queries[static_cast<std::size_t>(i)],
                                                             history(queries[static_cast<std::size_t>(i)]));
        } catch (...) {
            rethrow_with_index(std::current_exception(), static_cast<std::size_t>(i),
                               queries[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

} // namespace cehis
