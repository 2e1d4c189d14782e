#include "cehis/accuracy.hpp"

#include "cehis/errors.hpp"
#include "cehis/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cehis {

std::string to_string(KeyKind kind) {
    switch (kind) {
        case KeyKind::subject: return "subject";
        case KeyKind::relation: return "relation";
        case KeyKind::subject_relation: return "subject_relation";
        case KeyKind::object: return "object";
        case KeyKind::subject_object: return "subject_object";
    }
    throw ValidationError("unknown key kind");
}

KeyKind parse_key_kind(std::string_view s) {
    if (s == "subject") return KeyKind::subject;
    if (s == "relation") return KeyKind::relation;
    if (s == "subject_relation") return KeyKind::subject_relation;
    if (s == "object") return KeyKind::object;
    if (s == "subject_object") return KeyKind::subject_object;
    throw ParseError("unknown key kind '" + std::string(s) + "'");
}

std::array<RelatedKey, 3> related_keys(const Query& q) {
    if (q.mode == ReasoningMode::entity)
        return {RelatedKey{KeyKind::subject, q.subject, -1}, RelatedKey{KeyKind::relation, q.relation, -1},
                RelatedKey{KeyKind::subject_relation, q.subject, q.relation}};
    return {RelatedKey{KeyKind::subject, q.subject, -1}, RelatedKey{KeyKind::object, q.object, -1},
            RelatedKey{KeyKind::subject_object, q.subject, q.object}};
}

const AccuracySeries* AccuracyStore::find(const RelatedKey& key) const {
    auto it = series.find(key);
    return it == series.end() ? nullptr : &it->second;
}

namespace {

void validate_hawkes(const HawkesConfig& cfg) {
    if (cfg.delta < 0) throw ValidationError("hawkes delta must be non-negative");
    if (cfg.short_window < 1) throw ValidationError("hawkes short_window must be positive");
    if (cfg.long_window < 1) throw ValidationError("hawkes long_window must be positive");
}

// Per-timestamp aggregation: key -> (sum of reciprocal ranks, count), keyed
// through an ordered map so serial and parallel builds merge identically.
using TimestampAccumulator = std::map<RelatedKey, std::pair<double, std::int64_t>>;

TimestampAccumulator score_timestamp(const Reasoner& model, const TemporalDataset& dataset, TimeIndex t,
                                     ReasoningMode mode) {
    TimestampAccumulator acc;
    auto queries = queries_at(dataset, t, mode);
    if (queries.empty()) return acc;
    auto records = batch_predict(model, queries, dataset_history(dataset), ExecMode::serial);
    for (const auto& rec : records) {
        const double rr = 1.0 / static_cast<double>(rec.gt_rank);
        for (const auto& key : related_keys(rec.query)) {
            auto& slot = acc[key];
            slot.first += rr;
            slot.second += 1;
        }
    }
    return acc;
}

} // namespace

AccuracyStore build_accuracy_store(const Reasoner& model, const TemporalDataset& dataset, TimeRange range,
                                   ReasoningMode mode, ExecMode exec) {
    if (range.begin > range.end) throw ValidationError("accuracy store range is inverted");

    const auto snapshots = dataset.snapshots_in(range);
    const std::int64_t n = static_cast<std::int64_t>(snapshots.size());
    std::vector<TimestampAccumulator> per_timestamp(snapshots.size());

#ifdef _OPENMP
    if (exec == ExecMode::parallel) {
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                per_timestamp[static_cast<std::size_t>(i)] =
                    score_timestamp(model, dataset, snapshots[static_cast<std::size_t>(i)].time, mode);
            } catch (...) {
#pragma omp critical(cehis_store_build_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else
#endif
    {
        for (std::int64_t i = 0; i < n; ++i)
            per_timestamp[static_cast<std::size_t>(i)] =
                score_timestamp(model, dataset, snapshots[static_cast<std::size_t>(i)].time, mode);
    }

    AccuracyStore store;
    store.mode = mode;
    store.range = range;
    for (std::int64_t i = 0; i < n; ++i) {
        const TimeIndex t = snapshots[static_cast<std::size_t>(i)].time;
        for (const auto& [key, slot] : per_timestamp[static_cast<std::size_t>(i)])
            store.series[key].push_back(AccuracyEntry{t, slot.first / static_cast<double>(slot.second), slot.second});
    }
    return store;
}

double hawkes_score(std::span<const AccuracyEntry> series, TimeIndex t_q, const HawkesConfig& cfg) {
    validate_hawkes(cfg);
    for (const auto& e : series)
        if (e.time >= t_q)
            throw TemporalLeakError("accuracy entry at t=" + std::to_string(e.time) +
                                    " used for a query at t=" + std::to_string(t_q));
    const std::size_t n = series.size();
    if (n == 0) return 0.0;

    const std::size_t mu_len = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.long_window));
    double mu = 0;
    for (std::size_t i = n - mu_len; i < n; ++i) mu += series[i].acc;
    mu /= static_cast<double>(mu_len);

    double score = mu;
    const std::size_t short_len = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.short_window));
    for (std::size_t h = 0; h < short_len; ++h) {
        const AccuracyEntry& e = series[n - 1 - h];
        const double gap = cfg.time_mode == HawkesConfig::TimeMode::absolute_interval
                               ? static_cast<double>(t_q - e.time)
                               : static_cast<double>(h + 1);
        score += std::exp(-cfg.delta * gap) * e.acc;
    }
    return score;
}

double historical_score(const AccuracyStore& store, const Query& query, const HawkesConfig& cfg,
                        const HistoryScoreOptions& options) {
    if (query.mode != store.mode)
        throw ValidationError("accuracy store was built for " + to_string(store.mode) + " mode, query is " +
                              to_string(query.mode));
    const auto keys = related_keys(query);
    double total = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!options.key_enabled[i]) continue;
        const AccuracySeries* series = store.find(keys[i]);
        if (series == nullptr) continue;
        // Only entries strictly before the query see the aggregation; the store
        // may extend past t_q when one rolling build serves a whole range.
        auto end = std::lower_bound(series->begin(), series->end(), query.time,
                                    [](const AccuracyEntry& e, TimeIndex t) { return e.time < t; });
        std::span<const AccuracyEntry> prefix{series->data(), static_cast<std::size_t>(end - series->begin())};
        if (prefix.empty()) continue;
        if (options.use_mean) {
            double sum = 0;
            for (const auto& e : prefix) sum += e.acc;
            total += sum / static_cast<double>(prefix.size());
        } else {
            total += hawkes_score(prefix, query.time, cfg);
        }
    }
    return total;
}

void save_accuracy_store(const AccuracyStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write accuracy store " + path.string());
    out << "# mode=" << to_string(store.mode) << "\trange_begin=" << store.range.begin
        << "\trange_end=" << store.range.end << '\n';
    out << "kind\tids\ttimestamp\tacc\tcount\n";
    for (const auto& [key, series] : store.series) {
        for (const auto& e : series) {
            out << to_string(key.kind) << '\t' << key.a;
            if (key.b >= 0) out << ',' << key.b;
            out << '\t' << e.time << '\t' << format_double(e.acc) << '\t' << e.count << '\n';
        }
    }
}

AccuracyStore load_accuracy_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open accuracy store " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty store file");
    AccuracyStore store;
    {
        auto cols = split_tabs(line);
        if (cols.size() != 3 || !cols[0].starts_with("# mode=") || !cols[1].starts_with("range_begin=") ||
            !cols[2].starts_with("range_end="))
            throw FormatError(path.string() + ": malformed store metadata line");
        store.mode = parse_mode(cols[0].substr(7));
        store.range.begin = static_cast<TimeIndex>(parse_int(cols[1].substr(12), path.string()));
        store.range.end = static_cast<TimeIndex>(parse_int(cols[2].substr(10), path.string()));
    }
    if (!std::getline(in, line) || line != "kind\tids\ttimestamp\tacc\tcount")
        throw FormatError(path.string() + ": missing store header line");

    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string ctx = path.filename().string() + ":" + std::to_string(lineno);
        auto cols = split_tabs(line);
        if (cols.size() != 5) throw FormatError(ctx + ": expected 5 columns");
        RelatedKey key;
        key.kind = parse_key_kind(cols[0]);
        auto comma = cols[1].find(',');
        if (comma == std::string_view::npos) {
            key.a = static_cast<std::int32_t>(parse_int(cols[1], ctx));
        } else {
            key.a = static_cast<std::int32_t>(parse_int(cols[1].substr(0, comma), ctx));
            key.b = static_cast<std::int32_t>(parse_int(cols[1].substr(comma + 1), ctx));
        }
        AccuracyEntry entry;
        entry.time = static_cast<TimeIndex>(parse_int(cols[2], ctx));
        entry.acc = parse_double(cols[3], ctx);
        entry.count = parse_int(cols[4], ctx);
        if (entry.acc <= 0 || entry.acc > 1) throw ValidationError(ctx + ": accuracy outside (0,1]");
        auto& series = store.series[key];
        if (!series.empty() && series.back().time >= entry.time)
            throw FormatError(ctx + ": series timestamps must be strictly increasing per key");
        series.push_back(entry);
    }
    return store;
}

} // namespace cehis
