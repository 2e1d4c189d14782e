#include "cehis/dataset.hpp"

#include "cehis/errors.hpp"
#include "cehis/rng.hpp"
#include "cehis/text.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace cehis {

std::string to_string(ReasoningMode mode) {
    return mode == ReasoningMode::entity ? "entity" : "relation";
}

ReasoningMode parse_mode(std::string_view s) {
    if (s == "entity") return ReasoningMode::entity;
    if (s == "relation") return ReasoningMode::relation;
    throw ValidationError("unknown reasoning mode '" + std::string(s) + "' (expected entity|relation)");
}

std::string describe(const Query& q) {
    std::ostringstream os;
    os << to_string(q.mode) << " query (";
    if (q.mode == ReasoningMode::entity)
        os << "s=" << q.subject << ", r=" << q.relation << ", ?, t=" << q.time << ") gt=" << q.object;
    else
        os << "s=" << q.subject << ", ?, o=" << q.object << ", t=" << q.time << ") gt=" << q.relation;
    return os.str();
}

const Snapshot* TemporalDataset::snapshot_at(TimeIndex t) const {
    auto it = std::lower_bound(snapshots.begin(), snapshots.end(), t,
                               [](const Snapshot& s, TimeIndex v) { return s.time < v; });
    if (it == snapshots.end() || it->time != t) return nullptr;
    return &*it;
}

std::span<const Snapshot> TemporalDataset::history_before(TimeIndex t) const {
    auto it = std::lower_bound(snapshots.begin(), snapshots.end(), t,
                               [](const Snapshot& s, TimeIndex v) { return s.time < v; });
    return {snapshots.data(), static_cast<std::size_t>(it - snapshots.begin())};
}

std::span<const Snapshot> TemporalDataset::snapshots_in(TimeRange range) const {
    auto lo = std::lower_bound(snapshots.begin(), snapshots.end(), range.begin,
                               [](const Snapshot& s, TimeIndex v) { return s.time < v; });
    auto hi = std::lower_bound(lo, snapshots.end(), range.end,
                               [](const Snapshot& s, TimeIndex v) { return s.time < v; });
    return {snapshots.data() + (lo - snapshots.begin()), static_cast<std::size_t>(hi - lo)};
}

namespace {

struct RawFact {
    std::int64_t s, r, o, t;
};

std::vector<std::string> read_id_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open id map " + path.string());
    std::map<std::int64_t, std::string> by_id;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() < 2)
            throw ParseError(path.filename().string() + ":" + std::to_string(lineno) + ": expected name<TAB>id");
        std::int64_t id = parse_int(cols[1], path.filename().string() + ":" + std::to_string(lineno));
        if (id < 0)
            throw ValidationError(path.filename().string() + ":" + std::to_string(lineno) + ": negative id");
        if (!by_id.emplace(id, std::string(cols[0])).second)
            throw ValidationError(path.filename().string() + ":" + std::to_string(lineno) + ": duplicate id " +
                                  std::to_string(id));
    }
    if (by_id.empty()) throw ValidationError(path.string() + ": empty id map");
    if (by_id.rbegin()->first != static_cast<std::int64_t>(by_id.size()) - 1)
        throw ValidationError(path.string() + ": ids are not dense 0.." + std::to_string(by_id.size() - 1));
    std::vector<std::string> names(by_id.size());
    for (auto& [id, name] : by_id) names[static_cast<std::size_t>(id)] = std::move(name);
    return names;
}

std::vector<RawFact> read_split(const std::filesystem::path& path, std::int64_t n_entities, std::int64_t n_relations) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open split file " + path.string());
    std::vector<RawFact> facts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string ctx = path.filename().string() + ":" + std::to_string(lineno);
        auto cols = split_tabs(line);
        if (cols.size() < 4) throw ParseError(ctx + ": expected at least 4 tab-separated columns, got " +
                                              std::to_string(cols.size()));
        RawFact f{parse_int(cols[0], ctx), parse_int(cols[1], ctx), parse_int(cols[2], ctx), parse_int(cols[3], ctx)};
        if (f.s < 0 || f.s >= n_entities)
            throw ValidationError(ctx + ": subject id " + std::to_string(f.s) + " outside entity vocabulary of size " +
                                  std::to_string(n_entities));
        if (f.o < 0 || f.o >= n_entities)
            throw ValidationError(ctx + ": object id " + std::to_string(f.o) + " outside entity vocabulary of size " +
                                  std::to_string(n_entities));
        if (f.r < 0 || f.r >= n_relations)
            throw ValidationError(ctx + ": relation id " + std::to_string(f.r) +
                                  " outside relation vocabulary of size " + std::to_string(n_relations));
        if (f.t < 0) throw ValidationError(ctx + ": negative timestamp " + std::to_string(f.t));
        facts.push_back(f);
    }
    if (facts.empty()) throw ValidationError(path.string() + ": empty split");
    return facts;
}

TimeRange range_of(const std::vector<Quadruple>& facts) {
    TimeIndex lo = facts.front().time, hi = facts.front().time;
    for (const auto& f : facts) {
        lo = std::min(lo, f.time);
        hi = std::max(hi, f.time);
    }
    return {lo, hi + 1};
}

void bucket_snapshots(TemporalDataset& ds) {
    std::map<TimeIndex, std::vector<Quadruple>> buckets;
    for (const auto* split : {&ds.train_facts, &ds.valid_facts, &ds.test_facts})
        for (const auto& f : *split) buckets[f.time].push_back(f);
    ds.snapshots.clear();
    ds.snapshots.reserve(buckets.size());
    for (auto& [t, facts] : buckets) ds.snapshots.push_back(Snapshot{t, std::move(facts)});
}

} // namespace

void apply_inverse_augmentation(TemporalDataset& ds) {
    if (ds.inverse_augmented) return;
    const RelationId n_rel = ds.num_relations_raw();
    for (auto& snap : ds.snapshots) {
        const std::size_t n = snap.facts.size();
        snap.facts.reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const Quadruple& f = snap.facts[i];
            snap.facts.push_back(Quadruple{f.object, static_cast<RelationId>(f.relation + n_rel), f.subject, f.time});
        }
    }
    ds.inverse_augmented = true;
}

TemporalDataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options) {
    TemporalDataset ds;
    ds.entity_names = read_id_map(dir / "entity2id.txt");
    ds.relation_names = read_id_map(dir / "relation2id.txt");

    auto train = read_split(dir / "train.txt", ds.num_entities(), ds.num_relations_raw());
    auto valid = read_split(dir / "valid.txt", ds.num_entities(), ds.num_relations_raw());
    auto test = read_split(dir / "test.txt", ds.num_entities(), ds.num_relations_raw());

    std::set<std::int64_t> raw_times;
    for (const auto* split : {&train, &valid, &test})
        for (const auto& f : *split) raw_times.insert(f.t);

    std::int64_t origin = *raw_times.begin();
    std::int64_t granularity = 1;
    if (raw_times.size() > 1) {
        granularity = std::numeric_limits<std::int64_t>::max();
        std::int64_t prev = origin;
        for (auto it = std::next(raw_times.begin()); it != raw_times.end(); ++it) {
            granularity = std::min(granularity, *it - prev);
            prev = *it;
        }
    }
    for (std::int64_t t : raw_times)
        if ((t - origin) % granularity != 0)
            throw ValidationError("timestamp " + std::to_string(t) + " is not divisible by the inferred granularity " +
                                  std::to_string(granularity));

    ds.granularity = granularity;
    ds.time_origin = origin;

    auto normalize = [&](const std::vector<RawFact>& raw) {
        std::vector<Quadruple> out;
        out.reserve(raw.size());
        for (const auto& f : raw)
            out.push_back(Quadruple{static_cast<EntityId>(f.s), static_cast<RelationId>(f.r),
                                    static_cast<EntityId>(f.o), static_cast<TimeIndex>((f.t - origin) / granularity)});
        return out;
    };
    ds.train_facts = normalize(train);
    ds.valid_facts = normalize(valid);
    ds.test_facts = normalize(test);

    ds.train_range = range_of(ds.train_facts);
    ds.valid_range = range_of(ds.valid_facts);
    ds.test_range = range_of(ds.test_facts);
    if (ds.train_range.end > ds.valid_range.begin || ds.valid_range.end > ds.test_range.begin)
        throw ValidationError("split time ranges must be disjoint and ordered train < valid < test");

    bucket_snapshots(ds);
    if (options.inverse_augment) apply_inverse_augmentation(ds);
    return ds;
}

void write_dataset(const TemporalDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_map = [&](const std::filesystem::path& path, const std::vector<std::string>& names) {
        std::ofstream out(path);
        if (!out) throw ValidationError("cannot write " + path.string());
        for (std::size_t i = 0; i < names.size(); ++i) out << names[i] << '\t' << i << '\n';
    };
    write_map(dir / "entity2id.txt", ds.entity_names);
    write_map(dir / "relation2id.txt", ds.relation_names);

    auto write_split = [&](const std::filesystem::path& path, const std::vector<Quadruple>& facts) {
        std::ofstream out(path);
        if (!out) throw ValidationError("cannot write " + path.string());
        for (const auto& f : facts)
            out << f.subject << '\t' << f.relation << '\t' << f.object << '\t'
                << (ds.time_origin + static_cast<std::int64_t>(f.time) * ds.granularity) << '\n';
    };
    write_split(dir / "train.txt", ds.train_facts);
    write_split(dir / "valid.txt", ds.valid_facts);
    write_split(dir / "test.txt", ds.test_facts);
}

std::vector<Query> queries_at(const TemporalDataset& ds, TimeIndex t, ReasoningMode mode) {
    std::vector<Query> out;
    const Snapshot* snap = ds.snapshot_at(t);
    if (snap == nullptr) return out;
    const RelationId n_rel_raw = ds.num_relations_raw();
    out.reserve(snap->facts.size());
    for (const auto& f : snap->facts) {
        if (mode == ReasoningMode::relation && f.relation >= n_rel_raw) continue; // inverse copy
        out.push_back(Query{mode, f.subject, f.relation, f.object, f.time});
    }
    return out;
}

std::vector<Query> queries_in_range(const TemporalDataset& ds, TimeRange range, ReasoningMode mode) {
    std::vector<Query> out;
    for (const auto& snap : ds.snapshots_in(range)) {
        auto qs = queries_at(ds, snap.time, mode);
        out.insert(out.end(), qs.begin(), qs.end());
    }
    return out;
}

TemporalDataset generate_synthetic(std::uint64_t seed, const SynthParams& p) {
    if (p.n_entities <= 0 || p.n_relations <= 0) throw ValidationError("synthetic corpus needs entities and relations");
    if (p.n_timestamps < 3) throw ValidationError("synthetic corpus needs at least 3 timestamps for the three splits");
    if (p.recurrence_prob < 0 || p.recurrence_prob > 1 || p.noise_prob < 0 || p.noise_prob > 1)
        throw ValidationError("recurrence_prob and noise_prob must lie in [0,1]");

    SplitMix64 rng(seed);

    // Distinct planted triples; one per entity keeps per-key series dense enough
    // to exercise the history windows.
    const std::int64_t space =
        static_cast<std::int64_t>(p.n_entities) * p.n_relations * p.n_entities;
    const std::int32_t n_patterns = static_cast<std::int32_t>(
        std::min<std::int64_t>(p.n_entities, space));
    std::set<std::tuple<EntityId, RelationId, EntityId>> seen;
    std::vector<Quadruple> patterns;
    while (static_cast<std::int32_t>(patterns.size()) < n_patterns) {
        EntityId s = rng.index(p.n_entities);
        RelationId r = rng.index(p.n_relations);
        EntityId o = rng.index(p.n_entities);
        if (seen.emplace(s, r, o).second) patterns.push_back(Quadruple{s, r, o, 0});
    }

    TemporalDataset ds;
    ds.entity_names.reserve(p.n_entities);
    for (std::int32_t i = 0; i < p.n_entities; ++i) ds.entity_names.push_back("e" + std::to_string(i));
    for (std::int32_t i = 0; i < p.n_relations; ++i) ds.relation_names.push_back("rel" + std::to_string(i));

    const TimeIndex train_end = std::max<TimeIndex>(1, static_cast<TimeIndex>(p.n_timestamps * 7 / 10));
    const TimeIndex valid_end =
        std::min<TimeIndex>(p.n_timestamps - 1,
                            std::max<TimeIndex>(train_end + 1, static_cast<TimeIndex>(p.n_timestamps * 17 / 20)));

    for (TimeIndex t = 0; t < p.n_timestamps; ++t) {
        std::vector<Quadruple>* split = t < train_end          ? &ds.train_facts
                                        : t < valid_end        ? &ds.valid_facts
                                                               : &ds.test_facts;
        for (const auto& pat : patterns) {
            if (rng.uniform() < p.recurrence_prob) {
                split->push_back(Quadruple{pat.subject, pat.relation, pat.object, t});
            } else if (rng.uniform() < p.noise_prob) {
                split->push_back(
                    Quadruple{rng.index(p.n_entities), rng.index(p.n_relations), rng.index(p.n_entities), t});
            }
        }
    }
    if (ds.train_facts.empty() || ds.valid_facts.empty() || ds.test_facts.empty())
        throw ValidationError("synthetic parameters produced an empty split; raise recurrence_prob or noise_prob");

    // Compress away empty timestamps so the written corpus reloads to the
    // identical dataset under the loader's normalization.
    std::set<TimeIndex> occupied;
    for (const auto* split : {&ds.train_facts, &ds.valid_facts, &ds.test_facts})
        for (const auto& f : *split) occupied.insert(f.time);
    std::map<TimeIndex, TimeIndex> remap;
    TimeIndex next = 0;
    for (TimeIndex t : occupied) remap[t] = next++;
    for (auto* split : {&ds.train_facts, &ds.valid_facts, &ds.test_facts})
        for (auto& f : *split) f.time = remap[f.time];

    ds.train_range = range_of(ds.train_facts);
    ds.valid_range = range_of(ds.valid_facts);
    ds.test_range = range_of(ds.test_facts);
    bucket_snapshots(ds);
    return ds;
}

} // namespace cehis
