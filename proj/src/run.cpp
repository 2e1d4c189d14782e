#include "cehis/run.hpp"

#include "cehis/errors.hpp"
#include "cehis/rng.hpp"
#include "cehis/text.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

namespace cehis {

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::cehis: return "cehis";
        case EstimatorKind::sr: return "sr";
        case EstimatorKind::entropy: return "entropy";
        case EstimatorKind::oracle: return "oracle";
        case EstimatorKind::random: return "random";
    }
    throw ValidationError("unknown estimator kind");
}

EstimatorKind parse_estimator(std::string_view s) {
    if (s == "cehis") return EstimatorKind::cehis;
    if (s == "sr") return EstimatorKind::sr;
    if (s == "entropy") return EstimatorKind::entropy;
    if (s == "oracle") return EstimatorKind::oracle;
    if (s == "random") return EstimatorKind::random;
    throw ValidationError("unknown estimator '" + std::string(s) + "' (expected cehis|sr|entropy|oracle|random)");
}

std::string to_string(ReasonerKind kind) {
    return kind == ReasonerKind::frequency ? "frequency" : "dump";
}

ReasonerKind parse_reasoner(std::string_view s) {
    if (s == "frequency") return ReasonerKind::frequency;
    if (s == "dump") return ReasonerKind::dump;
    throw ValidationError("unknown reasoner '" + std::string(s) + "' (expected frequency|dump)");
}

void validate(const RunConfig& cfg) {
    if (cfg.dataset_dir.empty()) throw ValidationError("dataset directory is required");
    if (cfg.augment != "auto" && cfg.augment != "on" && cfg.augment != "off")
        throw ValidationError("augment must be auto|on|off");
    if (cfg.reasoner == ReasonerKind::dump && cfg.dump_path.empty())
        throw ValidationError("dump reasoner requires a dump path");
    if (!(cfg.frequency.smoothing > 0)) throw ValidationError("smoothing must be positive");
    if (cfg.frequency.backoff_weight < 0 || cfg.frequency.backoff_weight > 1)
        throw ValidationError("backoff_weight must lie in [0,1]");
    if (cfg.frequency.decay_lambda < 0) throw ValidationError("decay_lambda must be non-negative");
    if (cfg.cehis.beta < 0 || cfg.cehis.beta > 1) throw ValidationError("beta must lie in [0,1]");
    if (cfg.cehis.hawkes.delta < 0) throw ValidationError("delta must be non-negative");
    if (cfg.cehis.hawkes.short_window < 1 || cfg.cehis.hawkes.long_window < 1)
        throw ValidationError("hawkes windows must be positive");
    if (cfg.risk.alpha < 1) throw ValidationError("alpha must be >= 1");
    for (double c : cfg.er_penalties)
        if (!(c > 0)) throw ValidationError("effective-reliability penalties must be positive");
    for (int n : cfg.er_tolerances)
        if (n < 1) throw ValidationError("effective-reliability tolerances must be >= 1");
    for (double b : cfg.beta_grid)
        if (b < 0 || b > 1) throw ValidationError("beta grid values must lie in [0,1]");
    if (cfg.beta_grid.empty()) throw ValidationError("beta grid must be non-empty");
}

namespace {

template <typename T>
std::string join_list(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        if constexpr (std::is_same_v<T, double>)
            out += format_double(values[i]);
        else
            out += std::to_string(values[i]);
    }
    return out;
}

} // namespace

std::string run_config_to_ini(const RunConfig& cfg, std::string_view subcommand) {
    std::ostringstream out;
    out << "data=" << cfg.dataset_dir.string() << '\n';
    out << "mode=" << to_string(cfg.mode) << '\n';
    out << "augment=" << cfg.augment << '\n';
    out << "reasoner=" << to_string(cfg.reasoner) << '\n';
    if (!cfg.dump_path.empty()) out << "dump=" << cfg.dump_path.string() << '\n';
    out << "lambda=" << format_double(cfg.frequency.decay_lambda) << '\n';
    out << "smoothing=" << format_double(cfg.frequency.smoothing) << '\n';
    out << "backoff=" << format_double(cfg.frequency.backoff_weight) << '\n';
    if (subcommand != "calibrate") out << "estimator=" << to_string(cfg.estimator) << '\n';
    out << "beta=" << format_double(cfg.cehis.beta) << '\n';
    out << "delta=" << format_double(cfg.cehis.hawkes.delta) << '\n';
    out << "short-window=" << cfg.cehis.hawkes.short_window << '\n';
    out << "long-window=" << cfg.cehis.hawkes.long_window << '\n';
    out << "time-mode="
        << (cfg.cehis.hawkes.time_mode == HawkesConfig::TimeMode::absolute_interval ? "absolute" : "relative") << '\n';
    const auto& ab = cfg.cehis.ablation;
    out << "no-certainty=" << (ab.disable_certainty ? "true" : "false") << '\n';
    out << "no-history=" << (ab.disable_history ? "true" : "false") << '\n';
    out << "no-hawkes=" << (ab.disable_hawkes ? "true" : "false") << '\n';
    out << "absolute-aggregation=" << (ab.absolute_value_aggregation ? "true" : "false") << '\n';
    out << "mask-subject=" << (ab.mask_first_key ? "true" : "false") << '\n';
    out << "mask-second=" << (ab.mask_second_key ? "true" : "false") << '\n';
    out << "mask-pair=" << (ab.mask_pair_key ? "true" : "false") << '\n';
    out << "alpha=" << format_double(cfg.risk.alpha) << '\n';
    out << "er-penalties=" << join_list(cfg.er_penalties) << '\n';
    out << "er-tolerances=" << join_list(cfg.er_tolerances) << '\n';
    if (subcommand == "calibrate") out << "beta-grid=" << join_list(cfg.beta_grid) << '\n';
    out << "out=" << cfg.output_dir.string() << '\n';
    out << "seed=" << cfg.seed << '\n';
    out << "serial=" << (cfg.exec == ExecMode::serial ? "true" : "false") << '\n';
    if (!cfg.store_cache.empty()) out << "store-cache=" << cfg.store_cache.string() << '\n';
    return out.str();
}

namespace {

// Deletes everything it registered unless the run commits, so failed runs
// leave no partial outputs behind.
class OutputGuard {
public:
    explicit OutputGuard(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir);
    }

    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) std::filesystem::remove(p, ec);
    }

    std::filesystem::path file(std::string_view name) {
        auto p = dir_ / name;
        written_.push_back(p);
        return p;
    }

    void commit() { committed_ = true; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool committed_ = false;
};

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

struct Pipeline {
    TemporalDataset dataset;
    std::unique_ptr<Reasoner> reasoner;
};

std::unique_ptr<Pipeline> open_pipeline(const RunConfig& cfg) {
    auto pipe = std::make_unique<Pipeline>();
    LoadOptions load;
    load.inverse_augment = cfg.augment == "auto" ? cfg.mode == ReasoningMode::entity : cfg.augment == "on";
    pipe->dataset = load_dataset(cfg.dataset_dir, load);
    if (cfg.reasoner == ReasonerKind::frequency)
        pipe->reasoner = std::make_unique<FrequencyReasoner>(pipe->dataset, cfg.frequency);
    else
        pipe->reasoner = load_external_dump(cfg.dump_path);
    return pipe;
}

AccuracyStore obtain_store(const RunConfig& cfg, const Pipeline& pipe, TimeRange range) {
    if (!cfg.store_cache.empty() && std::filesystem::exists(cfg.store_cache)) {
        AccuracyStore store = load_accuracy_store(cfg.store_cache);
        if (store.mode != cfg.mode || store.range != range)
            throw ValidationError("store cache " + cfg.store_cache.string() +
                                  " does not match the requested mode/range");
        return store;
    }
    AccuracyStore store = build_accuracy_store(*pipe.reasoner, pipe.dataset, range, cfg.mode, cfg.exec);
    if (!cfg.store_cache.empty()) save_accuracy_store(store, cfg.store_cache);
    return store;
}

std::vector<ConfidenceReport> baseline_reports(std::span<const PredictionRecord> records, EstimatorKind kind,
                                               std::uint64_t seed) {
    std::vector<ConfidenceReport> reports(records.size());
    SplitMix64 rng(seed);
    std::vector<double> certainty(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        auto& rep = reports[i];
        rep.query = rec.query;
        rep.gt_rank = rec.gt_rank;
        rep.certainty = certainty_score(rec);
        certainty[i] = rep.certainty;
        switch (kind) {
            case EstimatorKind::sr: rep.confidence = rep.certainty; break;
            case EstimatorKind::entropy: rep.confidence = entropy_confidence(rec); break;
            case EstimatorKind::oracle: rep.confidence = 1.0 / static_cast<double>(rec.gt_rank); break;
            case EstimatorKind::random: rep.confidence = rng.uniform(); break;
            case EstimatorKind::cehis: throw ValidationError("cehis is not a baseline estimator");
        }
    }
    auto rank_c = rank_scores(certainty);
    for (std::size_t i = 0; i < records.size(); ++i) reports[i].rank_certainty = rank_c[i];
    return reports;
}

std::string reports_to_tsv(std::span<const ConfidenceReport> reports) {
    std::ostringstream out;
    out << "mode\tsubject\trelation\tobject\ttimestamp\tgt_rank\tcertainty\thistorical\trank_certainty\t"
           "rank_historical\tconfidence\n";
    for (const auto& r : reports) {
        const Query& q = r.query;
        out << to_string(q.mode) << '\t' << q.subject << '\t' << q.relation << '\t' << q.object << '\t' << q.time
            << '\t' << r.gt_rank << '\t' << format_double(r.certainty) << '\t' << format_double(r.historical) << '\t'
            << r.rank_certainty << '\t' << r.rank_historical << '\t' << format_double(r.confidence) << '\n';
    }
    return out.str();
}

std::string curve_to_csv(const RiskCoverageCurve& curve) {
    std::ostringstream out;
    out << "coverage,risk\n";
    for (const auto& p : curve.points) out << format_double(p.coverage) << ',' << format_double(p.risk) << '\n';
    return out.str();
}

std::string metadata_text(const RunConfig& cfg, std::string_view subcommand, const std::string& extra) {
    std::ostringstream out;
    out << "tool=cehis " << kVersion << '\n';
    out << "subcommand=" << subcommand << '\n';
    out << "rank_convention=raw (unfiltered); ties take the optimistic rank\n";
    out << "auc_convention=trapezoid over the achieved coverage span, normalized by the span, x100\n";
    out << "effective_reliability_convention=best realizable threshold per (penalty, tolerance)\n";
    out << "tie_break=confidence desc, then raw certainty desc, then input order\n";
    out << "estimator=" << to_string(cfg.estimator) << '\n';
    out << extra;
    return out.str();
}

} // namespace

EvaluateResult run_evaluate(const RunConfig& cfg) {
    validate(cfg);
    auto pipe = open_pipeline(cfg);
    const TemporalDataset& ds = pipe->dataset;

    auto queries = queries_in_range(ds, ds.test_range, cfg.mode);
    if (queries.empty()) throw ValidationError("test range produced no queries");
    auto records = batch_predict(*pipe->reasoner, queries, dataset_history(ds), cfg.exec);

    EvaluateResult result;
    TimeRange store_range{ds.valid_range.begin, ds.test_range.end};
    if (cfg.estimator == EstimatorKind::cehis) {
        AccuracyStore store = obtain_store(cfg, *pipe, store_range);
        result.reports = estimate_confidences(records, store, cfg.cehis, cfg.exec);
    } else {
        result.reports = baseline_reports(records, cfg.estimator, cfg.seed);
    }

    result.curve = risk_coverage_curve(result.reports, cfg.risk.alpha);
    result.auc = result.curve.auc;
    for (double target : {0.1, 0.3, 0.5})
        result.coverage_at_risk.emplace_back(target, coverage_at_risk(result.curve, target));
    for (double c : cfg.er_penalties)
        for (int tol : cfg.er_tolerances)
            result.effective_rel.emplace_back(
                c, tol, best_effective_reliability(result.reports, ERConfig{c, tol}));

    if (!cfg.output_dir.empty()) {
        OutputGuard guard(cfg.output_dir);
        write_text(guard.file("reports.tsv"), reports_to_tsv(result.reports));
        write_text(guard.file("curve.csv"), curve_to_csv(result.curve));
        std::ostringstream summary;
        summary << "metric,value\n";
        summary << "auc," << format_double(result.auc) << '\n';
        for (const auto& [target, cov] : result.coverage_at_risk)
            summary << "coverage_at_risk_" << format_double(target) << ',' << format_double(cov) << '\n';
        for (const auto& [c, tol, value] : result.effective_rel)
            summary << "phi_c" << format_double(c) << "_n" << tol << ',' << format_double(value) << '\n';
        write_text(guard.file("summary.csv"), summary.str());
        write_text(guard.file("config.ini"), run_config_to_ini(cfg, "evaluate"));
        std::string extra;
        if (cfg.estimator == EstimatorKind::cehis)
            extra = "store_range=[" + std::to_string(store_range.begin) + "," + std::to_string(store_range.end) +
                    ")\n";
        write_text(guard.file("run_metadata.txt"), metadata_text(cfg, "evaluate", extra));
        guard.commit();
    }
    return result;
}

namespace {

// Rebuilds confidences for a new beta from an already-scored batch; identical
// to rescoring through estimate_confidences with that beta.
std::vector<ConfidenceReport> reblend(std::vector<ConfidenceReport> reports, const CEHisConfig& cfg, double beta) {
    if (cfg.ablation.disable_certainty) beta = 0.0;
    if (cfg.ablation.disable_history) beta = 1.0;
    for (auto& r : reports) {
        if (cfg.ablation.absolute_value_aggregation)
            r.confidence = beta * r.certainty + (1.0 - beta) * r.historical;
        else
            r.confidence = beta * static_cast<double>(r.rank_certainty) +
                           (1.0 - beta) * static_cast<double>(r.rank_historical);
    }
    return reports;
}

} // namespace

CalibrateResult run_calibrate(const RunConfig& cfg) {
    validate(cfg);
    auto pipe = open_pipeline(cfg);
    const TemporalDataset& ds = pipe->dataset;

    auto queries = queries_in_range(ds, ds.valid_range, cfg.mode);
    if (queries.empty()) throw CalibrationError("validation range produced no queries");
    auto records = batch_predict(*pipe->reasoner, queries, dataset_history(ds), cfg.exec);

    AccuracyStore store = obtain_store(cfg, *pipe, ds.valid_range);
    auto base = estimate_confidences(records, store, cfg.cehis, cfg.exec);

    CalibrateResult result;
    result.calibration = calibrate_beta(
        [&](double beta) { return reblend(base, cfg.cehis, beta); }, cfg.beta_grid, cfg.risk.alpha);

    if (!cfg.output_dir.empty()) {
        OutputGuard guard(cfg.output_dir);
        std::ostringstream table;
        table << "beta,auc\n";
        for (const auto& [beta, auc] : result.calibration.auc_by_beta)
            table << format_double(beta) << ',' << format_double(auc) << '\n';
        write_text(guard.file("calibration.csv"), table.str());
        write_text(guard.file("config.ini"), run_config_to_ini(cfg, "calibrate"));
        write_text(guard.file("run_metadata.txt"),
                   metadata_text(cfg, "calibrate",
                                 "chosen_beta=" + format_double(result.calibration.beta) + "\n"));
        guard.commit();
    }
    return result;
}

AblateResult run_ablate(const RunConfig& cfg) {
    validate(cfg);
    auto pipe = open_pipeline(cfg);
    const TemporalDataset& ds = pipe->dataset;

    auto queries = queries_in_range(ds, ds.test_range, cfg.mode);
    if (queries.empty()) throw ValidationError("test range produced no queries");
    auto records = batch_predict(*pipe->reasoner, queries, dataset_history(ds), cfg.exec);

    TimeRange store_range{ds.valid_range.begin, ds.test_range.end};
    AccuracyStore store = obtain_store(cfg, *pipe, store_range);

    const std::vector<std::pair<std::string, AblationFlags>> variants = {
        {"full", {}},
        {"-SR", {.disable_certainty = true}},
        {"-His", {.disable_history = true}},
        {"-HA", {.disable_hawkes = true}},
        {"-RA", {.absolute_value_aggregation = true}},
        {"-SQ", {.mask_first_key = true}},
        {"-RQ", {.mask_second_key = true}},
        {"-SRQ", {.mask_pair_key = true}},
    };

    AblateResult result;
    for (const auto& [name, flags] : variants) {
        CEHisConfig variant_cfg = cfg.cehis;
        variant_cfg.ablation = flags;
        auto reports = estimate_confidences(records, store, variant_cfg, cfg.exec);
        result.auc_by_variant.emplace_back(name, risk_coverage_curve(reports, cfg.risk.alpha).auc);
    }

    if (!cfg.output_dir.empty()) {
        OutputGuard guard(cfg.output_dir);
        std::ostringstream table;
        table << "variant,auc\n";
        for (const auto& [name, auc] : result.auc_by_variant) table << name << ',' << format_double(auc) << '\n';
        write_text(guard.file("ablation.csv"), table.str());
        write_text(guard.file("config.ini"), run_config_to_ini(cfg, "ablate"));
        write_text(guard.file("run_metadata.txt"), metadata_text(cfg, "ablate", ""));
        guard.commit();
    }
    return result;
}

void run_synth(std::uint64_t seed, const SynthParams& params, const std::filesystem::path& out_dir) {
    write_dataset(generate_synthetic(seed, params), out_dir);
}

DumpValidateResult run_dump_validate(const std::filesystem::path& dump_path,
                                     const std::filesystem::path& dataset_dir, ReasoningMode mode) {
    auto dump = load_external_dump(dump_path);
    DumpValidateResult result;
    if (dataset_dir.empty()) return result;

    LoadOptions load;
    load.inverse_augment = mode == ReasoningMode::entity;
    TemporalDataset ds = load_dataset(dataset_dir, load);
    TimeRange range{ds.valid_range.begin, ds.test_range.end};
    for (const auto& q : queries_in_range(ds, range, mode)) {
        ++result.queries_checked;
        if (!dump->covers(q)) {
            ++result.missing;
            if (result.missing_sample.size() < 10) result.missing_sample.push_back(q);
        }
    }
    return result;
}

} // namespace cehis
