#include "cehis/errors.hpp"
#include "cehis/run.hpp"
#include "cehis/text.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace cehis;

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find(',', start);
        std::string item = s.substr(start, end == std::string::npos ? end : end - start);
        out.push_back(parse_double(item, "list value"));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

// String-typed mirrors of RunConfig fields so every option round-trips through
// the --config file unchanged.
struct CliState {
    RunConfig cfg;
    std::string config_path;
    std::string data;
    std::string mode = "entity";
    std::string reasoner = "frequency";
    std::string dump;
    std::string estimator = "cehis";
    std::string time_mode = "absolute";
    std::string er_penalties = "1,2,3,4,5";
    std::string er_tolerances = "5,10";
    std::string beta_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    std::string out;
    std::string store_cache;
    bool serial = false;
};

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config key '" + key + "' expects true|false, got '" + v + "'");
}

// Values from the file take precedence over command-line flags, so an echoed
// config reproduces its run verbatim.
void apply_config_file(CliState& st, bool with_estimator, bool with_beta_grid) {
    if (st.config_path.empty()) return;
    std::ifstream in(st.config_path);
    if (!in) throw ValidationError("cannot open config file " + st.config_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line[0] == '[') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(st.config_path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const std::string ctx = "config key '" + key + "'";
        if (key == "data") st.data = value;
        else if (key == "mode") st.mode = value;
        else if (key == "augment") st.cfg.augment = value;
        else if (key == "reasoner") st.reasoner = value;
        else if (key == "dump") st.dump = value;
        else if (key == "lambda") st.cfg.frequency.decay_lambda = parse_double(value, ctx);
        else if (key == "smoothing") st.cfg.frequency.smoothing = parse_double(value, ctx);
        else if (key == "backoff") st.cfg.frequency.backoff_weight = parse_double(value, ctx);
        else if (key == "estimator" && with_estimator) st.estimator = value;
        else if (key == "beta") st.cfg.cehis.beta = parse_double(value, ctx);
        else if (key == "delta") st.cfg.cehis.hawkes.delta = parse_double(value, ctx);
        else if (key == "short-window") st.cfg.cehis.hawkes.short_window = static_cast<int>(parse_int(value, ctx));
        else if (key == "long-window") st.cfg.cehis.hawkes.long_window = static_cast<int>(parse_int(value, ctx));
        else if (key == "time-mode") st.time_mode = value;
        else if (key == "no-certainty") st.cfg.cehis.ablation.disable_certainty = parse_bool(value, key);
        else if (key == "no-history") st.cfg.cehis.ablation.disable_history = parse_bool(value, key);
        else if (key == "no-hawkes") st.cfg.cehis.ablation.disable_hawkes = parse_bool(value, key);
        else if (key == "absolute-aggregation")
            st.cfg.cehis.ablation.absolute_value_aggregation = parse_bool(value, key);
        else if (key == "mask-subject") st.cfg.cehis.ablation.mask_first_key = parse_bool(value, key);
        else if (key == "mask-second") st.cfg.cehis.ablation.mask_second_key = parse_bool(value, key);
        else if (key == "mask-pair") st.cfg.cehis.ablation.mask_pair_key = parse_bool(value, key);
        else if (key == "alpha") st.cfg.risk.alpha = parse_double(value, ctx);
        else if (key == "er-penalties") st.er_penalties = value;
        else if (key == "er-tolerances") st.er_tolerances = value;
        else if (key == "beta-grid" && with_beta_grid) st.beta_grid = value;
        else if (key == "out") st.out = value;
        else if (key == "seed") st.cfg.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
        else if (key == "serial") st.serial = parse_bool(value, key);
        else if (key == "store-cache") st.store_cache = value;
        else
            throw ValidationError(st.config_path + ":" + std::to_string(lineno) + ": unknown config key '" + key +
                                  "'");
    }
}

void add_common_options(CLI::App* sub, CliState& st, bool with_estimator, bool with_beta_grid) {
    sub->add_option("--config", st.config_path,
                    "key=value file applied after flag parsing; file values take precedence");
    sub->add_option("--data", st.data, "corpus directory (train/valid/test + id maps)");
    sub->add_option("--mode", st.mode, "reasoning mode")->check(CLI::IsMember({"entity", "relation"}));
    sub->add_option("--augment", st.cfg.augment, "inverse-fact augmentation (auto: on for entity mode)")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    sub->add_option("--reasoner", st.reasoner, "base model")->check(CLI::IsMember({"frequency", "dump"}));
    sub->add_option("--dump", st.dump, "prediction dump file (reasoner=dump)");
    sub->add_option("--lambda", st.cfg.frequency.decay_lambda, "frequency baseline recency decay");
    sub->add_option("--smoothing", st.cfg.frequency.smoothing, "frequency baseline additive smoothing");
    sub->add_option("--backoff", st.cfg.frequency.backoff_weight, "weight of exact-key counts vs subject-only");
    if (with_estimator)
        sub->add_option("--estimator", st.estimator, "confidence estimator")
            ->check(CLI::IsMember({"cehis", "sr", "entropy", "oracle", "random"}));
    sub->add_option("--beta", st.cfg.cehis.beta, "certainty-rank weight in the blend");
    sub->add_option("--delta", st.cfg.cehis.hawkes.delta, "history decay rate");
    sub->add_option("--short-window", st.cfg.cehis.hawkes.short_window, "decayed-sum window length");
    sub->add_option("--long-window", st.cfg.cehis.hawkes.long_window, "base-accuracy window length");
    sub->add_option("--time-mode", st.time_mode, "decay over absolute gaps or relative order")
        ->check(CLI::IsMember({"absolute", "relative"}));
    sub->add_flag("--no-certainty", st.cfg.cehis.ablation.disable_certainty, "drop the certainty signal");
    sub->add_flag("--no-history", st.cfg.cehis.ablation.disable_history, "drop the history signal");
    sub->add_flag("--no-hawkes", st.cfg.cehis.ablation.disable_hawkes, "plain series mean instead of decay");
    sub->add_flag("--absolute-aggregation", st.cfg.cehis.ablation.absolute_value_aggregation,
                  "blend raw scores instead of ranks");
    sub->add_flag("--mask-subject", st.cfg.cehis.ablation.mask_first_key, "ignore subject-related history");
    sub->add_flag("--mask-second", st.cfg.cehis.ablation.mask_second_key,
                  "ignore relation-related (object-related) history");
    sub->add_flag("--mask-pair", st.cfg.cehis.ablation.mask_pair_key, "ignore pair-related history");
    sub->add_option("--alpha", st.cfg.risk.alpha, "risk scale (>= 1)");
    sub->add_option("--er-penalties", st.er_penalties, "effective-reliability penalties, comma-separated");
    sub->add_option("--er-tolerances", st.er_tolerances, "effective-reliability tolerances, comma-separated");
    if (with_beta_grid) sub->add_option("--beta-grid", st.beta_grid, "calibration grid, comma-separated");
    sub->add_option("--out", st.out, "output directory");
    sub->add_option("--seed", st.cfg.seed, "seed for every random choice of the run");
    sub->add_flag("--serial", st.serial, "run the serial reference kernels instead of OpenMP");
    sub->add_option("--store-cache", st.store_cache, "accuracy-store cache file (loaded if present)");
}

RunConfig finalize(CliState& st, bool with_estimator, bool with_beta_grid) {
    apply_config_file(st, with_estimator, with_beta_grid);
    RunConfig cfg = st.cfg;
    cfg.dataset_dir = st.data;
    cfg.mode = parse_mode(st.mode);
    cfg.reasoner = parse_reasoner(st.reasoner);
    cfg.dump_path = st.dump;
    cfg.estimator = parse_estimator(st.estimator);
    cfg.cehis.hawkes.time_mode = st.time_mode == "absolute" ? HawkesConfig::TimeMode::absolute_interval
                                                            : HawkesConfig::TimeMode::relative_order;
    cfg.er_penalties = parse_double_list(st.er_penalties);
    cfg.er_tolerances = parse_int_list(st.er_tolerances);
    cfg.beta_grid = parse_double_list(st.beta_grid);
    cfg.output_dir = st.out;
    cfg.exec = st.serial ? ExecMode::serial : ExecMode::parallel;
    cfg.store_cache = st.store_cache;
    return cfg;
}

void print_evaluate(const EvaluateResult& result) {
    std::printf("AUC: %.4f\n", result.auc);
    std::printf("%-12s %s\n", "risk<=", "coverage");
    for (const auto& [target, cov] : result.coverage_at_risk) std::printf("%-12.2f %.4f\n", target, cov);
    std::printf("%-12s %s\n", "phi(c,N)", "value");
    for (const auto& [c, tol, value] : result.effective_rel)
        std::printf("c=%-3g N=%-5d %.4f\n", c, tol, value);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective prediction for temporal knowledge graph reasoning"};
    app.require_subcommand(1);

    CliState ev, cal, abl;
    auto* evaluate = app.add_subcommand("evaluate", "score the test range and emit reports and metrics");
    add_common_options(evaluate, ev, true, false);
    auto* calibrate = app.add_subcommand("calibrate", "choose beta on the validation range");
    add_common_options(calibrate, cal, false, true);
    auto* ablate = app.add_subcommand("ablate", "score the standard variant set on the test range");
    add_common_options(ablate, abl, false, false);

    std::string synth_out;
    std::uint64_t synth_seed = 7;
    SynthParams synth_params;
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus in the loader's format");
    synth->add_option("--out", synth_out, "corpus directory to write")->required();
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--entities", synth_params.n_entities, "entity vocabulary size");
    synth->add_option("--relations", synth_params.n_relations, "relation vocabulary size");
    synth->add_option("--timestamps", synth_params.n_timestamps, "number of timestamps");
    synth->add_option("--recurrence", synth_params.recurrence_prob, "per-timestamp pattern re-fire probability");
    synth->add_option("--noise", synth_params.noise_prob, "uniform noise fact probability");

    std::string dv_dump, dv_data, dv_mode = "entity";
    auto* dump_validate = app.add_subcommand("dump-validate", "check a prediction dump's format and coverage");
    dump_validate->add_option("--dump", dv_dump, "prediction dump file")->required();
    dump_validate->add_option("--data", dv_data, "corpus directory to check coverage against");
    dump_validate->add_option("--mode", dv_mode, "reasoning mode")->check(CLI::IsMember({"entity", "relation"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) {
            auto result = run_evaluate(finalize(ev, true, false));
            print_evaluate(result);
            if (!ev.out.empty()) std::printf("outputs written to %s\n", ev.out.c_str());
        } else if (calibrate->parsed()) {
            auto result = run_calibrate(finalize(cal, false, true));
            std::printf("%-8s %s\n", "beta", "auc");
            for (const auto& [beta, auc] : result.calibration.auc_by_beta)
                std::printf("%-8g %.4f\n", beta, auc);
            std::printf("chosen beta: %g\n", result.calibration.beta);
            if (!cal.out.empty()) std::printf("outputs written to %s\n", cal.out.c_str());
        } else if (ablate->parsed()) {
            auto result = run_ablate(finalize(abl, false, false));
            std::printf("%-8s %s\n", "variant", "auc");
            for (const auto& [name, auc] : result.auc_by_variant) std::printf("%-8s %.4f\n", name.c_str(), auc);
            if (!abl.out.empty()) std::printf("outputs written to %s\n", abl.out.c_str());
        } else if (synth->parsed()) {
            run_synth(synth_seed, synth_params, synth_out);
            TemporalDataset ds = load_dataset(synth_out, LoadOptions{false});
            std::printf("wrote %s: %zu train / %zu valid / %zu test facts, %d entities, %d relations\n",
                        synth_out.c_str(), ds.train_facts.size(), ds.valid_facts.size(), ds.test_facts.size(),
                        ds.num_entities(), ds.num_relations_raw());
        } else if (dump_validate->parsed()) {
            auto result = run_dump_validate(dv_dump, dv_data, parse_mode(dv_mode));
            if (dv_data.empty()) {
                std::printf("dump format ok\n");
            } else {
                std::printf("coverage: %zu/%zu queries\n", result.queries_checked - result.missing,
                            result.queries_checked);
                for (const auto& q : result.missing_sample) std::printf("missing: %s\n", describe(q).c_str());
                if (result.missing > 0) {
                    std::fprintf(stderr, "error: dump misses %zu queries\n", result.missing);
                    return 1;
                }
            }
        }
    } catch (const cehis::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
