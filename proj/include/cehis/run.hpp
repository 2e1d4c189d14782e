#pragma once

#include "cehis/dataset.hpp"
#include "cehis/estimators.hpp"
#include "cehis/reasoner.hpp"
#include "cehis/selective_eval.hpp"

#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

namespace cehis {

inline constexpr std::string_view kVersion = "0.1.0";

enum class EstimatorKind { cehis, sr, entropy, oracle, random };
enum class ReasonerKind { frequency, dump };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view s);
std::string to_string(ReasonerKind kind);
ReasonerKind parse_reasoner(std::string_view s);

// Everything a run needs; a run is reproducible from this plus nothing else.
struct RunConfig {
    std::filesystem::path dataset_dir;
    ReasoningMode mode = ReasoningMode::entity;
    std::string augment = "auto";  // auto = on for entity mode, off for relation mode

    ReasonerKind reasoner = ReasonerKind::frequency;
    ReasonerConfig frequency;
    std::filesystem::path dump_path;

    EstimatorKind estimator = EstimatorKind::cehis;
    CEHisConfig cehis;
    RiskConfig risk;
    std::vector<double> er_penalties = {1, 2, 3, 4, 5};
    std::vector<int> er_tolerances = {5, 10};
    std::vector<double> beta_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    std::filesystem::path output_dir;
    std::uint64_t seed = 7;
    ExecMode exec = ExecMode::parallel;
    std::filesystem::path store_cache;  // empty: no on-disk store caching
};

void validate(const RunConfig& config);

// Canonical key=value echo of a run config; written next to the outputs and
// accepted back through the CLI's --config option.
std::string run_config_to_ini(const RunConfig& config, std::string_view subcommand);

struct EvaluateResult {
    std::vector<ConfidenceReport> reports;
    RiskCoverageCurve curve;
    double auc = 0.0;
    std::vector<std::pair<double, double>> coverage_at_risk;     // (target risk, coverage)
    std::vector<std::tuple<double, int, double>> effective_rel;  // (penalty, tolerance, value)
};

// Full test-range run: predictions, confidence reports, metrics, output files
// (reports.tsv, curve.csv, summary.csv, config.ini, run_metadata.txt).
EvaluateResult run_evaluate(const RunConfig& config);

struct CalibrateResult {
    CalibrationResult calibration;
};

// Validation-range beta sweep; writes calibration.csv plus the config echo.
CalibrateResult run_calibrate(const RunConfig& config);

struct AblateResult {
    std::vector<std::pair<std::string, double>> auc_by_variant;
};

// Scores the standard variant set on the test range; writes ablation.csv.
AblateResult run_ablate(const RunConfig& config);

// Generates a synthetic corpus and writes it in the loader's file format.
void run_synth(std::uint64_t seed, const SynthParams& params, const std::filesystem::path& out_dir);

struct DumpValidateResult {
    std::size_t queries_checked = 0;
    std::size_t missing = 0;
    std::vector<Query> missing_sample;  // first few uncovered queries
};

// Checks a dump file's format and, when a dataset is given, its coverage of
// every query an evaluate/calibrate run would issue (valid plus test range).
DumpValidateResult run_dump_validate(const std::filesystem::path& dump_path,
                                     const std::filesystem::path& dataset_dir, ReasoningMode mode);

} // namespace cehis
