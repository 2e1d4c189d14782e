// Compares the OpenMP kernels against their serial reference on a synthetic
// corpus: batch prediction over queries and accuracy-store construction over
// timestamps. Outputs are checked for equality while timing.

#include "cehis/accuracy.hpp"
#include "cehis/dataset.hpp"
#include "cehis/reasoner.hpp"

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace cehis;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

int main(int argc, char** argv) {
    SynthParams params;
    params.n_entities = 400;
    params.n_relations = 40;
    params.n_timestamps = 80;
    std::uint64_t seed = 7;
    for (int i = 1; i + 1 < argc; i += 2) {
        std::string flag = argv[i];
        long value = std::stol(argv[i + 1]);
        if (flag == "--entities") params.n_entities = static_cast<std::int32_t>(value);
        else if (flag == "--relations") params.n_relations = static_cast<std::int32_t>(value);
        else if (flag == "--timestamps") params.n_timestamps = static_cast<std::int32_t>(value);
        else if (flag == "--seed") seed = static_cast<std::uint64_t>(value);
        else {
            std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
            return 1;
        }
    }

    TemporalDataset ds = generate_synthetic(seed, params);
    apply_inverse_augmentation(ds);
    FrequencyReasoner reasoner(ds, ReasonerConfig{0.1, 1.0, 0.9});

    std::size_t n_facts = 0;
    for (const auto& s : ds.snapshots) n_facts += s.facts.size();
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("corpus: %zu facts, %zu snapshots, %d entities\n", n_facts, ds.snapshots.size(),
                ds.num_entities());

    TimeRange eval_range{ds.valid_range.begin, ds.test_range.end};
    auto queries = queries_in_range(ds, eval_range, ReasoningMode::entity);
    std::printf("queries: %zu (valid+test range)\n\n", queries.size());

    // warm caches and per-thread scratch so neither side pays first-touch costs
    batch_predict(reasoner, queries, dataset_history(ds), ExecMode::parallel);
    batch_predict(reasoner, queries, dataset_history(ds), ExecMode::serial);

    auto t0 = std::chrono::steady_clock::now();
    auto serial_records = batch_predict(reasoner, queries, dataset_history(ds), ExecMode::serial);
    const double predict_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto parallel_records = batch_predict(reasoner, queries, dataset_history(ds), ExecMode::parallel);
    const double predict_parallel = seconds_since(t0);

    const bool predict_match = serial_records == parallel_records;
    std::printf("batch_predict   serial %8.3fs   parallel %8.3fs   speedup %5.2fx   identical: %s\n",
                predict_serial, predict_parallel, predict_serial / predict_parallel,
                predict_match ? "yes" : "NO");

    t0 = std::chrono::steady_clock::now();
    auto serial_store = build_accuracy_store(reasoner, ds, eval_range, ReasoningMode::entity, ExecMode::serial);
    const double store_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto parallel_store = build_accuracy_store(reasoner, ds, eval_range, ReasoningMode::entity, ExecMode::parallel);
    const double store_parallel = seconds_since(t0);

    const bool store_match = serial_store == parallel_store;
    std::printf("accuracy_store  serial %8.3fs   parallel %8.3fs   speedup %5.2fx   identical: %s\n",
                store_serial, store_parallel, store_serial / store_parallel, store_match ? "yes" : "NO");

    return predict_match && store_match ? 0 : 1;
}
