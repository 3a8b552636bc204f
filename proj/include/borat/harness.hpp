/**
 * @file harness.hpp
 * @brief Seeded runs, hyperparameter sweeps and epoch-time benchmarks.
 */
#pragma once

#include "borat/objectives.hpp"
#include "borat/optimizer.hpp"
#include "borat/trace.hpp"

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace borat {

/// Which objective to build and its parameters. Fields that do not apply to
/// the chosen kind are ignored.
struct ProblemSpec {
    std::string kind = "lsq";  ///< lsq | hinge | osc1d | rsi | mlp
    std::size_t n_samples = 20;
    Eigen::Index dim = 100;
    double margin = 0.1;
    std::uint64_t data_seed = 0;
    // mlp only
    DatasetSpec dataset;
    MlpSpec model;
    MlpLoss loss = MlpLoss::cross_entropy;
    double label_noise = 0.0;

    /// Defaults appropriate to `kind` (dimension, sample count).
    static ProblemSpec defaults_for(const std::string& kind);
};

ObjectivePtr make_objective(const ProblemSpec& spec);

struct RunConfig {
    ProblemSpec problem;
    BoratConfig optimizer;
    Method method = Method::borat;
    std::optional<std::filesystem::path> out;
    std::size_t log_every = 100;
    TraceFormat format = TraceFormat::csv;
    bool timing = false;

    void validate() const;
};

/// Config snapshot written at the top of every trace.
TraceHeader make_header(const RunConfig& config);

inline constexpr const char* kVersion = "1.0.0";

struct RunOutcome {
    RunTrace trace;
    ParamVector final_params;
    bool ok = true;
    bool interrupted = false;
};

/// Trains once, streaming records to `config.out` when set. A numeric
/// blow-up truncates the trace and sets ok = false; the error text is kept
/// in trace.error.
RunOutcome run(const RunConfig& config, const std::atomic<bool>* stop = nullptr);

enum class SweepMetric { final_objective, train_accuracy, test_accuracy };

SweepMetric parse_sweep_metric(const std::string& text);
std::string to_string(SweepMetric metric);

/// Results of an eta x r grid. values[i][j] belongs to rs[i], etas[j];
/// failed cells hold NaN. An infinite r means no constraint.
struct SweepGrid {
    std::vector<double> etas;
    std::vector<double> rs;
    SweepMetric metric = SweepMetric::final_objective;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::uint64_t>> seeds;
    std::vector<std::vector<std::string>> trace_paths;
};

/// Seed of cell (i, j): base seed mixed with the cell indices.
std::uint64_t cell_seed(std::uint64_t base, std::size_t i, std::size_t j);

/// The run configuration of one cell (seed, eta, region, trace path).
RunConfig cell_config(const RunConfig& base, double eta, double r, std::size_t i, std::size_t j,
                      const std::optional<std::filesystem::path>& trace_dir);

/// Runs every cell on `jobs` worker threads. Results do not depend on `jobs`.
SweepGrid sweep(const RunConfig& base, const std::vector<double>& etas, const std::vector<double>& rs,
                SweepMetric metric, std::size_t jobs, const std::optional<std::filesystem::path>& trace_dir = {},
                const std::atomic<bool>* stop = nullptr);

/// Grid CSV: "# kind=sweep_grid" and "# metric=..." lines, then a header
/// "r\eta,<eta_1>,..." and one row per r.
std::string serialize_grid(const SweepGrid& grid);
void write_grid_csv(const SweepGrid& grid, const std::filesystem::path& path);
SweepGrid parse_grid(const std::string& text);
SweepGrid read_grid_csv(const std::filesystem::path& path);

/// Number of cells with value <= threshold (NaN cells never count).
std::size_t count_cells_below(const SweepGrid& grid, double threshold);

struct BenchRow {
    std::size_t bundle_size = 0;
    std::size_t epochs = 0;
    double seconds = 0.0;
    double seconds_per_epoch = 0.0;
};

/// Wall-clock time per epoch for each bundle size, same problem and budget.
std::vector<BenchRow> bench(const RunConfig& base, const std::vector<std::size_t>& bundle_sizes,
                            std::size_t epochs);

/// Output directory for relative paths: $BORAT_OUT_DIR if set, else ".".
std::filesystem::path default_output_dir();

} // namespace borat
