#include "borat/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace borat {

ProblemSpec ProblemSpec::defaults_for(const std::string& kind) {
    ProblemSpec spec;
    spec.kind = kind;
    if (kind == "lsq") {
        spec.n_samples = 20;
        spec.dim = 100;
    } else if (kind == "hinge") {
        spec.n_samples = 20;
        spec.dim = 50;
    } else if (kind == "osc1d") {
        spec.n_samples = 1;
        spec.dim = 1;
    } else if (kind == "rsi") {
        spec.n_samples = 16;
        spec.dim = 10;
    } else if (kind == "mlp") {
        spec.n_samples = spec.dataset.n_train;
        spec.dim = 0;
    } else {
        throw InvalidInput("unknown problem '" + kind + "' (expected lsq | hinge | osc1d | rsi | mlp)");
    }
    return spec;
}

ObjectivePtr make_objective(const ProblemSpec& spec) {
    if (spec.kind == "lsq") {
        return make_interp_least_squares(spec.n_samples, spec.dim, spec.data_seed);
    }
    if (spec.kind == "hinge") {
        return make_separable_hinge(spec.n_samples, spec.dim, spec.margin, spec.data_seed);
    }
    if (spec.kind == "osc1d") {
        return make_oscillation_1d();
    }
    if (spec.kind == "rsi") {
        return make_rsi_objective(spec.dim, spec.data_seed, spec.n_samples);
    }
    if (spec.kind == "mlp") {
        auto obj = make_mlp_objective(spec.dataset, spec.model, spec.loss, spec.data_seed);
        if (spec.label_noise > 0.0) {
            return add_label_noise(*obj, spec.label_noise, mix64(spec.data_seed + 2));
        }
        return obj;
    }
    throw InvalidInput("unknown problem '" + spec.kind + "' (expected lsq | hinge | osc1d | rsi | mlp)");
}

void RunConfig::validate() const {
    optimizer.validate();
    static const std::vector<std::string> kinds{"lsq", "hinge", "osc1d", "rsi", "mlp"};
    if (std::find(kinds.begin(), kinds.end(), problem.kind) == kinds.end()) {
        throw InvalidInput("unknown problem kind: " + problem.kind);
    }
    if (log_every == 0) {
        throw InvalidInput("log cadence must be at least 1");
    }
    if (method == Method::alig && optimizer.bundle_size != 2) {
        throw InvalidInput("the alig optimizer uses bundle size 2");
    }
    if (!optimizer.max_steps && !optimizer.max_epochs) {
        throw InvalidInput("either a step or an epoch budget is required");
    }
    if (!(problem.label_noise >= 0.0 && problem.label_noise <= 1.0)) {
        throw InvalidInput("label noise probability must lie in [0, 1]");
    }
}

TraceHeader make_header(const RunConfig& c) {
    const auto& o = c.optimizer;
    TraceHeader h{
        {"version", kVersion},
        {"problem", c.problem.kind},
        {"data_seed", std::to_string(c.problem.data_seed)},
    };
    if (c.problem.kind == "mlp") {
        const auto& d = c.problem.dataset;
        h.emplace_back("dataset", d.kind == DatasetSpec::Kind::blobs ? "blobs" : "moons");
        h.emplace_back("n_train", std::to_string(d.n_train));
        h.emplace_back("classes", std::to_string(d.num_classes));
        h.emplace_back("hidden", std::to_string(c.problem.model.hidden));
        h.emplace_back("loss", c.problem.loss == MlpLoss::cross_entropy ? "ce" : "hinge");
        h.emplace_back("label_noise", format_double(c.problem.label_noise));
    } else if (c.problem.kind != "osc1d") {
        h.emplace_back("n_samples", std::to_string(c.problem.n_samples));
        h.emplace_back("dim", std::to_string(c.problem.dim));
        if (c.problem.kind == "hinge") {
            h.emplace_back("margin", format_double(c.problem.margin));
        }
    }
    h.emplace_back("optimizer", c.method == Method::alig ? "alig" : "borat");
    h.emplace_back("n", std::to_string(o.bundle_size));
    h.emplace_back("eta", format_double(o.eta));
    h.emplace_back("constraint", to_string(o.region));
    h.emplace_back("momentum", format_double(o.momentum));
    h.emplace_back("resample", o.resample ? "true" : "false");
    h.emplace_back("batch_size", std::to_string(o.batch_size));
    h.emplace_back("seed", std::to_string(o.seed));
    h.emplace_back("lower_bound", format_double(o.lower_bound));
    h.emplace_back("steps", o.max_steps ? std::to_string(*o.max_steps) : "");
    h.emplace_back("epochs", o.max_epochs ? std::to_string(*o.max_epochs) : "");
    h.emplace_back("log_every", std::to_string(c.log_every));
    return h;
}

RunOutcome run(const RunConfig& config, const std::atomic<bool>* stop) {
    config.validate();
    const ObjectivePtr objective = make_objective(config.problem);

    std::optional<TraceWriter> writer;
    const TraceHeader header = make_header(config);
    if (config.out) {
        if (config.out->has_parent_path()) {
            std::filesystem::create_directories(config.out->parent_path());
        }
        writer.emplace(*config.out, config.format, header, config.optimizer.bundle_size);
    }

    TrainOptions opts;
    opts.method = config.method;
    opts.log_every = config.log_every;
    opts.timing = config.timing;
    opts.stop = stop;

    RunOutcome outcome;
    outcome.trace.header = header;
    outcome.trace.bundle_size = config.optimizer.bundle_size;
    std::vector<TraceRecord> seen;
    const StepObserver observer = [&](const TraceRecord& rec) {
        if (writer) {
            writer->write(rec);
        }
        seen.push_back(rec);
    };
    try {
        TrainResult result = train(*objective, config.optimizer, opts, observer);
        outcome.final_params = std::move(result.final_params);
        outcome.interrupted = result.interrupted;
        outcome.trace.truncated = result.interrupted;
    } catch (const NumericError& e) {
        outcome.ok = false;
        outcome.trace.truncated = true;
        outcome.trace.error = e.what();
    }
    outcome.trace.records = std::move(seen);
    return outcome;
}

SweepMetric parse_sweep_metric(const std::string& text) {
    if (text == "objective") {
        return SweepMetric::final_objective;
    }
    if (text == "train_accuracy") {
        return SweepMetric::train_accuracy;
    }
    if (text == "test_accuracy") {
        return SweepMetric::test_accuracy;
    }
    throw InvalidInput("unknown metric '" + text + "' (expected objective | train_accuracy | test_accuracy)");
}

std::string to_string(SweepMetric metric) {
    switch (metric) {
    case SweepMetric::final_objective: return "objective";
    case SweepMetric::train_accuracy: return "train_accuracy";
    case SweepMetric::test_accuracy: return "test_accuracy";
    }
    return "objective";
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t i, std::size_t j) {
    return mix64(base ^ mix64((static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(j)));
}

RunConfig cell_config(const RunConfig& base, double eta, double r, std::size_t i, std::size_t j,
                      const std::optional<std::filesystem::path>& trace_dir) {
    RunConfig c = base;
    c.optimizer.eta = eta;
    c.optimizer.region = std::isinf(r) ? FeasibleRegion::none() : FeasibleRegion::l2_ball(r);
    c.optimizer.seed = cell_seed(base.optimizer.seed, i, j);
    c.out.reset();
    if (trace_dir) {
        c.out = *trace_dir / ("cell_r" + std::to_string(i) + "_eta" + std::to_string(j) + "." + to_string(c.format));
    }
    return c;
}

namespace {

double cell_metric(const RunConfig& c, const RunOutcome& out, SweepMetric metric) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (!out.ok || out.interrupted) {
        return nan;
    }
    const ObjectivePtr objective = make_objective(c.problem);
    switch (metric) {
    case SweepMetric::final_objective: {
        const double f = objective->full_objective(out.final_params);
        return std::isfinite(f) ? f : nan;
    }
    case SweepMetric::train_accuracy: return objective->accuracy(out.final_params).value_or(nan);
    case SweepMetric::test_accuracy: return objective->test_accuracy(out.final_params).value_or(nan);
    }
    return nan;
}

} // namespace

SweepGrid sweep(const RunConfig& base, const std::vector<double>& etas, const std::vector<double>& rs,
                SweepMetric metric, std::size_t jobs, const std::optional<std::filesystem::path>& trace_dir,
                const std::atomic<bool>* stop) {
    if (etas.empty() || rs.empty()) {
        throw InvalidInput("sweep needs at least one eta and one r value");
    }
    for (double eta : etas) {
        if (!(eta > 0.0) || !std::isfinite(eta)) {
            throw InvalidInput("sweep eta values must be positive and finite");
        }
    }
    for (double r : rs) {
        if (!(r > 0.0)) {
            throw InvalidInput("sweep r values must be positive");
        }
    }
    SweepGrid grid;
    grid.etas = etas;
    grid.rs = rs;
    grid.metric = metric;
    grid.values.assign(rs.size(), std::vector<double>(etas.size(), std::numeric_limits<double>::quiet_NaN()));
    grid.seeds.assign(rs.size(), std::vector<std::uint64_t>(etas.size(), 0));
    grid.trace_paths.assign(rs.size(), std::vector<std::string>(etas.size()));

    std::vector<RunConfig> cells;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = 0; j < etas.size(); ++j) {
            cells.push_back(cell_config(base, etas[j], rs[i], i, j, trace_dir));
            grid.seeds[i][j] = cells.back().optimizer.seed;
            if (cells.back().out) {
                grid.trace_paths[i][j] = cells.back().out->string();
            }
        }
    }
    // Validate every cell up front so bad configs fail before any work.
    for (const auto& c : cells) {
        c.validate();
    }
    if (trace_dir) {
        std::filesystem::create_directories(*trace_dir);
    }

    std::atomic<std::size_t> next{0};
    std::vector<double> flat(cells.size(), std::numeric_limits<double>::quiet_NaN());
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size() || (stop != nullptr && stop->load())) {
                return;
            }
            try {
                const RunOutcome out = run(cells[k], stop);
                flat[k] = cell_metric(cells[k], out, metric);
            } catch (const std::exception&) {
                // Failed cells stay NaN; the sweep continues.
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = 0; j < etas.size(); ++j) {
            grid.values[i][j] = flat[i * etas.size() + j];
        }
    }
    return grid;
}

namespace {

std::string format_r(double r) { return std::isinf(r) ? "none" : format_double(r); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    if (s == "nan" || s == "NaN") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "none" || s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw TraceParseError(line, "not a number: '" + s + "'");
    }
}

} // namespace

std::string serialize_grid(const SweepGrid& grid) {
    std::ostringstream out;
    out << "# kind=sweep_grid\n";
    out << "# metric=" << to_string(grid.metric) << '\n';
    out << "r\\eta";
    for (double eta : grid.etas) {
        out << ',' << format_double(eta);
    }
    out << '\n';
    for (std::size_t i = 0; i < grid.rs.size(); ++i) {
        out << format_r(grid.rs[i]);
        for (std::size_t j = 0; j < grid.etas.size(); ++j) {
            const double v = grid.values[i][j];
            out << ',' << (std::isnan(v) ? std::string("nan") : format_double(v));
        }
        out << '\n';
    }
    return out.str();
}

void write_grid_csv(const SweepGrid& grid, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot open " + path.string() + " for writing");
    }
    out << serialize_grid(grid);
}

SweepGrid parse_grid(const std::string& text) {
    SweepGrid grid;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            if (line.rfind("# metric=", 0) == 0) {
                try {
                    grid.metric = parse_sweep_metric(line.substr(9));
                } catch (const InvalidInput& e) {
                    throw TraceParseError(lineno, e.what());
                }
            }
            continue;
        }
        const auto cells = split_csv(line);
        if (!have_header) {
            if (cells.size() < 2 || cells[0] != "r\\eta") {
                throw TraceParseError(lineno, "expected grid header 'r\\eta,...'");
            }
            for (std::size_t j = 1; j < cells.size(); ++j) {
                grid.etas.push_back(parse_number(cells[j], lineno));
            }
            have_header = true;
            continue;
        }
        if (cells.size() != grid.etas.size() + 1) {
            throw TraceParseError(lineno, "expected " + std::to_string(grid.etas.size() + 1) + " fields, got " +
                                              std::to_string(cells.size()));
        }
        grid.rs.push_back(parse_number(cells[0], lineno));
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            row.push_back(parse_number(cells[j], lineno));
        }
        grid.values.push_back(std::move(row));
    }
    if (!have_header) {
        throw TraceParseError(std::max<std::size_t>(lineno, 1), "missing grid header");
    }
    grid.seeds.assign(grid.rs.size(), std::vector<std::uint64_t>(grid.etas.size(), 0));
    grid.trace_paths.assign(grid.rs.size(), std::vector<std::string>(grid.etas.size()));
    return grid;
}

SweepGrid read_grid_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_grid(ss.str());
}

std::size_t count_cells_below(const SweepGrid& grid, double threshold) {
    std::size_t count = 0;
    for (const auto& row : grid.values) {
        for (double v : row) {
            if (!std::isnan(v) && v <= threshold) {
                ++count;
            }
        }
    }
    return count;
}

std::vector<BenchRow> bench(const RunConfig& base, const std::vector<std::size_t>& bundle_sizes,
                            std::size_t epochs) {
    if (epochs == 0) {
        throw InvalidInput("bench needs at least one epoch");
    }
    std::vector<BenchRow> rows;
    for (std::size_t n : bundle_sizes) {
        RunConfig c = base;
        c.out.reset();
        c.method = Method::borat;
        c.optimizer.bundle_size = n;
        c.optimizer.max_steps.reset();
        c.optimizer.max_epochs = epochs;
        c.log_every = std::numeric_limits<std::size_t>::max();
        const auto t0 = std::chrono::steady_clock::now();
        const RunOutcome out = run(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!out.ok) {
            throw NumericError("bench run with N=" + std::to_string(n) + " failed: " + out.trace.error);
        }
        rows.push_back({n, epochs, secs, secs / static_cast<double>(epochs)});
    }
    return rows;
}

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv("BORAT_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

} // namespace borat
