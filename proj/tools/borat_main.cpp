// Command line front end: run, sweep, verify, plot, bench.

#include "borat/harness.hpp"
#include "borat/plot.hpp"
#include "borat/verify.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <limits>

namespace {

using namespace borat;

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2, kVerifyFailed = 3 };

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct Options {
    std::string problem = "lsq";
    std::string optimizer = "borat";
    std::size_t n = 3;
    double eta = 0.1;
    std::string constraint = "none";
    double momentum = 0.0;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> epochs;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    bool resample = true;
    std::string out;
    std::string format = "csv";
    std::size_t log_every = 100;
    bool timing = false;
    double lower_bound = 0.0;
    // problem parameters
    std::optional<std::size_t> samples;
    std::optional<long> dim;
    double margin = 0.1;
    std::uint64_t data_seed = 0;
    std::string dataset = "blobs";
    std::size_t n_test = 256;
    int classes = 2;
    double noise = 1.0;
    long hidden = 64;
    std::string loss = "ce";
    double label_noise = 0.0;
    std::string dump_data;
};

void add_problem_options(CLI::App* app, Options& o) {
    app->add_option("--problem", o.problem, "Objective: lsq | hinge | osc1d | rsi | mlp")
        ->check(CLI::IsMember({"lsq", "hinge", "osc1d", "rsi", "mlp"}));
    app->add_option("--samples", o.samples, "Number of training samples");
    app->add_option("--dim", o.dim, "Parameter dimension (lsq, hinge, rsi)");
    app->add_option("--margin", o.margin, "Separation margin (hinge)");
    app->add_option("--data-seed", o.data_seed, "Seed of the synthetic data");
    app->add_option("--dataset", o.dataset, "mlp data: blobs | moons")->check(CLI::IsMember({"blobs", "moons"}));
    app->add_option("--test-samples", o.n_test, "Held-out points (mlp)");
    app->add_option("--classes", o.classes, "Number of blob classes (mlp)");
    app->add_option("--noise", o.noise, "Blob spread or moon jitter (mlp)");
    app->add_option("--hidden", o.hidden, "Hidden units (mlp)");
    app->add_option("--loss", o.loss, "mlp loss: ce | hinge")->check(CLI::IsMember({"ce", "hinge"}));
    app->add_option("--label-noise", o.label_noise, "Label flip probability (mlp)");
}

void add_optimizer_options(CLI::App* app, Options& o, bool with_eta) {
    app->add_option("--optimizer", o.optimizer, "alig | borat")->check(CLI::IsMember({"alig", "borat"}));
    app->add_option("--n", o.n, "Bundle size N (2..10)");
    if (with_eta) {
        app->add_option("--eta", o.eta, "Maximal learning rate");
        app->add_option("--constraint", o.constraint, "none | l2:<r>");
    }
    app->add_option("--momentum", o.momentum, "Nesterov momentum in [0, 1)");
    app->add_option("--steps", o.steps, "Step budget");
    app->add_option("--epochs", o.epochs, "Epoch budget (N - 1 batches per step)");
    app->add_option("--batch-size", o.batch_size, "Mini-batch size");
    app->add_option("--seed", o.seed, "Run seed");
    app->add_option("--resample", o.resample, "Fresh batch for each bundle row (true | false)");
    app->add_option("--lower-bound", o.lower_bound, "Known lower bound on every loss");
    app->add_option("--log-every", o.log_every, "Steps between full-objective evaluations");
    app->add_option("--format", o.format, "Trace format: csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    app->add_flag("--timing", o.timing, "Record elapsed seconds in the trace");
}

std::filesystem::path resolve_out(const std::string& path, const std::string& fallback) {
    std::filesystem::path p = path.empty() ? std::filesystem::path(fallback) : std::filesystem::path(path);
    if (p.is_relative()) {
        p = default_output_dir() / p;
    }
    return p;
}

RunConfig build_config(const Options& o) {
    RunConfig c;
    c.problem = ProblemSpec::defaults_for(o.problem);
    if (o.samples) {
        c.problem.n_samples = *o.samples;
        c.problem.dataset.n_train = *o.samples;
    }
    if (o.dim) {
        c.problem.dim = *o.dim;
    }
    c.problem.margin = o.margin;
    c.problem.data_seed = o.data_seed;
    c.problem.dataset.kind = o.dataset == "moons" ? DatasetSpec::Kind::moons : DatasetSpec::Kind::blobs;
    c.problem.dataset.n_test = o.n_test;
    c.problem.dataset.num_classes = o.classes;
    c.problem.dataset.noise = o.noise;
    c.problem.model.hidden = o.hidden;
    c.problem.loss = o.loss == "ce" ? MlpLoss::cross_entropy : MlpLoss::multiclass_hinge;
    c.problem.label_noise = o.label_noise;

    c.method = o.optimizer == "alig" ? Method::alig : Method::borat;
    c.optimizer.eta = o.eta;
    c.optimizer.bundle_size = c.method == Method::alig ? 2 : o.n;
    c.optimizer.region = parse_region(o.constraint);
    c.optimizer.momentum = o.momentum;
    c.optimizer.max_steps = o.steps;
    c.optimizer.max_epochs = o.epochs;
    if (!o.steps && !o.epochs) {
        c.optimizer.max_steps = 1000;
    }
    c.optimizer.batch_size = o.batch_size;
    c.optimizer.seed = o.seed;
    c.optimizer.resample = o.resample;
    c.optimizer.lower_bound = o.lower_bound;
    c.log_every = o.log_every;
    c.format = parse_trace_format(o.format);
    c.timing = o.timing;
    c.validate();
    return c;
}

std::vector<double> parse_list(const std::vector<std::string>& items, bool allow_none) {
    std::vector<double> out;
    for (const auto& s : items) {
        if (allow_none && s == "none") {
            out.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || used == 0) {
            throw InvalidInput("not a number: '" + s + "'");
        }
        out.push_back(v);
    }
    return out;
}

int cmd_run(const Options& o, bool alig_with_n) {
    if (alig_with_n) {
        throw InvalidInput("--n is fixed to 2 for the alig optimizer");
    }
    RunConfig c = build_config(o);
    c.out = resolve_out(o.out, "trace." + o.format);
    if (!o.dump_data.empty()) {
        const auto obj = make_objective(c.problem);
        const auto* cls = dynamic_cast<const ClassificationObjective*>(obj.get());
        if (cls == nullptr) {
            throw InvalidInput("--dump-data needs a classification problem (hinge or mlp)");
        }
        write_dataset_csv(cls->dataset(), resolve_out(o.dump_data, "data.csv"));
    }
    const RunOutcome out = run(c, &g_stop);
    const auto& recs = out.trace.records;
    std::optional<double> last_obj;
    for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        if (it->full_obj) {
            last_obj = it->full_obj;
            break;
        }
    }
    std::cout << "steps " << (recs.empty() ? 0 : recs.back().step) << ", final objective "
              << (last_obj ? format_double(*last_obj) : std::string("n/a")) << ", trace " << c.out->string() << '\n';
    if (!out.ok) {
        std::cerr << "error: " << out.trace.error << " (trace truncated)\n";
        return kRuntime;
    }
    if (out.interrupted) {
        std::cerr << "interrupted; partial trace written\n";
        return kRuntime;
    }
    return kOk;
}

int cmd_sweep(const Options& o, const std::vector<std::string>& etas, const std::vector<std::string>& rs,
              const std::string& metric, std::size_t jobs, const std::string& traces) {
    RunConfig c = build_config(o);
    const auto eta_list = parse_list(etas, false);
    const auto r_list = parse_list(rs, true);
    std::optional<std::filesystem::path> trace_dir;
    if (!traces.empty()) {
        trace_dir = resolve_out(traces, "traces");
    }
    const auto grid_path = resolve_out(o.out, "grid.csv");
    const SweepGrid grid = sweep(c, eta_list, r_list, parse_sweep_metric(metric), jobs, trace_dir, &g_stop);
    write_grid_csv(grid, grid_path);
    std::cout << serialize_grid(grid);
    std::cout << "grid written to " << grid_path.string() << '\n';
    if (g_stop.load()) {
        std::cerr << "interrupted; unfinished cells are NaN\n";
        return kRuntime;
    }
    return kOk;
}

int cmd_verify(const std::string& suite, const std::string& report_path) {
    const VerifyReport report = run_verify(suite);
    for (const auto& c : report.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    const std::string json = report.to_json();
    if (!report_path.empty()) {
        const auto p = resolve_out(report_path, "verify.json");
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        std::ofstream(p) << json << '\n';
    } else {
        std::cout << json << '\n';
    }
    return report.passed() ? kOk : kVerifyFailed;
}

int cmd_bench(const Options& o, const std::vector<std::size_t>& ns, std::size_t epochs) {
    RunConfig c = build_config(o);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!o.out.empty()) {
        const auto p = resolve_out(o.out, "bench.csv");
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        file.open(p);
        os = &file;
    }
    *os << "n,epochs,seconds,seconds_per_epoch\n";
    for (const auto& row : bench(c, ns, epochs)) {
        *os << row.bundle_size << ',' << row.epochs << ',' << format_double(row.seconds) << ','
            << format_double(row.seconds_per_epoch) << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bundle-method training runs, sweeps and checks"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option values");

    Options o;
    auto* run_cmd = app.add_subcommand("run", "Train once and write a trace");
    add_problem_options(run_cmd, o);
    add_optimizer_options(run_cmd, o, true);
    auto* run_n = run_cmd->get_option("--n");
    run_cmd->add_option("--out", o.out, "Trace path (relative paths go under $BORAT_OUT_DIR)");
    run_cmd->add_option("--dump-data", o.dump_data, "Also write the training set as CSV");

    std::vector<std::string> etas{"0.01", "0.1", "1", "10"};
    std::vector<std::string> rs{"50", "100", "150", "200", "250"};
    std::string metric = "objective";
    std::size_t jobs = 1;
    std::string traces;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run an eta x r grid");
    add_problem_options(sweep_cmd, o);
    add_optimizer_options(sweep_cmd, o, false);
    sweep_cmd->add_option("--etas", etas, "Learning rates")->delimiter(',');
    sweep_cmd->add_option("--rs", rs, "Ball parameters r (or none)")->delimiter(',');
    sweep_cmd->add_option("--metric", metric, "objective | train_accuracy | test_accuracy");
    sweep_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--traces", traces, "Directory for per-cell traces");
    sweep_cmd->add_option("--out", o.out, "Grid CSV path");

    std::string suite = "all";
    std::string report;
    auto* verify_cmd = app.add_subcommand("verify", "Run invariant suites");
    verify_cmd->add_option("suite", suite, "Suite name or all");
    verify_cmd->add_option("--report", report, "Write the JSON report here instead of stdout");

    std::string plot_in;
    std::string plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "Render a trace or grid as SVG");
    plot_cmd->add_option("input", plot_in, "Trace or grid file")->required();
    plot_cmd->add_option("--out", plot_out, "SVG path (default: input with .svg)");

    std::vector<std::size_t> ns{2, 3, 4, 5, 6};
    std::size_t bench_epochs = 5;
    auto* bench_cmd = app.add_subcommand("bench", "Epoch time against bundle size");
    add_problem_options(bench_cmd, o);
    add_optimizer_options(bench_cmd, o, true);
    bench_cmd->add_option("--ns", ns, "Bundle sizes")->delimiter(',');
    bench_cmd->add_option("--bench-epochs", bench_epochs, "Epochs per bundle size");
    bench_cmd->add_option("--out", o.out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (run_cmd->parsed()) {
            return cmd_run(o, o.optimizer == "alig" && run_n->count() > 0 && o.n != 2);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(o, etas, rs, metric, jobs, traces);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(suite, report);
        }
        if (plot_cmd->parsed()) {
            std::filesystem::path out = plot_out.empty() ? std::filesystem::path(plot_in).replace_extension(".svg")
                                                         : resolve_out(plot_out, "plot.svg");
            plot_file(plot_in, out);
            std::cout << "wrote " << out.string() << '\n';
            return kOk;
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(o, ns, bench_epochs);
        }
    } catch (const InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const TraceParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
