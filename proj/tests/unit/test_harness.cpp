#include "borat/harness.hpp"
#include "borat/plot.hpp"
#include "borat/trace.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace borat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("borat_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig small_run() {
    RunConfig c;
    c.problem = ProblemSpec::defaults_for("lsq");
    c.problem.n_samples = 10;
    c.problem.dim = 20;
    c.optimizer.bundle_size = 3;
    c.optimizer.eta = 0.3;
    c.optimizer.max_steps = 50;
    c.optimizer.seed = 4;
    c.log_every = 10;
    return c;
}

} // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("trace round trip in both formats") {
    const auto outcome = run(small_run());
    REQUIRE(outcome.ok);
    for (auto fmt : {TraceFormat::csv, TraceFormat::jsonl}) {
        const std::string text = serialize_trace(outcome.trace, fmt);
        const RunTrace back = parse_trace(text);
        CHECK(back.records == outcome.trace.records);
        CHECK(back.header == outcome.trace.header);
        CHECK(back.bundle_size == 3);
        CHECK(serialize_trace(back, fmt) == text);
    }
}

TEST_CASE("csv trace columns") {
    const auto cols = trace_columns(3);
    CHECK(cols.front() == "step");
    CHECK(std::find(cols.begin(), cols.end(), "alpha_3") != cols.end());
    CHECK(cols.back() == "elapsed_s");
}

TEST_CASE("malformed traces report the line") {
    const std::string good = serialize_trace(run(small_run()).trace, TraceFormat::csv);
    std::string bad = good + "not,a,record\n";
    try {
        parse_trace(bad);
        FAIL("expected a parse error");
    } catch (const TraceParseError& e) {
        CHECK(e.line() > 1);
    }
    CHECK_THROWS_AS(parse_trace(""), TraceParseError);
    CHECK_THROWS_AS(parse_trace("{\"kind\":\"trace\"\n"), TraceParseError);
}

TEST_CASE("run writes the trace it returns") {
    const fs::path dir = scratch("run");
    RunConfig c = small_run();
    c.out = dir / "t.csv";
    const auto outcome = run(c);
    const RunTrace back = read_trace(dir / "t.csv");
    CHECK(back.records == outcome.trace.records);
    c.format = TraceFormat::jsonl;
    c.out = dir / "t.jsonl";
    run(c);
    CHECK(read_trace(dir / "t.jsonl").records == outcome.trace.records);
}

TEST_CASE("run config validation") {
    RunConfig c = small_run();
    c.problem.kind = "nope";
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = small_run();
    c.method = Method::alig;
    CHECK_THROWS_AS(c.validate(), InvalidInput);  // alig needs two rows
    c.optimizer.bundle_size = 2;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("cell seeds differ and are stable") {
    CHECK(cell_seed(1, 0, 0) == cell_seed(1, 0, 0));
    CHECK(cell_seed(1, 0, 1) != cell_seed(1, 1, 0));
    CHECK(cell_seed(1, 0, 0) != cell_seed(2, 0, 0));
}

TEST_CASE("a one-cell sweep reproduces a single run") {
    const RunConfig base = small_run();
    const auto grid = sweep(base, {0.3}, {std::numeric_limits<double>::infinity()}, SweepMetric::final_objective, 1);
    RunConfig single = base;
    single.optimizer.seed = cell_seed(base.optimizer.seed, 0, 0);
    const auto outcome = run(single);
    REQUIRE(outcome.trace.records.back().full_obj.has_value());
    CHECK(grid.values[0][0] == *outcome.trace.records.back().full_obj);
    CHECK(grid.seeds[0][0] == single.optimizer.seed);
}

TEST_CASE("grid csv round trip with failed cells") {
    SweepGrid g;
    g.etas = {0.1, 1.0};
    g.rs = {std::numeric_limits<double>::infinity(), 10.0};
    g.metric = SweepMetric::train_accuracy;
    g.values = {{0.5, std::nan("")}, {1.0, 0.25}};
    g.seeds = {{1, 2}, {3, 4}};
    const std::string text = serialize_grid(g);
    CHECK(text.rfind("# kind=sweep_grid", 0) == 0);
    CHECK(text.find("none") != std::string::npos);
    const SweepGrid back = parse_grid(text);
    CHECK(back.etas == g.etas);
    CHECK(std::isinf(back.rs[0]));
    CHECK(back.rs[1] == 10.0);
    CHECK(back.metric == SweepMetric::train_accuracy);
    CHECK(std::isnan(back.values[0][1]));
    CHECK(back.values[1][1] == 0.25);
    CHECK(count_cells_below(back, 0.6) == 2);
}

TEST_CASE("sweep is independent of worker count") {
    const RunConfig base = small_run();
    const std::vector<double> etas{0.1, 0.5, 2.0};
    const std::vector<double> rs{std::numeric_limits<double>::infinity(), 1.0};
    const auto a = serialize_grid(sweep(base, etas, rs, SweepMetric::final_objective, 1));
    const auto b = serialize_grid(sweep(base, etas, rs, SweepMetric::final_objective, 3));
    CHECK(a == b);
}

TEST_CASE("sweep metric names") {
    CHECK(parse_sweep_metric(to_string(SweepMetric::test_accuracy)) == SweepMetric::test_accuracy);
    CHECK_THROWS_AS(parse_sweep_metric("loss?"), InvalidInput);
}

TEST_CASE("plots") {
    const fs::path dir = scratch("plot");
    RunConfig c = small_run();
    c.out = dir / "t.csv";
    run(c);
    plot_file(dir / "t.csv", dir / "t.svg");
    std::ifstream in(dir / "t.svg");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("<svg") != std::string::npos);

    SweepGrid g;
    g.etas = {0.1, 1.0};
    g.rs = {1.0};
    g.values = {{0.5}, {1e-3}};
    g.seeds = {{1}, {2}};
    const std::string svg = grid_svg(g);
    std::size_t cells = 0;
    for (std::size_t pos = 0; (pos = svg.find("class=\"cell\"", pos)) != std::string::npos; ++pos) {
        ++cells;
    }
    CHECK(cells == 2);
}

TEST_CASE("plotting an empty trace writes nothing") {
    const fs::path dir = scratch("empty");
    {
        std::ofstream(dir / "e.csv") << "";
    }
    CHECK_THROWS(plot_file(dir / "e.csv", dir / "e.svg"));
    CHECK_FALSE(fs::exists(dir / "e.svg"));
}

TEST_CASE("header carries the configuration") {
    const TraceHeader h = make_header(small_run());
    bool has_version = false;
    for (const auto& [k, v] : h) {
        if (k == "version") {
            has_version = v == kVersion;
        }
    }
    CHECK(has_version);
}
