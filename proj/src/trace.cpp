#include "borat/trace.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>

namespace borat {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_optional(const std::string& cell, std::size_t line, const std::string& column) {
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        // from_chars rejects "inf"/"nan" spellings produced by to_chars on some
        // platforms; accept them explicitly.
        if (cell == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (cell == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (cell == "nan" || cell == "-nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        throw TraceParseError(line, "column '" + column + "': not a number: '" + cell + "'");
    }
    return v;
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> json_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

std::string csv_line(const TraceRecord& r, std::size_t n) {
    std::string line = std::to_string(r.step);
    line += ',' + cell(r.sampled_loss);
    line += ',' + cell(r.full_obj);
    line += ',' + cell(r.accuracy);
    line += ',' + cell(r.dual_value);
    line += ',' + r.step_type;
    for (std::size_t i = 0; i < n; ++i) {
        line += ',';
        if (i < r.alpha.size()) {
            line += format_double(r.alpha[i]);
        }
    }
    line += ',' + format_double(r.param_norm_sq);
    line += ',' + cell(r.elapsed_s);
    return line;
}

json record_json(const TraceRecord& r) {
    json j;
    j["step"] = r.step;
    j["sampled_loss"] = opt_json(r.sampled_loss);
    j["full_obj"] = opt_json(r.full_obj);
    j["accuracy"] = opt_json(r.accuracy);
    j["dual_value"] = opt_json(r.dual_value);
    j["step_type"] = r.step_type;
    j["alpha"] = r.alpha;
    j["param_norm_sq"] = r.param_norm_sq;
    j["elapsed_s"] = opt_json(r.elapsed_s);
    return j;
}

json header_json(const TraceHeader& header, std::size_t n) {
    json h = json::object();
    for (const auto& [k, v] : header) {
        h[k] = v;
    }
    json out;
    out["header"] = h;
    out["bundle_size"] = n;
    return out;
}

RunTrace parse_jsonl(std::istringstream& in) {
    RunTrace trace;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw TraceParseError(lineno, e.what());
        }
        try {
            if (!have_header) {
                if (!j.contains("header")) {
                    throw TraceParseError(lineno, "first line must be the header object");
                }
                for (const auto& [k, v] : j.at("header").items()) {
                    trace.header.emplace_back(k, v.get<std::string>());
                }
                trace.bundle_size = j.at("bundle_size").get<std::size_t>();
                have_header = true;
                continue;
            }
            TraceRecord r;
            r.step = j.at("step").get<std::size_t>();
            r.sampled_loss = json_opt(j, "sampled_loss");
            r.full_obj = json_opt(j, "full_obj");
            r.accuracy = json_opt(j, "accuracy");
            r.dual_value = json_opt(j, "dual_value");
            r.step_type = j.at("step_type").get<std::string>();
            r.alpha = j.at("alpha").get<std::vector<double>>();
            r.param_norm_sq = j.at("param_norm_sq").get<double>();
            r.elapsed_s = json_opt(j, "elapsed_s");
            if (!trace.records.empty() && r.step <= trace.records.back().step) {
                throw TraceParseError(lineno, "records are not strictly ordered by step");
            }
            trace.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw TraceParseError(lineno, e.what());
        }
    }
    if (!have_header) {
        throw TraceParseError(lineno, "missing header");
    }
    return trace;
}

RunTrace parse_csv(std::istringstream& in) {
    RunTrace trace;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> columns;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos && line.size() > 2) {
                trace.header.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            }
            continue;
        }
        if (columns.empty()) {
            columns = split(line, ',');
            if (columns.size() < 9 || columns.front() != "step") {
                throw TraceParseError(lineno, "unexpected column header");
            }
            trace.bundle_size = columns.size() - 8;
            if (columns != trace_columns(trace.bundle_size)) {
                throw TraceParseError(lineno, "unexpected column header");
            }
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != columns.size()) {
            throw TraceParseError(lineno, "expected " + std::to_string(columns.size()) + " fields, got " +
                                              std::to_string(cells.size()));
        }
        TraceRecord r;
        const auto step = parse_optional(cells[0], lineno, "step");
        if (!step || *step < 0) {
            throw TraceParseError(lineno, "missing step");
        }
        r.step = static_cast<std::size_t>(*step);
        r.sampled_loss = parse_optional(cells[1], lineno, columns[1]);
        r.full_obj = parse_optional(cells[2], lineno, columns[2]);
        r.accuracy = parse_optional(cells[3], lineno, columns[3]);
        r.dual_value = parse_optional(cells[4], lineno, columns[4]);
        r.step_type = cells[5];
        for (std::size_t i = 0; i < trace.bundle_size; ++i) {
            if (auto a = parse_optional(cells[6 + i], lineno, columns[6 + i])) {
                r.alpha.push_back(*a);
            }
        }
        const auto norm = parse_optional(cells[6 + trace.bundle_size], lineno, "param_norm_sq");
        if (!norm) {
            throw TraceParseError(lineno, "missing param_norm_sq");
        }
        r.param_norm_sq = *norm;
        r.elapsed_s = parse_optional(cells[7 + trace.bundle_size], lineno, "elapsed_s");
        if (!trace.records.empty() && r.step <= trace.records.back().step) {
            throw TraceParseError(lineno, "records are not strictly ordered by step");
        }
        trace.records.push_back(std::move(r));
    }
    if (columns.empty()) {
        throw TraceParseError(lineno, "missing column header");
    }
    return trace;
}

} // namespace

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

TraceFormat parse_trace_format(const std::string& text) {
    if (text == "csv") {
        return TraceFormat::csv;
    }
    if (text == "jsonl") {
        return TraceFormat::jsonl;
    }
    throw InvalidInput("unknown trace format '" + text + "' (expected csv | jsonl)");
}

std::string to_string(TraceFormat format) { return format == TraceFormat::csv ? "csv" : "jsonl"; }

std::vector<std::string> trace_columns(std::size_t bundle_size) {
    std::vector<std::string> cols{"step", "sampled_loss", "full_obj", "accuracy", "dual_value", "step_type"};
    for (std::size_t i = 1; i <= bundle_size; ++i) {
        cols.push_back("alpha_" + std::to_string(i));
    }
    cols.emplace_back("param_norm_sq");
    cols.emplace_back("elapsed_s");
    return cols;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

TraceWriter::TraceWriter(const std::filesystem::path& path, TraceFormat format, const TraceHeader& header,
                         std::size_t bundle_size)
    : out_(path), format_(format), bundle_size_(bundle_size) {
    if (!out_) {
        throw InvalidInput("cannot open trace file " + path.string());
    }
    if (format_ == TraceFormat::csv) {
        for (const auto& [k, v] : header) {
            out_ << "# " << k << '=' << v << '\n';
        }
        const auto cols = trace_columns(bundle_size_);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            out_ << (i ? "," : "") << cols[i];
        }
        out_ << '\n';
    } else {
        out_ << header_json(header, bundle_size_).dump() << '\n';
    }
    out_.flush();
}

void TraceWriter::write(const TraceRecord& record) {
    if (format_ == TraceFormat::csv) {
        out_ << csv_line(record, bundle_size_) << '\n';
    } else {
        out_ << record_json(record).dump() << '\n';
    }
    out_.flush();
}

std::string serialize_trace(const RunTrace& trace, TraceFormat format) {
    std::ostringstream out;
    if (format == TraceFormat::csv) {
        for (const auto& [k, v] : trace.header) {
            out << "# " << k << '=' << v << '\n';
        }
        const auto cols = trace_columns(trace.bundle_size);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            out << (i ? "," : "") << cols[i];
        }
        out << '\n';
        for (const auto& r : trace.records) {
            out << csv_line(r, trace.bundle_size) << '\n';
        }
    } else {
        out << header_json(trace.header, trace.bundle_size).dump() << '\n';
        for (const auto& r : trace.records) {
            out << record_json(r).dump() << '\n';
        }
    }
    return out.str();
}

RunTrace parse_trace(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size() && (text[i] == '\n' || text[i] == '\r' || text[i] == ' ')) {
        ++i;
    }
    if (i == text.size()) {
        throw TraceParseError(1, "empty trace");
    }
    std::istringstream in(text);
    if (text[i] == '{') {
        return parse_jsonl(in);
    }
    return parse_csv(in);
}

RunTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

} // namespace borat
