#pragma once

#include "borat/types.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace borat {

enum class TraceFormat { csv, jsonl };

TraceFormat parse_trace_format(const std::string& text);
std::string to_string(TraceFormat format);

/// One trace line. Step 0 carries only the initial evaluation.
struct TraceRecord {
    std::size_t step = 0;
    std::optional<double> sampled_loss;
    std::optional<double> full_obj;
    std::optional<double> accuracy;
    std::optional<double> dual_value;
    std::string step_type;
    std::vector<double> alpha;  ///< empty on step 0
    double param_norm_sq = 0.0;
    std::optional<double> elapsed_s;

    bool operator==(const TraceRecord&) const = default;
};

using TraceHeader = std::vector<std::pair<std::string, std::string>>;

struct RunTrace {
    TraceHeader header;
    std::size_t bundle_size = 2;
    std::vector<TraceRecord> records;
    bool truncated = false;
    std::string error;
};

class TraceParseError : public std::runtime_error {
public:
    TraceParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Column names in file order for a bundle of size n.
std::vector<std::string> trace_columns(std::size_t bundle_size);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Writes records as they arrive; each line is flushed so an interrupted run
/// leaves a readable prefix.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, TraceFormat format, const TraceHeader& header,
                std::size_t bundle_size);

    void write(const TraceRecord& record);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    TraceFormat format_;
    std::size_t bundle_size_;
};

/// Serialises a whole trace to a string in the given format.
std::string serialize_trace(const RunTrace& trace, TraceFormat format);

/// Parses either format (detected from the first non-empty line).
RunTrace parse_trace(const std::string& text);
RunTrace read_trace(const std::filesystem::path& path);

} // namespace borat
