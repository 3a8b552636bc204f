#pragma once

#include "borat/harness.hpp"
#include "borat/trace.hpp"

#include <filesystem>
#include <string>

namespace borat {

/// Log-scale full objective against step, as a standalone SVG document.
/// Throws InvalidInput when the trace has no objective values.
std::string trace_svg(const RunTrace& trace);

/// One shaded cell per (r, eta) pair, labelled with its value.
std::string grid_svg(const SweepGrid& grid);

/// Reads a trace or grid file and writes the matching SVG. Nothing is written
/// when the input fails to parse or is empty.
void plot_file(const std::filesystem::path& input, const std::filesystem::path& output);

} // namespace borat
