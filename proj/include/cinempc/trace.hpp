#pragma once

// CSV trace files and SVG plots of closed-loop runs. The column layout is
// documented in docs/trace_format.md.

#include "cinempc/scenario.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cinempc {

inline constexpr int kTraceVersion = 1;

/// Column names in file order for the given targets.
std::vector<std::string> trace_columns(const std::vector<std::string>& target_ids);

/// Writes the header and one row per record with 17 significant digits.
void write_trace(const Trace& trace, const std::filesystem::path& path);
std::string format_trace(const Trace& trace);

Trace read_trace(const std::filesystem::path& path);
Trace parse_trace(const std::string& text);

/// Writes cost.svg, dof.svg and intrinsics.svg into out_dir and returns their
/// paths. `sequence_starts` adds dashed markers at directive switches.
std::vector<std::filesystem::path> render_plots(const Trace& trace, const std::vector<double>& sequence_starts,
                                                const std::filesystem::path& out_dir);

}  // namespace cinempc
