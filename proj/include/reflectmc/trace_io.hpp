#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflectmc/dynamics.hpp"

namespace reflectmc {

inline constexpr int kTraceFormatVersion = 1;

/// Column order of a serialized trace:
///   t, particle_id, q_0 .. q_{n-1}, [p_0 .. p_{n-1},] branch
/// `branch` is the step that produced the row's state: forward, reflect,
/// reject, or "none" for t = 0.
std::vector<std::string> trace_columns(std::size_t dim, bool with_momenta);

/// Writes `# reflectmc-trace <version>` and `# <header json>` comment lines
/// (seed, parameters, volume), then the column header and one row per
/// (snapshot, particle), snapshots in time order and particles by index.
void write_trace_csv(std::ostream& os, const EnsembleTrace& trace, const nlohmann::json& header);

}  // namespace reflectmc
