#include "reflectmc/trace_io.hpp"

#include "reflectmc/csv.hpp"

namespace reflectmc {

std::vector<std::string> trace_columns(std::size_t dim, bool with_momenta) {
  std::vector<std::string> cols{"t", "particle_id"};
  for (std::size_t k = 0; k < dim; ++k) cols.push_back("q_" + std::to_string(k));
  if (with_momenta) {
    for (std::size_t k = 0; k < dim; ++k) cols.push_back("p_" + std::to_string(k));
  }
  cols.emplace_back("branch");
  return cols;
}

void write_trace_csv(std::ostream& os, const EnsembleTrace& trace, const nlohmann::json& header) {
  const bool with_momenta =
      !trace.snapshots.empty() && !trace.snapshots.front().momenta.empty();
  os << "# reflectmc-trace " << kTraceFormatVersion << '\n';
  os << "# " << header.dump() << '\n';
  write_csv_header(os, trace_columns(trace.dim, with_momenta));
  for (const auto& snap : trace.snapshots) {
    for (std::size_t i = 0; i < trace.n_particles; ++i) {
      CsvRow row;
      row << static_cast<std::int64_t>(snap.t) << i;
      for (std::size_t k = 0; k < trace.dim; ++k) row << snap.positions[i * trace.dim + k];
      if (with_momenta) {
        for (std::size_t k = 0; k < trace.dim; ++k) row << snap.momenta[i * trace.dim + k];
      }
      const auto b = snap.branches[i];
      row << std::string_view(b == kNoBranch ? "none" : branch_name(static_cast<Branch>(b)));
      row.write(os);
    }
  }
}

}  // namespace reflectmc
