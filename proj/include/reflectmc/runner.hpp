#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "reflectmc/config.hpp"

namespace reflectmc {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct RunOptions {
  int workers = 0;  // 0: OpenMP default
};

/// Runs one experiment into `out_dir`. Writes config.json and the data files
/// first and manifest.json last (atomically). A failing run still writes a
/// manifest with status "failed" and the list of artifacts completed so far,
/// then rethrows.
nlohmann::json run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                              const RunOptions& options = {});

/// Atomic write through a temporary file in the same directory.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace reflectmc
