#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace reflectmc {

class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(std::vector<std::string> missing);
  [[nodiscard]] const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

/// Plot kinds: sd-series, psd, phase-map, chordlen, diskmap, wavepacket, acceptance.
std::vector<std::string> plot_kinds();

/// Renders one static SVG next to the manifest and returns its path.
std::filesystem::path render_plot(const std::filesystem::path& manifest, const std::string& kind);

}  // namespace reflectmc
