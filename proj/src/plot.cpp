#include "reflectmc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "reflectmc/csv.hpp"
#include "reflectmc/runner.hpp"

namespace reflectmc {

namespace fs = std::filesystem;

MissingInputError::MissingInputError(std::vector<std::string> missing)
    : std::runtime_error([&] {
        std::string msg = "missing plot inputs:";
        for (const auto& m : missing) msg += " " + m;
        return msg;
      }()),
      missing_(std::move(missing)) {}

namespace {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  [[nodiscard]] double unit(double v) const {
    if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

Axis fit_axis(const std::vector<double>& v, bool log) {
  Axis a;
  a.log = log;
  double lo = INFINITY, hi = -INFINITY;
  for (double x : v) {
    if (!std::isfinite(x) || (log && x <= 0.0)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!std::isfinite(lo)) lo = log ? 1.0 : 0.0, hi = log ? 10.0 : 1.0;
  if (hi <= lo) hi = log ? lo * 10.0 : lo + 1.0;
  a.lo = lo;
  a.hi = hi;
  return a;
}

// Perceptually ordered palette, interpolated in RGB.
std::string colour(double u) {
  static const double stops[][3] = {{68, 1, 84},    {59, 82, 139}, {33, 145, 140},
                                    {94, 201, 98},  {253, 231, 37}};
  u = std::clamp(u, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(u));
  const double f = u - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

std::string line_colour(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[k % 8];
}

class Svg {
 public:
  static constexpr double kW = 720, kH = 480, kL = 80, kR = 110, kT = 40, kB = 60;

  Svg(std::string title, std::string xlabel, std::string ylabel) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kW / 2, 22, title, "middle", 14);
    text(kL + pw() / 2, kH - 15, xlabel, "middle");
    out_ << "<text transform=\"translate(20," << kT + ph() / 2
         << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  }

  static double pw() { return kW - kL - kR; }
  static double ph() { return kH - kT - kB; }
  double px(const Axis& a, double v) const { return kL + a.unit(v) * pw(); }
  double py(const Axis& a, double v) const { return kT + (1.0 - a.unit(v)) * ph(); }

  void text(double x, double y, const std::string& s, const char* anchor = "start",
            int size = 12) {
    out_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
         << "\" font-size=\"" << size << "\">" << s << "</text>\n";
  }

  void frame(const Axis& x, const Axis& y) {
    out_ << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw() << "\" height=\""
         << ph() << "\" fill=\"none\" stroke=\"black\"/>\n";
    ticks(x, true);
    ticks(y, false);
  }

  void polyline(const Axis& ax, const Axis& ay, const std::vector<double>& xs,
                const std::vector<double>& ys, const std::string& stroke) {
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[i]) || (ay.log && ys[i] <= 0.0) || (ax.log && xs[i] <= 0.0)) continue;
      out_ << px(ax, xs[i]) << "," << py(ay, ys[i]) << " ";
    }
    out_ << "\"/>\n";
  }

  void points(const Axis& ax, const Axis& ay, const std::vector<double>& xs,
              const std::vector<double>& ys, const std::string& fill) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out_ << "<circle cx=\"" << px(ax, xs[i]) << "\" cy=\"" << py(ay, ys[i])
           << "\" r=\"3\" fill=\"" << fill << "\"/>\n";
    }
  }

  void cell(double x0, double y0, double x1, double y1, const std::string& fill) {
    out_ << "<rect x=\"" << std::min(x0, x1) << "\" y=\"" << std::min(y0, y1) << "\" width=\""
         << std::abs(x1 - x0) + 0.3 << "\" height=\"" << std::abs(y1 - y0) + 0.3
         << "\" fill=\"" << fill << "\"/>\n";
  }

  void legend(std::size_t k, const std::string& label) {
    const double y = kT + 14 + 16 * static_cast<double>(k);
    out_ << "<line x1=\"" << kW - kR + 8 << "\" y1=\"" << y - 4 << "\" x2=\"" << kW - kR + 26
         << "\" y2=\"" << y - 4 << "\" stroke=\"" << line_colour(k) << "\" stroke-width=\"2\"/>\n";
    text(kW - kR + 30, y, label);
  }

  /// Vertical colour bar; `clipped` draws a triangle above it.
  void colourbar(double lo, double hi, bool clipped, const std::string& label) {
    const double x = kW - kR + 20, w = 16;
    for (int i = 0; i < 100; ++i) {
      const double y = kT + ph() * (1.0 - (i + 1) / 100.0);
      cell(x, y, x + w, y + ph() / 100.0, colour(i / 99.0));
    }
    std::ostringstream l, h;
    l << lo;
    h << hi;
    text(x + w + 4, kT + ph(), l.str());
    text(x + w + 4, kT + 10, h.str());
    text(x, kT + ph() + 20, label);
    if (clipped) {
      out_ << "<polygon points=\"" << x << "," << kT - 2 << " " << x + w << "," << kT - 2 << " "
           << x + w / 2 << "," << kT - 14 << "\" fill=\"" << colour(1.0) << "\" stroke=\"black\"/>\n";
    }
  }

  std::string str() const { return out_.str() + "</svg>\n"; }

 private:
  void ticks(const Axis& a, bool horizontal) {
    std::vector<double> vals;
    if (a.log) {
      for (double e = std::floor(std::log10(a.lo)); e <= std::ceil(std::log10(a.hi)); e += 1.0) {
        const double v = std::pow(10.0, e);
        if (v >= a.lo * 0.999 && v <= a.hi * 1.001) vals.push_back(v);
      }
      if (vals.size() < 2) vals = {a.lo, a.hi};
    } else {
      for (int i = 0; i <= 4; ++i) vals.push_back(a.lo + (a.hi - a.lo) * i / 4.0);
    }
    for (double v : vals) {
      std::ostringstream s;
      s << std::setprecision(3) << v;
      if (horizontal) {
        const double x = px(a, v);
        out_ << "<line x1=\"" << x << "\" y1=\"" << kT + ph() << "\" x2=\"" << x << "\" y2=\""
             << kT + ph() + 5 << "\" stroke=\"black\"/>\n";
        text(x, kT + ph() + 18, s.str(), "middle");
      } else {
        const double y = py(a, v);
        out_ << "<line x1=\"" << kL - 5 << "\" y1=\"" << y << "\" x2=\"" << kL << "\" y2=\"" << y
             << "\" stroke=\"black\"/>\n";
        text(kL - 8, y + 4, s.str(), "end");
      }
    }
  }

  std::ostringstream out_;
};

CsvTable load(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingInputError({p.string()});
  return read_csv(in);
}

std::vector<double> column(const CsvTable& t, const std::string& name) {
  const auto c = t.column(name);
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.number(r, c));
  return out;
}

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Cell edges halfway between grid values (geometric for log axes).
std::vector<double> edges(const std::vector<double>& centres, bool log) {
  std::vector<double> e(centres.size() + 1);
  auto mid = [&](double a, double b) { return log ? std::sqrt(a * b) : 0.5 * (a + b); };
  for (std::size_t i = 1; i < centres.size(); ++i) e[i] = mid(centres[i - 1], centres[i]);
  if (centres.size() == 1) {
    e[0] = log ? centres[0] / 1.5 : centres[0] - 0.5;
    e[1] = log ? centres[0] * 1.5 : centres[0] + 0.5;
  } else {
    e[0] = log ? centres[0] * centres[0] / e[1] : 2 * centres[0] - e[1];
    e.back() = log ? centres.back() * centres.back() / e[centres.size() - 1]
                   : 2 * centres.back() - e[centres.size() - 1];
  }
  return e;
}

/// Heatmap of value(x, y) on a rectangular grid.
std::string heatmap(const std::string& title, const std::string& xl, const std::string& yl,
                    const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<double>& v, bool xlog, bool ylog, double vmax_clip,
                    const std::string& vlabel, const std::vector<std::pair<double, double>>& overlay = {}) {
  const auto xs = unique_sorted(x), ys = unique_sorted(y);
  const auto xe = edges(xs, xlog), ye = edges(ys, ylog);
  Axis ax{xe.front(), xe.back(), xlog}, ay{ye.front(), ye.back(), ylog};
  double vmax = 0.0, vmin = INFINITY;
  for (double w : v) {
    if (std::isfinite(w)) vmax = std::max(vmax, w), vmin = std::min(vmin, w);
  }
  const bool clipped = vmax_clip > 0.0 && vmax > vmax_clip;
  if (vmax_clip > 0.0) vmax = std::min(vmax, vmax_clip);
  if (!std::isfinite(vmin)) vmin = 0.0;
  if (vmax <= vmin) vmax = vmin + 1.0;
  Svg svg(title, xl, yl);
  std::map<double, std::size_t> xi, yi;
  for (std::size_t i = 0; i < xs.size(); ++i) xi[xs[i]] = i;
  for (std::size_t i = 0; i < ys.size(); ++i) yi[ys[i]] = i;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto i = xi[x[k]], j = yi[y[k]];
    svg.cell(svg.px(ax, xe[i]), svg.py(ay, ye[j]), svg.px(ax, xe[i + 1]), svg.py(ay, ye[j + 1]),
             colour((std::min(v[k], vmax) - vmin) / (vmax - vmin)));
  }
  svg.frame(ax, ay);
  if (!overlay.empty()) {
    std::vector<double> ox, oy;
    for (const auto& [a, b] : overlay) ox.push_back(a), oy.push_back(b);
    svg.polyline(ax, ay, ox, oy, "#ff2020");
  }
  svg.colourbar(vmin, vmax, clipped, vlabel);
  return svg.str();
}

std::string plot_sd(const fs::path& dir) {
  const auto t = load(dir / "sd_series.csv");
  const auto sig = column(t, "sigma_p"), time = column(t, "t"), sd = column(t, "sd");
  Svg svg("Sinkhorn divergence", "t [MCS]", "SD");
  const Axis ax = fit_axis(time, false), ay = fit_axis(sd, true);
  svg.frame(ax, ay);
  const auto sigmas = unique_sorted(sig);
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < sig.size(); ++r) {
      if (sig[r] == sigmas[k]) xs.push_back(time[r]), ys.push_back(sd[r]);
    }
    svg.polyline(ax, ay, xs, ys, line_colour(k));
    std::ostringstream l;
    l << "sigma_p=" << sigmas[k];
    svg.legend(k, l.str());
  }
  return svg.str();
}

std::string plot_psd(const fs::path& dir) {
  const auto t = load(dir / "psd.csv");
  auto power = column(t, "power");
  for (double& p : power) p = std::log10(std::max(p, 1e-300));
  return heatmap("PSD of SD", "sigma_p", "f [1/MCS]", column(t, "sigma_p"), column(t, "frequency"),
                 power, true, false, 0.0, "log10 PSD");
}

std::string plot_phase_map(const fs::path& dir) {
  const auto t = load(dir / "phase_map.csv");
  std::ifstream in(dir / "phase_map_fit.json");
  std::vector<std::pair<double, double>> overlay;
  if (in) {
    const auto fit = nlohmann::json::parse(in);
    if (!fit["exponent"].is_null()) {
      const auto n = unique_sorted(column(t, "n"));
      for (double x : n) {
        overlay.emplace_back(fit["prefactor"].get<double>() *
                                 std::pow(x, fit["exponent"].get<double>()),
                             x);
      }
    }
  }
  return heatmap("Spectral entropy H", "sigma_p", "n", column(t, "sigma_p"), column(t, "n"),
                 column(t, "H"), true, true, 0.0, "H [nats]", overlay);
}

std::string plot_chord(const fs::path& dir) {
  const auto t = load(dir / "chord_lengths.csv");
  const auto n = column(t, "n"), m = column(t, "mean");
  Svg svg("Mean chord length", "n", "<l>");
  const Axis ax = fit_axis(n, true), ay = fit_axis(m, true);
  svg.frame(ax, ay);
  svg.points(ax, ay, n, m, line_colour(0));
  return svg.str();
}

std::string plot_diskmap(const fs::path& dir) {
  const auto t = load(dir / "diskmap.csv");
  const auto time = column(t, "t"), theta = column(t, "theta");
  constexpr std::size_t kBins = 90;
  std::map<double, std::vector<double>> hist;
  for (std::size_t r = 0; r < time.size(); ++r) {
    auto& h = hist[time[r]];
    h.resize(kBins, 0.0);
    const auto b = std::min(kBins - 1, static_cast<std::size_t>((theta[r] + std::numbers::pi) / (2 * std::numbers::pi) * kBins));
    h[b] += 1.0;
  }
  std::vector<double> x, y, v;
  for (auto& [tt, h] : hist) {
    double total = 0.0;
    for (double c : h) total += c;
    for (std::size_t b = 0; b < kBins; ++b) {
      x.push_back(tt);
      y.push_back(-std::numbers::pi + (b + 0.5) * 2 * std::numbers::pi / kBins);
      v.push_back(h[b] / (total * 2 * std::numbers::pi / kBins));
    }
  }
  return heatmap("Angular density on the disk", "t [MCS]", "theta", x, y, v, false, false, 0.0,
                 "p(theta)");
}

std::string plot_wavepacket(const fs::path& dir) {
  const auto t = load(dir / "density.csv");
  return heatmap("Wave-packet density", "t [MCS]", "x", column(t, "t"), column(t, "x"),
                 column(t, "density"), false, false, 2.0, "density");
}

std::string plot_acceptance(const fs::path& dir) {
  const auto t = load(dir / "acceptance.csv");
  const auto sig = column(t, "sigma_p"), rate = column(t, "rate");
  std::map<double, std::pair<double, double>> mean;
  for (std::size_t r = 0; r < sig.size(); ++r) {
    mean[sig[r]].first += rate[r];
    mean[sig[r]].second += 1.0;
  }
  std::vector<double> xs, ys;
  for (const auto& [s, m] : mean) xs.push_back(s), ys.push_back(m.first / m.second);
  Svg svg("Trajectory acceptance rate", "sigma_p", "rate");
  const Axis ax = fit_axis(xs, true);
  const Axis ay{0.0, 1.0, false};
  svg.frame(ax, ay);
  svg.polyline(ax, ay, xs, ys, line_colour(0));
  svg.points(ax, ay, xs, ys, line_colour(0));
  return svg.str();
}

const std::map<std::string, std::pair<std::vector<std::string>, std::string (*)(const fs::path&)>>&
registry() {
  static const std::map<std::string,
                        std::pair<std::vector<std::string>, std::string (*)(const fs::path&)>>
      r{{"sd-series", {{"sd_series.csv"}, plot_sd}},
        {"psd", {{"psd.csv"}, plot_psd}},
        {"phase-map", {{"phase_map.csv", "phase_map_fit.json"}, plot_phase_map}},
        {"chordlen", {{"chord_lengths.csv"}, plot_chord}},
        {"diskmap", {{"diskmap.csv"}, plot_diskmap}},
        {"wavepacket", {{"density.csv"}, plot_wavepacket}},
        {"acceptance", {{"acceptance.csv"}, plot_acceptance}}};
  return r;
}

}  // namespace

std::vector<std::string> plot_kinds() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

fs::path render_plot(const fs::path& manifest, const std::string& kind) {
  const auto& reg = registry();
  const auto it = reg.find(kind);
  if (it == reg.end()) throw std::invalid_argument("unknown plot kind '" + kind + "'");
  if (!fs::exists(manifest)) throw MissingInputError({manifest.string()});
  const fs::path dir = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  std::vector<std::string> missing;
  for (const auto& f : it->second.first) {
    if (!fs::exists(dir / f)) missing.push_back((dir / f).string());
  }
  if (!missing.empty()) throw MissingInputError(missing);
  const fs::path out = dir / ("plot_" + kind + ".svg");
  write_file_atomic(out, it->second.second(dir));
  return out;
}

}  // namespace reflectmc
