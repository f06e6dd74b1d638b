#pragma once

// Trajectory serialization: CSV with round-trippable decimals, SVG plots of
// the complex plane, and all-or-nothing artifact writes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cqtraj/errors.hpp"
#include "cqtraj/integrate.hpp"

namespace cqtraj {

/// 17 significant digits, enough for an exact binary64 round trip.
inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline std::string render_csv(const Trajectory& traj) {
  const bool with_p = traj.momenta.has_value();
  std::string out = with_p ? "t,x_re,x_im,p_re,p_im\n" : "t,x_re,x_im\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_double(traj.times[i]);
    out += ',' + format_double(traj.positions[i].real());
    out += ',' + format_double(traj.positions[i].imag());
    if (with_p) {
      out += ',' + format_double((*traj.momenta)[i].real());
      out += ',' + format_double((*traj.momenta)[i].imag());
    }
    out += '\n';
  }
  return out;
}

/// Inverse of render_csv. Throws IoError on malformed content.
inline Trajectory parse_csv(const std::string& text, const std::string& origin = "<memory>") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV", origin);
  bool with_p = false;
  if (line == "t,x_re,x_im,p_re,p_im")
    with_p = true;
  else if (line != "t,x_re,x_im")
    throw IoError("unexpected CSV header '" + line + "'", origin);

  Trajectory traj;
  if (with_p) traj.momenta.emplace();
  const std::size_t columns = with_p ? 5 : 3;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> values;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw IoError("bad number on row " + std::to_string(row), origin);
      values.push_back(v);
      if (*end == '\0') break;
      if (*end != ',') throw IoError("bad separator on row " + std::to_string(row), origin);
      p = end + 1;
    }
    if (values.size() != columns)
      throw IoError("wrong column count on row " + std::to_string(row), origin);
    traj.times.push_back(values[0]);
    traj.positions.emplace_back(values[1], values[2]);
    if (with_p) traj.momenta->emplace_back(values[3], values[4]);
  }
  return traj;
}

struct SvgSeries {
  const Trajectory* trajectory;
  std::string label;
};

/// Re(x) to the right, Im(x) up, one polyline per trajectory, equal aspect.
inline std::string render_svg(const std::vector<SvgSeries>& series, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 640, kMargin = 50, kLegendRow = 16;
  static constexpr std::array<const char*, 10> kPalette = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
      "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (const auto& p : s.trajectory->positions) {
      xmin = std::min(xmin, p.real());
      xmax = std::max(xmax, p.real());
      ymin = std::min(ymin, p.imag());
      ymax = std::max(ymax, p.imag());
    }
  }
  if (!std::isfinite(xmin)) xmin = ymin = -1, xmax = ymax = 1;
  double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  span *= 1.05;
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  const double plot = std::min(kWidth, kHeight) - 2 * kMargin;
  const double scale = plot / span;
  auto px = [&](double x) { return kWidth / 2 + (x - cx) * scale; };
  auto py = [&](double y) { return kHeight / 2 - (y - cy) * scale; };
  auto num = [](double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", v);
    return std::string(buf.data());
  };
  auto tick = [](double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.4g", v);
    return std::string(buf.data());
  };

  const double legend_height = kLegendRow * static_cast<double>(series.size()) + 10;
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight + legend_height) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight + legend_height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + title + "</text>\n";

  // Frame with extreme values, and the axes through the origin when visible.
  const double lo_x = cx - span / 2, hi_x = cx + span / 2;
  const double lo_y = cy - span / 2, hi_y = cy + span / 2;
  out += "<rect x=\"" + num(px(lo_x)) + "\" y=\"" + num(py(hi_y)) + "\" width=\"" + num(plot) +
         "\" height=\"" + num(plot) + "\" fill=\"none\" stroke=\"#999\"/>\n";
  if (lo_y < 0 && hi_y > 0)
    out += "<line x1=\"" + num(px(lo_x)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(hi_x)) +
           "\" y2=\"" + num(py(0)) + "\" stroke=\"#ccc\"/>\n";
  if (lo_x < 0 && hi_x > 0)
    out += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(lo_y)) + "\" x2=\"" + num(px(0)) +
           "\" y2=\"" + num(py(hi_y)) + "\" stroke=\"#ccc\"/>\n";
  const std::string label_style = "font-family=\"sans-serif\" font-size=\"11\"";
  out += "<text x=\"" + num(px(lo_x)) + "\" y=\"" + num(py(lo_y) + 14) + "\" " + label_style +
         ">" + tick(lo_x) + "</text>\n";
  out += "<text x=\"" + num(px(hi_x)) + "\" y=\"" + num(py(lo_y) + 14) + "\" " + label_style +
         " text-anchor=\"end\">" + tick(hi_x) + "</text>\n";
  out += "<text x=\"" + num(px(lo_x) - 4) + "\" y=\"" + num(py(lo_y)) + "\" " + label_style +
         " text-anchor=\"end\">" + tick(lo_y) + "</text>\n";
  out += "<text x=\"" + num(px(lo_x) - 4) + "\" y=\"" + num(py(hi_y) + 10) + "\" " + label_style +
         " text-anchor=\"end\">" + tick(hi_y) + "</text>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(py(lo_y) + 30) + "\" " + label_style +
         " text-anchor=\"middle\">Re x</text>\n";
  out += "<text x=\"" + num(px(lo_x) - 30) + "\" y=\"" + num(kHeight / 2) + "\" " + label_style +
         " text-anchor=\"middle\">Im x</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1\" points=\"";
    const auto& pts = series[k].trajectory->positions;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out += ' ';
      out += num(px(pts[i].real())) + ',' + num(py(pts[i].imag()));
    }
    out += "\"/>\n";
    const double ly = kHeight + kLegendRow * static_cast<double>(k) + 4;
    out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kMargin + 20) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kMargin + 26) + "\" y=\"" + num(ly + 4) + "\" " + label_style + ">" +
           series[k].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

/// Writes every (path, content) pair or none of them: all content goes to
/// temporary siblings first, and only when every write succeeded are they
/// renamed into place.
inline void write_artifacts_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> temps;
  auto cleanup = [&temps] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [path, content] : files) {
    fs::path tmp = path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      cleanup();
      throw IoError("cannot open for writing", tmp.string());
    }
    temps.push_back(tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      cleanup();
      throw IoError("write failed", tmp.string());
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    fs::rename(temps[i], files[i].first, ec);
    if (ec) {
      cleanup();
      throw IoError("rename failed: " + ec.message(), files[i].first.string());
    }
  }
}

inline void emit_csv(const Trajectory& traj, const std::filesystem::path& path) {
  write_artifacts_atomically({{path, render_csv(traj)}});
}

inline void emit_svg(const std::vector<SvgSeries>& series, const std::string& title,
                     const std::filesystem::path& path) {
  write_artifacts_atomically({{path, render_svg(series, title)}});
}

inline Trajectory read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

}  // namespace cqtraj
