#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <openssl/evp.h>

#include "kahlercap/error.hpp"

namespace kahlercap::cli {

namespace {

std::ofstream open_out(const std::string& path, const char* op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, op, "cannot open " + path);
  return out;
}

std::string num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      default: o += c;
    }
  }
  return o;
}

// Round steps of 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  const std::string text = config.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "config_hash", "digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", md[k]);
    hex += buf;
  }
  return hex;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path, "write_json");
  out << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const Table& t) {
  auto out = open_out(path, "write_csv");
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << num("%.17g", row[k]);
    out << "\n";
  }
}

void write_svg(const std::string& path, const Plot& p) {
  const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double y) { return p.log_y ? std::log10(y) : y; };
  for (const auto& s : p.series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (p.log_y && s.y[k] <= 0.0)) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  auto out = open_out(path, "write_svg");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title) << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double v : ticks(x0, x1)) {
    out << "<line x1=\"" << num("%.2f", px(v)) << "\" y1=\"" << H - B << "\" x2=\"" << num("%.2f", px(v)) << "\" y2=\""
        << H - B + 5 << "\" stroke=\"black\"/>";
    out << "<text x=\"" << num("%.2f", px(v)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << num("%g", v)
        << "</text>\n";
  }
  for (double v : ticks(y0, y1)) {
    out << "<line x1=\"" << L - 5 << "\" y1=\"" << num("%.2f", py(v)) << "\" x2=\"" << L << "\" y2=\""
        << num("%.2f", py(v)) << "\" stroke=\"black\"/>";
    const std::string lab = num("%.3g", p.log_y ? std::pow(10.0, v) : v);
    out << "<text x=\"" << L - 8 << "\" y=\"" << num("%.2f", py(v) + 4) << "\" text-anchor=\"end\">" << lab
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(p.x_label)
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << escape(p.y_label) << (p.log_y ? " (log scale)" : "") << "</text>\n";
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& se = p.series[s];
    const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (se.dashed ? " stroke-dasharray=\"5,4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t k = 0; k < se.x.size(); ++k) {
      if (!std::isfinite(se.x[k]) || !std::isfinite(se.y[k]) || (p.log_y && se.y[k] <= 0.0)) continue;
      out << (first ? "" : " ") << num("%.2f", px(se.x[k])) << "," << num("%.2f", py(ty(se.y[k])));
      first = false;
    }
    out << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << (se.dashed ? " stroke-dasharray=\"5,4\"" : "")
        << "/>";
    out << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << escape(se.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace kahlercap::cli
