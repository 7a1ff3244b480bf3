#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace kahlercap::cli {

// Hex SHA-256 of the canonical (sorted-key, compact) dump of the config.
std::string config_hash(const nlohmann::json& config);

// Pretty JSON with a trailing newline. Keys are sorted, so equal inputs give equal bytes.
void write_json(const std::string& path, const nlohmann::json& j);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const Table& t);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

void write_svg(const std::string& path, const Plot& p);

}  // namespace kahlercap::cli
