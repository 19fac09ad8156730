#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "persopt/data.hpp"
#include "persopt/optimizer.hpp"
#include "json.hpp"

namespace persopt::io {

/// Input error carrying the source name and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Flat `key = value` text.  `#` starts a comment; blank lines are skipped.
struct Config {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;
  std::string source;
};

Config parse_config(std::istream& in, const std::string& source);
Config load_config(const std::filesystem::path& path);

/// Typed access to a Config.  Every key read is remembered; finish() throws
/// if the config holds keys nobody asked for.
class ConfigReader {
 public:
  explicit ConfigReader(const Config& cfg) : cfg_(cfg) {}

  double get(const std::string& key, double fallback);
  long get(const std::string& key, long fallback);
  int get(const std::string& key, int fallback);
  bool get(const std::string& key, bool fallback);
  std::string get(const std::string& key, const std::string& fallback);
  std::string get(const std::string& key, const char* fallback) { return get(key, std::string(fallback)); }

  void finish() const;

 private:
  const std::string* raw(const std::string& key);
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  const Config& cfg_;
  std::set<std::string> used_;
};

/// Comma-separated numbers, one row per line; an optional first header line
/// of non-numeric cells is skipped.  Rows must have equal length.
Matrix read_csv_matrix(std::istream& in, const std::string& source);
Matrix read_csv_matrix(const std::filesystem::path& path);

/// One point per CSV row.
PointCloud read_point_cloud(const std::filesystem::path& path);

/// PGM (P2 or P5) scaled to [0, 1] by maxval.
Image read_pgm(std::istream& in, const std::string& source);

/// PGM by magic number, otherwise a CSV grid of values in [0, 1].
Image read_image(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& points);
void write_image_csv(const std::filesystem::path& path, const Image& image);
void write_pgm(const std::filesystem::path& path, const Image& image);
void write_trace(const std::filesystem::path& path, std::span<const TraceEntry> trace);
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line plot of one or more series.
void write_svg_lines(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series);

/// Scatter plot of one or more 2-D point sets (first two coordinates).
void write_svg_points(const std::filesystem::path& path, const std::string& title,
                      const std::vector<Series>& sets);

}  // namespace persopt::io
