#include "persopt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace persopt::io {

ParseError::ParseError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

Config parse_config(std::istream& in, const std::string& source) {
  Config cfg;
  cfg.source = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    if (cfg.values.contains(key)) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    cfg.values[key] = value;
    cfg.lines[key] = lineno;
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_config(in, path.string());
}

const std::string* ConfigReader::raw(const std::string& key) {
  used_.insert(key);
  const auto it = cfg_.values.find(key);
  return it == cfg_.values.end() ? nullptr : &it->second;
}

void ConfigReader::fail(const std::string& key, const std::string& what) const {
  throw ParseError(cfg_.source, cfg_.lines.at(key), "key '" + key + "': " + what);
}

double ConfigReader::get(const std::string& key, double fallback) {
  const std::string* v = raw(key);
  if (!v) return fallback;
  double out = 0.0;
  if (!parse_double(*v, out) || !std::isfinite(out)) fail(key, "expected a finite number, got '" + *v + "'");
  return out;
}

long ConfigReader::get(const std::string& key, long fallback) {
  const std::string* v = raw(key);
  if (!v) return fallback;
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) fail(key, "expected an integer, got '" + *v + "'");
  return out;
}

int ConfigReader::get(const std::string& key, int fallback) {
  const long v = get(key, static_cast<long>(fallback));
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(key, "integer out of range");
  return static_cast<int>(v);
}

bool ConfigReader::get(const std::string& key, bool fallback) {
  const std::string* v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(key, "expected true or false, got '" + *v + "'");
}

std::string ConfigReader::get(const std::string& key, const std::string& fallback) {
  const std::string* v = raw(key);
  return v ? *v : fallback;
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : cfg_.values) {
    if (!used_.contains(key)) throw ParseError(cfg_.source, cfg_.lines.at(key), "unknown key '" + key + "'");
  }
}

Matrix read_csv_matrix(std::istream& in, const std::string& source) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  int lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    std::stringstream ss(body);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (!parse_double(trim(cell), v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!body.empty() && body.back() == ',') numeric = false;
    if (!numeric) {
      if (first_content) {  // header line
        first_content = false;
        continue;
      }
      throw ParseError(source, lineno, "expected comma-separated numbers");
    }
    first_content = false;
    for (double v : row) {
      if (!std::isfinite(v)) throw ParseError(source, lineno, "non-finite value");
    }
    if (rows == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw ParseError(source, lineno, "expected " + std::to_string(cols) + " columns, got " +
                                           std::to_string(row.size()));
    }
    data.insert(data.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw ParseError(source, lineno, "no data rows");
  return Matrix(rows, cols, std::move(data));
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv_matrix(in, path.string());
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const Matrix m = read_csv_matrix(path);
  return PointCloud(m.rows(), m.cols(), std::vector<double>(m.data().begin(), m.data().end()));
}

Image read_pgm(std::istream& in, const std::string& source) {
  int line = 1;
  // Reads the next header token, skipping whitespace and comments.
  auto token = [&]() {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {}
        ++line;
        continue;
      }
      if (std::isspace(c)) {
        if (c == '\n') ++line;
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw ParseError(source, line, "truncated PGM header");
    return tok;
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || v < 1) {
      throw ParseError(source, line, std::string("invalid ") + what + " '" + t + "'");
    }
    return v;
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P5") throw ParseError(source, line, "not a PGM file (magic '" + magic + "')");
  const long width = number("width");
  const long height = number("height");
  const long maxval = number("maxval");
  if (maxval > 65535) throw ParseError(source, line, "maxval above 65535");
  Image img{static_cast<int>(height), static_cast<int>(width),
            std::vector<double>(static_cast<std::size_t>(width * height))};
  if (magic == "P2") {
    for (double& p : img.pixels) {
      const long v = [&] {
        const std::string t = token();
        long x = -1;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (ec != std::errc{} || ptr != t.data() + t.size() || x < 0 || x > maxval) {
          throw ParseError(source, line, "invalid pixel '" + t + "'");
        }
        return x;
      }();
      p = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    const int bytes = maxval < 256 ? 1 : 2;
    for (double& p : img.pixels) {
      long v = 0;
      for (int b = 0; b < bytes; ++b) {
        const int c = in.get();
        if (c == EOF) throw ParseError(source, line, "truncated PGM raster");
        v = (v << 8) | c;
      }
      if (v > maxval) throw ParseError(source, line, "pixel above maxval");
      p = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

Image read_image(const std::filesystem::path& path) {
  {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() == 2 && magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) {
      in.seekg(0);
      return read_pgm(in, path.string());
    }
  }
  const Matrix m = read_csv_matrix(path);
  Image img{static_cast<int>(m.rows()), static_cast<int>(m.cols()),
            std::vector<double>(m.data().begin(), m.data().end())};
  for (double p : img.pixels) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument(path.string() + ": pixel values must lie in [0, 1]");
  }
  return img;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  if (!header.empty()) out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& points) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < points.dim(); ++k) out << (k ? "," : "") << points(i, k);
    out << '\n';
  }
}

void write_image_csv(const std::filesystem::path& path, const Image& image) {
  auto out = open_out(path);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) out << (c ? "," : "") << image.at(r, c);
    out << '\n';
  }
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  auto out = open_out(path);
  out << "P2\n" << image.width << ' ' << image.height << "\n255\n";
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const double v = std::clamp(image.at(r, c), 0.0, 1.0);
      out << (c ? " " : "") << static_cast<int>(std::lround(v * 255.0));
    }
    out << '\n';
  }
}

void write_trace(const std::filesystem::path& path, std::span<const TraceEntry> trace) {
  auto out = open_out(path);
  out << "step,loss,grad_norm,alpha\n";
  for (const TraceEntry& e : trace) out << e.step << ',' << e.loss << ',' << e.grad_norm << ',' << e.alpha << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Frame frame_for(const std::vector<Series>& series, bool equal_aspect) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Series& s : series) {
    for (double x : s.x) {
      if (std::isfinite(x)) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
    }
    for (double y : s.y) {
      if (std::isfinite(y)) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
    }
  }
  if (!(f.x0 <= f.x1)) f.x0 = 0, f.x1 = 1;
  if (!(f.y0 <= f.y1)) f.y0 = 0, f.y1 = 1;
  if (f.x1 - f.x0 < 1e-12) f.x0 -= 0.5, f.x1 += 0.5;
  if (f.y1 - f.y0 < 1e-12) f.y0 -= 0.5, f.y1 += 0.5;
  if (equal_aspect) {
    const double span = std::max(f.x1 - f.x0, f.y1 - f.y0);
    const double cx = 0.5 * (f.x0 + f.x1), cy = 0.5 * (f.y0 + f.y1);
    f.x0 = cx - span / 2, f.x1 = cx + span / 2, f.y0 = cy - span / 2, f.y1 = cy + span / 2;
  }
  const double padx = 0.04 * (f.x1 - f.x0), pady = 0.04 * (f.y1 - f.y0);
  f.x0 -= padx, f.x1 += padx, f.y0 -= pady, f.y1 += pady;
  return f;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void svg_frame(std::ostream& out, const Frame& f, const std::string& title, const std::vector<Series>& series) {
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
      << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\">" << f.x0 << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\" text-anchor=\"end\">"
      << f.x1 << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << f.y0
      << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">" << f.y1
      << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14 + 14 * static_cast<double>(i)
        << "\" text-anchor=\"end\" fill=\"" << kColors[i % 6] << "\">" << escape(series[i].label) << "</text>\n";
  }
}

}  // namespace

void write_svg_lines(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series) {
  const Frame f = frame_for(series, false);
  auto out = open_out(path);
  svg_frame(out, f, title, series);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[i % 6] << "\" stroke-width=\"1.5\" points=\"";
    const Series& s = series[i];
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) out << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

void write_svg_points(const std::filesystem::path& path, const std::string& title,
                      const std::vector<Series>& sets) {
  const Frame f = frame_for(sets, true);
  auto out = open_out(path);
  svg_frame(out, f, title, sets);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const Series& s = sets[i];
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      out << "<circle cx=\"" << f.px(s.x[k]) << "\" cy=\"" << f.py(s.y[k]) << "\" r=\"3\" fill=\""
          << kColors[i % 6] << "\" fill-opacity=\"0.8\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace persopt::io
