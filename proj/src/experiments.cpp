#include "persopt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

#include "persopt/filtrations.hpp"
#include "persopt/losses.hpp"
#include "persopt/vectorize.hpp"

namespace persopt::exp {

namespace {

std::vector<double> add_scaled(std::vector<double> a, double s, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
  return a;
}

RunSummary optimize(OptState& state, const Objective& objective, const RunSettings& rs) {
  RunSummary s;
  s.result = run(state, objective, rs.schedule, rs.noise, rs.stop);
  s.assumptions = check_assumptions(rs.schedule, rs.noise, state);
  s.initial_loss = state.trace.front().loss;
  s.final_loss = objective(state.x).loss;
  return s;
}

std::vector<double> steps_of(std::span<const TraceEntry> trace) {
  std::vector<double> v;
  for (const auto& e : trace) v.push_back(static_cast<double>(e.step));
  return v;
}

std::vector<double> losses_of(std::span<const TraceEntry> trace) {
  std::vector<double> v;
  for (const auto& e : trace) v.push_back(e.loss);
  return v;
}

io::Series cloud_series(const std::string& label, const PointCloud& pc) {
  io::Series s{label, {}, {}};
  for (std::size_t i = 0; i < pc.size(); ++i) {
    s.x.push_back(pc(i, 0));
    s.y.push_back(pc.dim() > 1 ? pc(i, 1) : 0.0);
  }
  return s;
}

PointCloud with_coords(const PointCloud& shape, std::span<const double> x) {
  return PointCloud(shape.size(), shape.dim(), std::vector<double>(x.begin(), x.end()));
}

}  // namespace

void RunSettings::read(io::ConfigReader& r) {
  seed = static_cast<std::uint64_t>(r.get("seed", static_cast<long>(seed)));
  const std::string kind = r.get("schedule", schedule.kind == Schedule::Kind::constant ? "constant" : "inverse_time");
  const double a = r.get("lr", schedule.a);
  const double b = r.get("decay", schedule.b);
  if (kind == "inverse_time") {
    schedule = Schedule::inverse_time(a, b);
  } else if (kind == "constant") {
    schedule = Schedule::constant(a);
  } else {
    throw std::invalid_argument("schedule must be inverse_time or constant, got '" + kind + "'");
  }
  if (a <= 0.0 || b < 0.0) throw std::invalid_argument("lr must be > 0 and decay >= 0");
  noise.stddev = r.get("noise_std", noise.stddev);
  if (noise.stddev < 0.0) throw std::invalid_argument("noise_std must be >= 0");
  noise.kind = noise.stddev > 0.0 ? NoiseModel::Kind::gaussian : NoiseModel::Kind::none;
  stop.max_steps = r.get("max_steps", stop.max_steps);
  stop.loss_window = r.get("window", stop.loss_window);
  stop.tol = r.get("tol", stop.tol);
  stop.rel_tol = r.get("rel_tol", stop.rel_tol);
  if (stop.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

nlohmann::json to_json(const RunSummary& s) {
  return {{"steps", s.result.steps},
          {"stop_reason", s.result.reason == StopReason::loss_window ? "loss_window" : "max_steps"},
          {"initial_loss", s.initial_loss},
          {"final_loss", s.final_loss},
          {"assumptions",
           {{"step_sizes", s.assumptions.step_sizes},
            {"bounded_iterates", s.assumptions.bounded_iterates},
            {"zero_mean_noise", s.assumptions.zero_mean_noise},
            {"detail", s.assumptions.detail}}}};
}

// ---------------------------------------------------------------------------

PointCloudConfig::PointCloudConfig() {
  run.schedule = Schedule::inverse_time(0.05, 0.01);
  run.stop = {2000, 200, 0.0, 1e-3};
}

PointCloudConfig PointCloudConfig::from(const io::Config& cfg) {
  PointCloudConfig c;
  io::ConfigReader r(cfg);
  c.n = r.get("n", c.n);
  c.weight_topo = r.get("weight_topo", c.weight_topo);
  c.weight_box = r.get("weight_box", c.weight_box);
  c.run.read(r);
  r.finish();
  if (c.n < 3) throw std::invalid_argument("n must be >= 3");
  return c;
}

Objective pointcloud_objective(const PointCloudConfig& cfg, int n) {
  auto complex = std::make_shared<const Complex>(build_full_simplex(n, 2));
  return [complex, n, wt = cfg.weight_topo, wb = cfg.weight_box](std::span<const double> x) {
    const PointCloud pc(static_cast<std::size_t>(n), 2, std::vector<double>(x.begin(), x.end()));
    const auto ft = rips_filtration(pc, *complex);
    const Diagram d = compute_diagram(*complex, ft.filtration);
    const LossValue topo = hole_penalty(d, 1);
    const LossValue box = penalty_square(pc, Box{{0.0, 0.0}, {1.0, 1.0}});
    Evaluation e;
    e.loss = wt * topo.value + wb * box.value;
    e.grad = pull_back_gradient(d, topo.grad, ft.tape);
    for (double& g : e.grad) g *= wt;
    e.grad = add_scaled(std::move(e.grad), wb, box.grad_aux);
    return e;
  };
}

PointCloudResult run_pointcloud(const PointCloudConfig& cfg) {
  std::mt19937_64 rng(cfg.run.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x0(static_cast<std::size_t>(2 * cfg.n));
  for (double& v : x0) v = u(rng);

  PointCloudResult r;
  r.initial = PointCloud(static_cast<std::size_t>(cfg.n), 2, x0);
  const Complex complex = build_full_simplex(cfg.n, 2);
  const Objective objective = pointcloud_objective(cfg, cfg.n);

  OptState state(x0, cfg.run.seed);
  r.summary = optimize(state, objective, cfg.run);
  r.final = with_coords(r.initial, state.x);
  r.initial_diagram = compute_diagram(complex, rips_filtration(r.initial, complex).filtration);
  r.final_diagram = compute_diagram(complex, rips_filtration(r.final, complex).filtration);
  r.trace = std::move(state.trace);
  return r;
}

void write_outputs(const PointCloudResult& r, const std::filesystem::path& out) {
  io::write_point_cloud(out / "initial.csv", r.initial);
  io::write_point_cloud(out / "final.csv", r.final);
  io::write_trace(out / "trace.csv", r.trace);
  io::write_json(out / "diagram_initial.json", diagram_to_json(r.initial_diagram));
  io::write_json(out / "diagram_final.json", diagram_to_json(r.final_diagram));
  io::write_svg_lines(out / "loss.svg", "loss", {{"loss", steps_of(r.trace), losses_of(r.trace)}});
  io::write_svg_points(out / "cloud.svg", "point cloud",
                       {cloud_series("initial", r.initial), cloud_series("final", r.final)});
  io::write_json(out / "summary.json", {{"experiment", "pointcloud"}, {"run", to_json(r.summary)}});
}

// ---------------------------------------------------------------------------

ImageConfig::ImageConfig() {
  run.schedule = Schedule::inverse_time(0.05, 0.05);
  run.stop = {20000, 200, 0.0, 1e-3};
}

ImageConfig ImageConfig::from(const io::Config& cfg) {
  ImageConfig c;
  io::ConfigReader r(cfg);
  c.input = r.get("input", c.input);
  c.size = r.get("size", c.size);
  c.noise_pixels = r.get("noise_pixels", c.noise_pixels);
  c.weight_topo = r.get("weight_topo", c.weight_topo);
  c.weight_binary = r.get("weight_binary", c.weight_binary);
  c.snapshot_every = r.get("snapshot_every", c.snapshot_every);
  c.run.read(r);
  r.finish();
  if (c.size < 8) throw std::invalid_argument("size must be >= 8");
  if (c.noise_pixels < 0) throw std::invalid_argument("noise_pixels must be >= 0");
  if (c.snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");
  return c;
}

Image synthetic_digit(int size, int noise_pixels, std::uint64_t seed) {
  Image img{size, size, std::vector<double>(static_cast<std::size_t>(size * size), 0.0)};
  const double mid = 0.5 * (size - 1);
  const double outer = 0.3 * size;
  const double inner = 0.18 * size;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double rad = std::hypot(r - mid, c - mid);
      if (rad <= outer && rad >= inner) img.at(r, c) = 1.0;
    }
  }
  // Salt pixels at Chebyshev distance >= 2 from the digit and each other,
  // so each one is its own component.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(0, size - 1);
  std::uniform_real_distribution<double> level(0.6, 0.95);
  auto clear = [&](int r, int c) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        if (rr >= 0 && rr < size && cc >= 0 && cc < size && img.at(rr, cc) > 0.0) return false;
      }
    }
    return true;
  };
  int placed = 0;
  for (int tries = 0; placed < noise_pixels; ++tries) {
    if (tries > 100000) throw std::invalid_argument("synthetic_digit: no room for the noise pixels");
    const int r = pos(rng);
    const int c = pos(rng);
    if (!clear(r, c)) continue;
    img.at(r, c) = level(rng);
    ++placed;
  }
  return img;
}

namespace {

struct ImageTopology {
  Diagram diagram;
  LossValue loss;
  std::vector<double> grad_pixels;  // d loss / d pixel
};

ImageTopology image_topology(const Complex& grid, std::span<const double> pixels) {
  VertexFunction f(pixels.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 - pixels[i];
  const auto ft = lower_star_filtration(f, grid);
  ImageTopology t;
  t.diagram = compute_diagram(grid, ft.filtration);
  const int dims[] = {0};
  t.loss = total_persistence(t.diagram, dims);
  t.grad_pixels = pull_back_gradient(t.diagram, t.loss.grad, ft.tape);
  for (double& g : t.grad_pixels) g = -g;
  return t;
}

}  // namespace

double image_topology(const Image& img) {
  return image_topology(build_cubical_grid(img.height, img.width), img.pixels).loss.value;
}

Objective image_objective(const ImageConfig& cfg, int height, int width) {
  auto grid = std::make_shared<const Complex>(build_cubical_grid(height, width));
  return [grid, wt = cfg.weight_topo, wb = cfg.weight_binary](std::span<const double> x) {
    const ImageTopology topo = image_topology(*grid, x);
    const LossValue bin = penalty_binary_image(x);
    Evaluation e;
    e.loss = wt * topo.loss.value + wb * bin.value;
    e.grad.assign(x.size(), 0.0);
    e.grad = add_scaled(std::move(e.grad), wt, topo.grad_pixels);
    e.grad = add_scaled(std::move(e.grad), wb, bin.grad_aux);
    return e;
  };
}

ImageResult run_image(const ImageConfig& cfg) {
  ImageResult r;
  r.initial = cfg.input.empty() ? synthetic_digit(cfg.size, cfg.noise_pixels, cfg.run.seed) : io::read_image(cfg.input);
  const Complex grid = build_cubical_grid(r.initial.height, r.initial.width);

  OptState state(r.initial.pixels, cfg.run.seed);
  const Objective loss = image_objective(cfg, r.initial.height, r.initial.width);
  const Objective objective = [&](std::span<const double> x) {
    if (state.k % cfg.snapshot_every == 0) r.snapshots.emplace_back(state.k, image_topology(grid, x).diagram);
    return loss(x);
  };
  r.summary = optimize(state, objective, cfg.run);
  r.final = r.initial;
  r.final.pixels = state.x;
  r.initial_topology = image_topology(grid, r.initial.pixels).loss.value;
  r.final_topology = image_topology(grid, r.final.pixels).loss.value;
  r.final_binary_penalty = penalty_binary_image(r.final.pixels).value;
  r.trace = std::move(state.trace);
  return r;
}

void write_outputs(const ImageResult& r, const std::filesystem::path& out) {
  io::write_pgm(out / "image_initial.pgm", r.initial);
  io::write_pgm(out / "image_final.pgm", r.final);
  io::write_image_csv(out / "image_initial.csv", r.initial);
  io::write_image_csv(out / "image_final.csv", r.final);
  io::write_trace(out / "trace.csv", r.trace);
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& [k, d] : r.snapshots) snaps.push_back({{"step", k}, {"diagram", diagram_to_json(d)}});
  io::write_json(out / "diagrams.json", snaps);
  io::write_svg_lines(out / "loss.svg", "loss", {{"loss", steps_of(r.trace), losses_of(r.trace)}});
  io::write_json(out / "summary.json", {{"experiment", "image"},
                                        {"initial_topology", r.initial_topology},
                                        {"final_topology", r.final_topology},
                                        {"final_binary_penalty", r.final_binary_penalty},
                                        {"run", to_json(r.summary)}});
}

// ---------------------------------------------------------------------------

RegressionConfig::RegressionConfig() {
  run.schedule = Schedule::inverse_time(0.001, 0.001);
  run.stop = {3000, 200, 0.0, 1e-3};
}

RegressionConfig RegressionConfig::from(const io::Config& cfg) {
  RegressionConfig c;
  io::ConfigReader r(cfg);
  c.n = r.get("n", c.n);
  c.p = r.get("p", c.p);
  c.noise = r.get("noise", c.noise);
  c.weight_tv = r.get("weight_tv", c.weight_tv);
  c.weight_topo = r.get("weight_topo", c.weight_topo);
  c.keep_points = r.get("keep_points", c.keep_points);
  c.test_sets = r.get("test_sets", c.test_sets);
  c.run.read(r);
  r.finish();
  if (c.n < 1 || c.p < 2) throw std::invalid_argument("need n >= 1 and p >= 2");
  if (c.keep_points < 0 || c.test_sets < 1) throw std::invalid_argument("need keep_points >= 0 and test_sets >= 1");
  return c;
}

std::vector<double> three_peaks(int p) {
  std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
  const double width = std::max(1.0, p / 30.0);
  const double centers[] = {p / 6.0, p / 2.0, 5.0 * p / 6.0};
  const double heights[] = {3.0, 2.0, 4.0};
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < 3; ++k) {
      const double z = (j - centers[k]) / width;
      beta[static_cast<std::size_t>(j)] += heights[k] * std::exp(-0.5 * z * z);
    }
  }
  return beta;
}

Objective regression_objective(const RegressionConfig& cfg, Matrix x, std::vector<double> y, bool tv, bool topo) {
  auto path = std::make_shared<const Complex>(build_path(static_cast<int>(x.cols())));
  auto data = std::make_shared<const std::pair<Matrix, std::vector<double>>>(std::move(x), std::move(y));
  return [path, data, cfg, tv, topo](std::span<const double> beta) {
    const LossValue mse = penalty_mse(data->first, data->second, beta);
    Evaluation e{mse.value, mse.grad_aux};
    if (tv) {
      const LossValue t = penalty_tv(beta);
      e.loss += cfg.weight_tv * t.value;
      e.grad = add_scaled(std::move(e.grad), cfg.weight_tv, t.grad_aux);
    }
    if (topo) {
      const auto ft = lower_star_filtration(VertexFunction(beta.begin(), beta.end()), *path);
      const Diagram d = compute_diagram(*path, ft.filtration);
      const LossValue t = total_persistence_excluding_top(d, 0, cfg.keep_points);
      e.loss += cfg.weight_topo * t.value;
      e.grad = add_scaled(std::move(e.grad), cfg.weight_topo, pull_back_gradient(d, t.grad, ft.tape));
    }
    return e;
  };
}

RegressionResult run_regression(const RegressionConfig& cfg) {
  std::mt19937_64 rng(cfg.run.seed);
  std::normal_distribution<double> g;
  RegressionResult res;
  res.truth = three_peaks(cfg.p);
  const auto n = static_cast<std::size_t>(cfg.n);
  const auto p = static_cast<std::size_t>(cfg.p);

  auto sample = [&](Matrix& x, std::vector<double>& y) {
    x = Matrix(n, p);
    for (double& v : x.data()) v = g(rng);
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) y[i] += x(i, j) * res.truth[j];
      y[i] += cfg.noise * g(rng);
    }
  };
  Matrix x;
  std::vector<double> y;
  sample(x, y);
  std::vector<Matrix> test_x(static_cast<std::size_t>(cfg.test_sets));
  std::vector<std::vector<double>> test_y(test_x.size());
  for (std::size_t t = 0; t < test_x.size(); ++t) sample(test_x[t], test_y[t]);
  res.beta0.resize(p);
  for (double& b : res.beta0) b = g(rng);

  struct Spec {
    const char* name;
    bool tv;
    bool topo;
  };
  for (const Spec spec : {Spec{"mse", false, false}, Spec{"mse_tv", true, false}, Spec{"mse_tv_topo", true, true}}) {
    const Objective objective = regression_objective(cfg, x, y, spec.tv, spec.topo);
    OptState state(res.beta0, cfg.run.seed);
    RegressionVariant v;
    v.name = spec.name;
    v.summary = optimize(state, objective, cfg.run);
    v.beta = state.x;
    v.trace = std::move(state.trace);
    for (std::size_t t = 0; t < test_x.size(); ++t) {
      v.test_mse += penalty_mse(test_x[t], test_y[t], v.beta).value / static_cast<double>(n);
    }
    v.test_mse /= static_cast<double>(test_x.size());
    res.variants.push_back(std::move(v));
  }
  return res;
}

void write_outputs(const RegressionResult& r, const std::filesystem::path& out) {
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < r.truth.size(); ++j) {
    std::vector<double> row{static_cast<double>(j), r.truth[j], r.beta0[j]};
    for (const auto& v : r.variants) row.push_back(v.beta[j]);
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"index", "truth", "initial"};
  std::vector<io::Series> betas{{"truth", {}, r.truth}};
  std::vector<io::Series> losses;
  nlohmann::json variants = nlohmann::json::array();
  std::vector<std::vector<double>> table;
  for (std::size_t k = 0; k < r.variants.size(); ++k) {
    const auto& v = r.variants[k];
    header.push_back(v.name);
    betas.push_back({v.name, {}, v.beta});
    losses.push_back({v.name, steps_of(v.trace), losses_of(v.trace)});
    io::write_trace(out / ("trace_" + v.name + ".csv"), v.trace);
    variants.push_back({{"name", v.name}, {"test_mse", v.test_mse}, {"run", to_json(v.summary)}});
    table.push_back({static_cast<double>(k), v.test_mse, v.summary.final_loss, static_cast<double>(v.summary.result.steps)});
  }
  for (auto& s : betas) {
    for (std::size_t j = 0; j < s.y.size(); ++j) s.x.push_back(static_cast<double>(j));
  }
  io::write_csv(out / "beta.csv", header, rows);
  io::write_csv(out / "results.csv", {"variant", "test_mse", "final_loss", "steps"}, table);
  io::write_trace(out / "trace.csv", r.variants.back().trace);
  io::write_svg_lines(out / "beta.svg", "coefficients", betas);
  io::write_svg_lines(out / "loss.svg", "loss", losses);
  io::write_json(out / "summary.json", {{"experiment", "regression"}, {"variants", variants}});
}

// ---------------------------------------------------------------------------

CircleConfig::CircleConfig() {
  run.schedule = Schedule::inverse_time(0.05, 0.005);
  run.stop = {2000, 200, 0.0, 1e-3};
}

CircleConfig CircleConfig::from(const io::Config& cfg) {
  CircleConfig c;
  io::ConfigReader r(cfg);
  c.n = r.get("n", c.n);
  c.outliers = r.get("outliers", c.outliers);
  c.noise = r.get("noise", c.noise);
  c.dim = r.get("dim", c.dim);
  c.run.read(r);
  r.finish();
  if (c.n < 3 || c.outliers < 0) throw std::invalid_argument("need n >= 3 and outliers >= 0");
  if (c.dim != 0 && c.dim != 1) throw std::invalid_argument("dim must be 0 or 1");
  return c;
}

PointCloud clean_circle(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<double> xy;
  for (int i = 0; i < n; ++i) {
    const double a = angle(rng);
    xy.push_back(std::cos(a));
    xy.push_back(std::sin(a));
  }
  return PointCloud(static_cast<std::size_t>(n), 2, std::move(xy));
}

CircleResult run_circle_match(const CircleConfig& cfg) {
  const PointCloud clean = clean_circle(cfg.n, cfg.run.seed);
  std::mt19937_64 rng(cfg.run.seed + 1);
  std::normal_distribution<double> g(0.0, cfg.noise);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> xy(clean.flat().begin(), clean.flat().end());
  for (double& v : xy) v += g(rng);
  // Outliers inside the circle.
  for (int i = 0; i < cfg.outliers; ++i) {
    xy.push_back(u(rng));
    xy.push_back(u(rng));
  }
  return run_circle_match(cfg, PointCloud(static_cast<std::size_t>(cfg.n + cfg.outliers), 2, std::move(xy)));
}

Objective circle_objective(Diagram target, int n, int dim) {
  auto complex = std::make_shared<const Complex>(build_full_simplex(n, dim + 1));
  auto tgt = std::make_shared<const Diagram>(std::move(target));
  return [complex, tgt, n, dim](std::span<const double> x) {
    const PointCloud pc(static_cast<std::size_t>(n), 2, std::vector<double>(x.begin(), x.end()));
    const auto ft = rips_filtration(pc, *complex);
    const Diagram d = compute_diagram(*complex, ft.filtration);
    const DistanceResult w = wasserstein_cost(d, *tgt, dim, 2);
    return Evaluation{w.loss.value, pull_back_gradient(d, w.loss.grad, ft.tape)};
  };
}

CircleResult run_circle_match(const CircleConfig& cfg, const PointCloud& start) {
  CircleResult r;
  r.clean = clean_circle(cfg.n, cfg.run.seed);
  r.initial = start;
  const Complex clean_complex = build_full_simplex(cfg.n, cfg.dim + 1);
  r.target = compute_diagram(clean_complex, rips_filtration(r.clean, clean_complex).filtration);
  const Complex complex = build_full_simplex(static_cast<int>(start.size()), cfg.dim + 1);
  const Objective objective = circle_objective(r.target, static_cast<int>(start.size()), cfg.dim);
  OptState state(std::vector<double>(start.flat().begin(), start.flat().end()), cfg.run.seed);
  r.summary = optimize(state, objective, cfg.run);
  r.final = with_coords(start, state.x);
  r.final_diagram = compute_diagram(complex, rips_filtration(r.final, complex).filtration);
  r.trace = std::move(state.trace);
  return r;
}

void write_outputs(const CircleResult& r, const std::filesystem::path& out) {
  io::write_point_cloud(out / "clean.csv", r.clean);
  io::write_point_cloud(out / "initial.csv", r.initial);
  io::write_point_cloud(out / "final.csv", r.final);
  io::write_json(out / "diagram_target.json", diagram_to_json(r.target));
  io::write_json(out / "diagram_final.json", diagram_to_json(r.final_diagram));
  io::write_trace(out / "trace.csv", r.trace);
  io::write_svg_lines(out / "loss.svg", "loss", {{"loss", steps_of(r.trace), losses_of(r.trace)}});
  io::write_svg_points(out / "cloud.svg", "point cloud",
                       {cloud_series("clean", r.clean), cloud_series("initial", r.initial),
                        cloud_series("final", r.final)});
  io::write_json(out / "summary.json", {{"experiment", "circle-match"}, {"run", to_json(r.summary)}});
}

// ---------------------------------------------------------------------------

FilterConfig::FilterConfig() {
  run.schedule = Schedule::inverse_time(0.05, 0.02);
  run.stop = {2000, 200, 0.0, 1e-3};
}

FilterConfig FilterConfig::from(const io::Config& cfg) {
  FilterConfig c;
  io::ConfigReader r(cfg);
  c.size = r.get("size", c.size);
  c.train_per_class = r.get("train_per_class", c.train_per_class);
  c.test_per_class = r.get("test_per_class", c.test_per_class);
  c.theta0 = r.get("theta0", c.theta0);
  c.n_dirs = r.get("n_dirs", c.n_dirs);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.landscapes = r.get("landscapes", c.landscapes);
  c.resolution = r.get("resolution", c.resolution);
  c.run.read(r);
  r.finish();
  if (c.size < 14) throw std::invalid_argument("size must be >= 14");
  if (c.train_per_class < 1 || c.test_per_class < 1) throw std::invalid_argument("need at least one image per class");
  if (c.n_dirs < 1 || c.landscapes < 1 || c.resolution < 2) {
    throw std::invalid_argument("need n_dirs >= 1, landscapes >= 1, resolution >= 2");
  }
  if (c.batch_size < 0 || c.batch_size == 1) throw std::invalid_argument("batch_size must be 0 or >= 2");
  return c;
}

LabeledImages two_blob_images(int size, int per_class, std::uint64_t seed) {
  if (size < 14) throw std::invalid_argument("two_blob_images: size must be >= 14");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> shift(0, 2);
  std::uniform_int_distribution<int> row(1, size - 4);
  LabeledImages set;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    const int gap = label == 0 ? 1 : 6;
    Image img{size, size, std::vector<double>(static_cast<std::size_t>(size * size), 0.0)};
    const int left = 1 + shift(rng);
    const int cols[] = {left, left + 3 + gap};
    for (int c0 : cols) {
      const int r0 = row(rng);
      for (int r = r0; r < r0 + 3; ++r) {
        for (int c = c0; c < c0 + 3; ++c) img.at(r, c) = 1.0;
      }
    }
    set.images.push_back(std::move(img));
    set.labels.push_back(label);
  }
  return set;
}

namespace {

HeightDiagram height_diagram(const Complex& grid, const Image& img, double theta) {
  const auto hf = height_filtration(img, theta);
  const auto ft = lower_star_filtration(hf.values, grid);
  return {compute_diagram(grid, ft.filtration), ft.tape.compose(hf.tape)};
}

std::vector<double> features(const Complex& grid, const Image& img, double theta, int k, std::span<const double> t) {
  const Diagram d = cap_essential(height_diagram(grid, img, theta).diagram, 0, height_background(img.height, img.width));
  return landscape(d, 0, k, t).values;
}

Evaluation contrast(const Complex& grid, const std::vector<const Image*>& images, const std::vector<int>& labels,
                    int n_dirs, double theta, std::vector<std::string>& warnings) {
  std::vector<Diagram> diagrams;
  std::vector<GradTape> tapes;
  for (const Image* img : images) {
    auto hd = height_diagram(grid, *img, theta);
    diagrams.push_back(std::move(hd.diagram));
    tapes.push_back(std::move(hd.tape));
  }
  const BatchLoss loss = label_contrast_loss(diagrams, labels, 0, n_dirs, height_background(grid.grid_height(), grid.grid_width()));
  for (const auto& w : loss.warnings) warnings.push_back(w);
  double g = 0.0;
  for (std::size_t i = 0; i < diagrams.size(); ++i) g += pull_back_gradient(diagrams[i], loss.grads[i], tapes[i])[0];
  return Evaluation{loss.value, {g}};
}

}  // namespace

HeightDiagram height_diagram(const Image& img, double theta) {
  return height_diagram(build_cubical_grid(img.height, img.width), img, theta);
}

std::vector<double> landscape_features(const Image& img, double theta, int k, std::span<const double> grid) {
  return features(build_cubical_grid(img.height, img.width), img, theta, k, grid);
}

double nearest_centroid_accuracy(const std::vector<std::vector<double>>& train, std::span<const int> train_labels,
                                 const std::vector<std::vector<double>>& test, std::span<const int> test_labels) {
  if (train.empty() || test.empty() || train.size() != train_labels.size() || test.size() != test_labels.size()) {
    throw std::invalid_argument("nearest_centroid_accuracy: empty or mismatched inputs");
  }
  const std::size_t dim = train.front().size();
  std::map<int, std::pair<std::vector<double>, double>> centroids;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& [sum, count] = centroids[train_labels[i]];
    sum.resize(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += train[i][j];
    count += 1.0;
  }
  for (auto& [label, c] : centroids) {
    for (double& v : c.first) v /= c.second;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [label, c] : centroids) {
      double dist = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dist += (test[i][j] - c.first[j]) * (test[i][j] - c.first[j]);
      if (dist < best_dist) {
        best_dist = dist;
        best = label;
      }
    }
    if (best == test_labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

Objective filter_objective(std::vector<Image> images, std::vector<int> labels, int n_dirs) {
  if (images.empty()) throw std::invalid_argument("filter_objective: no images");
  auto grid = std::make_shared<const Complex>(build_cubical_grid(images.front().height, images.front().width));
  auto data = std::make_shared<const std::pair<std::vector<Image>, std::vector<int>>>(std::move(images), std::move(labels));
  return [grid, data, n_dirs](std::span<const double> x) {
    std::vector<const Image*> ptrs;
    for (const Image& img : data->first) ptrs.push_back(&img);
    std::vector<std::string> warnings;
    return contrast(*grid, ptrs, data->second, n_dirs, x[0], warnings);
  };
}

FilterResult run_filter_select(const FilterConfig& cfg) {
  const LabeledImages train = two_blob_images(cfg.size, cfg.train_per_class, cfg.run.seed);
  const LabeledImages test = two_blob_images(cfg.size, cfg.test_per_class, cfg.run.seed + 1);
  const Complex grid = build_cubical_grid(cfg.size, cfg.size);
  const double cap = height_background(cfg.size, cfg.size);
  const std::size_t n_train = train.images.size();

  FilterResult r;
  std::mt19937_64 batch_rng(cfg.run.seed + 2);
  auto pick_batch = [&]() {
    std::vector<std::size_t> idx(n_train);
    for (std::size_t i = 0; i < n_train; ++i) idx[i] = i;
    if (cfg.batch_size == 0 || static_cast<std::size_t>(cfg.batch_size) >= n_train) return idx;
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::shuffle(idx.begin(), idx.end(), batch_rng);
      std::vector<std::size_t> batch(idx.begin(), idx.begin() + cfg.batch_size);
      const int first = train.labels[batch.front()];
      if (std::any_of(batch.begin(), batch.end(), [&](std::size_t i) { return train.labels[i] != first; })) {
        return batch;
      }
      r.warnings.push_back("mini-batch with a single class resampled");
    }
    throw std::runtime_error("filter selection: could not draw a mini-batch with two classes");
  };

  const Objective objective = [&](std::span<const double> x) {
    r.thetas.push_back(x[0]);
    std::vector<const Image*> images;
    std::vector<int> labels;
    for (std::size_t i : pick_batch()) {
      images.push_back(&train.images[i]);
      labels.push_back(train.labels[i]);
    }
    return contrast(grid, images, labels, cfg.n_dirs, x[0], r.warnings);
  };
  OptState state({cfg.theta0}, cfg.run.seed);
  r.summary = optimize(state, objective, cfg.run);
  r.trace = std::move(state.trace);

  auto evaluate = [&](double theta, std::vector<std::vector<double>>& test_features) {
    double lo = std::numeric_limits<double>::infinity();
    for (const Image& img : train.images) {
      const Diagram d = cap_essential(height_diagram(grid, img, theta).diagram, 0, cap);
      for (const auto& p : d[0].regular) lo = std::min(lo, p.birth);
    }
    std::vector<double> t(static_cast<std::size_t>(cfg.resolution));
    for (std::size_t s = 0; s < t.size(); ++s) t[s] = lo + (cap - lo) * static_cast<double>(s) / static_cast<double>(t.size() - 1);
    std::vector<std::vector<double>> train_features;
    for (const Image& img : train.images) train_features.push_back(features(grid, img, theta, cfg.landscapes, t));
    test_features.clear();
    for (const Image& img : test.images) test_features.push_back(features(grid, img, theta, cfg.landscapes, t));
    return nearest_centroid_accuracy(train_features, train.labels, test_features, test.labels);
  };
  r.accuracy_before = evaluate(cfg.theta0, r.features_before);
  r.accuracy_after = evaluate(state.x[0], r.features_after);
  r.test_labels = test.labels;
  return r;
}

void write_outputs(const FilterResult& r, const std::filesystem::path& out) {
  io::write_trace(out / "trace.csv", r.trace);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < r.thetas.size(); ++k) rows.push_back({static_cast<double>(k), r.thetas[k]});
  io::write_csv(out / "theta.csv", {"step", "theta"}, rows);
  auto feature_rows = [&](const std::vector<std::vector<double>>& f) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < f.size(); ++i) {
      std::vector<double> row{static_cast<double>(r.test_labels[i])};
      row.insert(row.end(), f[i].begin(), f[i].end());
      rows.push_back(std::move(row));
    }
    return rows;
  };
  io::write_csv(out / "features_before.csv", {}, feature_rows(r.features_before));
  io::write_csv(out / "features_after.csv", {}, feature_rows(r.features_after));
  io::write_svg_lines(out / "loss.svg", "loss", {{"loss", steps_of(r.trace), losses_of(r.trace)}});
  std::vector<double> ks;
  for (std::size_t k = 0; k < r.thetas.size(); ++k) ks.push_back(static_cast<double>(k));
  io::write_svg_lines(out / "theta.svg", "theta", {{"theta", ks, r.thetas}});
  io::write_json(out / "summary.json", {{"experiment", "filter-select"},
                                        {"theta_initial", r.thetas.empty() ? 0.0 : r.thetas.front()},
                                        {"theta_final", r.thetas.empty() ? 0.0 : r.thetas.back()},
                                        {"accuracy_before", r.accuracy_before},
                                        {"accuracy_after", r.accuracy_after},
                                        {"warnings", r.warnings},
                                        {"run", to_json(r.summary)}});
}

// ---------------------------------------------------------------------------

nlohmann::json diagram_of_file(const DiagramRequest& req) {
  if (req.max_dim < 0) throw std::invalid_argument("max_dim must be >= 0");
  Diagram d;
  if (req.filtration == "rips" || req.filtration == "weighted-rips") {
    const PointCloud pc = io::read_point_cloud(req.input);
    const Complex c = build_full_simplex(static_cast<int>(pc.size()), req.max_dim + 1);
    if (req.filtration == "rips") {
      d = compute_diagram(c, rips_filtration(pc, c).filtration);
    } else {
      const auto w = dtm_weights(pc, req.k_nn);
      d = compute_diagram(c, weighted_rips_filtration(pc, w.values, c).filtration);
    }
  } else if (req.filtration == "matrix") {
    const Matrix m = io::read_csv_matrix(req.input);
    const Complex c = build_full_simplex(static_cast<int>(m.rows()), req.max_dim + 1);
    d = compute_diagram(c, rips_from_matrix(m, c).filtration);
  } else if (req.filtration == "lower-star") {
    const Matrix m = io::read_csv_matrix(req.input);
    const VertexFunction f(m.data().begin(), m.data().end());
    const Complex c = build_path(static_cast<int>(f.size()));
    d = compute_diagram(c, lower_star_filtration(f, c).filtration);
  } else if (req.filtration == "cubical") {
    const Image img = io::read_image(req.input);
    const Complex c = build_cubical_grid(img.height, img.width);
    d = compute_diagram(c, lower_star_filtration(img.pixels, c).filtration);
  } else {
    throw std::invalid_argument("unknown filtration '" + req.filtration +
                                "' (rips, matrix, weighted-rips, lower-star, cubical)");
  }
  nlohmann::json dims = diagram_to_json(d, req.cells);
  if (req.filtration != "lower-star" && req.filtration != "cubical") {
    // The complex has one dimension more than the homology asked for.
    dims.erase(std::remove_if(dims.begin(), dims.end(),
                              [&](const nlohmann::json& e) { return e["dim"].get<int>() > req.max_dim; }),
               dims.end());
  }
  return {{"input", req.input}, {"filtration", req.filtration}, {"diagram", dims}};
}

}  // namespace persopt::exp
