#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "persopt/experiments.hpp"
#include "persopt/filtrations.hpp"
#include "persopt/losses.hpp"

using namespace persopt;

namespace {

io::Config config(const std::string& text) {
  std::istringstream in(text);
  return io::parse_config(in, "cfg");
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "persopt_test_exp" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run settings from config") {
  auto c = exp::CircleConfig::from(config("lr = 0.2\ndecay = 0.5\nmax_steps = 7\nwindow = 3\nnoise_std = 0.1\nseed = 9\n"));
  CHECK(c.run.schedule.a == 0.2);
  CHECK(c.run.schedule.b == 0.5);
  CHECK(c.run.stop.max_steps == 7);
  CHECK(c.run.stop.loss_window == 3);
  CHECK(c.run.noise.kind == NoiseModel::Kind::gaussian);
  CHECK(c.run.seed == 9);

  const auto k = exp::CircleConfig::from(config("schedule = constant\nlr = 0.3\n"));
  CHECK(k.run.schedule.kind == Schedule::Kind::constant);
  CHECK(k.run.schedule.rate(100) == 0.3);

  CHECK_THROWS_AS(exp::CircleConfig::from(config("schedule = cosine\n")), std::invalid_argument);
  CHECK_THROWS_AS(exp::CircleConfig::from(config("lr = -1\n")), std::invalid_argument);
  CHECK_THROWS_AS(exp::CircleConfig::from(config("dim = 2\n")), std::invalid_argument);
  CHECK_THROWS_AS(exp::PointCloudConfig::from(config("n = 50\nlearning_rate = 1\n")), io::ParseError);
  CHECK_THROWS_AS(exp::FilterConfig::from(config("batch_size = 1\n")), std::invalid_argument);
}

TEST_CASE("synthetic digit topology is the sum of the salt intensities") {
  const Image clean = exp::synthetic_digit(20, 0, 1);
  CHECK(exp::image_topology(clean) == 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image noisy = exp::synthetic_digit(20, 10, seed);
    double salt = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < noisy.pixels.size(); ++i) {
      if (noisy.pixels[i] != clean.pixels[i]) {
        CHECK(noisy.pixels[i] >= 0.6);
        CHECK(noisy.pixels[i] <= 0.95);
        salt += noisy.pixels[i];
        ++count;
      }
    }
    CHECK(count == 10);
    CHECK(exp::image_topology(noisy) == doctest::Approx(salt).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exp::synthetic_digit(8, 200, 0), std::invalid_argument);
}

TEST_CASE("clean binary image leaves the optimizer idle") {
  const auto dir = scratch_dir("clean");
  const Image clean = exp::synthetic_digit(12, 0, 0);
  io::write_image_csv(dir / "clean.csv", clean);
  auto cfg = exp::ImageConfig::from(config("input = " + (dir / "clean.csv").string() + "\nmax_steps = 300\n"));
  const auto r = exp::run_image(cfg);
  // Zero loss everywhere: the relative window threshold is zero, so the run
  // idles until max_steps.
  CHECK(r.summary.result.steps == 300);
  CHECK(r.final.pixels == clean.pixels);
  for (const auto& e : r.trace) {
    CHECK(e.loss == 0.0);
    CHECK(e.grad_norm == 0.0);
  }
}

TEST_CASE("image denoising removes the salt components") {
  exp::ImageConfig cfg;
  cfg.size = 12;
  cfg.noise_pixels = 3;
  const auto r = exp::run_image(cfg);
  CHECK(r.initial_topology > 1.8);
  CHECK(r.final_topology <= 0.1 * r.initial_topology);
  CHECK(r.summary.final_loss < r.summary.initial_loss);
  CHECK(!r.snapshots.empty());
  CHECK(r.snapshots.front().first == 0);

  const auto dir = scratch_dir("image");
  exp::write_outputs(r, dir);
  for (const char* f : {"image_initial.pgm", "image_final.pgm", "trace.csv", "diagrams.json", "summary.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
}

TEST_CASE("circle match starting at the clean sample has zero loss") {
  exp::CircleConfig cfg;
  cfg.n = 12;
  cfg.run.stop = {5, 200, 0.0, 0.0};
  const auto r = exp::run_circle_match(cfg, exp::clean_circle(12, cfg.run.seed));
  CHECK(r.trace.front().loss == 0.0);
  CHECK(r.trace.front().grad_norm == 0.0);
  CHECK(r.summary.final_loss == 0.0);
}

TEST_CASE("circle match reduces the matching cost") {
  exp::CircleConfig cfg;
  cfg.n = 12;
  cfg.outliers = 2;
  const auto r = exp::run_circle_match(cfg);
  CHECK(r.initial.size() == 14);
  CHECK(r.summary.final_loss < 0.1 * r.summary.initial_loss);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(std::hypot(r.clean(i, 0), r.clean(i, 1)) == doctest::Approx(1.0));
  }
}

TEST_CASE("point cloud run keeps its shape") {
  exp::PointCloudConfig cfg;
  cfg.n = 10;
  cfg.run.stop = {40, 200, 0.0, 0.0};
  const auto r = exp::run_pointcloud(cfg);
  CHECK(r.trace.size() == 40);
  CHECK(r.final.size() == 10);
  CHECK(r.summary.final_loss <= r.summary.initial_loss);
  const auto dir = scratch_dir("pointcloud");
  exp::write_outputs(r, dir);
  CHECK(io::read_point_cloud(dir / "final.csv").size() == 10);
}

TEST_CASE("three peaks carry exactly three prominent minima gaps") {
  const auto beta = exp::three_peaks(60);
  const Complex path = build_path(60);
  const Diagram d = compute_diagram(path, lower_star_filtration(beta, path).filtration);
  CHECK(d[0].essential.size() == 1);
  int prominent = 0;
  for (const auto& p : d[0].regular) {
    if (p.persistence() > 1.0) ++prominent;
  }
  CHECK(prominent == 3);
  CHECK(total_persistence_excluding_top(d, 0, 3).value < 1e-9);
}

TEST_CASE("regression variants") {
  exp::RegressionConfig cfg;
  cfg.n = 40;
  cfg.p = 20;
  cfg.test_sets = 2;
  cfg.run.stop.max_steps = 300;
  const auto r = exp::run_regression(cfg);
  REQUIRE(r.variants.size() == 3);
  CHECK(r.variants[0].name == "mse");
  CHECK(r.variants[2].name == "mse_tv_topo");
  for (const auto& v : r.variants) {
    CHECK(v.summary.final_loss < v.summary.initial_loss);
    CHECK(std::isfinite(v.test_mse));
    CHECK(v.trace.front().loss == v.summary.initial_loss);
  }
  const auto dir = scratch_dir("regression");
  exp::write_outputs(r, dir);
  CHECK(io::read_csv_matrix(dir / "beta.csv").cols() == 6);
}

TEST_CASE("two blob images and their height diagrams") {
  const auto set = exp::two_blob_images(16, 4, 3);
  REQUIRE(set.images.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(set.labels[i] == static_cast<int>(i % 2));
    double mass = 0.0;
    for (double p : set.images[i].pixels) mass += p;
    CHECK(mass == 18.0);
    const auto hd = exp::height_diagram(set.images[i], 0.0);
    // Two blobs: one essential component and one that dies with the background.
    CHECK(hd.diagram[0].essential.size() == 1);
    int finite = 0;
    for (const auto& p : hd.diagram[0].regular) {
      if (p.persistence() > 0.0) {
        ++finite;
        CHECK(p.death == height_background(16, 16));
      }
    }
    CHECK(finite == 1);
  }
}

TEST_CASE("nearest centroid classifier") {
  const std::vector<std::vector<double>> train{{0, 0}, {0, 1}, {5, 5}, {6, 5}};
  const std::vector<int> labels{0, 0, 1, 1};
  const std::vector<std::vector<double>> test{{0.5, 0.2}, {5, 6}, {4, 4}};
  CHECK(exp::nearest_centroid_accuracy(train, labels, test, std::vector<int>{0, 1, 1}) == 1.0);
  CHECK(exp::nearest_centroid_accuracy(train, labels, test, std::vector<int>{1, 1, 1}) == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(exp::nearest_centroid_accuracy({}, {}, test, labels), std::invalid_argument);
}

TEST_CASE("filter selection moves theta toward the informative axis") {
  exp::FilterConfig cfg;
  cfg.train_per_class = 6;
  cfg.test_per_class = 6;
  cfg.n_dirs = 10;
  cfg.resolution = 30;
  cfg.run.schedule = Schedule::inverse_time(0.2, 0.02);
  cfg.run.stop = {150, 200, 0.0, 0.0};
  const auto r = exp::run_filter_select(cfg);
  CHECK(r.thetas.front() == cfg.theta0);
  const double t = r.thetas.back();
  CHECK(std::min(std::abs(t), std::abs(t - std::numbers::pi)) < 0.3);
  CHECK(r.accuracy_after >= r.accuracy_before);
  CHECK(r.summary.final_loss < r.summary.initial_loss);
}

TEST_CASE("mini-batches always hold two classes") {
  exp::FilterConfig cfg;
  cfg.train_per_class = 4;
  cfg.test_per_class = 2;
  cfg.n_dirs = 4;
  cfg.batch_size = 2;
  cfg.resolution = 10;
  cfg.run.stop = {30, 200, 0.0, 0.0};
  const auto r = exp::run_filter_select(cfg);
  CHECK(r.trace.size() == 30);
  for (const auto& w : r.warnings) CHECK(w.find("single class") != std::string::npos);
  CHECK(!r.warnings.empty());
}

TEST_CASE("diagram of a file") {
  const auto dir = scratch_dir("diagram");
  std::ofstream(dir / "pts.csv") << "x,y\n0,0\n1,0\n0,1\n1,1\n";
  exp::DiagramRequest req;
  req.input = (dir / "pts.csv").string();
  const auto j = exp::diagram_of_file(req);
  const auto& dims = j["diagram"];
  REQUIRE(dims.size() == 2);
  CHECK(dims[0]["essential"].size() == 1);
  // The square's cycle, plus zero-persistence points from the diagonals.
  const auto& holes = dims[1]["regular"];
  CHECK(holes[0][0].get<double>() == 1.0);
  CHECK(holes[0][1].get<double>() == doctest::Approx(std::sqrt(2.0)));
  for (std::size_t k = 1; k < holes.size(); ++k) CHECK(holes[k][0] == holes[k][1]);

  std::ofstream(dir / "signal.csv") << "0\n3\n1\n4\n0\n";
  req.input = (dir / "signal.csv").string();
  req.filtration = "lower-star";
  const auto s = exp::diagram_of_file(req);
  CHECK(s["diagram"][0]["regular"].size() == 4);

  std::ofstream(dir / "pixel.csv") << "0.5\n";
  req.input = (dir / "pixel.csv").string();
  req.filtration = "cubical";
  const auto px = exp::diagram_of_file(req)["diagram"];
  CHECK(px[0]["regular"].empty());
  REQUIRE(px[0]["essential"].size() == 1);
  CHECK(px[0]["essential"][0].get<double>() == 0.5);

  req.filtration = "spline";
  CHECK_THROWS_AS(exp::diagram_of_file(req), std::invalid_argument);
  req.filtration = "rips";
  req.input = (dir / "missing.csv").string();
  CHECK_THROWS_AS(exp::diagram_of_file(req), std::runtime_error);
}
