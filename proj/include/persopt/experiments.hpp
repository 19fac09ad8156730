#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "persopt/data.hpp"
#include "persopt/io.hpp"
#include "persopt/optimizer.hpp"
#include "persopt/persistence.hpp"

namespace persopt::exp {

/// Optimizer settings shared by all experiments.
///
/// Keys: seed, schedule (inverse_time | constant), lr, decay, max_steps,
/// window, tol, rel_tol, noise_std.
struct RunSettings {
  std::uint64_t seed = 0;
  Schedule schedule;
  NoiseModel noise;
  StopRule stop;

  void read(io::ConfigReader& r);
};

struct RunSummary {
  RunResult result;
  AssumptionReport assumptions;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // last recorded loss
};

nlohmann::json to_json(const RunSummary& s);

// ---------------------------------------------------------------------------
// Point cloud: holes in a cloud kept inside the unit square.

struct PointCloudConfig {
  int n = 50;
  double weight_topo = 1.0;
  double weight_box = 1.0;
  RunSettings run;

  PointCloudConfig();
  static PointCloudConfig from(const io::Config& cfg);
};

struct PointCloudResult {
  PointCloud initial;
  PointCloud final;
  Diagram initial_diagram;
  Diagram final_diagram;
  std::vector<TraceEntry> trace;
  RunSummary summary;
};

PointCloudResult run_pointcloud(const PointCloudConfig& cfg);
/// Loss and gradient of the run, over the flat coordinates of n planar points.
Objective pointcloud_objective(const PointCloudConfig& cfg, int n);
void write_outputs(const PointCloudResult& r, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Image denoising with a cubical complex.

struct ImageConfig {
  std::string input;  // empty: synthetic digit with salt noise
  int size = 20;
  int noise_pixels = 10;
  double weight_topo = 1.0;
  double weight_binary = 0.5;
  int snapshot_every = 25;
  RunSettings run;

  ImageConfig();
  static ImageConfig from(const io::Config& cfg);
};

/// Synthetic `size` x `size` digit (a ring) plus `noise_pixels` isolated
/// bright pixels of intensity in [0.6, 0.95].
Image synthetic_digit(int size, int noise_pixels, std::uint64_t seed);

/// Total persistence of the finite dim-0 part of the cubical filtration
/// 1 - I (bright pixels enter first).
double image_topology(const Image& img);

struct ImageResult {
  Image initial;
  Image final;
  std::vector<TraceEntry> trace;
  std::vector<std::pair<long, Diagram>> snapshots;
  double initial_topology = 0.0;
  double final_topology = 0.0;
  double final_binary_penalty = 0.0;
  RunSummary summary;
};

ImageResult run_image(const ImageConfig& cfg);
/// Weighted topology plus binary penalty over the pixels of a height x width image.
Objective image_objective(const ImageConfig& cfg, int height, int width);
void write_outputs(const ImageResult& r, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Linear regression with total variation and topological penalties.

struct RegressionConfig {
  int n = 100;
  int p = 60;
  double noise = 1.0;
  double weight_tv = 1.0;
  double weight_topo = 1.0;
  int keep_points = 3;
  int test_sets = 5;
  RunSettings run;

  RegressionConfig();
  static RegressionConfig from(const io::Config& cfg);
};

/// Three bumps on a zero baseline.
std::vector<double> three_peaks(int p);

struct RegressionVariant {
  std::string name;  // mse, mse_tv, mse_tv_topo
  std::vector<double> beta;
  std::vector<TraceEntry> trace;
  RunSummary summary;
  double test_mse = 0.0;  // mean over the test sets
};

struct RegressionResult {
  std::vector<double> truth;
  std::vector<double> beta0;
  std::vector<RegressionVariant> variants;
};

RegressionResult run_regression(const RegressionConfig& cfg);
Objective regression_objective(const RegressionConfig& cfg, Matrix x, std::vector<double> y, bool tv, bool topo);
void write_outputs(const RegressionResult& r, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Noisy circle matched to the diagram of a clean circle sample.

struct CircleConfig {
  int n = 30;
  int outliers = 3;
  double noise = 0.1;
  int dim = 0;
  RunSettings run;

  CircleConfig();
  static CircleConfig from(const io::Config& cfg);
};

struct CircleResult {
  PointCloud clean;
  PointCloud initial;
  PointCloud final;
  Diagram target;
  Diagram final_diagram;
  std::vector<TraceEntry> trace;
  RunSummary summary;
};

/// n points at random angles on the unit circle.
PointCloud clean_circle(int n, std::uint64_t seed);

CircleResult run_circle_match(const CircleConfig& cfg);
/// Same, starting from the given cloud instead of the noisy sample.
CircleResult run_circle_match(const CircleConfig& cfg, const PointCloud& start);
/// W_2^2 in dimension `dim` to `target`, over the flat coordinates of n planar points.
Objective circle_objective(Diagram target, int n, int dim);
void write_outputs(const CircleResult& r, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Filter selection: direction of a height filtration for classification.

struct FilterConfig {
  int size = 16;
  int train_per_class = 20;
  int test_per_class = 20;
  double theta0 = 1.5707963267948966;
  int n_dirs = 50;
  int batch_size = 0;  // 0: full training set
  int landscapes = 5;
  int resolution = 100;
  RunSettings run;

  FilterConfig();
  static FilterConfig from(const io::Config& cfg);
};

struct LabeledImages {
  std::vector<Image> images;
  std::vector<int> labels;
};

/// Two 3x3 blobs on a common row band; the horizontal gap between them is
/// small for class 0 and large for class 1.  Rows and offsets are jittered.
LabeledImages two_blob_images(int size, int per_class, std::uint64_t seed);

/// Dim-0 lower-star diagram of the height filtration, with its tape.
struct HeightDiagram {
  Diagram diagram;
  GradTape tape;
};
HeightDiagram height_diagram(const Image& img, double theta);

struct FilterResult {
  std::vector<double> thetas;  // theta before every step, then the final one
  std::vector<TraceEntry> trace;
  RunSummary summary;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  std::vector<std::vector<double>> features_before;  // test set
  std::vector<std::vector<double>> features_after;
  std::vector<int> test_labels;
  std::vector<std::string> warnings;
};

FilterResult run_filter_select(const FilterConfig& cfg);
/// Full-batch label contrast loss over theta (a single parameter).
Objective filter_objective(std::vector<Image> images, std::vector<int> labels, int n_dirs);
void write_outputs(const FilterResult& r, const std::filesystem::path& out);

/// Landscape feature vector (first k landscapes over `grid`) of the dim-0
/// diagram of `img` along theta, essential points capped at the background.
std::vector<double> landscape_features(const Image& img, double theta, int k, std::span<const double> grid);

/// Accuracy of a nearest-centroid classifier trained on (train, train_labels).
double nearest_centroid_accuracy(const std::vector<std::vector<double>>& train, std::span<const int> train_labels,
                                 const std::vector<std::vector<double>>& test, std::span<const int> test_labels);

// ---------------------------------------------------------------------------
// Diagram of an input file.

struct DiagramRequest {
  std::string input;
  std::string filtration = "rips";  // rips | matrix | weighted-rips | lower-star | cubical
  int max_dim = 1;
  int k_nn = 3;
  bool cells = false;
};

nlohmann::json diagram_of_file(const DiagramRequest& req);

}  // namespace persopt::exp
