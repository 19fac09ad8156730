// persopt: run the optimization experiments or compute a diagram.
//
//   persopt <experiment> [--config FILE] [--out DIR] [--seed N]
//   persopt diagram --input FILE [--filtration KIND] [--max-dim K] [--cells] [--out FILE]

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "persopt/experiments.hpp"

using namespace persopt;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<long> seed;
};

io::Config config_for(const Common& c) {
  io::Config cfg = c.config.empty() ? io::Config{} : io::load_config(c.config);
  if (cfg.source.empty()) cfg.source = "<defaults>";
  if (c.seed) {
    cfg.values["seed"] = std::to_string(*c.seed);
    cfg.lines.try_emplace("seed", 0);
  }
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "random seed (overrides the config)");
}

void report(const char* name, const exp::RunSummary& s, const std::filesystem::path& out) {
  std::printf("%s: %ld steps (%s), loss %.6g -> %.6g, outputs in %s\n", name, s.result.steps,
              s.result.reason == StopReason::loss_window ? "converged" : "max_steps", s.initial_loss,
              s.final_loss, out.string().c_str());
  if (!s.assumptions.step_sizes || !s.assumptions.bounded_iterates || !s.assumptions.zero_mean_noise) {
    std::fprintf(stderr, "warning: convergence assumptions not met: %s\n", s.assumptions.detail.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient descent through persistence diagrams"};
  app.require_subcommand(1);

  Common pc, im, rg, cm, fs;
  auto* pointcloud = app.add_subcommand("pointcloud", "enlarge holes of a point cloud kept in the unit square");
  auto* image = app.add_subcommand("image", "remove spurious components from a noisy image");
  auto* regression = app.add_subcommand("regression", "linear regression with topological regularization");
  auto* circle = app.add_subcommand("circle-match", "match a noisy circle to a clean diagram");
  auto* filter = app.add_subcommand("filter-select", "learn a height-filtration direction for classification");
  add_common(pointcloud, pc);
  add_common(image, im);
  add_common(regression, rg);
  add_common(circle, cm);
  add_common(filter, fs);

  exp::DiagramRequest req;
  std::string diagram_out;
  auto* diagram = app.add_subcommand("diagram", "persistence diagram of an input file as JSON");
  diagram->add_option("--input", req.input, "CSV point cloud, distance matrix, signal, or PGM/CSV image")
      ->required()
      ->check(CLI::ExistingFile);
  diagram->add_option("--filtration", req.filtration, "rips | matrix | weighted-rips | lower-star | cubical")
      ->capture_default_str()
      ->check(CLI::IsMember({"rips", "matrix", "weighted-rips", "lower-star", "cubical"}));
  diagram->add_option("--max-dim", req.max_dim, "largest homology dimension (simplicial inputs)")
      ->capture_default_str()
      ->check(CLI::Range(0, 3));
  diagram->add_option("--k-nn", req.k_nn, "neighbours for the DTM weights")->capture_default_str();
  diagram->add_flag("--cells", req.cells, "include the cell ids behind every coordinate");
  diagram->add_option("--out", diagram_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pointcloud) {
      const auto r = exp::run_pointcloud(exp::PointCloudConfig::from(config_for(pc)));
      exp::write_outputs(r, pc.out);
      report("pointcloud", r.summary, pc.out);
    } else if (*image) {
      const auto r = exp::run_image(exp::ImageConfig::from(config_for(im)));
      exp::write_outputs(r, im.out);
      report("image", r.summary, im.out);
      std::printf("  dim-0 total persistence %.6g -> %.6g, binary penalty %.6g\n", r.initial_topology,
                  r.final_topology, r.final_binary_penalty);
    } else if (*regression) {
      const auto r = exp::run_regression(exp::RegressionConfig::from(config_for(rg)));
      exp::write_outputs(r, rg.out);
      for (const auto& v : r.variants) {
        report(v.name.c_str(), v.summary, rg.out);
        std::printf("  test MSE %.6g\n", v.test_mse);
      }
    } else if (*circle) {
      const auto r = exp::run_circle_match(exp::CircleConfig::from(config_for(cm)));
      exp::write_outputs(r, cm.out);
      report("circle-match", r.summary, cm.out);
    } else if (*filter) {
      const auto r = exp::run_filter_select(exp::FilterConfig::from(config_for(fs)));
      exp::write_outputs(r, fs.out);
      report("filter-select", r.summary, fs.out);
      std::printf("  theta %.6g -> %.6g, test accuracy %.3f -> %.3f\n", r.thetas.front(), r.thetas.back(),
                  r.accuracy_before, r.accuracy_after);
      for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (*diagram) {
      const auto j = exp::diagram_of_file(req);
      if (diagram_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        io::write_json(diagram_out, j);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
