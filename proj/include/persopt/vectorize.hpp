#pragma once

#include <array>
#include <span>
#include <vector>

#include "persopt/persistence.hpp"

namespace persopt {

/// d values[output] / d (birth, death) of regular point `point`.
struct FeatureJacobianEntry {
  int output;
  int point;
  double d_birth;
  double d_death;
};

/// A vectorization of the regular part of one diagram dimension, with its
/// sparse Jacobian.
struct DiagramFeatures {
  int dim = 0;
  std::vector<double> values;
  std::vector<FeatureJacobianEntry> jacobian;

  /// Vector-Jacobian product: gradient of sum_k upstream[k] * values[k]
  /// with respect to the points of `d`.
  DiagramGradient backward(const Diagram& d, std::span<const double> upstream) const;
};

/// Tent function of the point (birth, death) evaluated at t.
double tent(double birth, double death, double t);

/// Persistence landscapes lambda(k, t) for k = 1..k_max over the grid,
/// laid out k-major: values[(k - 1) * grid.size() + s].  The k-th largest
/// tent at a sample is routed to its point (ties: smallest point index).
DiagramFeatures landscape(const Diagram& d, int dim, int k_max, std::span<const double> grid);

enum class ImageWeight { constant, persistence };

/// Persistence image sum_p w(p) exp(-|q - p|^2 / (2 sigma^2)) evaluated at
/// each grid point q, with p = (birth, death).
DiagramFeatures persistence_image(const Diagram& d, int dim,
                                  std::span<const std::array<double, 2>> grid, double sigma,
                                  ImageWeight weight = ImageWeight::constant);

}  // namespace persopt
