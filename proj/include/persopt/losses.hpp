#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "persopt/data.hpp"
#include "persopt/persistence.hpp"

namespace persopt {

/// A loss value with its gradient.  `grad` is shaped like the diagram the
/// loss was evaluated on (empty for non-topological terms); `grad_aux` is
/// a dense gradient over the loss's own non-diagram parameters.
struct LossValue {
  double value = 0.0;
  DiagramGradient grad;
  std::vector<double> grad_aux;
};

/// Sum of (death - birth) over the regular points of the listed dimensions.
/// Essential points and points on the diagonal receive no gradient.
LossValue total_persistence(const Diagram& d, std::span<const int> dims);

/// Total persistence of dimension `dim` after removing its `n_exclude` most
/// persistent regular points (ties: earlier point is the more persistent).
LossValue total_persistence_excluding_top(const Diagram& d, int dim, int n_exclude);

/// -sum over regular points of dimension `dim` of their squared L-infinity
/// distance to the diagonal, ((death - birth) / 2)^2.
LossValue hole_penalty(const Diagram& d, int dim = 1);

enum class GroundMetric { linf, l2 };

/// A partial matching between the off-diagonal regular points of two
/// diagrams.  Indices refer to the regular lists of the input diagrams;
/// kDiagonal marks a match with the diagonal.
struct Matching {
  static constexpr int kDiagonal = -1;
  std::vector<std::pair<int, int>> pairs;
};

struct DistanceResult {
  LossValue loss;  // gradient with respect to the first diagram only
  Matching matching;
};

/// Exact bottleneck distance between the regular parts in dimension `dim`
/// (binary search over candidate costs plus bipartite feasibility).
DistanceResult bottleneck(const Diagram& d, const Diagram& target, int dim,
                          GroundMetric ground = GroundMetric::linf);

/// Sum of matched costs raised to the power p, minimized exactly with the
/// Hungarian method on the diagonal-augmented cost matrix (W_p^p).
DistanceResult wasserstein_cost(const Diagram& d, const Diagram& target, int dim, int p,
                                GroundMetric ground = GroundMetric::linf);

/// W_p = wasserstein_cost^(1/p).
DistanceResult wasserstein(const Diagram& d, const Diagram& target, int dim, int p,
                           GroundMetric ground = GroundMetric::linf);

inline constexpr int kDefaultSlicedDirections = 50;

/// Sliced Wasserstein distance: mean over n_dirs directions evenly spaced
/// in [-pi/2, pi/2) of the 1-D transport cost between the projections of
/// each diagram augmented with the diagonal projections of the other.
LossValue sliced_wasserstein(const Diagram& d, const Diagram& target, int dim,
                             int n_dirs = kDefaultSlicedDirections);

/// Contribution of a single direction theta to sliced_wasserstein.
double sliced_wasserstein_slice(const Diagram& d, const Diagram& target, int dim, double theta);

/// Loss over a labeled batch of diagrams with per-diagram gradients.
struct BatchLoss {
  double value = 0.0;
  std::vector<DiagramGradient> grads;
  std::vector<std::string> warnings;
};

/// Ratio of within-class to all-pairs sliced Wasserstein distances, summed
/// over classes.  With `essential_cap`, essential points of `dim` take part
/// as points dying at the cap.  Classes whose denominator is zero are
/// skipped with a warning.
BatchLoss label_contrast_loss(const std::vector<Diagram>& diagrams, std::span<const int> labels,
                              int dim, int n_dirs = kDefaultSlicedDirections,
                              std::optional<double> essential_cap = std::nullopt);

/// Axis-aligned box, one [lower, upper] interval per coordinate.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Sum over points of their Euclidean distance to the box; grad_aux is laid
/// out like PointCloud::flat().
LossValue penalty_square(const PointCloud& points, const Box& box);

/// Sum over pixels of min(|p|, |1 - p|).
LossValue penalty_binary_image(std::span<const double> pixels);

/// Total variation sum |beta[i+1] - beta[i]|.
LossValue penalty_tv(std::span<const double> beta);

/// Sum of squared residuals of X beta - y.
LossValue penalty_mse(const Matrix& x, std::span<const double> y, std::span<const double> beta);

}  // namespace persopt
