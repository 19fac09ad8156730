#pragma once

#include <vector>

#include "persopt/complex.hpp"
#include "persopt/data.hpp"

namespace persopt {

/// One value per vertex of a complex.
using VertexFunction = std::vector<double>;

/// A filtration together with its derivative tape at the evaluation point.
struct FiltrationWithTape {
  Filtration filtration;
  GradTape tape;
};

/// Vertex values together with their derivative tape.
struct VertexFunctionWithTape {
  VertexFunction values;
  GradTape tape;
};

/// Vietoris-Rips: each simplex gets the largest pairwise distance among its
/// vertices.  Parameters are the flattened point coordinates; each cell is
/// routed to the two points of its first maximal pair.
FiltrationWithTape rips_filtration(const PointCloud& points, const Complex& complex);

/// Rips filtration read from a symmetric distance-like matrix.  Parameter
/// i*n + j (i < j) is the entry m(i, j).
FiltrationWithTape rips_from_matrix(const Matrix& m, const Complex& complex);

/// Weighted Rips filtration: vertex j gets 2 f_j, edge ij gets
/// max(2 f_i, 2 f_j, |x_i - x_j| + f_i + f_j) and higher simplices the
/// largest of their edges.
///
/// Parameters are the coordinates followed by the n weights, unless
/// `weight_tape` is given: it must differentiate the weights with respect
/// to the coordinates, and the result then only has coordinate parameters.
FiltrationWithTape weighted_rips_filtration(const PointCloud& points, const VertexFunction& weights,
                                            const Complex& complex,
                                            const GradTape* weight_tape = nullptr);

/// Distance-to-measure weights: mean distance from each point to its k_nn
/// nearest other points (ties to the smallest index).
VertexFunctionWithTape dtm_weights(const PointCloud& points, int k_nn);

/// Lower-star filtration: each cell gets the max of its vertex values.
/// Parameters are the vertex values.
FiltrationWithTape lower_star_filtration(const VertexFunction& f, const Complex& complex);

/// Background value used by height_filtration.
double height_background(int height, int width);

/// Height function along direction theta on a binary image: foreground
/// pixel (r, c) gets cos(theta) c + sin(theta) r, background pixels get
/// height_background().  One parameter: theta.
VertexFunctionWithTape height_filtration(const Image& binary_image, double theta);

}  // namespace persopt
