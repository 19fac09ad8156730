#include "persopt/data.hpp"

#include <cmath>
#include <stdexcept>

namespace persopt {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("Matrix: data size mismatch");
}

PointCloud::PointCloud(std::size_t n, std::size_t d, std::vector<double> coords)
    : n_(n), d_(d), coords_(std::move(coords)) {
  if (n_ < 1 || d_ < 1) throw std::invalid_argument("PointCloud: need n >= 1 and d >= 1");
  if (coords_.size() != n_ * d_) throw std::invalid_argument("PointCloud: coordinate count mismatch");
  for (double v : coords_) {
    if (!std::isfinite(v)) throw std::invalid_argument("PointCloud: non-finite coordinate");
  }
}

double PointCloud::distance(std::size_t i, std::size_t j) const {
  double s = 0.0;
  for (std::size_t k = 0; k < d_; ++k) {
    const double diff = (*this)(i, k) - (*this)(j, k);
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace persopt
