#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace persopt {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n points in R^d, stored row-major.  Flattened index of coordinate k of
/// point i is i*d + k; gradients over a cloud use the same layout.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t n, std::size_t d, std::vector<double> coords);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

  double operator()(std::size_t i, std::size_t k) const { return coords_[i * d_ + k]; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * d_, d_}; }
  std::span<const double> flat() const { return coords_; }

  double distance(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> coords_;
};

/// Grayscale image, row-major; pixel (r, c) is vertex r*width + c of the
/// matching cubical grid.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r * width + c)]; }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r * width + c)]; }
};

}  // namespace persopt
