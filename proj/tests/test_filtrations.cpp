#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "persopt/filtrations.hpp"

using namespace persopt;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(n * d);
  for (double& v : xs) v = u(rng);
  return PointCloud(n, d, xs);
}

// Dense d value / d param for one cell.
std::vector<double> tape_row(const GradTape& tape, CellId cell) {
  std::vector<double> row(tape.num_params(), 0.0);
  for (const TapeEntry& e : tape.entries(cell)) row[static_cast<std::size_t>(e.param)] += e.coeff;
  return row;
}

// Checks every tape row against central differences of `eval`.
void check_tape(const std::function<std::vector<double>(const std::vector<double>&)>& eval,
                const std::vector<double>& x, const GradTape& tape) {
  const double eps = 1e-6;
  const std::size_t cells = eval(x).size();
  for (std::size_t p = 0; p < x.size(); ++p) {
    auto xp = x;
    auto xm = x;
    xp[p] += eps;
    xm[p] -= eps;
    const auto fp = eval(xp);
    const auto fm = eval(xm);
    for (std::size_t c = 0; c < cells; ++c) {
      const double fd = (fp[c] - fm[c]) / (2 * eps);
      const double analytic = tape_row(tape, static_cast<CellId>(c))[p];
      CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }
  }
}

}  // namespace

TEST_CASE("rips edge value and tape") {
  const PointCloud x(2, 2, {0, 0, 3, 4});
  const auto [f, tape] = rips_filtration(x, build_full_simplex(2, 1));
  CHECK(f.values == std::vector<double>{0, 0, 5});
  const auto row = tape_row(tape, 2);
  CHECK(row[0] == doctest::Approx(-0.6));
  CHECK(row[1] == doctest::Approx(-0.8));
  CHECK(row[2] == doctest::Approx(0.6));
  CHECK(row[3] == doctest::Approx(0.8));
  CHECK(tape.entries(0).empty());
}

TEST_CASE("rips triangle routes to the longest pair") {
  const PointCloud x(3, 1, {0, 1, 3});
  const Complex c = build_full_simplex(3, 2);
  const auto [f, tape] = rips_filtration(x, c);
  CHECK(f[6] == 3.0);
  const auto row = tape_row(tape, 6);
  CHECK(row == std::vector<double>{-1.0, 0.0, 1.0});
}

TEST_CASE("rips of coincident points has an empty tape") {
  const PointCloud x(2, 2, {1, 1, 1, 1});
  const auto [f, tape] = rips_filtration(x, build_full_simplex(2, 1));
  CHECK(f[2] == 0.0);
  CHECK(tape.entries(2).empty());
}

TEST_CASE("rips matches a direct max over pairs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud x = random_cloud(rng, 5, 3);
    const Complex c = build_full_simplex(5, 4);
    const auto [f, tape] = rips_filtration(x, c);
    for (const Cell& cell : c.cells()) {
      double expected = 0.0;
      for (int a : cell.vertices) {
        for (int b : cell.vertices) {
          double s = 0.0;
          for (std::size_t k = 0; k < 3; ++k) {
            const double diff = x(static_cast<std::size_t>(a), k) - x(static_cast<std::size_t>(b), k);
            s += diff * diff;
          }
          expected = std::max(expected, std::sqrt(s));
        }
      }
      CHECK(f[cell.id] == expected);
    }
    CHECK(validate_filtration(c, f));
  }
}

TEST_CASE("rips is invariant under rigid motions") {
  std::mt19937_64 rng(5);
  const PointCloud x = random_cloud(rng, 7, 2);
  const double t = 0.83;
  std::vector<double> moved;
  for (std::size_t i = 0; i < 7; ++i) {
    moved.push_back(std::cos(t) * x(i, 0) - std::sin(t) * x(i, 1) + 4.0);
    moved.push_back(std::sin(t) * x(i, 0) + std::cos(t) * x(i, 1) - 2.5);
  }
  const Complex c = build_full_simplex(7, 2);
  const auto a = rips_filtration(x, c).filtration;
  const auto b = rips_filtration(PointCloud(7, 2, moved), c).filtration;
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-12);
}

TEST_CASE("rips tape matches finite differences") {
  std::mt19937_64 rng(21);
  const Complex c = build_full_simplex(6, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const PointCloud x = random_cloud(rng, 6, 2);
    const std::vector<double> flat(x.flat().begin(), x.flat().end());
    check_tape([&](const std::vector<double>& v) { return rips_filtration(PointCloud(6, 2, v), c).filtration.values; },
               flat, rips_filtration(x, c).tape);
  }
}

TEST_CASE("rips_from_matrix") {
  Matrix m(2, 2);
  m(0, 1) = m(1, 0) = 7.0;
  const auto [f, tape] = rips_from_matrix(m, build_full_simplex(2, 1));
  CHECK(f[2] == 7.0);
  REQUIRE(tape.entries(2).size() == 1);
  CHECK(tape.entries(2)[0].param == 1);
  CHECK(tape.entries(2)[0].coeff == 1.0);

  Matrix constant(3, 3, 2.0);
  for (std::size_t i = 0; i < 3; ++i) constant(i, i) = 0.0;
  const auto tri = rips_from_matrix(constant, build_full_simplex(3, 2));
  CHECK(tri.tape.entries(6)[0].param == 1);  // pair (0, 1)

  Matrix asym(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(rips_from_matrix(asym, build_full_simplex(2, 1)), std::invalid_argument);
  Matrix diag(2, 2);
  diag(0, 0) = -1.0;
  CHECK_THROWS_AS(rips_from_matrix(diag, build_full_simplex(2, 1)), std::invalid_argument);
}

TEST_CASE("rips_from_matrix agrees with rips on a realizing cloud") {
  std::mt19937_64 rng(3);
  const Complex c = build_full_simplex(4, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud x = random_cloud(rng, 4, 2);
    Matrix m(4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) m(i, j) = x.distance(i, j);
    }
    CHECK(rips_from_matrix(m, c).filtration.values == rips_filtration(x, c).filtration.values);
  }
}

TEST_CASE("weighted rips branches") {
  const Complex edge = build_full_simplex(2, 1);
  const PointCloud x(2, 1, {0, 1});
  CHECK(weighted_rips_filtration(x, {0, 0}, edge).filtration.values ==
        rips_filtration(x, edge).filtration.values);

  const PointCloud same(2, 2, {0.5, 0.5, 0.5, 0.5});
  const auto [f, tape] = weighted_rips_filtration(same, {1, 2}, edge);
  CHECK(f.values == std::vector<double>{2, 4, 4});
  REQUIRE(tape.entries(2).size() == 1);
  CHECK(tape.entries(2)[0].param == 4 + 1);  // weight of point 1 after 4 coordinates
  CHECK(tape.entries(2)[0].coeff == 2.0);
}

TEST_CASE("weighted rips with zero weights equals rips exactly") {
  std::mt19937_64 rng(8);
  const Complex c = build_full_simplex(6, 3);
  const PointCloud x = random_cloud(rng, 6, 3);
  CHECK(weighted_rips_filtration(x, VertexFunction(6, 0.0), c).filtration.values ==
        rips_filtration(x, c).filtration.values);
}

TEST_CASE("weighted rips with DTM weights matches the three-branch formula") {
  std::mt19937_64 rng(13);
  const Complex c = build_full_simplex(6, 2);
  const PointCloud x = random_cloud(rng, 6, 2);
  const auto w = dtm_weights(x, 2);
  const auto [f, tape] = weighted_rips_filtration(x, w.values, c);
  CHECK(validate_filtration(c, f));
  for (const Cell& cell : c.cells()) {
    if (cell.dim != 1) continue;
    const auto i = static_cast<std::size_t>(cell.vertices[0]);
    const auto j = static_cast<std::size_t>(cell.vertices[1]);
    const double expected =
        std::max({2 * w.values[i], 2 * w.values[j], x.distance(i, j) + w.values[i] + w.values[j]});
    CHECK(f[cell.id] == expected);
  }
}

TEST_CASE("weighted rips tapes match finite differences, with and without composed weights") {
  std::mt19937_64 rng(17);
  const Complex c = build_full_simplex(5, 2);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (int trial = 0; trial < 4; ++trial) {
    const PointCloud x = random_cloud(rng, 5, 2);
    VertexFunction w(5);
    for (double& v : w) v = u(rng);
    std::vector<double> params(x.flat().begin(), x.flat().end());
    params.insert(params.end(), w.begin(), w.end());
    check_tape(
        [&](const std::vector<double>& v) {
          return weighted_rips_filtration(PointCloud(5, 2, {v.begin(), v.begin() + 10}),
                                          VertexFunction(v.begin() + 10, v.end()), c)
              .filtration.values;
        },
        params, weighted_rips_filtration(x, w, c).tape);

    const std::vector<double> flat(x.flat().begin(), x.flat().end());
    const auto dtm = dtm_weights(x, 2);
    check_tape(
        [&](const std::vector<double>& v) {
          const PointCloud y(5, 2, v);
          return weighted_rips_filtration(y, dtm_weights(y, 2).values, c).filtration.values;
        },
        flat, weighted_rips_filtration(x, dtm.values, c, &dtm.tape).tape);
  }
}

TEST_CASE("dtm weights") {
  const PointCloud two(2, 1, {0, 3});
  CHECK(dtm_weights(two, 1).values == std::vector<double>{3, 3});
  const PointCloud tri(3, 2, {0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2});
  for (double v : dtm_weights(tri, 2).values) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(dtm_weights(tri, 0), std::invalid_argument);
  CHECK_THROWS_AS(dtm_weights(tri, 3), std::invalid_argument);
}

TEST_CASE("dtm weights match a sort-all-distances oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud x = random_cloud(rng, 8, 2);
    const auto w = dtm_weights(x, 3).values;
    for (std::size_t i = 0; i < 8; ++i) {
      std::vector<double> ds;
      for (std::size_t j = 0; j < 8; ++j) {
        if (j != i) ds.push_back(x.distance(i, j));
      }
      std::sort(ds.begin(), ds.end());
      CHECK(w[i] == doctest::Approx((ds[0] + ds[1] + ds[2]) / 3.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("dtm weights are 1-Lipschitz in each point") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud x = random_cloud(rng, 8, 2);
    const auto base = dtm_weights(x, 3).values;
    std::vector<double> moved(x.flat().begin(), x.flat().end());
    const std::size_t i = static_cast<std::size_t>(trial % 8);
    const double dx = g(rng), dy = g(rng);
    moved[2 * i] += dx;
    moved[2 * i + 1] += dy;
    const auto after = dtm_weights(PointCloud(8, 2, moved), 3).values;
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(std::abs(after[j] - base[j]) <= std::hypot(dx, dy) + 1e-15);
    }
  }
}

TEST_CASE("lower star filtration") {
  const auto [f, tape] = lower_star_filtration({0.3, 0.7}, build_full_simplex(2, 1));
  CHECK(f[2] == 0.7);
  CHECK(tape.entries(2)[0].param == 1);
  CHECK(tape.entries(2)[0].coeff == 1.0);

  const Complex tri = build_full_simplex(3, 2);
  const auto flat = lower_star_filtration({2, 2, 2}, tri);
  for (const Cell& cell : tri.cells()) {
    CHECK(flat.filtration[cell.id] == 2.0);
    CHECK(flat.tape.entries(cell.id)[0].param == cell.vertices[0]);
  }

  const Complex grid = build_cubical_grid(2, 2);
  const auto sq = lower_star_filtration({0, 1, 2, 3}, grid);
  CHECK(sq.filtration[8] == 3.0);
  CHECK(validate_filtration(grid, sq.filtration));
  CHECK_THROWS_AS(lower_star_filtration({0, 1, 2}, grid), std::invalid_argument);
}

TEST_CASE("lower star filtrations are monotone on random inputs") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Complex grid = build_cubical_grid(4, 5);
  const Complex simplex = build_full_simplex(6, 3);
  for (int trial = 0; trial < 20; ++trial) {
    VertexFunction a(20), b(6);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    CHECK(validate_filtration(grid, lower_star_filtration(a, grid).filtration));
    CHECK(validate_filtration(simplex, lower_star_filtration(b, simplex).filtration));
  }
}

TEST_CASE("height filtration") {
  Image img{2, 3, {1, 0, 1, 1, 1, 0}};
  const auto h0 = height_filtration(img, 0.0);
  const double bg = height_background(2, 3);
  CHECK(bg == 10.0);
  CHECK(h0.values == std::vector<double>{0, bg, 2, 0, 1, bg});
  CHECK(h0.tape.entries(3)[0].coeff == 1.0);  // row 1
  CHECK(h0.tape.entries(1).empty());

  const auto h90 = height_filtration(img, std::numbers::pi / 2);
  CHECK(h90.values[4] == doctest::Approx(1.0));        // f = r
  CHECK(h90.tape.entries(4)[0].coeff == doctest::Approx(-1.0));  // -c

  const double theta = 0.37;
  const auto a = height_filtration(img, theta);
  const auto b = height_filtration(img, theta + std::numbers::pi);
  for (std::size_t v = 0; v < img.pixels.size(); ++v) {
    if (img.pixels[v] == 1.0) CHECK(b.values[v] == doctest::Approx(-a.values[v]));
  }

  Image gray{1, 2, {0.5, 1}};
  CHECK_THROWS_AS(height_filtration(gray, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(height_filtration(img, std::nan("")), std::invalid_argument);
}

TEST_CASE("height filtration tape matches finite differences") {
  Image img{3, 3, {1, 1, 0, 0, 1, 1, 1, 0, 1}};
  for (double theta : {0.1, 1.2, -2.0, 3.0}) {
    const auto h = height_filtration(img, theta);
    const double eps = 1e-6;
    const auto p = height_filtration(img, theta + eps).values;
    const auto m = height_filtration(img, theta - eps).values;
    for (std::size_t v = 0; v < 9; ++v) {
      const double fd = (p[v] - m[v]) / (2 * eps);
      const double analytic = h.tape.entries(static_cast<CellId>(v)).empty() ? 0.0 : h.tape.entries(static_cast<CellId>(v))[0].coeff;
      CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }
  }
}

TEST_CASE("point clouds reject non-finite input") {
  CHECK_THROWS_AS(PointCloud(1, 2, {0.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(PointCloud(2, 2, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointCloud(0, 2, {}), std::invalid_argument);
}
