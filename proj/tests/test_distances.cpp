#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "persopt/losses.hpp"

using namespace persopt;
using oracle::Pt;

namespace {

// Cost of a reported matching, recomputed from the original diagrams.
std::vector<double> reported_costs(const Matching& m, const std::vector<Pt>& a, const std::vector<Pt>& b) {
  std::vector<double> costs;
  for (auto [i, j] : m.pairs) {
    if (i >= 0 && j >= 0) {
      costs.push_back(oracle::linf(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]));
    } else if (i >= 0) {
      costs.push_back(oracle::diag(a[static_cast<std::size_t>(i)]));
    } else {
      costs.push_back(oracle::diag(b[static_cast<std::size_t>(j)]));
    }
  }
  return costs;
}

// Partner of every point of the first side (-1: diagonal).
std::vector<int> partners(const Matching& m, std::size_t n) {
  std::vector<int> partner(n, -1);
  for (auto [i, j] : m.pairs) {
    if (i >= 0) partner[static_cast<std::size_t>(i)] = j;
  }
  return partner;
}

// Every point of both sides appears exactly once.
bool covers(const Matching& m, std::size_t n, std::size_t k) {
  std::vector<int> seen_a(n, 0), seen_b(k, 0);
  for (auto [i, j] : m.pairs) {
    if (i == Matching::kDiagonal && j == Matching::kDiagonal) return false;
    if (i >= 0) ++seen_a[static_cast<std::size_t>(i)];
    if (j >= 0) ++seen_b[static_cast<std::size_t>(j)];
  }
  return std::all_of(seen_a.begin(), seen_a.end(), [](int c) { return c == 1; }) &&
         std::all_of(seen_b.begin(), seen_b.end(), [](int c) { return c == 1; });
}

std::vector<double> flatten(const std::vector<Pt>& pts) {
  std::vector<double> v;
  for (const Pt& p : pts) {
    v.push_back(p.b);
    v.push_back(p.d);
  }
  return v;
}

std::vector<Pt> unflatten(const std::vector<double>& v) {
  std::vector<Pt> pts;
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) pts.push_back({v[i], v[i + 1]});
  return pts;
}

std::vector<double> flat_grad(const DiagramGradient& g, int dim = 0) {
  std::vector<double> v;
  for (const auto& e : g.regular[static_cast<std::size_t>(dim)]) {
    v.push_back(e[0]);
    v.push_back(e[1]);
  }
  return v;
}

}  // namespace

TEST_CASE("bottleneck examples") {
  const Diagram d = oracle::make_diagram({{0, 2}, {1, 4}});
  const auto self = bottleneck(d, d, 0);
  CHECK(self.loss.value == 0.0);
  CHECK(flat_grad(self.loss.grad) == std::vector<double>(4, 0.0));

  const Diagram single = oracle::make_diagram({{0, 2}});
  const auto to_empty = bottleneck(single, Diagram{}, 0);
  CHECK(to_empty.loss.value == 1.0);
  CHECK(flat_grad(to_empty.loss.grad) == std::vector<double>{-0.5, 0.5});
  REQUIRE(to_empty.matching.pairs.size() == 1);
  CHECK(to_empty.matching.pairs[0] == std::pair<int, int>{0, Matching::kDiagonal});

  // Absent dimension on either side is an empty part.
  CHECK(bottleneck(Diagram{}, Diagram{}, 3).loss.value == 0.0);
}

TEST_CASE("zero-persistence points are ignored by distances") {
  const Diagram with_diag = oracle::make_diagram({{0, 2}, {1, 1}});
  const Diagram without = oracle::make_diagram({{0, 2}});
  CHECK(bottleneck(with_diag, without, 0).loss.value == 0.0);
  CHECK(wasserstein(with_diag, without, 0, 2).loss.value == 0.0);
  const auto w = wasserstein(with_diag, Diagram{}, 0, 1);
  CHECK(w.matching.pairs.size() == 1);
}

TEST_CASE("wasserstein examples") {
  const Diagram d = oracle::make_diagram({{0, 2}, {0.5, 3}});
  CHECK(wasserstein(d, d, 0, 1).loss.value == 0.0);
  CHECK(wasserstein(d, d, 0, 2).loss.value == 0.0);
  const Diagram single = oracle::make_diagram({{0, 2}});
  CHECK(wasserstein(single, Diagram{}, 0, 2).loss.value == 1.0);
  CHECK(wasserstein_cost(single, Diagram{}, 0, 2).loss.value == 1.0);
  CHECK_THROWS_AS(wasserstein(single, Diagram{}, 0, 0), std::invalid_argument);
}

TEST_CASE("bottleneck and wasserstein match exhaustive enumeration") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = oracle::random_points(rng, static_cast<std::size_t>(trial % 6));
    const auto b = oracle::random_points(rng, static_cast<std::size_t>((trial / 6) % 6));
    const Diagram da = oracle::make_diagram(a);
    const Diagram db = oracle::make_diagram(b);

    const auto bn = bottleneck(da, db, 0);
    CHECK(bn.loss.value == oracle::brute_bottleneck(a, b));
    CHECK(covers(bn.matching, a.size(), b.size()));
    const auto bc = reported_costs(bn.matching, a, b);
    CHECK((bc.empty() ? 0.0 : *std::max_element(bc.begin(), bc.end())) == bn.loss.value);

    for (int p : {1, 2}) {
      const auto w = wasserstein_cost(da, db, 0, p);
      CHECK(w.loss.value == oracle::exact_wasserstein_cost(a, b, p));
      CHECK(covers(w.matching, a.size(), b.size()));
      CHECK(oracle::round_to_double(oracle::exact_matching_cost(a, b, partners(w.matching, a.size()), p)) ==
            w.loss.value);
      CHECK(wasserstein(da, db, 0, p).loss.value == (p == 1 ? w.loss.value : std::pow(w.loss.value, 1.0 / p)));
    }
  }
}

TEST_CASE("tied optimal matchings give one value") {
  // a0 -> b0, a1 -> b1 and the crossed matching cost the same in exact
  // arithmetic: both are decided by the death coordinates.
  const std::vector<Pt> a{{0.0, 0.3}, {0.0, 0.7}};
  const std::vector<Pt> b{{0.0, 0.1 + 0.2}, {0.0, 0.9}};
  const auto w = wasserstein_cost(oracle::make_diagram(a), oracle::make_diagram(b), 0, 1);
  CHECK(w.loss.value == oracle::exact_wasserstein_cost(a, b, 1));
  std::vector<Pt> a_swapped{a[1], a[0]};
  CHECK(wasserstein_cost(oracle::make_diagram(a_swapped), oracle::make_diagram(b), 0, 1).loss.value == w.loss.value);
}

TEST_CASE("metric axioms on random triples") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const Diagram x = oracle::make_diagram(oracle::random_points(rng, 4));
    const Diagram y = oracle::make_diagram(oracle::random_points(rng, 3));
    const Diagram z = oracle::make_diagram(oracle::random_points(rng, 5));
    auto dist = [](const Diagram& a, const Diagram& b, int kind) {
      return kind == 0 ? bottleneck(a, b, 0).loss.value : wasserstein(a, b, 0, kind).loss.value;
    };
    for (int kind : {0, 1, 2}) {
      CHECK(dist(x, x, kind) == 0.0);
      CHECK(std::abs(dist(x, y, kind) - dist(y, x, kind)) <= 1e-9);
      CHECK(dist(x, z, kind) <= dist(x, y, kind) + dist(y, z, kind) + 1e-9);
    }
  }
}

TEST_CASE("wasserstein decreases toward the bottleneck distance as p grows") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Diagram x = oracle::make_diagram(oracle::random_points(rng, 5));
    const Diagram y = oracle::make_diagram(oracle::random_points(rng, 4));
    const double bn = bottleneck(x, y, 0).loss.value;
    double prev = wasserstein(x, y, 0, 1).loss.value;
    for (int p : {2, 4, 8, 16}) {
      const double w = wasserstein(x, y, 0, p).loss.value;
      CHECK(w <= prev + 1e-12);
      CHECK(w >= bn - 1e-12);
      prev = w;
    }
    CHECK(prev - bn <= wasserstein(x, y, 0, 1).loss.value - bn);
  }
}

TEST_CASE("distance gradients match finite differences at tie-free points") {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = oracle::random_points(rng, 4);
    const auto b = oracle::random_points(rng, 3);
    const Diagram db = oracle::make_diagram(b);
    const std::vector<std::function<DistanceResult(const Diagram&)>> losses{
        [&](const Diagram& d) { return bottleneck(d, db, 0); },
        [&](const Diagram& d) { return wasserstein(d, db, 0, 1); },
        [&](const Diagram& d) { return wasserstein(d, db, 0, 2); },
        [&](const Diagram& d) { return wasserstein_cost(d, db, 0, 2); },
        [&](const Diagram& d) { return wasserstein(d, db, 0, 2, GroundMetric::l2); },
    };
    for (const auto& loss : losses) {
      auto f = [&](const std::vector<double>& v) { return loss(oracle::make_diagram(unflatten(v))).loss.value; };
      const auto x = flatten(a);
      if (!oracle::locally_smooth(f, x, 1e-6, 1e-5)) continue;
      const auto analytic = flat_grad(loss(oracle::make_diagram(a)).loss.grad);
      CHECK(oracle::max_rel_error(oracle::central_differences(f, x, 1e-6), analytic) <= 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("shuffling points leaves distance values unchanged") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = oracle::random_points(rng, 5);
    const auto b = oracle::random_points(rng, 4);
    const Diagram da = oracle::make_diagram(a);
    const Diagram db = oracle::make_diagram(b);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<Pt> shuffled;
    for (auto i : perm) shuffled.push_back(a[i]);
    const Diagram ds = oracle::make_diagram(shuffled);
    CHECK(bottleneck(da, db, 0).loss.value == bottleneck(ds, db, 0).loss.value);
    CHECK(wasserstein(da, db, 0, 2).loss.value == wasserstein(ds, db, 0, 2).loss.value);
    CHECK(sliced_wasserstein(da, db, 0).value == sliced_wasserstein(ds, db, 0).value);
    const auto g = wasserstein(da, db, 0, 2).loss.grad.regular[0];
    const auto gs = wasserstein(ds, db, 0, 2).loss.grad.regular[0];
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(gs[k] == g[perm[k]]);
  }
}

TEST_CASE("sliced wasserstein basics") {
  const Diagram d = oracle::make_diagram({{0, 1}, {0.25, 2}});
  CHECK(sliced_wasserstein(d, d, 0).value == 0.0);
  // A shift along the diagonal is invisible to the slice orthogonal to it.
  const Diagram shifted = oracle::make_diagram({{0.5, 1.5}, {0.75, 2.5}});
  CHECK(sliced_wasserstein_slice(d, shifted, 0, -std::numbers::pi / 4) <= 1e-15);
  CHECK(sliced_wasserstein_slice(d, shifted, 0, 0.0) > 0.0);
  CHECK_THROWS_AS(sliced_wasserstein(d, d, 0, 0), std::invalid_argument);

  // The mean of the per-direction slices.
  double sum = 0.0;
  for (int k = 0; k < 7; ++k) sum += sliced_wasserstein_slice(d, shifted, 0, -std::numbers::pi / 2 + std::numbers::pi * k / 7);
  CHECK(sliced_wasserstein(d, shifted, 0, 7).value == doctest::Approx(sum / 7).epsilon(1e-14));
}

TEST_CASE("sliced wasserstein is finite, bounded by a multiple of W1, and has correct gradients") {
  std::mt19937_64 rng(14);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = oracle::random_points(rng, 4);
    const auto b = oracle::random_points(rng, 3);
    const Diagram db = oracle::make_diagram(b);
    const double sw = sliced_wasserstein(oracle::make_diagram(a), db, 0).value;
    CHECK(std::isfinite(sw));
    // Per slice, the W1 matching and its diagonal shadow each cost at most
    // sqrt(2) times the L-inf transport.
    CHECK(sw <= 2.0 * std::numbers::sqrt2 * wasserstein(oracle::make_diagram(a), db, 0, 1).loss.value + 1e-12);
    auto f = [&](const std::vector<double>& v) { return sliced_wasserstein(oracle::make_diagram(unflatten(v)), db, 0).value; };
    const auto x = flatten(a);
    if (!oracle::locally_smooth(f, x, 1e-6, 1e-5)) continue;
    const auto analytic = flat_grad(sliced_wasserstein(oracle::make_diagram(a), db, 0).grad);
    CHECK(oracle::max_rel_error(oracle::central_differences(f, x, 1e-6), analytic) <= 1e-5);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("label contrast loss: degenerate batches") {
  const Diagram d = oracle::make_diagram({{0, 1}});
  const std::vector<int> labels{0, 0, 1, 1};
  const auto same = label_contrast_loss({d, d, d, d}, labels, 0);
  CHECK(same.value == 0.0);
  CHECK(same.warnings.size() == 2);

  const Diagram e = oracle::make_diagram({{0, 3}, {1, 2}});
  const auto split = label_contrast_loss({d, d, e, e}, labels, 0);
  CHECK(split.value == 0.0);
  CHECK(split.warnings.empty());

  const std::vector<int> one_class{1, 1};
  CHECK_THROWS_AS(label_contrast_loss({d, e}, one_class, 0), std::invalid_argument);
}

TEST_CASE("label contrast loss matches a direct double loop and finite differences") {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<std::vector<Pt>> pts;
    std::vector<Diagram> ds;
    for (int i = 0; i < 4; ++i) {
      pts.push_back(oracle::random_points(rng, 3));
      ds.push_back(oracle::make_diagram(pts.back()));
    }
    const std::vector<int> labels{0, 1, 0, 1};
    const auto loss = label_contrast_loss(ds, labels, 0, 20);

    double expected = 0.0;
    for (int cls : {0, 1}) {
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          if (i == j || labels[static_cast<std::size_t>(i)] != cls) continue;
          const double sw = sliced_wasserstein(ds[static_cast<std::size_t>(i)], ds[static_cast<std::size_t>(j)], 0, 20).value;
          den += sw;
          if (labels[static_cast<std::size_t>(j)] == cls) num += sw;
        }
      }
      expected += num / den;
    }
    CHECK(loss.value == doctest::Approx(expected).epsilon(1e-12));

    // Gradient with respect to every point of every diagram.
    std::vector<double> x;
    for (const auto& p : pts) {
      const auto f = flatten(p);
      x.insert(x.end(), f.begin(), f.end());
    }
    auto f = [&](const std::vector<double>& v) {
      std::vector<Diagram> dd;
      for (std::size_t i = 0; i < 4; ++i) {
        dd.push_back(oracle::make_diagram(unflatten({v.begin() + static_cast<long>(6 * i), v.begin() + static_cast<long>(6 * i + 6)})));
      }
      return label_contrast_loss(dd, labels, 0, 20).value;
    };
    if (!oracle::locally_smooth(f, x, 1e-6, 1e-5)) continue;
    std::vector<double> analytic;
    for (const auto& g : loss.grads) {
      const auto fg = flat_grad(g);
      analytic.insert(analytic.end(), fg.begin(), fg.end());
    }
    CHECK(oracle::max_rel_error(oracle::central_differences(f, x, 1e-6), analytic) <= 1e-5);
    ++checked;
  }
  CHECK(checked > 5);
}

TEST_CASE("label contrast loss with capped essential points routes to births") {
  std::vector<Diagram> ds;
  const std::vector<double> births{0.0, 0.1, 1.0, 1.2};
  for (double b : births) {
    std::vector<DimensionDiagram> dims(1);
    dims[0].essential.push_back({b, 0});
    ds.emplace_back(dims);
  }
  const std::vector<int> labels{0, 0, 1, 1};
  const auto loss = label_contrast_loss(ds, labels, 0, 10, 5.0);
  CHECK(loss.value > 0.0);
  CHECK(loss.warnings.empty());
  auto f = [&](const std::vector<double>& v) {
    std::vector<Diagram> dd;
    for (double b : v) {
      std::vector<DimensionDiagram> dims(1);
      dims[0].essential.push_back({b, 0});
      dd.emplace_back(dims);
    }
    return label_contrast_loss(dd, labels, 0, 10, 5.0).value;
  };
  const auto fd = oracle::central_differences(f, births, 1e-6);
  for (std::size_t i = 0; i < 4; ++i) CHECK(loss.grads[i].essential[0][0] == doctest::Approx(fd[i]).epsilon(1e-5));
  // Without the cap the essential points are invisible.
  CHECK(label_contrast_loss(ds, labels, 0, 10).value == 0.0);
}
