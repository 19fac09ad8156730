#include "persopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace persopt {

double Schedule::rate(long k) const {
  if (kind == Kind::constant) return a;
  return a / (1.0 + b * static_cast<double>(k));
}

OptState::OptState(std::vector<double> x0, std::uint64_t seed)
    : x(std::move(x0)), rng_seed(seed), rng(seed) {}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

void step(OptState& state, const Objective& objective, const Schedule& sched, const NoiseModel& noise) {
  Evaluation eval = objective(state.x);
  if (eval.grad.size() != state.x.size()) {
    throw std::invalid_argument("step: subgradient has " + std::to_string(eval.grad.size()) +
                                " entries for " + std::to_string(state.x.size()) + " parameters");
  }
  if (!std::isfinite(eval.loss)) {
    throw std::runtime_error("step " + std::to_string(state.k) + ": non-finite loss");
  }
  for (double g : eval.grad) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("step " + std::to_string(state.k) + ": non-finite subgradient");
    }
  }
  const double alpha = sched.rate(state.k);
  std::normal_distribution<double> gauss(0.0, noise.stddev > 0.0 ? noise.stddev : 1.0);
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    double zeta = 0.0;
    if (noise.kind == NoiseModel::Kind::gaussian && noise.stddev > 0.0) {
      zeta = gauss(state.rng);
      state.noise_sum += zeta;
      state.noise_count += 1.0;
    }
    state.x[i] -= alpha * (eval.grad[i] + zeta);
    if (!std::isfinite(state.x[i])) {
      throw std::runtime_error("step " + std::to_string(state.k) + ": iterate diverged");
    }
  }
  state.trace.push_back({state.k, eval.loss, norm(eval.grad), alpha});
  state.max_norm = std::max(state.max_norm, norm(state.x));
  ++state.k;
}

bool window_converged(std::span<const TraceEntry> trace, long window, double threshold) {
  if (window < 1 || trace.size() < static_cast<std::size_t>(window)) return false;
  const auto tail = trace.subspan(trace.size() - static_cast<std::size_t>(window));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end(), [](const TraceEntry& a, const TraceEntry& b) {
    return a.loss < b.loss;
  });
  return hi->loss - lo->loss < threshold;
}

RunResult run(OptState& state, const Objective& objective, const Schedule& sched,
              const NoiseModel& noise, const StopRule& stop) {
  if (stop.max_steps < 1) throw std::invalid_argument("run: max_steps must be >= 1");
  RunResult result;
  for (long s = 0; s < stop.max_steps; ++s) {
    step(state, objective, sched, noise);
    ++result.steps;
    const double threshold = std::max(stop.tol, stop.rel_tol * std::abs(state.trace.front().loss));
    if (window_converged(state.trace, stop.loss_window, threshold)) {
      result.reason = StopReason::loss_window;
      return result;
    }
  }
  result.reason = StopReason::max_steps;
  return result;
}

AssumptionReport check_assumptions(const Schedule& sched, const NoiseModel& noise,
                                   const OptState& state, double norm_bound) {
  AssumptionReport r;
  std::ostringstream detail;
  // Inverse time with a, b > 0 behaves like 1/k: divergent sum, summable squares.
  r.step_sizes = sched.kind == Schedule::Kind::inverse_time && sched.a > 0.0 && sched.b > 0.0;
  detail << "step sizes: " << (r.step_sizes ? "ok" : "violated (need decaying a/(1+bk), a,b > 0)");

  double sup = 0.0;
  for (double v : state.x) {
    if (!std::isfinite(v)) sup = std::numeric_limits<double>::infinity();
  }
  sup = std::max({sup, state.max_norm, norm(state.x)});
  r.bounded_iterates = sup < norm_bound;
  detail << "; sup |x_k| = " << sup << (r.bounded_iterates ? " (bounded)" : " (unbounded)");

  if (noise.kind == NoiseModel::Kind::none || state.noise_count == 0.0) {
    r.zero_mean_noise = true;
    detail << "; no injected noise";
  } else {
    const double mean = state.noise_sum / state.noise_count;
    const double limit = 3.0 * noise.stddev / std::sqrt(state.noise_count);
    r.zero_mean_noise = std::abs(mean) <= limit;
    detail << "; noise mean " << mean << " vs limit " << limit;
  }
  r.detail = detail.str();
  return r;
}

}  // namespace persopt
