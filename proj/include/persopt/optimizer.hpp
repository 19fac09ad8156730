#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace persopt {

/// Learning-rate schedule alpha_k.
struct Schedule {
  enum class Kind { inverse_time, constant };
  Kind kind = Kind::inverse_time;
  double a = 0.1;   // initial rate
  double b = 0.01;  // decay; alpha_k = a / (1 + b k)

  double rate(long k) const;
  static Schedule inverse_time(double a, double b) { return {Kind::inverse_time, a, b}; }
  static Schedule constant(double a) { return {Kind::constant, a, 0.0}; }
};

/// Additive gradient noise zeta_k.
struct NoiseModel {
  enum class Kind { none, gaussian };
  Kind kind = Kind::none;
  double stddev = 0.0;
};

/// Loss and one subgradient at a point.
struct Evaluation {
  double loss = 0.0;
  std::vector<double> grad;
};

using Objective = std::function<Evaluation(std::span<const double>)>;

struct TraceEntry {
  long step;
  double loss;
  double grad_norm;
  double alpha;
};

/// Iterate, step counter, trace and random state of one run.
struct OptState {
  std::vector<double> x;
  long k = 0;
  std::vector<TraceEntry> trace;
  std::uint64_t rng_seed = 0;
  std::mt19937_64 rng;
  // Running sums of the injected noise, for the zero-mean diagnostic.
  double noise_sum = 0.0;
  double noise_count = 0.0;
  double max_norm = 0.0;

  OptState() = default;
  OptState(std::vector<double> x0, std::uint64_t seed);
};

/// x <- x - alpha_k (y_k + zeta_k) with y_k = objective(x).grad.  Throws
/// std::runtime_error on a non-finite loss, gradient or iterate.
void step(OptState& state, const Objective& objective, const Schedule& sched, const NoiseModel& noise);

struct StopRule {
  long max_steps = 1000;
  long loss_window = 200;
  double tol = 0.0;           // absolute range threshold
  double rel_tol = 0.0;       // threshold relative to |first loss|
};

enum class StopReason { max_steps, loss_window };

struct RunResult {
  StopReason reason = StopReason::max_steps;
  long steps = 0;
};

/// Steps until max_steps or until the losses of the last loss_window steps
/// span a range below max(tol, rel_tol * |first loss|).
RunResult run(OptState& state, const Objective& objective, const Schedule& sched,
              const NoiseModel& noise, const StopRule& stop);

/// True when the last `window` losses span a range below `threshold`.
bool window_converged(std::span<const TraceEntry> trace, long window, double threshold);

struct AssumptionReport {
  bool step_sizes = false;      // sum alpha = inf and sum alpha^2 < inf
  bool bounded_iterates = false;
  bool zero_mean_noise = false;
  std::string detail;
};

/// Diagnostic check of the step-size, boundedness and noise hypotheses of
/// the convergence result for stochastic subgradient descent.
AssumptionReport check_assumptions(const Schedule& sched, const NoiseModel& noise,
                                   const OptState& state, double norm_bound = 1e6);

}  // namespace persopt
