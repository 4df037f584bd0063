#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcplan {

/// Thrown when an iterative solver fails to reach its residual target.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, double res) : std::runtime_error(what), residual(res) {}
  double residual;
};

/// Binary Kullback-Leibler divergence kl(u, v) between Bernoulli(u) and
/// Bernoulli(v), with the 0*log(0/x) = 0 conventions and +inf when v is a
/// disagreeing endpoint. Inputs outside [0,1] throw std::domain_error.
double kl_bernoulli(double u, double v);

/// max{v in [p_hat, 1] : kl(p_hat, v) <= level}, bracketed bisection to
/// absolute tolerance 1e-9 (the divergence is increasing on [p_hat, 1]).
double kl_ucb_upper(double p_hat, double level);

/// min{v in [0, p_hat] : kl(p_hat, v) <= level}, mirror of kl_ucb_upper.
double kl_ucb_lower(double p_hat, double level);

/// KL(p, q) between categorical distributions; +inf if supp(p) is not
/// contained in supp(q). Dimension mismatch throws std::domain_error.
double kl_categorical(std::span<const double> p, std::span<const double> q);

/// Linear optimization over a KL confidence ball around p_hat:
/// optimize sum_i q_i values_i over {q in simplex : KL(p_hat, q) <= radius}.
/// radius may be +inf (the whole simplex); radius = 0 returns the plug-in.
struct KlBallProblem {
  std::vector<double> p_hat;   // sums to 1, entries >= 0
  double radius = 0.0;         // >= 0, may be +inf
  std::vector<double> values;  // one payoff per slot

  void validate() const;
};

struct KlBallSolution {
  double value = 0.0;
  std::vector<double> q;  // the optimizing distribution
};

KlBallSolution max_over_kl_ball(const KlBallProblem& problem);
KlBallSolution min_over_kl_ball(const KlBallProblem& problem);

enum class ThresholdKind { theoretical, practical, fixed_budget };

/// Exploration-rate functions beta^r, beta^p, beta^cnt and their maximum.
/// theoretical: the calibrated rates guaranteeing P(E) >= 1-delta;
/// practical:   beta_r = log(1/delta) + loglog n, beta_p = log(1/delta) + log n;
/// fixed_budget: everything log(budget_episodes), independent of n.
struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::theoretical;
  double delta = 0.1;
  int horizon = 1;       // H
  int branching = 1;     // B
  int num_actions = 1;   // K
  double budget_episodes = 0.0;  // tau, fixed_budget kind only

  void validate() const;
  double reward(double n) const;      // beta^r(n, delta)
  double transition(double n) const;  // beta^p(n, delta)
  double count() const;               // beta^cnt(delta)
  double master(double n) const;      // beta(n, delta) = max of the three
};

enum class CoverageKind { bounded_mean, categorical, count_martingale };

/// Monte-Carlo check of the time-uniform deviation inequalities. Each trial
/// draws a stream of length `stream_length` and flags a violation if the
/// inequality fails at any prefix; returns the fraction of flagged trials
/// (guaranteed <= delta at beta_scale = 1).
struct CoverageConfig {
  CoverageKind kind = CoverageKind::bounded_mean;
  int trials = 1000;
  int stream_length = 1000;
  double delta = 0.1;
  uint64_t seed = 0;
  int support = 3;          // m, categorical kind
  double mean = 0.3;        // bounded_mean kind
  double beta_scale = 1.0;  // shrink the threshold to provoke violations
};

double coverage_test(const CoverageConfig& cfg);

}  // namespace mcplan
