#include "mcplan/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcplan/common.hpp"

namespace mcplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInversionTol = 1e-9;
constexpr double kBallResidualTol = 1e-8;
constexpr int kIterationCap = 100;

double xlogx_ratio(double x, double y) {
  // x*log(x/y) with the x=0 convention; +inf when x>0 and y=0.
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return kInf;
  return x * std::log(x / y);
}

}  // namespace

double kl_bernoulli(double u, double v) {
  if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0))
    throw std::domain_error("kl_bernoulli: arguments must lie in [0,1]");
  return xlogx_ratio(u, v) + xlogx_ratio(1.0 - u, 1.0 - v);
}

double kl_ucb_upper(double p_hat, double level) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0))
    throw std::domain_error("kl_ucb_upper: p_hat must lie in [0,1]");
  if (!(level >= 0.0)) throw std::domain_error("kl_ucb_upper: level must be >= 0");
  if (p_hat >= 1.0) return 1.0;
  if (level == 0.0) return p_hat;
  if (kl_bernoulli(p_hat, 1.0) <= level) return 1.0;  // only reachable if p_hat = 1
  double lo = p_hat, hi = 1.0;
  // kl(p_hat, .) is increasing on [p_hat, 1]; bisect until the bracket is
  // far below the 1e-9 tolerance.
  for (int i = 0; i < kIterationCap && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kl_bernoulli(p_hat, mid) <= level)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double kl_ucb_lower(double p_hat, double level) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0))
    throw std::domain_error("kl_ucb_lower: p_hat must lie in [0,1]");
  if (!(level >= 0.0)) throw std::domain_error("kl_ucb_lower: level must be >= 0");
  if (p_hat <= 0.0) return 0.0;
  if (level == 0.0) return p_hat;
  if (kl_bernoulli(p_hat, 0.0) <= level) return 0.0;
  double lo = 0.0, hi = p_hat;
  for (int i = 0; i < kIterationCap && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kl_bernoulli(p_hat, mid) <= level)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::domain_error("kl_categorical: dimension mismatch");
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double term = xlogx_ratio(p[i], q[i]);
    if (term == kInf) return kInf;
    kl += term;
  }
  return std::max(kl, 0.0);
}

void KlBallProblem::validate() const {
  if (p_hat.empty() || p_hat.size() != values.size())
    throw std::invalid_argument("KlBallProblem: need matching, nonempty p_hat and values");
  if (!(radius >= 0.0)) throw std::invalid_argument("KlBallProblem: radius must be >= 0");
  double sum = 0.0;
  for (double p : p_hat) {
    if (p < 0.0) throw std::invalid_argument("KlBallProblem: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("KlBallProblem: p_hat must sum to 1");
}

namespace {

// Shared state of the KKT solve for max_over_kl_ball. Stationarity gives
// q_i = lambda * p_i / (mu - v_i) on the support of p_hat; mass can leave the
// support only onto the globally best slot, which pins mu to that value.
// The solve is parametrized by eta = mu - v_sup so that mu - v_i can be
// formed as eta + (v_sup - v_i) without absorbing tiny offsets.
struct BallWork {
  const std::vector<double>& p;
  const std::vector<double>& v;
  std::vector<int> support;  // indices with p_i > 0
  std::vector<double> gap;   // v_sup - v_i per support slot, >= 0

  double tilt_kl(double eta) const {
    // KL(p_hat, q(eta)) for the stationary q with all mass on the support.
    double log_terms = 0.0, denom = 0.0;
    for (size_t k = 0; k < support.size(); ++k) {
      const int i = support[k];
      log_terms += p[i] * std::log(eta + gap[k]);
      denom += p[i] / (eta + gap[k]);
    }
    return log_terms + std::log(denom);
  }
};

KlBallSolution plug_in(const KlBallProblem& pb) {
  KlBallSolution sol;
  sol.q = pb.p_hat;
  sol.value = 0.0;
  for (size_t i = 0; i < pb.p_hat.size(); ++i) sol.value += pb.p_hat[i] * pb.values[i];
  return sol;
}

KlBallSolution solve_max(const KlBallProblem& pb) {
  pb.validate();
  const size_t m = pb.p_hat.size();
  const auto& p = pb.p_hat;
  const auto& v = pb.values;

  if (pb.radius == 0.0 || m == 1) return plug_in(pb);

  size_t best_all = 0;
  for (size_t i = 1; i < m; ++i)
    if (v[i] > v[best_all]) best_all = i;

  if (pb.radius == kInf) {
    KlBallSolution sol;
    sol.q.assign(m, 0.0);
    sol.q[best_all] = 1.0;
    sol.value = v[best_all];
    return sol;
  }

  BallWork work{p, v, {}, {}};
  double v_sup = -kInf;
  for (size_t i = 0; i < m; ++i) {
    if (p[i] > 0.0) {
      work.support.push_back(static_cast<int>(i));
      v_sup = std::max(v_sup, v[i]);
    }
  }
  for (int i : work.support) work.gap.push_back(v_sup - v[i]);

  // Degenerate payoff spread: every feasible q has the same value.
  double v_lo = kInf, v_hi = -kInf;
  for (size_t i = 0; i < m; ++i) {
    v_lo = std::min(v_lo, v[i]);
    v_hi = std::max(v_hi, v[i]);
  }
  if (v_hi - v_lo < 1e-15) return plug_in(pb);

  // Case B: the best slot lies outside the support; mu is pinned to its
  // value and the KL budget is spent exactly (lambda from the constraint).
  if (v[best_all] > v_sup) {
    const double v_star = v[best_all];
    double log_terms = 0.0, denom = 0.0, mean_ratio = 0.0;
    for (int i : work.support) {
      log_terms += p[i] * std::log(v_star - v[i]);
      denom += p[i] / (v_star - v[i]);
      mean_ratio += p[i] * v[i] / (v_star - v[i]);
    }
    const double lambda = std::exp(log_terms - pb.radius);
    const double omega = 1.0 - lambda * denom;  // mass granted to the best slot
    if (omega >= 0.0) {
      KlBallSolution sol;
      sol.q.assign(m, 0.0);
      for (int i : work.support) sol.q[i] = lambda * p[i] / (v_star - v[i]);
      sol.q[best_all] += omega;
      sol.value = omega * v_star + lambda * mean_ratio;
      return sol;
    }
  }

  if (work.support.size() == 1) {
    // Point mass whose own slot is the global argmax: the budget buys nothing.
    return plug_in(pb);
  }

  // Case A: interior solution, KL constraint active. tilt_kl decreases from
  // +inf (eta -> 0) to 0 (eta -> inf); bisect on log(eta).
  const double scale = std::max(v_hi - v_lo, 1.0);
  double y_lo = -700.0, y_hi = std::log(scale);
  bool collapsed = false;
  while (work.tilt_kl(std::exp(y_hi)) > pb.radius) {
    y_hi += 1.0;
    if (y_hi > 700.0) throw NumericError("max_over_kl_ball: failed to bracket", kInf);
  }
  if (work.tilt_kl(std::exp(y_lo)) < pb.radius) {
    // Cannot tilt this hard in double range; the optimum is numerically the
    // point mass on the best support slot, with KL budget to spare.
    y_hi = y_lo;
    collapsed = true;
  }
  for (int i = 0; i < 2 * kIterationCap && y_hi - y_lo > 1e-14; ++i) {
    const double mid = 0.5 * (y_lo + y_hi);
    if (work.tilt_kl(std::exp(mid)) > pb.radius)
      y_lo = mid;
    else
      y_hi = mid;
  }
  const double eta = std::exp(0.5 * (y_lo + y_hi));

  double denom = 0.0;
  for (size_t k = 0; k < work.support.size(); ++k)
    denom += p[work.support[k]] / (eta + work.gap[k]);
  const double lambda = 1.0 / denom;
  KlBallSolution sol;
  sol.q.assign(m, 0.0);
  sol.value = 0.0;
  for (size_t k = 0; k < work.support.size(); ++k) {
    const int i = work.support[k];
    sol.q[i] = lambda * p[i] / (eta + work.gap[k]);
    sol.value += sol.q[i] * v[i];
  }

  if (!collapsed) {
    const double residual = std::abs(kl_categorical(p, sol.q) - pb.radius);
    if (!(residual <= std::max(kBallResidualTol, 1e-6 * pb.radius)))
      throw NumericError("max_over_kl_ball: residual above tolerance", residual);
  }
  return sol;
}

}  // namespace

KlBallSolution max_over_kl_ball(const KlBallProblem& problem) { return solve_max(problem); }

KlBallSolution min_over_kl_ball(const KlBallProblem& problem) {
  KlBallProblem negated = problem;
  for (double& x : negated.values) x = -x;
  KlBallSolution sol = solve_max(negated);
  sol.value = -sol.value;
  return sol;
}

void ThresholdSpec::validate() const {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("ThresholdSpec: delta must be in (0,1)");
  if (horizon < 1 || branching < 1 || num_actions < 1)
    throw std::invalid_argument("ThresholdSpec: dimensions must be >= 1");
  if (kind == ThresholdKind::fixed_budget && !(budget_episodes >= 1.0))
    throw std::invalid_argument("ThresholdSpec: fixed_budget needs budget_episodes >= 1");
}

namespace {
double union_bound_log(const ThresholdSpec& s) {
  // log(3 (BK)^H / delta)
  return std::log(3.0) + s.horizon * std::log(double(s.branching) * s.num_actions) -
         std::log(s.delta);
}
}  // namespace

double ThresholdSpec::reward(double n) const {
  switch (kind) {
    case ThresholdKind::theoretical:
      return union_bound_log(*this) + 1.0 + std::log1p(n);
    case ThresholdKind::practical: {
      const double loglog = n > 1.0 ? std::log(std::log(n)) : 0.0;
      return std::log(1.0 / delta) + std::max(0.0, loglog);
    }
    case ThresholdKind::fixed_budget:
      return std::log(budget_episodes);
  }
  return 0.0;
}

double ThresholdSpec::transition(double n) const {
  switch (kind) {
    case ThresholdKind::theoretical: {
      if (branching == 1) return union_bound_log(*this);
      const double b = branching - 1.0;
      return union_bound_log(*this) + b * (1.0 + std::log1p(n / b));
    }
    case ThresholdKind::practical:
      return std::log(1.0 / delta) + std::log(std::max(n, 1.0));
    case ThresholdKind::fixed_budget:
      return std::log(budget_episodes);
  }
  return 0.0;
}

double ThresholdSpec::count() const {
  switch (kind) {
    case ThresholdKind::theoretical:
      return union_bound_log(*this);
    case ThresholdKind::practical:
      return std::log(1.0 / delta);
    case ThresholdKind::fixed_budget:
      return std::log(budget_episodes);
  }
  return 0.0;
}

double ThresholdSpec::master(double n) const {
  // For B >= 2 this equals the closed form log(3(BK)^H/d) + (B-1)log(e(1+n/(B-1)));
  // taking the max keeps the B = 1 continuity convention automatic.
  return std::max({reward(n), transition(n), count()});
}

double coverage_test(const CoverageConfig& cfg) {
  if (cfg.trials < 1 || cfg.stream_length < 1)
    throw std::invalid_argument("coverage_test: trials and stream_length must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw std::invalid_argument("coverage_test: delta must be in (0,1]");

  const double log_inv_delta = std::log(1.0 / cfg.delta);
  int violated_trials = 0;

  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(trial)));
    bool violated = false;
    switch (cfg.kind) {
      case CoverageKind::bounded_mean: {
        double sum = 0.0;
        for (int n = 1; n <= cfg.stream_length && !violated; ++n) {
          sum += rng.bernoulli(cfg.mean) ? 1.0 : 0.0;
          const double stat = n * kl_bernoulli(sum / n, cfg.mean);
          const double thr = (log_inv_delta + 1.0 + std::log1p(n)) * cfg.beta_scale;
          violated = stat > thr;
        }
        break;
      }
      case CoverageKind::categorical: {
        const int m = cfg.support;
        if (m < 2) throw std::invalid_argument("coverage_test: categorical needs support >= 2");
        const std::vector<double> truth(m, 1.0 / m);
        std::vector<double> counts(m, 0.0);
        std::vector<double> hat(m, 0.0);
        for (int n = 1; n <= cfg.stream_length && !violated; ++n) {
          counts[rng.below(m)] += 1.0;
          for (int k = 0; k < m; ++k) hat[k] = counts[k] / n;
          const double stat = n * kl_categorical(hat, truth);
          const double thr =
              (log_inv_delta + (m - 1) * (1.0 + std::log1p(double(n) / (m - 1)))) * cfg.beta_scale;
          violated = stat > thr;
        }
        break;
      }
      case CoverageKind::count_martingale: {
        // Bernoulli stream whose success rate is a function of the past, so
        // the bound is exercised in its martingale form rather than i.i.d.
        double ones = 0.0, pseudo = 0.0;
        for (int n = 1; n <= cfg.stream_length && !violated; ++n) {
          const double p_n = n == 1 ? 0.5 : 0.25 + 0.5 * (ones / (n - 1));
          pseudo += p_n;
          ones += rng.bernoulli(p_n) ? 1.0 : 0.0;
          violated = ones < pseudo / 2.0 - log_inv_delta * cfg.beta_scale;
        }
        break;
      }
    }
    if (violated) ++violated_trials;
  }
  return static_cast<double>(violated_trials) / cfg.trials;
}

}  // namespace mcplan
