#include "stripeforge/bayesopt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stripeforge/error.hpp"

namespace stripeforge {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

class LocalGp {
 public:
  LocalGp(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
          std::span<const std::size_t> subset, const BoOptions& opt)
      : ls2_(2.0 * opt.length_scale * opt.length_scale) {
    const auto n = static_cast<Eigen::Index>(subset.size());
    for (auto i : subset) x_.push_back(&xs[i]);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = ys[subset[static_cast<std::size_t>(i)]];
    mean_ = y.mean();
    scale_ = std::sqrt((y.array() - mean_).square().mean());
    if (!(scale_ > 1e-12)) scale_ = 1.0;
    y = (y.array() - mean_) / scale_;

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        k(i, j) = k(j, i) = kernel(*x_[static_cast<std::size_t>(i)], *x_[static_cast<std::size_t>(j)]);
      }
    }
    double jitter = opt.noise;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      llt_.compute(kj);
      if (llt_.info() == Eigen::Success) break;
      jitter *= 10.0;
    }
    alpha_ = llt_.solve(y);
  }

  /// Posterior mean and standard deviation in the original units.
  std::pair<double, double> predict(std::span<const double> x) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks[i] = kernel(*x_[static_cast<std::size_t>(i)], x);
    const double mu = ks.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    const double var = std::max(1.0 - v.squaredNorm(), 1e-12);
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

 private:
  double kernel(std::span<const double> a, std::span<const double> b) const {
    return std::exp(-sq_dist(a, b) / ls2_);
  }

  double ls2_;
  std::vector<const std::vector<double>*> x_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double mean_ = 0.0;
  double scale_ = 1.0;
};

double expected_improvement(double mu, double sd, double best) {
  const double z = (best - mu) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return (best - mu) * cdf + sd * pdf;
}

}  // namespace

BoResult bayes_minimize(const std::function<double(std::span<const double>)>& objective,
                        std::size_t dim, std::size_t budget, std::uint64_t seed,
                        const BoOptions& options) {
  if (dim == 0) throw ConfigError("optimisation dimension must be positive");
  if (budget == 0) throw ConfigError("query budget must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  BoResult result;
  std::size_t best = 0;
  auto query = [&](std::vector<double> x) {
    for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
    const double y = objective(x);
    xs.push_back(std::move(x));
    ys.push_back(y);
    result.history.push_back(y);
    if (ys.size() == 1 || y < ys[best]) best = ys.size() - 1;
  };

  const std::size_t n_init = std::min(budget, options.initial_points ? options.initial_points : 2 * dim + 1);
  for (std::size_t i = 0; i < n_init; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = unit(rng);
    query(std::move(x));
  }

  std::vector<std::size_t> order;
  std::vector<double> cand(dim);
  while (xs.size() < budget) {
    order.resize(xs.size());
    std::iota(order.begin(), order.end(), 0);
    if (order.size() > options.local_points) {
      const auto& inc = xs[best];
      std::vector<double> dist(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) dist[i] = sq_dist(xs[i], inc);
      std::nth_element(order.begin(), order.begin() + static_cast<long>(options.local_points), order.end(),
                       [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
      order.resize(options.local_points);
      std::sort(order.begin(), order.end());
    }
    const LocalGp gp(xs, ys, order, options);
    const double y_best = ys[best];
    auto ei = [&](std::span<const double> x) {
      const auto [mu, sd] = gp.predict(x);
      return expected_improvement(mu, sd, y_best);
    };

    std::vector<double> arg = xs[best];
    double arg_ei = -1.0;
    for (std::size_t k = 0; k < options.candidates; ++k) {
      if (k % 2 == 0) {
        for (auto& v : cand) v = unit(rng);
      } else {
        for (std::size_t d = 0; d < dim; ++d) {
          cand[d] = std::clamp(xs[best][d] + options.local_sd * gauss(rng), 0.0, 1.0);
        }
      }
      const double e = ei(cand);
      if (e > arg_ei) {
        arg_ei = e;
        arg = cand;
      }
    }
    for (double step : {0.05, 0.01}) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t d = 0; d < dim; ++d) {
          for (double sgn : {-1.0, 1.0}) {
            cand = arg;
            cand[d] = std::clamp(cand[d] + sgn * step, 0.0, 1.0);
            const double e = ei(cand);
            if (e > arg_ei * (1.0 + 1e-9)) {
              arg_ei = e;
              arg = cand;
              improved = true;
            }
          }
        }
      }
    }
    query(arg);
  }

  result.x = xs[best];
  result.value = ys[best];
  result.queries = xs.size();
  return result;
}

}  // namespace stripeforge
