#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace stripeforge {

struct BoOptions {
  double length_scale = 0.2;       ///< SE kernel length scale, box units
  double noise = 1e-6;             ///< diagonal jitter on the standardised targets
  std::size_t initial_points = 0;  ///< 0 picks 2*dim + 1
  std::size_t local_points = 128;  ///< observations nearest the incumbent used by the GP
  std::size_t candidates = 256;    ///< EI multi-start candidates per iteration
  double local_sd = 0.1;           ///< spread of candidates drawn around the incumbent
};

struct BoResult {
  std::vector<double> x;        ///< best point, in [0, 1]^dim
  double value = 0.0;           ///< objective at x
  std::size_t queries = 0;
  std::vector<double> history;  ///< objective value of every query, in order
};

/// Minimises `objective` over the unit box with a Gaussian-process surrogate
/// (squared-exponential kernel) and expected-improvement acquisition.
/// Never evaluates outside the box and never exceeds `budget` queries.
BoResult bayes_minimize(const std::function<double(std::span<const double>)>& objective,
                        std::size_t dim, std::size_t budget, std::uint64_t seed,
                        const BoOptions& options = {});

}  // namespace stripeforge
