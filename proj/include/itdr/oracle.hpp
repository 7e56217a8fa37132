#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "itdr/geometry.hpp"
#include "itdr/rng.hpp"

namespace itdr {

/// Synthetic estimator: ground truth plus parameterized noise and bias. Lets
/// the fusion math be verified against closed-form statistics, independently
/// of any learning. The orientation noise grows toward theta = pi, modelling
/// the empirically hard "long axis pointing away from the camera" poses.
struct NoiseOracle {
  double sigma_pos = 0.0;    // meters, per position component
  double sigma_theta = 0.0;  // radians
  double amplification = 0.0;  // orientation-dependent noise growth factor
  double bias_x = 0.0, bias_y = 0.0, bias_theta = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma_pos < 0 || sigma_theta < 0 || amplification < 0)
      throw std::invalid_argument("NoiseOracle: sigma and amplification must be >= 0");
  }

  /// Effective orientation noise: sigma_theta * (1 + a * (1 - cos theta) / 2),
  /// i.e. sigma_theta at theta = 0 and (1 + a) * sigma_theta at theta = pi.
  double sigma_theta_eff(double theta) const {
    return sigma_theta * (1.0 + amplification * 0.5 * (1.0 - std::cos(theta)));
  }
};

/// One oracle draw. Deterministic in (oracle.seed, draw_index): position
/// noise is Gaussian, orientation noise is a wrapped Gaussian at the
/// orientation-dependent sigma.
inline Pose2 oracle_predict(const NoiseOracle& oracle, const Pose2& truth,
                            std::uint64_t draw_index) {
  oracle.validate();
  Rng rng(derive_seed(oracle.seed, draw_index));
  const double dx = rng.normal(oracle.sigma_pos);
  const double dy = rng.normal(oracle.sigma_pos);
  const double dtheta = rng.normal(oracle.sigma_theta_eff(truth.theta));
  return Pose2(truth.x + oracle.bias_x + dx, truth.y + oracle.bias_y + dy,
               truth.theta + oracle.bias_theta + dtheta, truth.mask);
}

}  // namespace itdr
