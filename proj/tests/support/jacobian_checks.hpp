#pragma once

#include <cstdint>

// Worst relative error between the filter's analytic Jacobians and central
// differences of the nonlinear model, over `states` random states.
namespace checks {

struct JacobianReport {
  double transition = 0.0;   // F
  double noise = 0.0;        // G
  double measurement = 0.0;  // [H_theta, H_pos, H_feature]
  double worst() const;
};

JacobianReport jacobian_errors(int states, std::uint64_t seed, double dt = 1.0 / 400.0);

}  // namespace checks
