#pragma once

#include <vector>

namespace qtherm {

/// Multi-quench schedule: stations lambda_i = lambda_start + (i - 1) * step
/// for i = 1..stations. Station i is reached by a quench of size `step`
/// starting from the ground state at lambda_i - step.
struct QuenchProtocol {
  double lambda_start = 0.0;
  double delta_lambda = 1.0;
  int stations = 2;

  /// 1-based, matching the station numbering of the schedule.
  [[nodiscard]] double lambda(int i) const noexcept {
    return lambda_start + static_cast<double>(i - 1) * delta_lambda;
  }
  [[nodiscard]] std::vector<double> lambdas() const;
  [[nodiscard]] double lambda_end() const noexcept { return lambda(stations); }

  void validate() const;
};

} // namespace qtherm
