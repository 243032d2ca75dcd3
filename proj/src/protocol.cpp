#include "qtherm/protocol.hpp"

#include "qtherm/error.hpp"

#include <cmath>

namespace qtherm {

std::vector<double> QuenchProtocol::lambdas() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(stations));
  for (int i = 1; i <= stations; ++i) out.push_back(lambda(i));
  return out;
}

void QuenchProtocol::validate() const {
  if (stations < 2) throw ValidationError("quench protocol needs at least 2 stations");
  if (!std::isfinite(lambda_start) || !std::isfinite(delta_lambda))
    throw ValidationError("quench protocol: lambda_start and delta_lambda must be finite");
}

} // namespace qtherm
