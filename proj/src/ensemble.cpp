#include "qtherm/ensemble.hpp"

#include "qtherm/error.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace qtherm {

namespace {

constexpr double kDegenerateEnergy = 1e-14;
constexpr double kPurityPreserved = 1e-12;
constexpr double kProbabilitySlack = 1e-12;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("ensemble csv: cannot parse " + what + " '" + text + "'");
}

} // namespace

double DiagonalEnsemble::total_probability() const noexcept {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

void DiagonalEnsemble::validate(double norm_tol) const {
  if (probs.empty()) throw ValidationError("diagonal ensemble is empty");
  if (energies.size() != probs.size())
    throw ValidationError("diagonal ensemble: " + std::to_string(energies.size()) +
                          " energies but " + std::to_string(probs.size()) + " probabilities");
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const double p = probs[n];
    if (!(p >= 0.0 && p <= 1.0 + kProbabilitySlack))
      throw ValidationError("diagonal ensemble: p[" + std::to_string(n) + "] = " +
                            std::to_string(p) + " outside [0, 1]");
    if (!std::isfinite(energies[n]))
      throw ValidationError("diagonal ensemble: non-finite energy at index " + std::to_string(n));
  }
  const double sum = total_probability();
  if (std::abs(sum - 1.0) > norm_tol) {
    std::ostringstream msg;
    msg << "diagonal ensemble not normalized: sum p = " << std::setprecision(15) << sum;
    throw ValidationError(msg.str());
  }
}

double entropy(const DiagonalEnsemble& ens) {
  ens.validate();
  double s = 0.0;
  for (const double p : ens.probs)
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

double mean_energy(const DiagonalEnsemble& ens) {
  ens.validate();
  return std::transform_reduce(ens.energies.begin(), ens.energies.end(), ens.probs.begin(), 0.0);
}

TemperatureEstimate temperature_from_pair(const DiagonalEnsemble& a, const DiagonalEnsemble& b) {
  if (a.lambda && b.lambda && std::abs(*a.lambda - *b.lambda) > 1e-12)
    throw ValidationError("temperature_from_pair: ensembles built at different lambda");

  TemperatureEstimate t;
  t.dS = entropy(b) - entropy(a);
  t.dE = mean_energy(b) - mean_energy(a);
  if (!std::isfinite(t.dS) || !std::isfinite(t.dE))
    throw ValidationError("temperature_from_pair: non-finite entropy or energy difference");

  if (std::abs(t.dS) <= kPurityPreserved) {
    t.beta = std::numeric_limits<double>::infinity();
    t.temperature = 0.0;
    return t;
  }
  if (std::abs(t.dE) < kDegenerateEnergy) {
    std::ostringstream msg;
    msg << "temperature_from_pair: energy difference " << t.dE << " vanishes while entropy changes by "
        << t.dS;
    throw DegenerateEnergyError(msg.str());
  }
  t.beta = t.dS / t.dE;
  t.temperature = 1.0 / t.beta;
  return t;
}

DiagonalEnsemble renormalize(DiagonalEnsemble ens) {
  if (ens.probs.empty()) throw ValidationError("renormalize: empty ensemble");
  const double sum = ens.total_probability();
  if (!(sum > 0.0)) throw ValidationError("renormalize: all probabilities are zero");
  for (double& p : ens.probs) p /= sum;
  ens.discarded_mass = 1.0 - sum;
  return ens;
}

void write_ensemble_csv(std::ostream& out, const DiagonalEnsemble& ens) {
  const auto old_precision = out.precision(12);
  out << "# label: " << ens.label << '\n';
  if (ens.lambda) out << "# lambda: " << *ens.lambda << '\n';
  if (ens.delta_lambda) out << "# delta_lambda: " << *ens.delta_lambda << '\n';
  out << "# discarded_mass: " << ens.discarded_mass << '\n';
  out << "energy,probability\n";
  for (std::size_t n = 0; n < ens.size(); ++n) out << ens.energies[n] << ',' << ens.probs[n] << '\n';
  out.precision(old_precision);
}

DiagonalEnsemble read_ensemble_csv(std::istream& in) {
  DiagonalEnsemble ens;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const auto key = trim(line.substr(1, colon - 1));
      const auto value = trim(line.substr(colon + 1));
      if (key == "label") ens.label = value;
      else if (key == "lambda") ens.lambda = parse_double(value, key);
      else if (key == "delta_lambda") ens.delta_lambda = parse_double(value, key);
      else if (key == "discarded_mass") ens.discarded_mass = parse_double(value, key);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line == "energy,probability") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("ensemble csv: expected two columns in '" + line + "'");
    ens.energies.push_back(parse_double(line.substr(0, comma), "energy"));
    ens.probs.push_back(parse_double(line.substr(comma + 1), "probability"));
  }
  ens.validate();
  return ens;
}

} // namespace qtherm
