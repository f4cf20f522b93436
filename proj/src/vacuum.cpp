#include "dwq/vacuum.hpp"

#include <cmath>
#include <numbers>

#include "dwq/errors.hpp"

namespace dwq::vacuum {

void CutoffConfig::validate() const {
  if (!(Q > 0) || !(Vbox > 0) || !(hbar > 0) || !(m > 0) || n < 2)
    throw InvalidParameter("CutoffConfig: all parameters must be positive, n >= 2");
}

double kappa_from_cutoff(const CutoffConfig& cfg) {
  cfg.validate();
  return cfg.Q / std::pow(2.0 * std::numbers::pi, cfg.n - 1);
}

double functional_coeff(const CutoffConfig& cfg, double k) {
  cfg.validate();
  const double wk = std::sqrt(cfg.m * cfg.m / (cfg.hbar * cfg.hbar) + k * k);
  return wk / (2.0 * cfg.Vbox * cfg.hbar);
}

double composed_coeff(const CutoffConfig& cfg, double kappa) {
  cfg.validate();
  if (!(kappa > 0)) throw InvalidParameter("composed_coeff: kappa <= 0");
  return cfg.m * cfg.Q /
         (2.0 * std::pow(2.0 * std::numbers::pi, cfg.n - 1) * cfg.Vbox *
          cfg.hbar * cfg.hbar * kappa);
}

double composed_coeff(const CutoffConfig& cfg) {
  return composed_coeff(cfg, kappa_from_cutoff(cfg));
}

std::vector<ModeCoefficients> compare(const CutoffConfig& cfg,
                                      std::span<const double> k_list,
                                      double kappa, Exec exec) {
  cfg.validate();
  std::vector<ModeCoefficients> out(k_list.size());
  const double comp = composed_coeff(cfg, kappa);
  parallel_for(exec, k_list.size(), [&](std::size_t i) {
    const double k = k_list[i];
    const double fun = functional_coeff(cfg, k);
    out[i] = {k, fun, comp, comp / fun};
  });
  return out;
}

std::vector<ModeCoefficients> compare(const CutoffConfig& cfg,
                                      std::span<const double> k_list,
                                      Exec exec) {
  return compare(cfg, k_list, kappa_from_cutoff(cfg), exec);
}

} // namespace dwq::vacuum
