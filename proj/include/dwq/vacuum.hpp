#pragma once
#include <span>
#include <vector>

#include "dwq/parallel.hpp"

namespace dwq::vacuum {

// Parameters of the vacuum amplitude comparison: ultraviolet cutoff Q,
// spatial volume, spacetime dimension, hbar and the field mass.
struct CutoffConfig {
  double Q;
  double Vbox;
  int n;
  double hbar = 1.0;
  double m = 1.0;

  void validate() const;
};

// kappa = Q / (2 pi)^{n-1}
double kappa_from_cutoff(const CutoffConfig& cfg);

// Gaussian log-amplitude coefficient of ytilde^2(k) in the mode product of
// the functional vacuum: w_k / (2 V hbar), w_k = sqrt(m^2/hbar^2 + k^2).
double functional_coeff(const CutoffConfig& cfg, double k);

// Same coefficient in the composed per-point product: m Q /
// (2 (2 pi)^{n-1} V hbar^2 kappa); with the cutoff identification this is
// m / (2 V hbar^2), independent of k.
double composed_coeff(const CutoffConfig& cfg, double kappa);
double composed_coeff(const CutoffConfig& cfg); // kappa identified

struct ModeCoefficients {
  double k;
  double functional;
  double composed;
  double ratio; // composed / functional
};

std::vector<ModeCoefficients> compare(const CutoffConfig& cfg,
                                      std::span<const double> k_list,
                                      Exec exec = Exec::serial);
std::vector<ModeCoefficients> compare(const CutoffConfig& cfg,
                                      std::span<const double> k_list,
                                      double kappa, Exec exec = Exec::serial);

} // namespace dwq::vacuum
