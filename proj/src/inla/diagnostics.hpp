#pragma once

#include <string>
#include <vector>

#include "inla/fit.hpp"
#include "inla/marginal.hpp"
#include "inla/model.hpp"

namespace inla {

struct DicResult {
  double mean_deviance = 0.0;        // D-bar
  double deviance_at_mean = 0.0;     // D(eta-bar)
  double p_d = 0.0;
  double dic = 0.0;
};

// Plug-in convention: D is evaluated at the posterior mean of the linear
// predictor. E[D] under each Gaussian approximation uses the second-order
// expansion of the deviance around the mode.
DicResult dic(const FitResult& fit, const LatentModel& model);

// Assembles D-bar and D(eta-bar) into the result; dic = 2 D-bar - D(eta-bar).
DicResult make_dic(double mean_deviance, double deviance_at_mean);

struct EffectRow {
  std::string block;
  std::string label;
  Summary exp_summary;   // of exp(x_j), from the marginal grid
  Summary summary;       // of x_j itself
  bool reference = false;  // the reference level of a zone factor
};

std::vector<EffectRow> effect_summaries(const FitResult& fit, const LatentModel& model);

}  // namespace inla
