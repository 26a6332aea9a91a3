#include "inla/diagnostics.hpp"

#include <cmath>

#include "inla/errors.hpp"

namespace inla {

DicResult make_dic(double mean_deviance, double deviance_at_mean) {
  DicResult r;
  r.mean_deviance = mean_deviance;
  r.deviance_at_mean = deviance_at_mean;
  r.p_d = mean_deviance - deviance_at_mean;
  r.dic = 2.0 * mean_deviance - deviance_at_mean;
  return r;
}

DicResult dic(const FitResult& fit, const LatentModel& model) {
  if (fit.states.empty()) throw DiagnosticsUnavailable("fit carries no per-theta state");
  const auto& obs = model.observations();
  const std::size_t m = model.n_obs();
  double dbar = 0.0;
  Eigen::VectorXd eta_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  double wsum = 0.0;
  for (const ThetaState& s : fit.states) {
    if (static_cast<std::size_t>(s.eta.size()) != m || static_cast<std::size_t>(s.eta_variance.size()) != m) {
      throw DiagnosticsUnavailable("per-theta state has the wrong size");
    }
    double dk = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double eta = s.eta[jj];
      const double d2 = obs.derivatives(j, eta).d2;
      dk += -2.0 * (obs.log_density(j, eta) + 0.5 * d2 * s.eta_variance[jj]);
    }
    dbar += s.weight * dk;
    eta_bar += s.weight * s.eta;
    wsum += s.weight;
  }
  if (!(wsum > 0.0)) throw DiagnosticsUnavailable("theta weights sum to zero");
  dbar /= wsum;
  eta_bar /= wsum;
  const double dhat = -2.0 * model.log_likelihood_eta(eta_bar);
  return make_dic(dbar, dhat);
}

std::vector<EffectRow> effect_summaries(const FitResult& fit, const LatentModel& model) {
  std::vector<EffectRow> rows;
  const auto exp_fn = [](double v) { return std::exp(v); };
  for (const auto& b : model.layout().blocks) {
    if (b.kind == BlockKind::ZoneFixed) {
      // reference level first in label order
      const Term& t = model.spec().terms[b.term];
      EffectRow ref;
      ref.block = b.name;
      ref.label = t.reference;
      ref.reference = true;
      ref.exp_summary = {1.0, 0.0, 1.0, 1.0, 1.0};
      ref.summary = {0.0, 0.0, 0.0, 0.0, 0.0};
      std::vector<EffectRow> block_rows;
      for (std::size_t k = 0; k < b.length; ++k) {
        const auto& marg = fit.latent.at(b.offset + k);
        block_rows.push_back({b.name, b.labels[k], marg.summary_transformed(exp_fn), marg.summary(), false});
      }
      // keep the reference where it sorts among the levels
      bool placed = false;
      auto num = [](const std::string& s, double& out) {
        char* end = nullptr;
        out = std::strtod(s.c_str(), &end);
        return !s.empty() && end == s.c_str() + s.size();
      };
      double rv = 0.0;
      const bool ref_numeric = num(ref.label, rv);
      for (auto& r : block_rows) {
        double v = 0.0;
        const bool before = ref_numeric && num(r.label, v) ? rv < v : ref.label < r.label;
        if (!placed && before) {
          rows.push_back(ref);
          placed = true;
        }
        rows.push_back(r);
      }
      if (!placed) rows.push_back(ref);
      continue;
    }
    for (std::size_t k = 0; k < b.length; ++k) {
      const auto& marg = fit.latent.at(b.offset + k);
      rows.push_back({b.name, b.labels[k], marg.summary_transformed(exp_fn), marg.summary(), false});
    }
  }
  return rows;
}

}  // namespace inla
