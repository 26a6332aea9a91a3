#include "inla/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "inla/errors.hpp"

namespace inla {

namespace {

constexpr std::size_t kMaxLatentDim = 4;
constexpr std::size_t kCoarsePoints = 15;
constexpr int kZoomRounds = 20;
constexpr double kKeep = 30.0;  // log units below the peak that still count
constexpr std::size_t kHistogramBins = 41;

// log joint = base(w) + alpha theta - exp(theta) q(w) / 2 + log pi(theta).
// The latent priors here are all of the form c + alpha theta - tau x'Rx/2 with
// one shared tau, which is what makes the split possible.
struct Separable {
  const LatentModel* model = nullptr;
  Eigen::MatrixXd basis;  // n x d
  Eigen::MatrixXd ab;     // m x d, eta = ab w
  bool has_theta = false;
  double alpha = 0.0;

  struct Point {
    double base = 0.0;
    double q = 0.0;
    double ell = 0.0;
  };

  Point eval(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd x = basis * w;
    const Eigen::VectorXd eta = ab * w;
    Point p;
    p.ell = model->log_likelihood_eta(eta);
    if (!has_theta) {
      p.base = p.ell + model->log_prior_latent(x, Eigen::VectorXd());
      return p;
    }
    const Eigen::VectorXd t0 = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd t1 = Eigen::VectorXd::Constant(1, std::log(2.0));
    const double lp0 = model->log_prior_latent(x, t0);
    const double lp1 = model->log_prior_latent(x, t1);
    p.q = 2.0 * (lp0 - lp1 + alpha * std::log(2.0));
    p.base = p.ell + lp0 + 0.5 * p.q;
    return p;
  }

  double joint(const Point& p, double theta) const {
    if (!has_theta) return p.base;
    return p.base + alpha * theta - 0.5 * std::exp(theta) * p.q +
           model->log_prior_theta(Eigen::VectorXd::Constant(1, theta));
  }
};

std::size_t cell_count(const std::vector<QuadratureRange>& latent, const std::optional<QuadratureRange>& theta) {
  double cells = 1.0;
  for (const auto& r : latent) cells *= static_cast<double>(r.points);
  if (theta) cells *= static_cast<double>(theta->points);
  return cells > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(cells);
}

double step_of(const QuadratureRange& r) {
  return r.points > 1 ? (r.hi - r.lo) / static_cast<double>(r.points - 1) : 0.0;
}

double node(const QuadratureRange& r, std::size_t i) {
  return r.points > 1 ? r.lo + step_of(r) * static_cast<double>(i) : 0.5 * (r.lo + r.hi);
}

// Mixed-radix walk over the latent tensor grid.
template <class F>
void for_each_w(const std::vector<QuadratureRange>& ranges, F&& f) {
  const std::size_t d = ranges.size();
  std::vector<std::size_t> idx(d, 0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(d));
  std::size_t flat = 0;
  while (true) {
    for (std::size_t k = 0; k < d; ++k) w[static_cast<Eigen::Index>(k)] = node(ranges[k], idx[k]);
    f(flat, idx, w);
    ++flat;
    std::size_t k = 0;
    while (k < d) {
      if (++idx[k] < ranges[k].points) break;
      idx[k] = 0;
      ++k;
    }
    if (k == d) break;
  }
}

// Shrinks (or widens) the box onto the region within kKeep of the peak.
void zoom(const Separable& sep, std::vector<QuadratureRange>& latent, std::optional<QuadratureRange>& theta,
          bool fix_latent, bool fix_theta) {
  for (int round = 0; round < kZoomRounds; ++round) {
    std::vector<QuadratureRange> g = latent;
    for (auto& r : g) r.points = kCoarsePoints;
    std::optional<QuadratureRange> gt = theta;
    if (gt) gt->points = kCoarsePoints;
    const std::size_t nt = gt ? gt->points : 1;

    std::vector<double> val;
    for_each_w(g, [&](std::size_t, const std::vector<std::size_t>&, const Eigen::VectorXd& w) {
      const auto p = sep.eval(w);
      for (std::size_t t = 0; t < nt; ++t) val.push_back(sep.joint(p, gt ? node(*gt, t) : 0.0));
    });
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : val) {
      if (std::isfinite(v)) peak = std::max(peak, v);
    }
    if (!std::isfinite(peak)) throw MarginalUnavailable("quadrature found no finite log density in the box");

    const std::size_t dims = g.size() + (gt ? 1 : 0);
    std::vector<std::size_t> lo(dims, kCoarsePoints), hi(dims, 0);
    for (std::size_t c = 0; c < val.size(); ++c) {
      if (!(val[c] > peak - kKeep)) continue;
      // cell c = flat * nt + t, flat with the first latent index fastest
      std::size_t rest = c / nt;
      for (std::size_t k = 0; k < dims; ++k) {
        std::size_t i = 0;
        if (k < g.size()) {
          i = rest % kCoarsePoints;
          rest /= kCoarsePoints;
        } else {
          i = c % nt;
        }
        lo[k] = std::min(lo[k], i);
        hi[k] = std::max(hi[k], i);
      }
    }
    bool settled = true;
    auto update = [&](QuadratureRange& r, std::size_t k) {
      const double h = (r.hi - r.lo) / static_cast<double>(kCoarsePoints - 1);
      const double width = r.hi - r.lo;
      if (lo[k] == 0 || hi[k] == kCoarsePoints - 1) {
        // mass reaches the edge: widen on that side
        if (lo[k] == 0) r.lo -= 0.5 * width;
        if (hi[k] == kCoarsePoints - 1) r.hi += 0.5 * width;
        if (lo[k] != 0) r.lo += (static_cast<double>(lo[k]) - 2.0) * h;
        if (hi[k] != kCoarsePoints - 1) r.hi -= (static_cast<double>(kCoarsePoints - 1 - hi[k]) - 2.0) * h;
        settled = false;
        return;
      }
      const double nlo = r.lo + std::max(0.0, static_cast<double>(lo[k]) - 2.0) * h;
      const double nhi = r.lo + std::min(static_cast<double>(kCoarsePoints - 1), static_cast<double>(hi[k]) + 2.0) * h;
      if (nhi - nlo < 0.9 * width) settled = false;
      r.lo = nlo;
      r.hi = nhi;
    };
    for (std::size_t k = 0; k < latent.size(); ++k) {
      if (!fix_latent) update(latent[k], k);
    }
    if (theta && !fix_theta) update(*theta, latent.size());
    if (settled) return;
  }
}

}  // namespace

Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& c, Eigen::Index n) {
  if (c.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  if (c.cols() != n) throw DimensionMismatch("constraint matrix columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  svd.setThreshold(1e-10);
  const Eigen::Index rank = svd.rank();
  Eigen::MatrixXd b = svd.matrixV().rightCols(n - rank);
  // deterministic orientation: largest-magnitude entry of each column positive
  for (Eigen::Index k = 0; k < b.cols(); ++k) {
    Eigen::Index arg = 0;
    b.col(k).cwiseAbs().maxCoeff(&arg);
    if (b(arg, k) < 0.0) b.col(k) = -b.col(k);
  }
  return b;
}

QuadratureResult quadrature_posterior(const LatentModel& model, const QuadratureSpec& spec) {
  const auto n = static_cast<Eigen::Index>(model.latent_dim());
  const std::size_t h = model.hyper_dim();
  if (h > 1) throw OracleTooLarge(std::to_string(h) + " hyperparameters (at most 1)");

  Separable sep;
  sep.model = &model;
  sep.basis = null_space_basis(model.constraint_matrix(), n);
  const std::size_t d = static_cast<std::size_t>(sep.basis.cols());
  if (d > kMaxLatentDim) {
    throw OracleTooLarge("constrained latent dimension " + std::to_string(d) + " (at most " +
                         std::to_string(kMaxLatentDim) + ")");
  }
  if (d == 0) throw OracleTooLarge("constraints leave no free latent dimension");
  const auto m = static_cast<Eigen::Index>(model.n_obs());
  sep.ab.resize(m, static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < m; ++j) {
    const SparseRow& row = model.incidence()[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) {
      double s = 0.0;
      for (std::size_t t = 0; t < row.size(); ++t) {
        s += row.vals[t] * sep.basis(static_cast<Eigen::Index>(row.cols[t]), k);
      }
      sep.ab(j, k) = s;
    }
  }
  sep.has_theta = h == 1;
  if (sep.has_theta) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const double a0 = model.log_prior_latent(zero, Eigen::VectorXd::Zero(1));
    const double a1 = model.log_prior_latent(zero, Eigen::VectorXd::Constant(1, std::log(2.0)));
    sep.alpha = (a1 - a0) / std::log(2.0);
    // the split must reproduce the model at an unrelated point
    Eigen::VectorXd w(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = 0.3 + 0.17 * static_cast<double>(k);
    const auto p = sep.eval(w);
    const double theta = 1.3;
    const double direct = model.log_likelihood_eta(sep.ab * w) +
                          model.log_prior_latent(sep.basis * w, Eigen::VectorXd::Constant(1, theta)) +
                          model.log_prior_theta(Eigen::VectorXd::Constant(1, theta));
    const double split = sep.joint(p, theta);
    if (std::abs(direct - split) > 1e-8 * std::max(1.0, std::abs(direct))) {
      throw Error(ErrorKind::Internal, "latent prior is not linear in the precision");
    }
  }

  std::vector<QuadratureRange> latent = spec.latent;
  std::optional<QuadratureRange> theta = spec.theta;
  const bool fix_latent = !latent.empty();
  const bool fix_theta = theta.has_value() || !sep.has_theta;
  if (fix_latent && latent.size() != d) throw DimensionMismatch("latent quadrature ranges");
  if (!fix_latent) latent.assign(d, QuadratureRange{-30.0, 30.0, 0});
  if (sep.has_theta && !theta) theta = QuadratureRange{-10.0, 15.0, 0};
  if (!sep.has_theta) theta.reset();
  if (!fix_latent || !fix_theta) zoom(sep, latent, theta, fix_latent, fix_theta);

  if (theta && !fix_theta) theta->points = spec.max_theta_points;
  if (!fix_latent) {
    const double budget = static_cast<double>(spec.max_cells) / static_cast<double>(theta ? theta->points : 1);
    auto per_dim = static_cast<std::size_t>(std::floor(std::pow(budget, 1.0 / static_cast<double>(d)) + 1e-9));
    // pow rounding can land one above the budget
    while (per_dim > 1 && std::pow(static_cast<double>(per_dim), static_cast<double>(d)) > budget) --per_dim;
    per_dim = std::min(per_dim, spec.max_latent_points);
    if (per_dim < 3) throw OracleTooLarge("cell budget leaves fewer than 3 points per dimension");
    for (auto& r : latent) r.points = per_dim;
  }
  const std::size_t cells = cell_count(latent, theta);
  if (cells > spec.max_cells) {
    throw OracleTooLarge(std::to_string(cells) + " cells exceed the limit of " + std::to_string(spec.max_cells));
  }

  QuadratureResult res;
  res.basis = sep.basis;
  res.latent_ranges = latent;
  res.theta_range = theta;
  res.cells = cells;

  // per-w pieces, then the peak over the whole grid
  std::size_t nw = 1;
  for (const auto& r : latent) nw *= r.points;
  std::vector<Separable::Point> pts(nw);
  for_each_w(latent, [&](std::size_t flat, const std::vector<std::size_t>&, const Eigen::VectorXd& w) {
    pts[flat] = sep.eval(w);
  });
  const std::size_t nt = theta ? theta->points : 1;
  std::vector<double> thetas(nt, 0.0), log_prior_t(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t) thetas[t] = theta ? node(*theta, t) : 0.0;

  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double v = sep.joint(p, thetas[t]);
      if (std::isfinite(v)) peak = std::max(peak, v);
    }
  }
  if (!std::isfinite(peak)) throw MarginalUnavailable("quadrature grid carries no mass");

  std::vector<double> mass_w(nw, 0.0);
  std::vector<double> mass_t(nt, 0.0);
  for (std::size_t i = 0; i < nw; ++i) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double v = sep.joint(pts[i], thetas[t]);
      const double e = std::isfinite(v) ? std::exp(v - peak) : 0.0;
      mass_w[i] += e;
      mass_t[t] += e;
    }
  }
  double total = 0.0;
  for (double v : mass_w) total += v;
  if (!(total > 0.0)) throw MarginalUnavailable("quadrature grid carries no mass");

  double cell_volume = 1.0;
  for (const auto& r : latent) cell_volume *= step_of(r);

  // moments of x and eta, plus deviance
  Eigen::VectorXd sx = Eigen::VectorXd::Zero(n), sxx = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd se = Eigen::VectorXd::Zero(m), see = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd xlo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd xhi = -xlo;
  const double mass_floor = 1e-16 * *std::max_element(mass_w.begin(), mass_w.end());
  double dev = 0.0;
  for_each_w(latent, [&](std::size_t flat, const std::vector<std::size_t>&, const Eigen::VectorXd& w) {
    const double pw = mass_w[flat] / total;
    if (pw == 0.0) return;
    const Eigen::VectorXd x = sep.basis * w;
    const Eigen::VectorXd eta = sep.ab * w;
    sx += pw * x;
    sxx += pw * x.cwiseProduct(x);
    se += pw * eta;
    see += pw * eta.cwiseProduct(eta);
    dev += pw * -2.0 * pts[flat].ell;
    if (mass_w[flat] > mass_floor) {
      xlo = xlo.cwiseMin(x);
      xhi = xhi.cwiseMax(x);
    }
  });
  res.latent_mean = sx;
  res.latent_sd = (sxx - sx.cwiseProduct(sx)).cwiseMax(0.0).cwiseSqrt();
  res.eta_mean = se;
  res.eta_sd = (see - se.cwiseProduct(se)).cwiseMax(0.0).cwiseSqrt();
  res.mean_deviance = dev;
  res.deviance_at_mean = -2.0 * model.log_likelihood_eta(se);

  // histogram marginals, mass split linearly between neighbouring bin centres
  std::vector<std::vector<double>> hist(static_cast<std::size_t>(n), std::vector<double>(kHistogramBins, 0.0));
  for_each_w(latent, [&](std::size_t flat, const std::vector<std::size_t>&, const Eigen::VectorXd& w) {
    const double pw = mass_w[flat] / total;
    if (mass_w[flat] <= mass_floor) return;
    const Eigen::VectorXd x = sep.basis * w;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double span = xhi[i] - xlo[i];
      if (!(span > 0.0)) continue;
      const double pos = (x[i] - xlo[i]) / span * static_cast<double>(kHistogramBins - 1);
      const auto b = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(pos))), kHistogramBins - 2);
      const double frac = std::clamp(pos - static_cast<double>(b), 0.0, 1.0);
      hist[static_cast<std::size_t>(i)][b] += pw * (1.0 - frac);
      hist[static_cast<std::size_t>(i)][b + 1] += pw * frac;
    }
  });
  res.latent.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double span = xhi[i] - xlo[i];
    if (!(span > 1e-12 * std::max(1.0, std::abs(xlo[i])))) {
      res.latent.push_back(PosteriorMarginal::point_mass(sx[i]));
      continue;
    }
    res.latent.push_back(PosteriorMarginal::from_density(linspace(xlo[i], xhi[i], kHistogramBins),
                                                         hist[static_cast<std::size_t>(i)]));
  }

  if (theta) {
    res.theta_grid = thetas;
    res.theta_log_marginal.resize(nt);
    double m1 = 0.0, m2 = 0.0, t1 = 0.0, t2 = 0.0, mt = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      res.theta_log_marginal[t] = mass_t[t] > 0.0 ? peak + std::log(mass_t[t] * cell_volume)
                                                  : -std::numeric_limits<double>::infinity();
      const double p = mass_t[t];
      mt += p;
      m1 += p * thetas[t];
      m2 += p * thetas[t] * thetas[t];
      t1 += p * std::exp(thetas[t]);
      t2 += p * std::exp(2.0 * thetas[t]);
    }
    res.theta_mean = m1 / mt;
    res.theta_sd = std::sqrt(std::max(0.0, m2 / mt - res.theta_mean * res.theta_mean));
    res.tau_mean = t1 / mt;
    res.tau_sd = std::sqrt(std::max(0.0, t2 / mt - res.tau_mean * res.tau_mean));
    res.theta = PosteriorMarginal::from_density(thetas, mass_t);
  }
  return res;
}

}  // namespace inla
