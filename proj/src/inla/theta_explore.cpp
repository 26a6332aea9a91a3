#include "inla/theta_explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "inla/errors.hpp"

namespace inla {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_eval(const LogPosterior& f, const Eigen::VectorXd& theta, int& count) {
  ++count;
  try {
    const double v = f(theta);
    return std::isfinite(v) ? v : kNegInf;
  } catch (const Error&) {
    return kNegInf;
  }
}

Eigen::VectorXd fd_gradient(const LogPosterior& f, const Eigen::VectorXd& x, double fx, double h,
                            int& count) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fp = safe_eval(f, xp, count);
    const double fm = safe_eval(f, xm, count);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g[k] = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g[k] = (fp - fx) / h;
    } else if (std::isfinite(fm)) {
      g[k] = (fx - fm) / h;
    } else {
      g[k] = 0.0;
    }
  }
  return g;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

ModeResult find_mode(const LogPosterior& f, const Eigen::VectorXd& init, const ModeOptions& options) {
  ModeResult res;
  const Eigen::Index d = init.size();
  res.theta = init;
  if (d == 0) {
    res.log_posterior = safe_eval(f, init, res.evaluations);
    if (!std::isfinite(res.log_posterior)) throw ModeSearchFailure("log posterior not finite", {});
    return res;
  }
  Eigen::VectorXd x = init;
  double fx = safe_eval(f, x, res.evaluations);
  if (!std::isfinite(fx)) {
    throw ModeSearchFailure("log posterior not finite at the initial point", to_std(x));
  }
  Eigen::VectorXd g = fd_gradient(f, x, fx, options.gradient_step, res.evaluations);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);
  bool scaled = false;
  const double max_step = 5.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it;
    if (g.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
      res.theta = x;
      res.log_posterior = fx;
      res.gradient_norm = g.cwiseAbs().maxCoeff();
      return res;
    }
    Eigen::VectorXd dir = hinv * g;
    if (dir.dot(g) <= 0.0) {
      hinv.setIdentity();
      dir = g;
    }
    const double len = dir.cwiseAbs().maxCoeff();
    if (len > max_step) dir *= max_step / len;

    double t = 1.0;
    Eigen::VectorXd xn;
    double fn = kNegInf;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + t * dir;
      fn = safe_eval(f, xn, res.evaluations);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * t * g.dot(dir)) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // gradient noise near the optimum can stall the line search
      if (g.cwiseAbs().maxCoeff() < 10.0 * options.gradient_tolerance) break;
      if (!hinv.isIdentity()) {
        hinv.setIdentity();
        continue;
      }
      res.theta = x;
      res.log_posterior = fx;
      throw ModeSearchFailure("line search failed", to_std(x));
    }
    const Eigen::VectorXd gn = fd_gradient(f, xn, fn, options.gradient_step, res.evaluations);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = g - gn;  // change in the gradient of -f
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      if (!scaled) {
        hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(d, d);
      hinv = (i - rho * s * y.transpose()) * hinv * (i - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  res.theta = x;
  res.log_posterior = fx;
  res.gradient_norm = g.cwiseAbs().maxCoeff();
  if (res.gradient_norm < 10.0 * options.gradient_tolerance) return res;
  throw ModeSearchFailure("no convergence after " + std::to_string(options.max_iterations) +
                              " iterations (gradient max-norm " + std::to_string(res.gradient_norm) + ")",
                          to_std(x));
}

Eigen::MatrixXd negative_hessian(const LogPosterior& f, const Eigen::VectorXd& at, double f_at, double h) {
  const Eigen::Index d = at.size();
  Eigen::MatrixXd hess(d, d);
  int count = 0;
  auto eval = [&](const Eigen::VectorXd& p) {
    const double v = safe_eval(f, p, count);
    if (!std::isfinite(v)) throw NonConcaveMode("log posterior not finite next to the mode");
    return v;
  };
  std::vector<double> plus(d), minus(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd p = at;
    p[k] += h;
    plus[k] = eval(p);
    p[k] = at[k] - h;
    minus[k] = eval(p);
    hess(k, k) = -(plus[k] - 2.0 * f_at + minus[k]) / (h * h);
  }
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a + 1; b < d; ++b) {
      Eigen::VectorXd p = at;
      p[a] += h;
      p[b] += h;
      const double fpp = eval(p);
      p[b] = at[b] - h;
      const double fpm = eval(p);
      p[a] = at[a] - h;
      const double fmm = eval(p);
      p[b] = at[b] + h;
      const double fmp = eval(p);
      hess(a, b) = hess(b, a) = -(fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return hess;
}

Eigen::VectorXd ThetaExploration::theta_of(const Eigen::VectorXd& z) const {
  if (dim() == 0) return theta_star;
  return theta_star + eigenvectors * (eigenvalues.array().sqrt().matrix().asDiagonal() * z);
}

ThetaExploration explore(const LogPosterior& f, const Eigen::VectorXd& theta_star, double log_post_star,
                         const ExploreOptions& options) {
  if (!(options.delta_z > 0.0) || !(options.delta_pi > 0.0)) {
    throw SpecError("delta_z and delta_pi must be positive");
  }
  ThetaExploration ex;
  ex.theta_star = theta_star;
  ex.log_post_star = log_post_star;
  ex.delta_z = options.delta_z;
  ex.delta_pi = options.delta_pi;
  const Eigen::Index d = theta_star.size();
  if (d == 0) {
    ThetaPoint p;
    p.theta = theta_star;
    p.log_posterior = log_post_star;
    p.area = 1.0;
    p.weight = 1.0;
    ex.points.push_back(p);
    return ex;
  }

  Eigen::MatrixXd h = negative_hessian(f, theta_star, log_post_star, options.hessian_step);
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NonConcaveMode("smallest eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()));
  }
  ex.hessian = h;
  ex.sigma = h.inverse();
  ex.sigma = 0.5 * (ex.sigma + ex.sigma.transpose());
  // eigenpairs of Sigma: same vectors, reciprocal values
  ex.eigenvectors = eig.eigenvectors();
  ex.eigenvalues = eig.eigenvalues().cwiseInverse();
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index big = 0;
    ex.eigenvectors.col(k).cwiseAbs().maxCoeff(&big);
    if (ex.eigenvectors(big, k) < 0.0) ex.eigenvectors.col(k) *= -1.0;
  }

  std::map<std::vector<int>, double> seen;
  int count = 0;
  auto log_post_at = [&](const std::vector<int>& offs) {
    auto it = seen.find(offs);
    if (it != seen.end()) return it->second;
    Eigen::VectorXd z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = options.delta_z * offs[static_cast<std::size_t>(k)];
    const double v = safe_eval(f, ex.theta_of(z), count);
    seen.emplace(offs, v);
    return v;
  };
  auto accepted = [&](double lp) { return std::isfinite(lp) && log_post_star - lp < options.delta_pi; };

  std::vector<int> origin(static_cast<std::size_t>(d), 0);
  seen.emplace(origin, log_post_star);
  ex.axis_offsets.assign(static_cast<std::size_t>(d), {0});
  for (Eigen::Index k = 0; k < d; ++k) {
    auto& offs = ex.axis_offsets[static_cast<std::size_t>(k)];
    for (int dir : {-1, 1}) {
      for (int s = 1; s <= options.max_axis_steps; ++s) {
        std::vector<int> o = origin;
        o[static_cast<std::size_t>(k)] = dir * s;
        if (!accepted(log_post_at(o))) break;
        offs.push_back(dir * s);
      }
    }
    std::sort(offs.begin(), offs.end());
    auto& lps = ex.axis_log_post.emplace_back();
    for (int o : offs) {
      std::vector<int> oo = origin;
      oo[static_cast<std::size_t>(k)] = o;
      lps.push_back(log_post_at(oo));
    }
  }

  std::vector<std::vector<int>> keep;
  for (Eigen::Index k = 0; k < d; ++k) {
    for (int o : ex.axis_offsets[static_cast<std::size_t>(k)]) {
      if (o == 0 && k > 0) continue;
      std::vector<int> oo = origin;
      oo[static_cast<std::size_t>(k)] = o;
      keep.push_back(oo);
    }
  }
  if (d == 2) {
    for (int a : ex.axis_offsets[0]) {
      for (int b : ex.axis_offsets[1]) {
        if (a == 0 || b == 0) continue;
        const std::vector<int> oo = {a, b};
        if (accepted(log_post_at(oo))) keep.push_back(oo);
      }
    }
  }
  std::sort(keep.begin(), keep.end());

  const double area = std::pow(options.delta_z, static_cast<double>(d));
  double top = kNegInf;
  for (const auto& o : keep) top = std::max(top, seen.at(o));
  ex.mode_dominated = top <= log_post_star + 1e-6;
  double total = 0.0;
  for (const auto& o : keep) {
    ThetaPoint p;
    p.z.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) p.z[k] = options.delta_z * o[static_cast<std::size_t>(k)];
    p.theta = ex.theta_of(p.z);
    p.log_posterior = seen.at(o);
    p.area = area;
    p.weight = std::exp(p.log_posterior - top) * area;
    total += p.weight;
    ex.points.push_back(std::move(p));
  }
  for (auto& p : ex.points) p.weight /= total;
  return ex;
}

}  // namespace inla
