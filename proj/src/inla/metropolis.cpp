#include "inla/metropolis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inla/errors.hpp"
#include "inla/likelihood.hpp"
#include "inla/quadrature.hpp"
#include "inla/rng.hpp"

namespace inla {

namespace {

// One random-walk coordinate: a direction in x (and its image in eta) or a
// log-precision.
struct Coordinate {
  Eigen::VectorXd dx;
  std::vector<std::size_t> obs;  // observations it moves
  std::vector<double> deta;
  std::ptrdiff_t hyper = -1;
};

std::vector<Coordinate> coordinates(const LatentModel& model) {
  const auto n = static_cast<Eigen::Index>(model.latent_dim());
  const Eigen::MatrixXd& c = model.constraint_matrix();
  std::vector<Coordinate> out;
  for (const auto& blk : model.layout().blocks) {
    const auto off = static_cast<Eigen::Index>(blk.offset);
    const auto len = static_cast<Eigen::Index>(blk.length);
    // constraint rows living on this block
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      if (c.row(r).segment(off, len).cwiseAbs().maxCoeff() > 0.0) rows.push_back(r);
    }
    Eigen::MatrixXd cb(static_cast<Eigen::Index>(rows.size()), len);
    for (std::size_t k = 0; k < rows.size(); ++k) cb.row(static_cast<Eigen::Index>(k)) = c.row(rows[k]).segment(off, len);
    const Eigen::MatrixXd basis = null_space_basis(cb, len);
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
      Coordinate co;
      co.dx = Eigen::VectorXd::Zero(n);
      co.dx.segment(off, len) = basis.col(k);
      for (std::size_t j = 0; j < model.n_obs(); ++j) {
        const double v = model.incidence()[j].dot(co.dx);
        if (v != 0.0) {
          co.obs.push_back(j);
          co.deta.push_back(v);
        }
      }
      out.push_back(std::move(co));
    }
  }
  for (std::size_t j = 0; j < model.hyper_dim(); ++j) {
    Coordinate co;
    co.hyper = static_cast<std::ptrdiff_t>(j);
    out.push_back(std::move(co));
  }
  return out;
}

struct Welford {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    count += 1.0;
    const double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
  }
  double var() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
};

// Online per-chain accumulators for one scalar.
struct Tracker {
  Welford half[2];
  std::vector<double> batch_means;
  double batch_sum = 0.0;
  std::size_t in_batch = 0;
};

struct State {
  Eigen::VectorXd x;
  Eigen::VectorXd eta;
  Eigen::VectorXd theta;
  double ll = 0.0;
  double lp = 0.0;
};

double log_prior(const LatentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  return model.log_prior_latent(x, theta) + model.log_prior_theta(theta);
}

}  // namespace

McmcResult metropolis(const LatentModel& model, const McmcSpec& spec) {
  if (spec.chains < 1) throw SpecError("at least one chain is needed");
  if (spec.burn_in >= spec.iterations) throw SpecError("burn-in must be shorter than the run");
  if (spec.batches < 2) throw SpecError("at least two batches are needed");
  const std::size_t kept = spec.iterations - spec.burn_in;
  if (kept < 2 * spec.batches) throw SpecError("too few kept iterations for the batch count");
  const std::size_t batch_size = kept / spec.batches;

  const auto n = static_cast<Eigen::Index>(model.latent_dim());
  const auto m = static_cast<Eigen::Index>(model.n_obs());
  const auto h = static_cast<Eigen::Index>(model.hyper_dim());
  const std::vector<Coordinate> coords = coordinates(model);
  const ObservationModel& obs = model.observations();
  const std::size_t np = static_cast<std::size_t>(n + m + h);

  // start: intercept at the pooled logit when the data are binomial
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (const auto* bin = dynamic_cast<const BinomialLogit*>(&obs)) {
    if (const LatentBlock* ib = model.layout().find(BlockKind::Intercept)) {
      double ys = 0.0, ns = 0.0;
      for (std::size_t j = 0; j < bin->size(); ++j) {
        ys += static_cast<double>(bin->successes()[j]);
        ns += static_cast<double>(bin->trials()[j]);
      }
      x0[static_cast<Eigen::Index>(ib->offset)] = std::log((ys + 0.5) / (ns - ys + 0.5));
    }
  }

  std::vector<std::vector<Tracker>> track(spec.chains, std::vector<Tracker>(np));
  std::vector<double> accepted(coords.size(), 0.0), proposed(coords.size(), 0.0);
  Eigen::VectorXd eta_sum = Eigen::VectorXd::Zero(m);
  double dev_sum = 0.0;
  double draws = 0.0;

  McmcResult res;
  res.seed = spec.seed;
  res.kept_per_chain = batch_size * spec.batches;

  for (std::size_t chain = 0; chain < spec.chains; ++chain) {
    Rng rng(spec.seed + 1000003ULL * chain);
    State s;
    s.x = x0;
    // spread the chains out in theta
    s.theta = Eigen::VectorXd::Constant(h, chain % 2 == 0 ? 0.0 : 3.0);
    for (Eigen::Index i = 0; i < n; ++i) s.x[i] += 0.1 * rng.normal();
    // stay on the constraint surface
    const Eigen::MatrixXd& c = model.constraint_matrix();
    if (c.rows() > 0) {
      const Eigen::MatrixXd b = null_space_basis(c, n);
      s.x = b * (b.transpose() * s.x);
      if (const LatentBlock* ib = model.layout().find(BlockKind::Intercept)) {
        // the intercept is never constrained; keep its starting value
        s.x[static_cast<Eigen::Index>(ib->offset)] = x0[static_cast<Eigen::Index>(ib->offset)];
      }
    }
    s.eta = model.linear_predictor(s.x);
    s.ll = model.log_likelihood_eta(s.eta);
    s.lp = log_prior(model, s.x, s.theta);
    if (!std::isfinite(s.ll + s.lp)) throw Error(ErrorKind::Numerical, "Metropolis start has zero density");

    std::vector<double> step(coords.size(), 0.5);
    std::vector<double> acc_window(coords.size(), 0.0);

    auto sweep = [&](bool count) {
      for (std::size_t k = 0; k < coords.size(); ++k) {
        const Coordinate& co = coords[k];
        const double delta = step[k] * rng.normal();
        double new_ll = s.ll;
        double new_lp = 0.0;
        if (co.hyper >= 0) {
          Eigen::VectorXd th = s.theta;
          th[co.hyper] += delta;
          new_lp = log_prior(model, s.x, th);
          const double u = rng.uniform_open();
          if (std::log(u) < new_lp - s.lp) {
            s.theta = th;
            s.lp = new_lp;
            acc_window[k] += 1.0;
            if (count) accepted[k] += 1.0;
          }
        } else {
          const Eigen::VectorXd nx = s.x + delta * co.dx;
          for (std::size_t t = 0; t < co.obs.size(); ++t) {
            const std::size_t j = co.obs[t];
            const auto jj = static_cast<Eigen::Index>(j);
            new_ll += obs.log_density(j, s.eta[jj] + delta * co.deta[t]) - obs.log_density(j, s.eta[jj]);
          }
          new_lp = log_prior(model, nx, s.theta);
          const double u = rng.uniform_open();
          if (std::log(u) < (new_ll + new_lp) - (s.ll + s.lp)) {
            s.x = nx;
            for (std::size_t t = 0; t < co.obs.size(); ++t) {
              s.eta[static_cast<Eigen::Index>(co.obs[t])] += delta * co.deta[t];
            }
            s.ll = new_ll;
            s.lp = new_lp;
            acc_window[k] += 1.0;
            if (count) accepted[k] += 1.0;
          }
        }
        if (count) proposed[k] += 1.0;
      }
    };

    // tuning: adapt log step sizes toward the target acceptance, then freeze
    const std::size_t window = 50;
    for (std::size_t it = 1; it <= spec.tuning_sweeps; ++it) {
      sweep(false);
      if (it % window == 0) {
        for (std::size_t k = 0; k < coords.size(); ++k) {
          const double rate = acc_window[k] / static_cast<double>(window);
          step[k] *= std::exp(2.0 * (rate - spec.target_acceptance));
          acc_window[k] = 0.0;
        }
      }
    }
    if (chain == 0) res.step_sizes = step;
    // the likelihood was updated incrementally; refresh against drift
    s.ll = model.log_likelihood_eta(s.eta);

    for (std::size_t it = 0; it < spec.burn_in; ++it) sweep(false);
    auto& tr = track[chain];
    for (std::size_t it = 0; it < res.kept_per_chain; ++it) {
      sweep(true);
      const int half = it < res.kept_per_chain / 2 ? 0 : 1;
      auto record = [&](std::size_t p, double v) {
        Tracker& t = tr[p];
        t.half[half].add(v);
        t.batch_sum += v;
        if (++t.in_batch == batch_size) {
          t.batch_means.push_back(t.batch_sum / static_cast<double>(batch_size));
          t.batch_sum = 0.0;
          t.in_batch = 0;
        }
      };
      for (Eigen::Index i = 0; i < n; ++i) record(static_cast<std::size_t>(i), s.x[i]);
      for (Eigen::Index j = 0; j < m; ++j) record(static_cast<std::size_t>(n + j), s.eta[j]);
      for (Eigen::Index j = 0; j < h; ++j) record(static_cast<std::size_t>(n + m + j), s.theta[j]);
      eta_sum += s.eta;
      dev_sum += -2.0 * model.log_likelihood_eta(s.eta);
      draws += 1.0;
    }
  }

  // pooled summaries, batch-means standard errors, split R-hat
  Eigen::VectorXd mean(static_cast<Eigen::Index>(np)), sd(static_cast<Eigen::Index>(np)),
      mcse(static_cast<Eigen::Index>(np));
  res.split_rhat.assign(np, 1.0);
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<const Welford*> seqs;
    for (std::size_t ch = 0; ch < spec.chains; ++ch) {
      seqs.push_back(&track[ch][p].half[0]);
      seqs.push_back(&track[ch][p].half[1]);
    }
    double total = 0.0, grand = 0.0;
    for (const Welford* w : seqs) {
      total += w->count;
      grand += w->count * w->mean;
    }
    grand /= total;
    double ss = 0.0;
    for (const Welford* w : seqs) ss += w->m2 + w->count * (w->mean - grand) * (w->mean - grand);
    mean[static_cast<Eigen::Index>(p)] = grand;
    sd[static_cast<Eigen::Index>(p)] = std::sqrt(ss / (total - 1.0));

    // split R-hat on equal-length halves (lengths differ by at most one)
    const double len = seqs.front()->count;
    double wvar = 0.0, smean = 0.0;
    for (const Welford* w : seqs) {
      wvar += w->var();
      smean += w->mean;
    }
    wvar /= static_cast<double>(seqs.size());
    smean /= static_cast<double>(seqs.size());
    double bvar = 0.0;
    for (const Welford* w : seqs) bvar += (w->mean - smean) * (w->mean - smean);
    bvar /= static_cast<double>(seqs.size() - 1);  // B / len
    if (wvar > 0.0) {
      const double vplus = (len - 1.0) / len * wvar + bvar;
      res.split_rhat[p] = std::sqrt(vplus / wvar);
    } else {
      res.split_rhat[p] = bvar > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }

    double bm = 0.0, bm2 = 0.0, nb = 0.0;
    for (std::size_t ch = 0; ch < spec.chains; ++ch) {
      for (double v : track[ch][p].batch_means) {
        bm += v;
        bm2 += v * v;
        nb += 1.0;
      }
    }
    bm /= nb;
    const double bvar_means = std::max(0.0, (bm2 - nb * bm * bm) / (nb - 1.0));
    mcse[static_cast<Eigen::Index>(p)] = std::sqrt(bvar_means / nb);
  }
  res.latent_mean = mean.head(n);
  res.latent_sd = sd.head(n);
  res.latent_mcse = mcse.head(n);
  res.eta_mean = mean.segment(n, m);
  res.eta_sd = sd.segment(n, m);
  res.eta_mcse = mcse.segment(n, m);
  res.theta_mean = mean.tail(h);
  res.theta_sd = sd.tail(h);
  res.theta_mcse = mcse.tail(h);
  res.max_rhat = *std::max_element(res.split_rhat.begin(), res.split_rhat.end());
  res.converged = res.max_rhat <= spec.rhat_gate;
  res.gated = !res.converged && !spec.force;

  res.acceptance.resize(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) res.acceptance[k] = accepted[k] / proposed[k];

  const Eigen::VectorXd eta_bar = eta_sum / draws;
  res.dic = make_dic(dev_sum / draws, -2.0 * model.log_likelihood_eta(eta_bar));
  return res;
}

}  // namespace inla
