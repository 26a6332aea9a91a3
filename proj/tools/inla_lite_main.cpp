// inla-lite command line: thin layer over the C API.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inla_lite/inla_lite.h"

namespace {

struct Common {
  std::string data;
  std::string adjacency;
  std::string out;
  double delta_z = 1.0;
  double delta_pi = 2.5;
  std::string marginal = "sla";
  std::size_t grid_points = 401;
};

void add_fit_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--delta-z", c.delta_z, "grid step in standardized hyperparameter space")->capture_default_str();
  cmd->add_option("--delta-pi", c.delta_pi, "log-density drop that ends the exploration")->capture_default_str();
  cmd->add_option("--marginal", c.marginal, "latent marginal approximation")
      ->check(CLI::IsMember({"sla", "la"}))
      ->capture_default_str();
  cmd->add_option("--grid-points", c.grid_points, "points per reported marginal")->capture_default_str();
}

inla_fit_options fit_options(const Common& c) {
  inla_fit_options o = inla_fit_options_default();
  o.delta_z = c.delta_z;
  o.delta_pi = c.delta_pi;
  o.marginal_path = c.marginal == "la" ? INLA_MARGINAL_LA : INLA_MARGINAL_SLA;
  o.grid_points = c.grid_points;
  return o;
}

int fail(inla_status s) {
  std::fprintf(stderr, "inla-lite: %s\n", inla_last_error());
  return static_cast<int>(s);
}

int load_model(const Common& c, const std::string& model_path, const std::string& preset, inla_dataset** d,
               inla_model** m) {
  inla_status s = inla_dataset_load(c.data.c_str(), c.adjacency.c_str(), d);
  if (s != INLA_OK) return fail(s);
  s = preset.empty() ? inla_model_from_file(*d, model_path.c_str(), m)
                     : inla_model_from_preset(*d, preset.c_str(), m);
  if (s != INLA_OK) return fail(s);
  return 0;
}

int run_fit(const Common& c, const std::string& model_path, const std::string& preset) {
  inla_dataset* d = nullptr;
  inla_model* m = nullptr;
  inla_fit* f = nullptr;
  int rc = load_model(c, model_path, preset, &d, &m);
  if (rc == 0) {
    const inla_fit_options o = fit_options(c);
    inla_status s = inla_fit_run(m, &o, &f);
    if (s == INLA_OK) s = inla_fit_write_outputs(f, c.out.c_str());
    if (s != INLA_OK) {
      rc = fail(s);
    } else {
      for (size_t i = 0; i < inla_fit_warning_count(f); ++i) {
        std::fprintf(stderr, "warning: %s\n", inla_fit_warning(f, i));
      }
      inla_dic dic;
      if (inla_fit_dic(f, &dic) == INLA_OK) {
        std::printf("latent %zu, hyperparameters %zu, integration points %zu, p_D %.4f, DIC %.4f\n",
                    inla_model_latent_dim(m), inla_model_hyper_dim(m), inla_fit_point_count(f), dic.p_d, dic.dic);
      }
      std::printf("outputs written to %s\n", c.out.c_str());
    }
  }
  inla_fit_free(f);
  inla_model_free(m);
  inla_dataset_free(d);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inla-lite: nested Laplace approximations for binomial-logit latent Gaussian models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(inla_version()));

  Common c;
  std::string model_path, preset;

  auto* fit = app.add_subcommand("fit", "fit one model and write marginals, effects and DIC");
  fit->add_option("--data", c.data, "CSV with unit_id,y,N and covariates")->required()->check(CLI::ExistingFile);
  fit->add_option("--adjacency", c.adjacency, "adjacency file")->check(CLI::ExistingFile);
  auto* fm = fit->add_option("--model", model_path, "model config JSON")->check(CLI::ExistingFile);
  auto* fp = fit->add_option("--preset", preset, "model preset");
  fm->excludes(fp);
  fit->add_option("--out", c.out, "output directory")->required();
  add_fit_options(fit, c);

  std::vector<std::string> presets;
  auto* cmp = app.add_subcommand("compare", "fit several presets and write the DIC comparison table");
  cmp->add_option("--data", c.data, "CSV with unit_id,y,N and covariates")->required()->check(CLI::ExistingFile);
  cmp->add_option("--adjacency", c.adjacency, "adjacency file")->check(CLI::ExistingFile);
  cmp->add_option("--presets", presets, "presets to compare (default: the six table models)")->delimiter(',');
  cmp->add_option("--out", c.out, "output directory")->required();
  add_fit_options(cmp, c);

  std::string sim_preset;
  std::size_t units = 0;
  std::uint64_t seed = 0;
  auto* sim = app.add_subcommand("simulate", "write a seeded synthetic dataset with its truth");
  auto* sp = sim->add_option("--preset", sim_preset, "fixture preset")->check(CLI::IsMember({"region-like"}));
  auto* su = sim->add_option("--units", units, "units of a lattice fixture")->check(CLI::PositiveNumber);
  sp->excludes(su);
  auto* sim_seed = sim->add_option("--seed", seed, "random seed (mandatory)");
  sim->add_option("--out", c.out, "output directory")->required();

  std::string method = "quadrature";
  std::size_t iterations = 200000, burn_in = 0;
  bool force = false;
  auto* orc = app.add_subcommand("oracle", "reference posterior by tensor-grid quadrature or Metropolis sampling");
  orc->add_option("--data", c.data, "CSV with unit_id,y,N and covariates")->required()->check(CLI::ExistingFile);
  orc->add_option("--adjacency", c.adjacency, "adjacency file")->check(CLI::ExistingFile);
  auto* om = orc->add_option("--model", model_path, "model config JSON")->check(CLI::ExistingFile);
  auto* op = orc->add_option("--preset", preset, "model preset");
  om->excludes(op);
  orc->add_option("--out", c.out, "output directory")->required();
  orc->add_option("--method", method, "oracle engine")->check(CLI::IsMember({"quadrature", "mcmc"}))->capture_default_str();
  auto* orc_seed = orc->add_option("--seed", seed, "random seed (mcmc)");
  orc->add_option("--iterations", iterations, "sweeps per chain (mcmc)")->capture_default_str();
  orc->add_option("--burn-in", burn_in, "discarded sweeps per chain (mcmc, default a tenth)");
  orc->add_flag("--force", force, "report even when the chains disagree (mcmc)");

  std::string provenance;
  auto* rep = app.add_subcommand("replay", "rerun a fit or comparison from its provenance.json");
  rep->add_option("--provenance", provenance, "provenance.json of an earlier run")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", c.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return INLA_ERR_CONFIG;
  }

  if (fit->parsed()) {
    if (model_path.empty() && preset.empty()) {
      std::fprintf(stderr, "inla-lite: fit needs --model or --preset\n");
      return INLA_ERR_CONFIG;
    }
    return run_fit(c, model_path, preset);
  }

  if (cmp->parsed()) {
    std::vector<const char*> names;
    for (const auto& p : presets) names.push_back(p.c_str());
    const inla_fit_options o = fit_options(c);
    const inla_status s =
        inla_compare_run(c.data.c_str(), c.adjacency.c_str(), names.data(), names.size(), &o, c.out.c_str());
    if (s != INLA_OK) return fail(s);
    std::printf("comparison written to %s\n", c.out.c_str());
    return 0;
  }

  if (sim->parsed()) {
    if (sim_seed->count() == 0) {
      std::fprintf(stderr, "inla-lite: simulate needs --seed\n");
      return INLA_ERR_CONFIG;
    }
    if (sim_preset.empty() && units == 0) {
      std::fprintf(stderr, "inla-lite: simulate needs --preset or --units\n");
      return INLA_ERR_CONFIG;
    }
    const inla_status s = inla_simulate(sim_preset.empty() ? nullptr : sim_preset.c_str(), units, &seed, c.out.c_str());
    if (s != INLA_OK) return fail(s);
    std::printf("synthetic data written to %s\n", c.out.c_str());
    return 0;
  }

  if (orc->parsed()) {
    if (model_path.empty() && preset.empty()) {
      std::fprintf(stderr, "inla-lite: oracle needs --model or --preset\n");
      return INLA_ERR_CONFIG;
    }
    if (method == "mcmc" && orc_seed->count() == 0) {
      std::fprintf(stderr, "inla-lite: the mcmc oracle needs --seed\n");
      return INLA_ERR_CONFIG;
    }
    inla_dataset* d = nullptr;
    inla_model* m = nullptr;
    int rc = load_model(c, model_path, preset, &d, &m);
    if (rc == 0) {
      inla_oracle_options o = inla_oracle_options_default();
      o.method = method == "mcmc" ? INLA_ORACLE_MCMC : INLA_ORACLE_QUADRATURE;
      o.seed = seed;
      o.iterations = iterations;
      o.burn_in = burn_in;
      o.force = force ? 1 : 0;
      const inla_status s = inla_oracle_run(m, &o, c.out.c_str());
      if (s != INLA_OK) {
        rc = fail(s);
      } else {
        std::printf("oracle outputs written to %s\n", c.out.c_str());
      }
    }
    inla_model_free(m);
    inla_dataset_free(d);
    return rc;
  }

  if (rep->parsed()) {
    const inla_status s = inla_replay(provenance.c_str(), c.out.c_str());
    if (s != INLA_OK) return fail(s);
    std::printf("replayed into %s\n", c.out.c_str());
    return 0;
  }
  return INLA_ERR_INTERNAL;
}
