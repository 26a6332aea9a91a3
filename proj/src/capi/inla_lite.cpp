#include "inla_lite/inla_lite.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "inla/errors.hpp"
#include "inla/metropolis.hpp"
#include "inla/outputs.hpp"
#include "inla/quadrature.hpp"
#include "inla/run.hpp"
#include "inla/simulate.hpp"

struct inla_dataset {
  std::shared_ptr<const inla::Dataset> data;
  std::string data_path;
  std::string adjacency_path;
  std::string data_digest;
  std::string adjacency_digest;
};

struct inla_model {
  std::shared_ptr<const inla::Dataset> data;
  inla::RunRecord record;  // inputs + model, options filled at fit time
  std::shared_ptr<const inla::LatentModel> model;
};

struct inla_fit {
  std::shared_ptr<const inla::Dataset> data;
  std::shared_ptr<const inla::LatentModel> model;
  inla::RunRecord record;
  inla::FitResult fit;
  std::optional<inla::DicResult> dic;
  std::string dic_error;
};

namespace {

thread_local std::string g_last_error;

const std::vector<std::string>& table_presets() {
  static const std::vector<std::string> names = {"icar-only", "icar-dist", "icar-time",
                                                 "icar-dist2", "icar-zone", "icar-density"};
  return names;
}

inla_status status_of(inla::ErrorKind k) {
  switch (k) {
    case inla::ErrorKind::InputValidation:
    case inla::ErrorKind::Io:
      return INLA_ERR_INPUT;
    case inla::ErrorKind::Numerical:
      return INLA_ERR_NUMERICAL;
    case inla::ErrorKind::Configuration:
      return INLA_ERR_CONFIG;
    case inla::ErrorKind::Internal:
      break;
  }
  return INLA_ERR_INTERNAL;
}

template <class F>
inla_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return INLA_OK;
  } catch (const inla::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
  } catch (...) {
    g_last_error = "internal error";
  }
  return INLA_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) throw inla::SpecError(std::string(what) + " must not be null");
}

inla::FitOptions to_options(const inla_fit_options* o) {
  inla::FitOptions fo;
  if (!o) return fo;
  if (!(o->delta_z > 0.0)) throw inla::SpecError("delta_z must be positive");
  if (!(o->delta_pi > 0.0)) throw inla::SpecError("delta_pi must be positive");
  if (o->grid_points < 11) throw inla::SpecError("grid_points must be at least 11");
  if (o->marginal_path != INLA_MARGINAL_SLA && o->marginal_path != INLA_MARGINAL_LA) {
    throw inla::SpecError("marginal path must be sla or la");
  }
  fo.delta_z = o->delta_z;
  fo.delta_pi = o->delta_pi;
  fo.path = o->marginal_path == INLA_MARGINAL_LA ? inla::MarginalPath::Laplace : inla::MarginalPath::SimplifiedLaplace;
  fo.grid_points = o->grid_points;
  return fo;
}

void copy_summary(const inla::Summary& s, inla_summary* out) {
  out->mean = s.mean;
  out->sd = s.sd;
  out->q025 = s.q025;
  out->q50 = s.q50;
  out->q975 = s.q975;
}

inla_model* make_model(const inla_dataset* d, const inla::ModelSpec& spec, std::optional<std::string> preset,
                       std::optional<std::string> path) {
  auto m = std::make_unique<inla_model>();
  m->data = d->data;
  m->record.data_path = d->data_path;
  m->record.adjacency_path = d->adjacency_path;
  m->record.data_digest = d->data_digest;
  m->record.adjacency_digest = d->adjacency_digest;
  m->record.preset = std::move(preset);
  m->record.model_path = std::move(path);
  m->record.model_json = spec.to_json();
  m->model = std::make_shared<const inla::LatentModel>(inla::LatentModel::build(spec, *d->data));
  return m.release();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw inla::DataError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string vec_row(const Eigen::VectorXd& v, Eigen::Index i) { return inla::fmt17(v[i]); }

}  // namespace

extern "C" {

const char* inla_version(void) { return inla::kVersion; }

const char* inla_last_error(void) { return g_last_error.c_str(); }

inla_status inla_dataset_load(const char* data_path, const char* adjacency_path, inla_dataset** out) {
  return guarded([&] {
    require(data_path, "data path");
    require(out, "output handle");
    *out = nullptr;
    auto d = std::make_unique<inla_dataset>();
    d->data_path = data_path;
    d->adjacency_path = adjacency_path ? adjacency_path : "";
    inla::RunRecord rec;
    rec.data_path = d->data_path;
    rec.adjacency_path = d->adjacency_path;
    d->data = std::make_shared<const inla::Dataset>(inla::load_inputs(rec));
    d->data_digest = rec.data_digest;
    d->adjacency_digest = rec.adjacency_digest;
    *out = d.release();
  });
}

void inla_dataset_free(inla_dataset* d) { delete d; }

size_t inla_dataset_rows(const inla_dataset* d) { return d ? d->data->size() : 0; }

size_t inla_dataset_units(const inla_dataset* d) { return d ? d->data->n_units : 0; }

inla_status inla_model_from_preset(const inla_dataset* d, const char* preset, inla_model** out) {
  return guarded([&] {
    require(d, "dataset");
    require(preset, "preset");
    require(out, "output handle");
    *out = nullptr;
    *out = make_model(d, inla::ModelSpec::preset(preset), std::string(preset), std::nullopt);
  });
}

inla_status inla_model_from_json(const inla_dataset* d, const char* json_text, inla_model** out) {
  return guarded([&] {
    require(d, "dataset");
    require(json_text, "model config");
    require(out, "output handle");
    *out = nullptr;
    *out = make_model(d, inla::ModelSpec::from_json(json_text), std::nullopt, std::nullopt);
  });
}

inla_status inla_model_from_file(const inla_dataset* d, const char* path, inla_model** out) {
  return guarded([&] {
    require(d, "dataset");
    require(path, "model path");
    require(out, "output handle");
    *out = nullptr;
    *out = make_model(d, inla::ModelSpec::from_json(read_text(path)), std::nullopt, std::string(path));
  });
}

void inla_model_free(inla_model* m) { delete m; }

size_t inla_model_latent_dim(const inla_model* m) { return m ? m->model->latent_dim() : 0; }

size_t inla_model_hyper_dim(const inla_model* m) { return m ? m->model->hyper_dim() : 0; }

size_t inla_preset_count(void) { return inla::ModelSpec::preset_names().size(); }

const char* inla_preset_name(size_t i) {
  const auto& names = inla::ModelSpec::preset_names();
  return i < names.size() ? names[i].c_str() : nullptr;
}

size_t inla_table_preset_count(void) { return table_presets().size(); }

const char* inla_table_preset_name(size_t i) {
  return i < table_presets().size() ? table_presets()[i].c_str() : nullptr;
}

inla_fit_options inla_fit_options_default(void) {
  const inla::FitOptions fo;
  inla_fit_options o;
  o.delta_z = fo.delta_z;
  o.delta_pi = fo.delta_pi;
  o.marginal_path = INLA_MARGINAL_SLA;
  o.grid_points = fo.grid_points;
  return o;
}

inla_status inla_fit_run(const inla_model* m, const inla_fit_options* options, inla_fit** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "output handle");
    *out = nullptr;
    auto f = std::make_unique<inla_fit>();
    f->data = m->data;
    f->model = m->model;
    f->record = m->record;
    f->record.command = "fit";
    f->record.options = to_options(options);
    f->fit = inla::fit(*m->model, f->record.options);
    try {
      f->dic = inla::dic(f->fit, *m->model);
    } catch (const inla::DiagnosticsUnavailable& e) {
      f->dic_error = e.what();
    }
    *out = f.release();
  });
}

void inla_fit_free(inla_fit* f) { delete f; }

inla_status inla_fit_latent_summary(const inla_fit* f, size_t index, inla_summary* out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "summary");
    if (index >= f->fit.latent.size()) throw inla::IndexOutOfRange("latent index " + std::to_string(index));
    copy_summary(f->fit.latent[index].summary(), out);
  });
}

inla_status inla_fit_eta_summary(const inla_fit* f, size_t obs, inla_summary* out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "summary");
    if (obs >= f->fit.linear_predictor.size()) throw inla::IndexOutOfRange("observation " + std::to_string(obs));
    copy_summary(f->fit.linear_predictor[obs].summary(), out);
  });
}

inla_status inla_fit_hyper_summary(const inla_fit* f, size_t j, int precision_scale, inla_summary* out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "summary");
    if (j >= f->model->hyper_dim()) throw inla::IndexOutOfRange("hyperparameter " + std::to_string(j));
    if (j >= f->fit.hyper.size()) throw inla::MarginalUnavailable("hyperparameter marginals were not computed");
    const auto& h = f->fit.hyper[j];
    copy_summary((precision_scale ? h.precision : h.log_precision).summary(), out);
  });
}

inla_status inla_fit_theta_mode(const inla_fit* f, double* out, size_t len) {
  return guarded([&] {
    require(f, "fit");
    const auto& t = f->fit.mode.theta;
    if (len != static_cast<size_t>(t.size())) throw inla::DimensionMismatch("theta mode length");
    if (len > 0) require(out, "output buffer");
    for (size_t i = 0; i < len; ++i) out[i] = t[static_cast<Eigen::Index>(i)];
  });
}

size_t inla_fit_point_count(const inla_fit* f) { return f ? f->fit.exploration.points.size() : 0; }

inla_status inla_fit_dic(const inla_fit* f, inla_dic* out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "dic");
    if (!f->dic) throw inla::DiagnosticsUnavailable(f->dic_error);
    out->mean_deviance = f->dic->mean_deviance;
    out->deviance_at_mean = f->dic->deviance_at_mean;
    out->p_d = f->dic->p_d;
    out->dic = f->dic->dic;
  });
}

size_t inla_fit_warning_count(const inla_fit* f) { return f ? f->fit.warnings.size() : 0; }

const char* inla_fit_warning(const inla_fit* f, size_t i) {
  return f && i < f->fit.warnings.size() ? f->fit.warnings[i].c_str() : nullptr;
}

inla_status inla_fit_write_outputs(const inla_fit* f, const char* out_dir) {
  return guarded([&] {
    require(f, "fit");
    require(out_dir, "output directory");
    if (!f->dic) throw inla::DiagnosticsUnavailable(f->dic_error);
    inla::write_files(out_dir, inla::render_fit(f->record, *f->model, *f->data, f->fit, *f->dic));
  });
}

inla_status inla_compare_run(const char* data_path, const char* adjacency_path, const char* const* presets,
                             size_t n_presets, const inla_fit_options* options, const char* out_dir) {
  return guarded([&] {
    require(data_path, "data path");
    require(out_dir, "output directory");
    inla::RunRecord rec;
    rec.command = "compare";
    rec.data_path = data_path;
    rec.adjacency_path = adjacency_path ? adjacency_path : "";
    if (presets && n_presets > 0) {
      for (size_t i = 0; i < n_presets; ++i) {
        require(presets[i], "preset name");
        rec.presets.emplace_back(presets[i]);
      }
    } else {
      rec.presets = table_presets();
    }
    rec.options = to_options(options);
    inla::write_files(out_dir, inla::run_compare(std::move(rec)).files);
  });
}

inla_status inla_replay(const char* provenance_path, const char* out_dir) {
  return guarded([&] {
    require(provenance_path, "provenance path");
    require(out_dir, "output directory");
    inla::write_files(out_dir, inla::run_replay(read_text(provenance_path)));
  });
}

inla_status inla_simulate(const char* preset, size_t units, const uint64_t* seed, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "output directory");
    if (!seed) throw inla::SpecError("simulation needs an explicit seed");
    inla::SimulationOptions o;
    if (preset) {
      if (std::string(preset) != "region-like") {
        throw inla::SpecError(std::string("unknown simulation preset '") + preset + "' (known: region-like)");
      }
      o = inla::region_like_options(*seed);
    } else {
      if (units == 0) throw inla::SpecError("simulation needs a preset or a unit count");
      o = inla::lattice_options(units, *seed);
    }
    const inla::SimulatedData sim = inla::simulate_fixture(o);
    inla::FileSet files;
    std::ostringstream data, adj, truth;
    inla::write_dataset_csv(data, sim.data);
    sim.graph.write(adj);
    inla::write_truth_csv(truth, sim);
    files["data.csv"] = data.str();
    files["region.adj"] = adj.str();
    files["truth.csv"] = truth.str();
    nlohmann::ordered_json j;
    j["generator"] = "mt19937_64";
    j["seed"] = *seed;
    j["rows"] = o.rows;
    j["cols"] = o.cols;
    j["cell_km"] = o.cell_km;
    j["intercept"] = o.intercept;
    j["icar_precision"] = o.icar_precision;
    j["time_amplitude"] = o.time_amplitude;
    j["time_scale"] = o.time_scale;
    j["time_noise_sd"] = o.time_noise_sd;
    j["population_log_median"] = o.population_log_median;
    j["population_log_sd"] = o.population_log_sd;
    j["population_range"] = {o.population_min, o.population_max};
    j["truth_model"] = "icar-time";
    files["simulation.json"] = j.dump(2) + "\n";
    inla::write_files(out_dir, files);
  });
}

inla_oracle_options inla_oracle_options_default(void) {
  const inla::McmcSpec ms;
  inla_oracle_options o;
  o.method = INLA_ORACLE_QUADRATURE;
  o.seed = 0;
  o.iterations = ms.iterations;
  o.burn_in = 0;
  o.force = 0;
  return o;
}

inla_status inla_oracle_run(const inla_model* m, const inla_oracle_options* options, const char* out_dir) {
  return guarded([&] {
    require(m, "model");
    require(options, "oracle options");
    require(out_dir, "output directory");
    const inla::LatentModel& model = *m->model;
    const auto& layout = model.layout();
    std::ostringstream lat, eta, hyp, dic;
    nlohmann::ordered_json meta;
    meta["tool"] = "inla-lite";
    meta["version"] = inla::kVersion;
    meta["inputs"] = {{"data", m->record.data_path},
                      {"data_fnv1a64", m->record.data_digest},
                      {"adjacency", m->record.adjacency_path},
                      {"adjacency_fnv1a64", m->record.adjacency_digest}};
    meta["model"] = nlohmann::ordered_json::parse(m->record.model_json);
    inla::DicResult d;
    lat << "block,index,label,mean,sd,mcse\n";
    eta << "obs,unit_id,mean,sd,mcse\n";
    hyp << "name,scale,mean,sd,mcse\n";
    if (options->method == INLA_ORACLE_QUADRATURE) {
      const inla::QuadratureResult q = inla::quadrature_posterior(model);
      for (const auto& b : layout.blocks) {
        for (std::size_t k = 0; k < b.length; ++k) {
          const auto i = static_cast<Eigen::Index>(b.offset + k);
          lat << b.name << ',' << k << ',' << b.labels[k] << ',' << vec_row(q.latent_mean, i) << ','
              << vec_row(q.latent_sd, i) << ",\n";
        }
      }
      for (Eigen::Index j = 0; j < q.eta_mean.size(); ++j) {
        eta << j << ',' << model.observation_units()[static_cast<std::size_t>(j)] << ',' << vec_row(q.eta_mean, j)
            << ',' << vec_row(q.eta_sd, j) << ",\n";
      }
      if (model.hyper_dim() == 1) {
        const std::string& name = layout.hyperparameters[0].name;
        hyp << name << ",log_precision," << inla::fmt17(q.theta_mean) << ',' << inla::fmt17(q.theta_sd) << ",\n";
        hyp << name << ",precision," << inla::fmt17(q.tau_mean) << ',' << inla::fmt17(q.tau_sd) << ",\n";
      }
      d = inla::make_dic(q.mean_deviance, q.deviance_at_mean);
      meta["method"] = "quadrature";
      meta["cells"] = q.cells;
      nlohmann::ordered_json ranges = nlohmann::ordered_json::array();
      for (const auto& r : q.latent_ranges) ranges.push_back({r.lo, r.hi, r.points});
      meta["latent_ranges"] = ranges;
      if (q.theta_range) meta["theta_range"] = {q.theta_range->lo, q.theta_range->hi, q.theta_range->points};
    } else if (options->method == INLA_ORACLE_MCMC) {
      inla::McmcSpec ms;
      ms.seed = options->seed;
      ms.iterations = options->iterations;
      ms.burn_in = options->burn_in ? options->burn_in : options->iterations / 10;
      ms.force = options->force != 0;
      const inla::McmcResult r = inla::metropolis(model, ms);
      if (r.gated) {
        throw inla::DiagnosticsUnavailable("split R-hat " + inla::fmt17(r.max_rhat) +
                                           " exceeds 1.05; rerun longer or force");
      }
      for (const auto& b : layout.blocks) {
        for (std::size_t k = 0; k < b.length; ++k) {
          const auto i = static_cast<Eigen::Index>(b.offset + k);
          lat << b.name << ',' << k << ',' << b.labels[k] << ',' << vec_row(r.latent_mean, i) << ','
              << vec_row(r.latent_sd, i) << ',' << vec_row(r.latent_mcse, i) << '\n';
        }
      }
      for (Eigen::Index j = 0; j < r.eta_mean.size(); ++j) {
        eta << j << ',' << model.observation_units()[static_cast<std::size_t>(j)] << ',' << vec_row(r.eta_mean, j)
            << ',' << vec_row(r.eta_sd, j) << ',' << vec_row(r.eta_mcse, j) << '\n';
      }
      for (std::size_t j = 0; j < model.hyper_dim(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        hyp << layout.hyperparameters[j].name << ",log_precision," << vec_row(r.theta_mean, jj) << ','
            << vec_row(r.theta_sd, jj) << ',' << vec_row(r.theta_mcse, jj) << '\n';
      }
      d = r.dic;
      meta["method"] = "mcmc";
      meta["generator"] = "mt19937_64";
      meta["seed"] = r.seed;
      meta["iterations"] = ms.iterations;
      meta["burn_in"] = ms.burn_in;
      meta["chains"] = ms.chains;
      meta["tuning_sweeps"] = ms.tuning_sweeps;
      meta["kept_per_chain"] = r.kept_per_chain;
      meta["max_split_rhat"] = r.max_rhat;
      meta["converged"] = r.converged;
      meta["acceptance"] = r.acceptance;
    } else {
      throw inla::SpecError("oracle method must be quadrature or mcmc");
    }
    dic << "Model,mean_deviance,deviance_at_mean,p_D,DIC\n"
        << inla::model_title(model) << ',' << inla::fmt17(d.mean_deviance) << ','
        << inla::fmt17(d.deviance_at_mean) << ',' << inla::fmt17(d.p_d) << ',' << inla::fmt17(d.dic) << '\n';
    inla::FileSet files;
    files["oracle_latent.csv"] = lat.str();
    files["oracle_eta.csv"] = eta.str();
    files["oracle_hyper.csv"] = hyp.str();
    files["oracle_dic.csv"] = dic.str();
    files["oracle.json"] = meta.dump(2) + "\n";
    inla::write_files(out_dir, files);
  });
}

}  // extern "C"
