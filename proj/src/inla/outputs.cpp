#include "inla/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "inla/errors.hpp"
#include "inla/likelihood.hpp"

namespace inla {

using ojson = nlohmann::ordered_json;

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place: " + path.string());
  }
}

void write_files(const std::filesystem::path& dir, const FileSet& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
  }
  for (const auto& [name, content] : files) {
    const std::filesystem::path p = dir / name;
    std::filesystem::create_directories(p.parent_path(), ec);
    write_atomic(p, content);
  }
}

std::string model_title(const LatentModel& model) {
  const auto& names = ModelSpec::preset_names();
  const std::string& name = model.spec().name;
  if (std::find(names.begin(), names.end(), name) != names.end()) return ModelSpec::preset_title(name);
  return name;
}

namespace {

// quote only when needed
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void summary_fields(std::ostringstream& out, const Summary& s) {
  out << fmt17(s.mean) << ',' << fmt17(s.sd) << ',' << fmt17(s.q025) << ',' << fmt17(s.q50) << ','
      << fmt17(s.q975);
}

double expit_fn(double v) { return expit(v); }
double exp_fn(double v) { return std::exp(v); }

ojson options_json(const FitOptions& o) {
  ojson j;
  j["delta_z"] = o.delta_z;
  j["delta_pi"] = o.delta_pi;
  j["marginal"] = marginal_path_name(o.path);
  j["laplace_indices"] = o.laplace_indices;
  j["grid_points"] = o.grid_points;
  j["newton"] = {{"tolerance", o.newton.tolerance}, {"max_iterations", o.newton.max_iterations}};
  j["mode"] = {{"gradient_step", o.mode.gradient_step},
               {"gradient_tolerance", o.mode.gradient_tolerance},
               {"max_iterations", o.mode.max_iterations}};
  j["hessian_step"] = o.hessian_step;
  j["sla"] = {{"grid_lo", o.sla.grid_lo},
              {"grid_hi", o.sla.grid_hi},
              {"grid_step", o.sla.grid_step},
              {"damp_start", o.sla.damp_start},
              {"damp_end", o.sla.damp_end}};
  j["laplace"] = {{"half_width_sd", o.laplace.half_width_sd},
                  {"points", o.laplace.points},
                  {"min_points", o.laplace.min_points},
                  {"newton_tolerance", o.laplace.newton.tolerance},
                  {"newton_max_iterations", o.laplace.newton.max_iterations}};
  j["theta_init"] = o.theta_init ? ojson(std::vector<double>(o.theta_init->data(), o.theta_init->data() + o.theta_init->size()))
                                 : ojson(nullptr);
  j["fixed_theta"] = o.fixed_theta ? ojson(std::vector<double>(o.fixed_theta->data(), o.fixed_theta->data() + o.fixed_theta->size()))
                                   : ojson(nullptr);
  j["linear_predictor_marginals"] = o.linear_predictor_marginals;
  return j;
}

template <class T>
T take(const ojson& j, const char* key) {
  if (!j.contains(key)) throw SpecError(std::string("provenance is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const ojson::exception&) {
    throw SpecError(std::string("provenance field '") + key + "' has the wrong type");
  }
}

std::optional<Eigen::VectorXd> vector_or_null(const ojson& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto v = take<std::vector<double>>(j, key);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

FitOptions options_from_json(const ojson& j) {
  FitOptions o;
  o.delta_z = take<double>(j, "delta_z");
  o.delta_pi = take<double>(j, "delta_pi");
  const auto path = take<std::string>(j, "marginal");
  if (path == "la") {
    o.path = MarginalPath::Laplace;
  } else if (path == "sla") {
    o.path = MarginalPath::SimplifiedLaplace;
  } else {
    throw SpecError("provenance marginal path must be sla or la");
  }
  o.laplace_indices = take<std::vector<std::size_t>>(j, "laplace_indices");
  o.grid_points = take<std::size_t>(j, "grid_points");
  const ojson& nw = j.at("newton");
  o.newton.tolerance = take<double>(nw, "tolerance");
  o.newton.max_iterations = take<int>(nw, "max_iterations");
  const ojson& md = j.at("mode");
  o.mode.gradient_step = take<double>(md, "gradient_step");
  o.mode.gradient_tolerance = take<double>(md, "gradient_tolerance");
  o.mode.max_iterations = take<int>(md, "max_iterations");
  o.hessian_step = take<double>(j, "hessian_step");
  const ojson& s = j.at("sla");
  o.sla.grid_lo = take<double>(s, "grid_lo");
  o.sla.grid_hi = take<double>(s, "grid_hi");
  o.sla.grid_step = take<double>(s, "grid_step");
  o.sla.damp_start = take<double>(s, "damp_start");
  o.sla.damp_end = take<double>(s, "damp_end");
  const ojson& l = j.at("laplace");
  o.laplace.half_width_sd = take<double>(l, "half_width_sd");
  o.laplace.points = take<std::size_t>(l, "points");
  o.laplace.min_points = take<std::size_t>(l, "min_points");
  o.laplace.newton.tolerance = take<double>(l, "newton_tolerance");
  o.laplace.newton.max_iterations = take<int>(l, "newton_max_iterations");
  o.theta_init = vector_or_null(j, "theta_init");
  o.fixed_theta = vector_or_null(j, "fixed_theta");
  o.linear_predictor_marginals = take<bool>(j, "linear_predictor_marginals");
  return o;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ojson matrix_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_vec(m.row(r).transpose()));
  return rows;
}

}  // namespace

std::string latent_marginals_csv(const FitResult& fit, const LatentModel& model) {
  std::ostringstream out;
  out << "block,index,label,mean,sd,q025,q50,q975\n";
  for (const auto& b : model.layout().blocks) {
    for (std::size_t k = 0; k < b.length; ++k) {
      out << b.name << ',' << k << ',' << csv_field(b.labels[k]) << ',';
      summary_fields(out, fit.latent.at(b.offset + k).summary());
      out << '\n';
    }
  }
  return out.str();
}

std::string hyper_marginals_csv(const FitResult& fit) {
  std::ostringstream out;
  out << "name,scale,mean,sd,q025,q50,q975\n";
  for (std::size_t j = 0; j < fit.hyper.size(); ++j) {
    const std::string& name = fit.layout.hyperparameters.at(j).name;
    out << name << ",log_precision,";
    summary_fields(out, fit.hyper[j].log_precision.summary());
    out << '\n' << name << ",precision,";
    summary_fields(out, fit.hyper[j].precision.summary());
    out << '\n';
  }
  return out.str();
}

std::string effects_exp_csv(const std::vector<EffectRow>& rows) {
  std::ostringstream out;
  out << "block,level,exp_mean,exp_q025,exp_q975,note\n";
  for (const auto& r : rows) {
    out << r.block << ',' << csv_field(r.label) << ',' << fmt17(r.exp_summary.mean) << ','
        << fmt17(r.exp_summary.q025) << ',' << fmt17(r.exp_summary.q975) << ','
        << (r.reference ? "Reference zone" : "") << '\n';
  }
  return out.str();
}

std::string unit_summaries_csv(const FitResult& fit, const LatentModel& model, const Dataset& data) {
  if (fit.linear_predictor.size() != model.n_obs()) {
    throw DiagnosticsUnavailable("unit summaries need the linear predictor marginals");
  }
  double ys = 0.0, ns = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    ys += static_cast<double>(data.y[j]);
    ns += static_cast<double>(data.n[j]);
  }
  const double rate = ys / ns;
  const LatentBlock* icar = model.layout().find(BlockKind::ICAR);
  std::ostringstream out;
  out << "unit_id,y,N,srr,fitted_mean,fitted_q025,fitted_q975,exp_spatial_mean,exp_spatial_q025,exp_spatial_q975\n";
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double expected = static_cast<double>(data.n[j]) * rate;
    const Summary p = fit.linear_predictor[j].summary_transformed(expit_fn);
    out << data.unit[j] << ',' << data.y[j] << ',' << data.n[j] << ','
        << fmt17(expected > 0.0 ? static_cast<double>(data.y[j]) / expected : 0.0) << ',' << fmt17(p.mean) << ','
        << fmt17(p.q025) << ',' << fmt17(p.q975) << ',';
    if (icar) {
      const Summary s = fit.latent.at(icar->offset + data.unit[j]).summary_transformed(exp_fn);
      out << fmt17(s.mean) << ',' << fmt17(s.q025) << ',' << fmt17(s.q975);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string dic_csv(const std::string& title, const DicResult& d) {
  std::ostringstream out;
  out << "Model,p_D,DIC\n" << csv_field(title) << ',' << fmt17(d.p_d) << ',' << fmt17(d.dic) << '\n';
  return out.str();
}

std::string provenance_json(const RunRecord& rec, const FitResult* fit, const DicResult* d,
                            const std::vector<std::string>& warnings) {
  ojson j;
  j["tool"] = "inla-lite";
  j["version"] = kVersion;
  j["command"] = rec.command;
  j["inputs"] = {{"data", rec.data_path},
                 {"data_fnv1a64", rec.data_digest},
                 {"adjacency", rec.adjacency_path},
                 {"adjacency_fnv1a64", rec.adjacency_digest}};
  if (rec.command == "fit") {
    j["preset"] = rec.preset ? ojson(*rec.preset) : ojson(nullptr);
    j["model_path"] = rec.model_path ? ojson(*rec.model_path) : ojson(nullptr);
    j["model"] = ojson::parse(rec.model_json);
  } else {
    j["presets"] = rec.presets;
  }
  j["options"] = options_json(rec.options);
  j["conventions"] = {
      {"area_weights", "equal-area: every accepted z point carries delta_z^dim"},
      {"axis_grid_above_two_dims", "axis points only"},
      {"dic_plugin", "posterior mean of the linear predictor"},
      {"dic_expected_deviance", "second-order expansion around each conditional mode"},
      {"dic_formula", "DIC = 2 Dbar - D(eta_bar), p_D = Dbar - D(eta_bar)"},
      {"deviance_constant", "binomial coefficient included"},
      {"constraint_stabilizer", "kappa C^T C with kappa = max(1, mean diag Q)"},
      {"fixed_prior_parameter", "read as a precision unless the model says fixed_prior_variance"},
  };
  if (fit) {
    const ThetaExploration& ex = fit->exploration;
    ojson e;
    e["theta_star"] = to_vec(ex.theta_star);
    e["log_posterior_star"] = ex.log_post_star;
    e["mode_iterations"] = fit->mode.iterations;
    e["mode_gradient_norm"] = fit->mode.gradient_norm;
    e["negative_hessian"] = matrix_json(ex.hessian);
    e["eigenvalues"] = to_vec(ex.eigenvalues);
    e["eigenvectors"] = matrix_json(ex.eigenvectors);
    e["axis_offsets"] = ex.axis_offsets;
    ojson pts = ojson::array();
    for (const auto& p : ex.points) {
      pts.push_back({{"z", to_vec(p.z)}, {"theta", to_vec(p.theta)}, {"log_posterior", p.log_posterior},
                     {"weight", p.weight}});
    }
    e["points"] = pts;
    j["exploration"] = e;
    j["skewness_fallbacks"] = fit->skewness_fallbacks;
  }
  if (d) {
    j["dic"] = {{"mean_deviance", d->mean_deviance},
                {"deviance_at_mean", d->deviance_at_mean},
                {"p_d", d->p_d},
                {"dic", d->dic}};
  }
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

RunRecord parse_provenance(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw SpecError(std::string("provenance is not valid JSON: ") + e.what());
  }
  RunRecord rec;
  rec.command = take<std::string>(j, "command");
  if (rec.command != "fit" && rec.command != "compare") throw SpecError("provenance command must be fit or compare");
  const ojson& in = j.at("inputs");
  rec.data_path = take<std::string>(in, "data");
  rec.data_digest = take<std::string>(in, "data_fnv1a64");
  rec.adjacency_path = take<std::string>(in, "adjacency");
  rec.adjacency_digest = take<std::string>(in, "adjacency_fnv1a64");
  if (rec.command == "fit") {
    if (!j.at("preset").is_null()) rec.preset = take<std::string>(j, "preset");
    if (!j.at("model_path").is_null()) rec.model_path = take<std::string>(j, "model_path");
    rec.model_json = j.at("model").dump();
  } else {
    rec.presets = take<std::vector<std::string>>(j, "presets");
  }
  if (!j.contains("options")) throw SpecError("provenance is missing 'options'");
  rec.options = options_from_json(j.at("options"));
  return rec;
}

FileSet render_fit(const RunRecord& rec, const LatentModel& model, const Dataset& data, const FitResult& fit,
                   const DicResult& d) {
  FileSet files;
  files["latent_marginals.csv"] = latent_marginals_csv(fit, model);
  files["hyper_marginals.csv"] = hyper_marginals_csv(fit);
  files["effects_exp.csv"] = effects_exp_csv(effect_summaries(fit, model));
  files["unit_summaries.csv"] = unit_summaries_csv(fit, model, data);
  files["dic.csv"] = dic_csv(model_title(model), d);
  files["provenance.json"] = provenance_json(rec, &fit, &d, fit.warnings);
  return files;
}

FileSet render_compare(const RunRecord& rec, const std::vector<CompareEntry>& entries,
                       const std::vector<std::string>& warnings) {
  std::vector<const CompareEntry*> done, skipped;
  for (const auto& e : entries) (e.dic ? done : skipped).push_back(&e);
  std::stable_sort(done.begin(), done.end(),
                   [](const CompareEntry* a, const CompareEntry* b) { return a->dic->dic < b->dic->dic; });
  std::ostringstream t1;
  t1 << "Model,p_D,DIC,preset,best,warning\n";
  for (std::size_t k = 0; k < done.size(); ++k) {
    const auto* e = done[k];
    t1 << csv_field(e->title) << ',' << fmt17(e->dic->p_d) << ',' << fmt17(e->dic->dic) << ',' << e->preset << ','
       << (k == 0 ? "yes" : "") << ",\n";
  }
  for (const auto* e : skipped) {
    t1 << csv_field(e->title) << ",,," << e->preset << ",," << csv_field(e->warning) << '\n';
  }
  FileSet files;
  files["dic_table.csv"] = t1.str();
  for (const auto& e : entries) {
    if (e.zones.empty()) continue;
    std::ostringstream t2;
    t2 << "zone,posterior_mean,ci_q025,ci_q975,note\n";
    for (const auto& r : e.zones) {
      if (r.reference) {
        t2 << csv_field(r.label) << ",,,,Reference zone\n";
      } else {
        t2 << csv_field(r.label) << ',' << fmt17(r.exp_summary.mean) << ',' << fmt17(r.exp_summary.q025) << ','
           << fmt17(r.exp_summary.q975) << ",\n";
      }
    }
    files["zone_table.csv"] = t2.str();
    break;
  }
  files["provenance.json"] = provenance_json(rec, nullptr, nullptr, warnings);
  return files;
}

}  // namespace inla
