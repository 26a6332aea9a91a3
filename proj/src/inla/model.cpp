#include "inla/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "inla/errors.hpp"

namespace inla {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw SpecError(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || it.key() == key;
    if (!ok) throw SpecError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get_required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw SpecError(where + " is missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SpecError(where + ": '" + key + "' has the wrong type");
  }
}

// Zone labels: numeric order when every label parses as a number.
std::vector<std::string> sorted_levels(const std::vector<std::string>& raw) {
  std::set<std::string> uniq(raw.begin(), raw.end());
  std::vector<std::string> levels(uniq.begin(), uniq.end());
  bool numeric = true;
  for (const auto& s : levels) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    numeric = numeric && !s.empty() && end == s.c_str() + s.size();
  }
  if (numeric) {
    std::stable_sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
      return std::strtod(a.c_str(), nullptr) < std::strtod(b.c_str(), nullptr);
    });
  }
  return levels;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

BinRule parse_bin_rule(const json& j, const std::string& where) {
  BinRule rule;
  const auto kind = get_required<std::string>(j, "rule", where);
  if (kind == "fixed") {
    reject_unknown_keys(j, {"rule", "width", "origin"}, where);
    rule.kind = BinRule::Kind::FixedWidth;
    rule.width = get_required<double>(j, "width", where);
    if (j.contains("origin")) rule.origin = get_required<double>(j, "origin", where);
    if (!(rule.width > 0.0)) throw SpecError(where + ": width must be positive");
  } else if (kind == "quantile") {
    reject_unknown_keys(j, {"rule", "k"}, where);
    rule.kind = BinRule::Kind::Quantile;
    const auto k = get_required<long long>(j, "k", where);
    if (k < 3) throw SpecError(where + ": quantile rule needs k >= 3");
    rule.quantiles = static_cast<std::size_t>(k);
  } else if (kind == "edges") {
    reject_unknown_keys(j, {"rule", "edges"}, where);
    rule.kind = BinRule::Kind::Edges;
    rule.edges = get_required<std::vector<double>>(j, "edges", where);
    if (rule.edges.size() < 2) throw SpecError(where + ": edges rule needs at least 2 edges");
    for (std::size_t k = 1; k < rule.edges.size(); ++k) {
      if (!(rule.edges[k] > rule.edges[k - 1])) {
        throw SpecError(where + ": edges must be strictly increasing");
      }
    }
  } else {
    throw SpecError(where + ": unknown bin rule '" + kind + "'");
  }
  return rule;
}

json bin_rule_json(const BinRule& r) {
  switch (r.kind) {
    case BinRule::Kind::FixedWidth:
      return json{{"rule", "fixed"}, {"width", r.width}, {"origin", r.origin}};
    case BinRule::Kind::Quantile:
      return json{{"rule", "quantile"}, {"k", r.quantiles}};
    case BinRule::Kind::Edges:
      return json{{"rule", "edges"}, {"edges", r.edges}};
  }
  return {};
}

Term rw2_term(const std::string& covariate, BinRule rule) {
  Term t;
  t.kind = TermKind::SmoothRW2;
  t.covariate = covariate;
  t.bin = std::move(rule);
  return t;
}

BinRule fixed_width(double width) {
  BinRule r;
  r.kind = BinRule::Kind::FixedWidth;
  r.width = width;
  return r;
}

}  // namespace

double ModelSpec::fixed_prior_precision() const {
  if (!(fixed_prior > 0.0)) throw SpecError("fixed-effect prior parameter must be positive");
  return fixed_prior_reading == FixedPriorReading::Precision ? fixed_prior : 1.0 / fixed_prior;
}

std::size_t ModelSpec::hyperparameter_count() const {
  std::size_t count = 0;
  for (const Term& t : terms) {
    switch (t.kind) {
      case TermKind::SmoothRW2:
      case TermKind::SpatialICAR:
      case TermKind::IIDUnit:
        ++count;
        break;
      case TermKind::ZoneFactor:
        if (t.random) ++count;
        break;
      default:
        break;
    }
  }
  return count;
}

void ModelSpec::validate() const {
  if (terms.empty()) throw SpecError("model has no terms");
  std::size_t intercepts = 0;
  std::size_t icar = 0;
  std::size_t iid = 0;
  for (const Term& t : terms) {
    intercepts += t.kind == TermKind::Intercept;
    icar += t.kind == TermKind::SpatialICAR;
    iid += t.kind == TermKind::IIDUnit;
    const bool needs_covariate = t.kind == TermKind::Linear || t.kind == TermKind::SmoothRW2 ||
                                 t.kind == TermKind::ZoneFactor;
    if (needs_covariate && t.covariate.empty()) throw SpecError("term is missing its covariate");
  }
  if (intercepts > 1) throw SpecError("at most one intercept term is allowed");
  if (icar > 1) throw SpecError("at most one icar term is allowed");
  if (iid > 1) throw SpecError("at most one iid term is allowed");
  const std::size_t h = hyperparameter_count();
  if (h > kMaxHyperparameters) {
    throw SpecError("model has " + std::to_string(h) +
                    " hyperparameters; the engine supports at most " +
                    std::to_string(kMaxHyperparameters) +
                    " (grid exploration cost grows exponentially with their number)");
  }
  hyperprior.validate();
  fixed_prior_precision();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("model config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(root,
                      {"name", "terms", "hyperprior", "fixed_prior_precision", "fixed_prior_variance"},
                      "model config");
  ModelSpec spec;
  if (root.contains("name")) spec.name = get_required<std::string>(root, "name", "model config");
  if (!root.contains("terms") || !root["terms"].is_array()) {
    throw SpecError("model config needs a 'terms' array");
  }
  std::size_t index = 0;
  for (const json& jt : root["terms"]) {
    const std::string where = "term " + std::to_string(index++);
    const auto kind = get_required<std::string>(jt, "kind", where);
    Term t;
    if (kind == "intercept") {
      reject_unknown_keys(jt, {"kind"}, where);
      t.kind = TermKind::Intercept;
    } else if (kind == "linear") {
      reject_unknown_keys(jt, {"kind", "covariate"}, where);
      t.kind = TermKind::Linear;
      t.covariate = get_required<std::string>(jt, "covariate", where);
    } else if (kind == "rw2") {
      reject_unknown_keys(jt, {"kind", "covariate", "bin"}, where);
      t.kind = TermKind::SmoothRW2;
      t.covariate = get_required<std::string>(jt, "covariate", where);
      if (!jt.contains("bin")) throw SpecError(where + " (rw2) needs a 'bin' rule");
      t.bin = parse_bin_rule(jt["bin"], where + " bin");
    } else if (kind == "icar") {
      reject_unknown_keys(jt, {"kind", "graph"}, where);
      t.kind = TermKind::SpatialICAR;
      if (jt.contains("graph")) t.graph = get_required<std::string>(jt, "graph", where);
    } else if (kind == "iid") {
      reject_unknown_keys(jt, {"kind"}, where);
      t.kind = TermKind::IIDUnit;
    } else if (kind == "zone_factor") {
      reject_unknown_keys(jt, {"kind", "covariate", "reference", "effect"}, where);
      t.kind = TermKind::ZoneFactor;
      t.covariate = get_required<std::string>(jt, "covariate", where);
      t.reference = get_required<std::string>(jt, "reference", where);
      if (jt.contains("effect")) {
        const auto effect = get_required<std::string>(jt, "effect", where);
        if (effect == "random") {
          t.random = true;
        } else if (effect != "fixed") {
          throw SpecError(where + ": effect must be 'fixed' or 'random'");
        }
      }
    } else {
      throw SpecError(where + ": unknown term kind '" + kind + "'");
    }
    spec.terms.push_back(std::move(t));
  }
  if (root.contains("hyperprior")) {
    const json& hp = root["hyperprior"];
    reject_unknown_keys(hp, {"a", "b"}, "hyperprior");
    spec.hyperprior.shape = get_required<double>(hp, "a", "hyperprior");
    spec.hyperprior.rate = get_required<double>(hp, "b", "hyperprior");
  }
  if (root.contains("fixed_prior_precision") && root.contains("fixed_prior_variance")) {
    throw SpecError("give fixed_prior_precision or fixed_prior_variance, not both");
  }
  if (root.contains("fixed_prior_precision")) {
    spec.fixed_prior = get_required<double>(root, "fixed_prior_precision", "model config");
  } else if (root.contains("fixed_prior_variance")) {
    spec.fixed_prior = get_required<double>(root, "fixed_prior_variance", "model config");
    spec.fixed_prior_reading = FixedPriorReading::Variance;
  }
  spec.validate();
  return spec;
}

std::string ModelSpec::to_json() const {
  json terms_json = json::array();
  for (const Term& t : terms) {
    json jt;
    switch (t.kind) {
      case TermKind::Intercept:
        jt = {{"kind", "intercept"}};
        break;
      case TermKind::Linear:
        jt = {{"kind", "linear"}, {"covariate", t.covariate}};
        break;
      case TermKind::SmoothRW2:
        jt = {{"kind", "rw2"}, {"covariate", t.covariate}, {"bin", bin_rule_json(t.bin)}};
        break;
      case TermKind::SpatialICAR:
        jt = {{"kind", "icar"}};
        if (!t.graph.empty()) jt["graph"] = t.graph;
        break;
      case TermKind::IIDUnit:
        jt = {{"kind", "iid"}};
        break;
      case TermKind::ZoneFactor:
        jt = {{"kind", "zone_factor"},
              {"covariate", t.covariate},
              {"reference", t.reference},
              {"effect", t.random ? "random" : "fixed"}};
        break;
    }
    terms_json.push_back(std::move(jt));
  }
  json root = {{"name", name},
               {"terms", terms_json},
               {"hyperprior", {{"a", hyperprior.shape}, {"b", hyperprior.rate}}}};
  if (fixed_prior_reading == FixedPriorReading::Precision) {
    root["fixed_prior_precision"] = fixed_prior;
  } else {
    root["fixed_prior_variance"] = fixed_prior;
  }
  return root.dump();
}

const std::vector<std::string>& ModelSpec::preset_names() {
  static const std::vector<std::string> names = {
      "icar-only", "convolution", "icar-dist", "icar-time", "icar-dist2", "icar-zone", "icar-density"};
  return names;
}

std::string ModelSpec::preset_title(const std::string& name) {
  static const std::map<std::string, std::string> titles = {
      {"icar-only", "ICAR alone"},
      {"convolution", "ICAR and heterogeneity (convolution prior)"},
      {"icar-dist", "ICAR and distance to provider"},
      {"icar-time", "ICAR and access time to provider"},
      {"icar-dist2", "ICAR and distance to the second provider"},
      {"icar-zone", "ICAR and proximity zone (as factor)"},
      {"icar-density", "ICAR and medical density"},
  };
  auto it = titles.find(name);
  return it == titles.end() ? name : it->second;
}

ModelSpec ModelSpec::preset(const std::string& name) {
  ModelSpec spec;
  spec.name = name;
  Term intercept;
  intercept.kind = TermKind::Intercept;
  Term icar;
  icar.kind = TermKind::SpatialICAR;
  spec.terms = {intercept, icar};
  if (name == "icar-only") {
  } else if (name == "convolution") {
    Term iid;
    iid.kind = TermKind::IIDUnit;
    spec.terms.push_back(iid);
  } else if (name == "icar-dist") {
    spec.terms.push_back(rw2_term("distance", fixed_width(5.0)));
  } else if (name == "icar-time") {
    spec.terms.push_back(rw2_term("access_time", fixed_width(5.0)));
  } else if (name == "icar-dist2") {
    spec.terms.push_back(rw2_term("distance2", fixed_width(5.0)));
  } else if (name == "icar-zone") {
    Term zone;
    zone.kind = TermKind::ZoneFactor;
    zone.covariate = "zone";
    zone.reference = "7";
    spec.terms.push_back(zone);
  } else if (name == "icar-density") {
    BinRule q;
    q.kind = BinRule::Kind::Quantile;
    q.quantiles = 10;
    spec.terms.push_back(rw2_term("density", q));
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw SpecError("unknown preset '" + name + "' (known: " + known + ")");
  }
  spec.validate();
  return spec;
}

BinnedCovariate bin_covariate(const std::vector<double>& values, const BinRule& rule,
                              std::size_t min_levels) {
  if (values.empty()) throw SpecError("cannot bin an empty covariate");
  for (double v : values) {
    if (!std::isfinite(v)) throw SpecError("cannot bin non-finite covariate values");
  }
  // raw bins described by edges[k], edges[k+1]; raw_index per row
  std::vector<double> edges;
  std::vector<std::size_t> raw_index(values.size());
  switch (rule.kind) {
    case BinRule::Kind::FixedWidth: {
      if (!(rule.width > 0.0)) throw SpecError("bin width must be positive");
      std::size_t max_index = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double k = std::floor((values[i] - rule.origin) / rule.width);
        if (k < 0.0) throw SpecError("covariate value below the binning origin");
        raw_index[i] = static_cast<std::size_t>(k);
        max_index = std::max(max_index, raw_index[i]);
      }
      for (std::size_t k = 0; k <= max_index + 1; ++k) {
        edges.push_back(rule.origin + rule.width * static_cast<double>(k));
      }
      break;
    }
    case BinRule::Kind::Quantile: {
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      for (std::size_t q = 0; q <= rule.quantiles; ++q) {
        const double pos = static_cast<double>(q) / static_cast<double>(rule.quantiles) *
                           static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double e = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
        if (edges.empty() || e > edges.back()) edges.push_back(e);
      }
      if (edges.size() < 2) edges.push_back(edges.back());
      for (std::size_t i = 0; i < values.size(); ++i) {
        auto it = std::upper_bound(edges.begin(), edges.end(), values[i]);
        std::size_t k = static_cast<std::size_t>(it - edges.begin());
        k = k == 0 ? 0 : k - 1;
        raw_index[i] = std::min(k, edges.size() - 2);
      }
      break;
    }
    case BinRule::Kind::Edges: {
      edges = rule.edges;
      if (edges.size() < 2) throw SpecError("edges rule needs at least 2 edges");
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < edges.front() || values[i] > edges.back()) {
          throw SpecError("covariate value outside the explicit bin edges");
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), values[i]);
        const auto k = static_cast<std::size_t>(it - edges.begin()) - 1;
        raw_index[i] = std::min(k, edges.size() - 2);
      }
      break;
    }
  }

  const std::size_t raw_bins = edges.size() - 1;
  std::vector<std::size_t> counts(raw_bins, 0);
  for (std::size_t k : raw_index) ++counts[k];
  std::vector<std::size_t> nonempty;
  for (std::size_t k = 0; k < raw_bins; ++k) {
    if (counts[k] > 0) nonempty.push_back(k);
  }
  if (nonempty.size() < min_levels) {
    throw SpecError("covariate yields " + std::to_string(nonempty.size()) +
                    " non-empty bins; a smooth term needs at least " + std::to_string(min_levels));
  }

  BinnedCovariate out;
  std::vector<std::size_t> level_of_raw(raw_bins, 0);
  for (std::size_t l = 0; l < nonempty.size(); ++l) level_of_raw[nonempty[l]] = l;
  // empty interior bins join the nearest non-empty bin (ties go down)
  for (std::size_t k = nonempty.front(); k <= nonempty.back(); ++k) {
    if (counts[k] > 0) continue;
    ++out.merged_empty_bins;
    auto above = std::lower_bound(nonempty.begin(), nonempty.end(), k);
    const std::size_t up = *above;
    const std::size_t down = *(above - 1);
    level_of_raw[k] = (k - down <= up - k) ? level_of_raw[down] : level_of_raw[up];
  }
  out.bin_edges.push_back(edges[nonempty.front()]);
  for (std::size_t l = 0; l < nonempty.size(); ++l) {
    const std::size_t k = nonempty[l];
    out.level_values.push_back(0.5 * (edges[k] + edges[k + 1]));
    std::size_t last_raw = k;
    while (last_raw + 1 <= nonempty.back() && level_of_raw[last_raw + 1] == l &&
           (last_raw + 1 >= raw_bins || counts[last_raw + 1] == 0)) {
      ++last_raw;
    }
    out.bin_edges.push_back(edges[last_raw + 1]);
  }
  out.level_of_row.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.level_of_row[i] = level_of_raw[raw_index[i]];
  return out;
}

const char* block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Intercept:
      return "intercept";
    case BlockKind::Linear:
      return "linear";
    case BlockKind::ZoneFixed:
      return "zone";
    case BlockKind::ZoneRandom:
      return "zone_random";
    case BlockKind::RW2:
      return "rw2";
    case BlockKind::ICAR:
      return "icar";
    case BlockKind::IID:
      return "iid";
  }
  return "?";
}

Eigen::MatrixXd LatentLayout::constraint_matrix() const {
  Eigen::MatrixXd c(constraint_rows.size(), total_dim);
  for (std::size_t k = 0; k < constraint_rows.size(); ++k) {
    c.row(static_cast<Eigen::Index>(k)) = constraint_rows[k].transpose();
  }
  return c;
}

const LatentBlock* LatentLayout::find(BlockKind kind) const {
  for (const auto& b : blocks) {
    if (b.kind == kind) return &b;
  }
  return nullptr;
}

std::size_t LatentLayout::block_of(std::size_t latent_index) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (latent_index >= blocks[b].offset && latent_index < blocks[b].offset + blocks[b].length) {
      return b;
    }
  }
  throw IndexOutOfRange("latent index " + std::to_string(latent_index));
}

std::string LatentLayout::element_label(std::size_t latent_index) const {
  const auto& b = blocks[block_of(latent_index)];
  return b.labels[latent_index - b.offset];
}

namespace {

int block_rank(TermKind kind) {
  switch (kind) {
    case TermKind::Intercept:
      return 0;
    case TermKind::Linear:
    case TermKind::ZoneFactor:
      return 1;
    case TermKind::SmoothRW2:
      return 2;
    case TermKind::SpatialICAR:
      return 3;
    case TermKind::IIDUnit:
      return 4;
  }
  return 5;
}

}  // namespace

LatentLayout assemble_layout(const ModelSpec& spec, const Dataset& data) {
  spec.validate();
  data.validate();
  std::vector<std::size_t> order(spec.terms.size());
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return block_rank(spec.terms[a].kind) < block_rank(spec.terms[b].kind);
  });

  const bool has_intercept = std::any_of(spec.terms.begin(), spec.terms.end(), [](const Term& t) {
    return t.kind == TermKind::Intercept;
  });

  LatentLayout layout;
  std::size_t offset = 0;
  auto add_block = [&](LatentBlock b) -> LatentBlock& {
    b.offset = offset;
    offset += b.length;
    if (b.hyper) layout.hyperparameters.push_back({"tau_" + b.name, layout.blocks.size()});
    layout.blocks.push_back(std::move(b));
    return layout.blocks.back();
  };

  for (std::size_t t : order) {
    const Term& term = spec.terms[t];
    LatentBlock b;
    b.term = t;
    b.covariate = term.covariate;
    switch (term.kind) {
      case TermKind::Intercept:
        b.kind = BlockKind::Intercept;
        b.name = "intercept";
        b.length = 1;
        b.labels = {"(Intercept)"};
        add_block(std::move(b));
        break;
      case TermKind::Linear:
        data.numeric(term.covariate);
        b.kind = BlockKind::Linear;
        b.name = "linear_" + term.covariate;
        b.length = 1;
        b.labels = {term.covariate};
        add_block(std::move(b));
        break;
      case TermKind::ZoneFactor: {
        const auto levels = sorted_levels(data.labels(term.covariate));
        if (term.random) {
          b.kind = BlockKind::ZoneRandom;
          b.name = "zone_" + term.covariate;
          b.labels = levels;
          b.length = levels.size();
          b.hyper = layout.hyperparameters.size();
        } else {
          if (std::find(levels.begin(), levels.end(), term.reference) == levels.end()) {
            throw SpecError("reference level '" + term.reference + "' not present in covariate '" +
                            term.covariate + "'");
          }
          b.kind = BlockKind::ZoneFixed;
          b.name = "zone_" + term.covariate;
          for (const auto& l : levels) {
            if (l != term.reference) b.labels.push_back(l);
          }
          b.length = b.labels.size();
          if (b.length == 0) throw SpecError("zone factor has only the reference level");
        }
        add_block(std::move(b));
        break;
      }
      case TermKind::SmoothRW2: {
        const auto binned = bin_covariate(data.numeric(term.covariate), term.bin);
        b.kind = BlockKind::RW2;
        b.name = "rw2_" + term.covariate;
        b.length = binned.levels();
        b.level_values = binned.level_values;
        for (double v : binned.level_values) b.labels.push_back(format_number(v));
        b.hyper = layout.hyperparameters.size();
        if (binned.merged_empty_bins > 0) {
          layout.warnings.push_back(std::to_string(binned.merged_empty_bins) +
                                    " empty bin(s) of '" + term.covariate +
                                    "' merged into neighbouring bins");
        }
        add_block(std::move(b));
        break;
      }
      case TermKind::SpatialICAR: {
        if (!data.graph) throw SpecError("icar term needs an adjacency graph");
        const AdjacencyGraph& g = *data.graph;
        if (auto iso = g.isolated_units(); !iso.empty()) throw IsolatedUnit(std::move(iso));
        b.kind = BlockKind::ICAR;
        b.name = "icar";
        b.length = g.n_units();
        for (std::size_t u = 0; u < g.n_units(); ++u) b.labels.push_back(std::to_string(u));
        b.hyper = layout.hyperparameters.size();
        if (g.n_components() > 1) {
          layout.warnings.push_back("adjacency graph has " + std::to_string(g.n_components()) +
                                    " connected components; the ICAR prior has rank deficiency " +
                                    std::to_string(g.n_components()));
        }
        add_block(std::move(b));
        break;
      }
      case TermKind::IIDUnit:
        b.kind = BlockKind::IID;
        b.name = "iid";
        b.length = data.n_units;
        for (std::size_t u = 0; u < data.n_units; ++u) b.labels.push_back(std::to_string(u));
        b.hyper = layout.hyperparameters.size();
        add_block(std::move(b));
        break;
    }
  }
  layout.total_dim = offset;

  // sum-to-zero constraints on intrinsic blocks when an intercept is present
  if (has_intercept) {
    for (const auto& b : layout.blocks) {
      if (b.kind == BlockKind::ICAR) {
        const AdjacencyGraph& g = *data.graph;
        for (std::size_t comp = 0; comp < g.n_components(); ++comp) {
          Eigen::VectorXd row = Eigen::VectorXd::Zero(layout.total_dim);
          for (std::size_t u = 0; u < g.n_units(); ++u) {
            if (g.component_labels()[u] == comp) row[b.offset + u] = 1.0;
          }
          layout.constraint_rows.push_back(std::move(row));
        }
      } else if (b.kind == BlockKind::RW2) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(layout.total_dim);
        row.segment(b.offset, b.length).setOnes();
        layout.constraint_rows.push_back(std::move(row));
        const bool linear_too = std::any_of(spec.terms.begin(), spec.terms.end(), [&](const Term& t) {
          return t.kind == TermKind::Linear && t.covariate == b.covariate;
        });
        if (linear_too) {
          Eigen::VectorXd lin = Eigen::VectorXd::Zero(layout.total_dim);
          const double mid = 0.5 * static_cast<double>(b.length - 1);
          for (std::size_t k = 0; k < b.length; ++k) {
            lin[b.offset + k] = static_cast<double>(k) - mid;
          }
          layout.constraint_rows.push_back(std::move(lin));
        }
      }
    }
  }
  return layout;
}

LatentModel LatentModel::build(const ModelSpec& spec, const Dataset& data) {
  LatentModel m;
  m.spec_ = spec;
  m.layout_ = assemble_layout(spec, data);
  m.constraints_ = m.layout_.constraint_matrix();
  m.units_ = data.unit;
  const double fixed_precision = spec.fixed_prior_precision();

  m.incidence_.assign(data.size(), SparseRow{});
  for (const auto& b : m.layout_.blocks) {
    BlockPrior p;
    p.hyper = b.hyper;
    const Term& term = spec.terms[b.term];
    switch (b.kind) {
      case BlockKind::Intercept:
        p.type = BlockPrior::Type::Fixed;
        p.fixed_precision = fixed_precision;
        for (auto& row : m.incidence_) row.push(b.offset, 1.0);
        break;
      case BlockKind::Linear: {
        p.type = BlockPrior::Type::Fixed;
        p.fixed_precision = fixed_precision;
        const auto z = data.numeric(b.covariate);
        for (std::size_t i = 0; i < data.size(); ++i) m.incidence_[i].push(b.offset, z[i]);
        break;
      }
      case BlockKind::ZoneFixed:
      case BlockKind::ZoneRandom: {
        if (b.kind == BlockKind::ZoneFixed) {
          p.type = BlockPrior::Type::Fixed;
          p.fixed_precision = fixed_precision;
        } else {
          p.type = BlockPrior::Type::IID;
        }
        const auto& raw = data.labels(b.covariate);
        for (std::size_t i = 0; i < data.size(); ++i) {
          auto it = std::find(b.labels.begin(), b.labels.end(), raw[i]);
          if (it != b.labels.end()) {
            m.incidence_[i].push(b.offset + static_cast<std::size_t>(it - b.labels.begin()), 1.0);
          }
        }
        break;
      }
      case BlockKind::RW2: {
        p.type = BlockPrior::Type::Intrinsic;
        p.structure = rw2_precision(b.length, 1.0);
        p.rank_deficiency = 2;
        const auto binned = bin_covariate(data.numeric(b.covariate), term.bin);
        for (std::size_t i = 0; i < data.size(); ++i) {
          m.incidence_[i].push(b.offset + binned.level_of_row[i], 1.0);
        }
        break;
      }
      case BlockKind::ICAR:
        p.type = BlockPrior::Type::Intrinsic;
        p.structure = icar_precision(*data.graph, 1.0);
        p.rank_deficiency = data.graph->n_components();
        for (std::size_t i = 0; i < data.size(); ++i) m.incidence_[i].push(b.offset + data.unit[i], 1.0);
        break;
      case BlockKind::IID:
        p.type = BlockPrior::Type::IID;
        for (std::size_t i = 0; i < data.size(); ++i) m.incidence_[i].push(b.offset + data.unit[i], 1.0);
        break;
    }
    m.priors_.push_back(std::move(p));
  }
  m.observations_ = std::make_shared<BinomialLogit>(data.y, data.n);
  return m;
}

LatentModel LatentModel::with_observations(std::shared_ptr<const ObservationModel> obs) const {
  if (!obs || obs->size() != n_obs()) throw DimensionMismatch("observation model size");
  LatentModel m = *this;
  m.observations_ = std::move(obs);
  return m;
}

LatentModel LatentModel::with_hyperprior(const HyperPrior& hp) const {
  hp.validate();
  LatentModel m = *this;
  m.spec_.hyperprior = hp;
  return m;
}

void LatentModel::check_theta(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != hyper_dim()) {
    throw DimensionMismatch("theta has length " + std::to_string(theta.size()) + ", model has " +
                            std::to_string(hyper_dim()) + " hyperparameters");
  }
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    if (!std::isfinite(theta[k])) throw DomainError("non-finite hyperparameter");
  }
}

SymmetricSparseMatrix LatentModel::prior_precision(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  std::vector<SymmetricSparseMatrix> blocks;
  for (std::size_t b = 0; b < priors_.size(); ++b) {
    const auto& p = priors_[b];
    const std::size_t len = layout_.blocks[b].length;
    switch (p.type) {
      case BlockPrior::Type::Fixed:
        blocks.push_back(fixed_effect_precision(len, p.fixed_precision));
        break;
      case BlockPrior::Type::Intrinsic:
        blocks.push_back(p.structure.scaled(std::exp(theta[*p.hyper])));
        break;
      case BlockPrior::Type::IID:
        blocks.push_back(iid_precision(len, std::exp(theta[*p.hyper])));
        break;
    }
  }
  return SymmetricSparseMatrix::block_diagonal(blocks);
}

void LatentModel::add_prior_precision(Eigen::MatrixXd& dense, const Eigen::VectorXd& theta) const {
  check_theta(theta);
  for (std::size_t b = 0; b < priors_.size(); ++b) {
    const auto& p = priors_[b];
    const auto& blk = layout_.blocks[b];
    const auto off = static_cast<Eigen::Index>(blk.offset);
    switch (p.type) {
      case BlockPrior::Type::Fixed:
        for (std::size_t k = 0; k < blk.length; ++k) {
          dense(off + static_cast<Eigen::Index>(k), off + static_cast<Eigen::Index>(k)) +=
              p.fixed_precision;
        }
        break;
      case BlockPrior::Type::Intrinsic:
        p.structure.add_to(dense, blk.offset, std::exp(theta[*p.hyper]));
        break;
      case BlockPrior::Type::IID: {
        const double tau = std::exp(theta[*p.hyper]);
        for (std::size_t k = 0; k < blk.length; ++k) {
          dense(off + static_cast<Eigen::Index>(k), off + static_cast<Eigen::Index>(k)) += tau;
        }
        break;
      }
    }
  }
}

double LatentModel::log_prior_latent(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
  check_theta(theta);
  if (static_cast<std::size_t>(x.size()) != latent_dim()) throw DimensionMismatch("latent vector");
  double lp = 0.0;
  for (std::size_t b = 0; b < priors_.size(); ++b) {
    const auto& p = priors_[b];
    const auto& blk = layout_.blocks[b];
    const Eigen::VectorXd f = x.segment(blk.offset, blk.length);
    switch (p.type) {
      case BlockPrior::Type::Fixed:
        lp += 0.5 * static_cast<double>(blk.length) *
                  std::log(p.fixed_precision / (2.0 * std::numbers::pi)) -
              0.5 * p.fixed_precision * f.squaredNorm();
        break;
      case BlockPrior::Type::Intrinsic:
        lp += intrinsic_log_density(p.structure, std::exp(theta[*p.hyper]), f, p.rank_deficiency);
        break;
      case BlockPrior::Type::IID:
        lp += iid_log_density(std::exp(theta[*p.hyper]), f);
        break;
    }
  }
  return lp;
}

double LatentModel::log_prior_theta(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  double lp = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) lp += log_hyperprior_theta(theta[k], spec_.hyperprior);
  return lp;
}

Eigen::VectorXd LatentModel::linear_predictor(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != latent_dim()) throw DimensionMismatch("latent vector");
  Eigen::VectorXd eta(n_obs());
  for (std::size_t j = 0; j < n_obs(); ++j) eta[j] = incidence_[j].dot(x);
  return eta;
}

double LatentModel::log_likelihood_eta(const Eigen::VectorXd& eta) const {
  double ll = 0.0;
  for (std::size_t j = 0; j < n_obs(); ++j) ll += observations_->log_density(j, eta[j]);
  return ll;
}

SymmetricSparseMatrix prior_precision(const LatentModel& model, const Eigen::VectorXd& theta) {
  return model.prior_precision(theta);
}

const std::vector<SparseRow>& incidence(const LatentModel& model) { return model.incidence(); }

}  // namespace inla
