#include "inla/run.hpp"

#include "inla/errors.hpp"

namespace inla {

Dataset load_inputs(RunRecord& rec) {
  const std::string dd = file_digest(rec.data_path);
  const std::string ad = rec.adjacency_path.empty() ? std::string() : file_digest(rec.adjacency_path);
  if (!rec.data_digest.empty() && rec.data_digest != dd) {
    throw DataError(rec.data_path, 0, "content differs from the recorded run");
  }
  if (!rec.adjacency_digest.empty() && rec.adjacency_digest != ad) {
    throw DataError(rec.adjacency_path, 0, "content differs from the recorded run");
  }
  rec.data_digest = dd;
  rec.adjacency_digest = ad;
  return ingest(rec.data_path, rec.adjacency_path);
}

FitRun run_fit(RunRecord rec) {
  rec.command = "fit";
  if (rec.model_json.empty() && rec.preset) rec.model_json = ModelSpec::preset(*rec.preset).to_json();
  Dataset data = load_inputs(rec);
  LatentModel model = LatentModel::build(ModelSpec::from_json(rec.model_json), data);
  FitResult f = fit(model, rec.options);
  const DicResult d = dic(f, model);
  FileSet files = render_fit(rec, model, data, f, d);
  return FitRun{std::move(data), std::move(model), std::move(f), d, std::move(files)};
}

CompareRun run_compare(RunRecord rec) {
  rec.command = "compare";
  if (rec.presets.empty()) throw SpecError("compare needs at least one preset");
  const Dataset data = load_inputs(rec);
  CompareRun out;
  std::vector<std::string> warnings;
  for (const std::string& name : rec.presets) {
    CompareEntry e;
    e.preset = name;
    const ModelSpec spec = ModelSpec::preset(name);
    e.title = ModelSpec::preset_title(name);
    std::optional<LatentModel> model;
    try {
      model = LatentModel::build(spec, data);
    } catch (const SpecError& err) {
      e.warning = std::string("skipped: ") + err.what();
    } catch (const TooFewLevels& err) {
      e.warning = std::string("skipped: ") + err.what();
    }
    if (!model) {
      warnings.push_back(name + ": " + e.warning);
      out.entries.push_back(std::move(e));
      continue;
    }
    const FitResult f = fit(*model, rec.options);
    e.dic = dic(f, *model);
    for (const auto& r : effect_summaries(f, *model)) {
      const LatentBlock* zb = model->layout().find(BlockKind::ZoneFixed);
      if (zb && r.block == zb->name) e.zones.push_back(r);
    }
    RunRecord sub = rec;
    sub.command = "fit";
    sub.preset = name;
    sub.model_json = spec.to_json();
    for (auto& [file, content] : render_fit(sub, *model, data, f, *e.dic)) out.files[name + "/" + file] = content;
    for (const auto& w : f.warnings) warnings.push_back(name + ": " + w);
    out.entries.push_back(std::move(e));
  }
  for (auto& [file, content] : render_compare(rec, out.entries, warnings)) out.files[file] = content;
  return out;
}

FileSet run_replay(const std::string& provenance_text) {
  RunRecord rec = parse_provenance(provenance_text);
  if (rec.command == "compare") return run_compare(std::move(rec)).files;
  return run_fit(std::move(rec)).files;
}

}  // namespace inla
