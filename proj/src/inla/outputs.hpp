#pragma once

// Output files of the fit / compare workflows and the provenance record that
// lets a run be replayed.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inla/dataset.hpp"
#include "inla/diagnostics.hpp"
#include "inla/fit.hpp"
#include "inla/model.hpp"

namespace inla {

inline constexpr const char* kVersion = "0.1.0";

// Everything needed to rerun: inputs (with content digests), the model, the
// options. Timings are deliberately absent.
struct RunRecord {
  std::string command = "fit";  // fit | compare
  std::string data_path;
  std::string adjacency_path;
  std::string data_digest;
  std::string adjacency_digest;
  std::optional<std::string> preset;      // fit with a preset
  std::optional<std::string> model_path;  // fit with a config file
  std::string model_json;                 // resolved model (fit)
  std::vector<std::string> presets;       // compare
  FitOptions options;
};

// name -> file content; written together by write_files.
using FileSet = std::map<std::string, std::string>;

std::string fmt17(double v);
// FNV-1a 64 of the file bytes, 16 hex digits. Throws DataError if unreadable.
std::string file_digest(const std::string& path);

// temp file + rename; throws Error(Io) on failure
void write_atomic(const std::filesystem::path& path, const std::string& content);
void write_files(const std::filesystem::path& dir, const FileSet& files);

std::string model_title(const LatentModel& model);

std::string latent_marginals_csv(const FitResult& fit, const LatentModel& model);
std::string hyper_marginals_csv(const FitResult& fit);
std::string effects_exp_csv(const std::vector<EffectRow>& rows);
std::string unit_summaries_csv(const FitResult& fit, const LatentModel& model, const Dataset& data);
std::string dic_csv(const std::string& title, const DicResult& d);

std::string provenance_json(const RunRecord& rec, const FitResult* fit, const DicResult* d,
                            const std::vector<std::string>& warnings);
RunRecord parse_provenance(const std::string& text);

FileSet render_fit(const RunRecord& rec, const LatentModel& model, const Dataset& data, const FitResult& fit,
                   const DicResult& d);

struct CompareEntry {
  std::string preset;
  std::string title;
  std::optional<DicResult> dic;
  std::string warning;           // set when the preset was skipped
  std::vector<EffectRow> zones;  // zone factor rows, if the model has one
};

// dic_table.csv sorted by DIC (best flagged, skipped presets last as warning
// rows) and zone_table.csv for the first entry carrying zone effects.
FileSet render_compare(const RunRecord& rec, const std::vector<CompareEntry>& entries,
                       const std::vector<std::string>& warnings);

}  // namespace inla
