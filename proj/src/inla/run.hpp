#pragma once

// The fit / compare / replay workflows on top of the engine, as used by the
// C API. Nothing here writes to disk; callers get the rendered files back.

#include <string>
#include <vector>

#include "inla/dataset.hpp"
#include "inla/diagnostics.hpp"
#include "inla/fit.hpp"
#include "inla/model.hpp"
#include "inla/outputs.hpp"

namespace inla {

// Loads data + adjacency named in the record. Empty digests are filled in;
// non-empty ones must match the files (replay).
Dataset load_inputs(RunRecord& rec);

struct FitRun {
  Dataset data;
  LatentModel model;
  FitResult fit;
  DicResult dic;
  FileSet files;
};

FitRun run_fit(RunRecord rec);

struct CompareRun {
  std::vector<CompareEntry> entries;
  FileSet files;  // dic_table.csv, zone_table.csv, provenance.json, <preset>/...
};

CompareRun run_compare(RunRecord rec);

FileSet run_replay(const std::string& provenance_text);

}  // namespace inla
