#pragma once

// Declarative model terms mapped onto a latent Gaussian field:
//
//   eta_i = mu + sum_k beta_k z_ki + sum_a f_a(u_ai) + f_s[unit i] + f_u[unit i]
//
// Each term owns a contiguous block of the latent vector x and (for random
// effects) one log-precision hyperparameter.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "inla/dataset.hpp"
#include "inla/likelihood.hpp"
#include "inla/priors.hpp"
#include "inla/sparse_gmrf.hpp"

namespace inla {

inline constexpr std::size_t kMaxHyperparameters = 6;

enum class TermKind { Intercept, Linear, SmoothRW2, SpatialICAR, IIDUnit, ZoneFactor };

struct BinRule {
  enum class Kind { FixedWidth, Quantile, Edges };
  Kind kind = Kind::FixedWidth;
  double width = 1.0;
  double origin = 0.0;
  std::size_t quantiles = 10;
  std::vector<double> edges;
};

struct Term {
  TermKind kind = TermKind::Intercept;
  std::string covariate;  // Linear, SmoothRW2, ZoneFactor
  BinRule bin;            // SmoothRW2
  std::string graph;      // SpatialICAR: adjacency file reference
  std::string reference;  // ZoneFactor: reference level label
  bool random = false;    // ZoneFactor: iid random effect instead of indicators
};

// How the fixed-effect prior parameter is read. The default treats it as a
// precision (vague N(0, 1/0.01)); the alternative treats it as a variance.
enum class FixedPriorReading { Precision, Variance };

struct ModelSpec {
  std::string name = "custom";
  std::vector<Term> terms;
  HyperPrior hyperprior;
  double fixed_prior = 0.01;
  FixedPriorReading fixed_prior_reading = FixedPriorReading::Precision;

  double fixed_prior_precision() const;
  std::size_t hyperparameter_count() const;
  // Structural checks that need no data: multiplicities, hyperparameter cap.
  void validate() const;

  // Model config JSON; unknown keys are rejected.
  static ModelSpec from_json(const std::string& text);
  std::string to_json() const;

  static ModelSpec preset(const std::string& name);
  static const std::vector<std::string>& preset_names();
  // Human-readable row label used in DIC tables.
  static std::string preset_title(const std::string& name);
};

struct BinnedCovariate {
  std::vector<double> bin_edges;    // levels + 1 edges
  std::vector<std::size_t> level_of_row;
  std::vector<double> level_values;  // midpoint of each level's original bin
  std::size_t merged_empty_bins = 0;

  std::size_t levels() const noexcept { return level_values.size(); }
};

// Throws SpecError when fewer than `min_levels` non-empty bins result.
BinnedCovariate bin_covariate(const std::vector<double>& values, const BinRule& rule,
                              std::size_t min_levels = 3);

enum class BlockKind { Intercept, Linear, ZoneFixed, ZoneRandom, RW2, ICAR, IID };

const char* block_kind_name(BlockKind kind);

struct LatentBlock {
  BlockKind kind = BlockKind::Intercept;
  std::string name;
  std::size_t term = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::optional<std::size_t> hyper;  // index into theta
  std::vector<std::string> labels;   // one per element
  std::vector<double> level_values;  // RW2 bin representatives
  std::string covariate;
};

struct HyperparameterInfo {
  std::string name;
  std::size_t block = 0;
};

struct LatentLayout {
  std::size_t total_dim = 0;
  std::vector<LatentBlock> blocks;
  std::vector<Eigen::VectorXd> constraint_rows;
  std::vector<HyperparameterInfo> hyperparameters;
  std::vector<std::string> warnings;

  Eigen::MatrixXd constraint_matrix() const;
  const LatentBlock* find(BlockKind kind) const;
  std::size_t block_of(std::size_t latent_index) const;
  std::string element_label(std::size_t latent_index) const;
};

LatentLayout assemble_layout(const ModelSpec& spec, const Dataset& data);

// Prior on one latent block given theta.
struct BlockPrior {
  enum class Type { Fixed, Intrinsic, IID };
  Type type = Type::Fixed;
  SymmetricSparseMatrix structure;  // unscaled (Intrinsic only)
  std::size_t rank_deficiency = 0;  // Intrinsic only
  double fixed_precision = 0.0;     // Fixed only
  std::optional<std::size_t> hyper;
};

// Everything the inference engine needs: layout, incidence A (eta = A x),
// block priors and the observation model.
class LatentModel {
 public:
  static LatentModel build(const ModelSpec& spec, const Dataset& data);

  const ModelSpec& spec() const noexcept { return spec_; }
  const LatentLayout& layout() const noexcept { return layout_; }
  const std::vector<SparseRow>& incidence() const noexcept { return incidence_; }
  const std::vector<BlockPrior>& block_priors() const noexcept { return priors_; }
  const Eigen::MatrixXd& constraint_matrix() const noexcept { return constraints_; }
  const ObservationModel& observations() const noexcept { return *observations_; }
  std::shared_ptr<const ObservationModel> observations_ptr() const noexcept { return observations_; }
  const std::vector<std::size_t>& observation_units() const noexcept { return units_; }

  // Same model with a different observation density (test hook).
  LatentModel with_observations(std::shared_ptr<const ObservationModel> obs) const;
  // Same model with a different hyperprior.
  LatentModel with_hyperprior(const HyperPrior& hp) const;

  std::size_t latent_dim() const noexcept { return layout_.total_dim; }
  std::size_t hyper_dim() const noexcept { return layout_.hyperparameters.size(); }
  std::size_t n_obs() const noexcept { return incidence_.size(); }

  SymmetricSparseMatrix prior_precision(const Eigen::VectorXd& theta) const;
  void add_prior_precision(Eigen::MatrixXd& dense, const Eigen::VectorXd& theta) const;

  double log_prior_latent(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
  double log_prior_theta(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& x) const;
  double log_likelihood_eta(const Eigen::VectorXd& eta) const;

 private:
  void check_theta(const Eigen::VectorXd& theta) const;

  ModelSpec spec_;
  LatentLayout layout_;
  std::vector<SparseRow> incidence_;
  std::vector<BlockPrior> priors_;
  Eigen::MatrixXd constraints_;
  std::shared_ptr<const ObservationModel> observations_;
  std::vector<std::size_t> units_;
};

SymmetricSparseMatrix prior_precision(const LatentModel& model, const Eigen::VectorXd& theta);
const std::vector<SparseRow>& incidence(const LatentModel& model);

}  // namespace inla
