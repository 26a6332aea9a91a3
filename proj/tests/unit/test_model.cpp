#include <doctest.h>

#include <random>
#include <sstream>

#include "inla/dataset.hpp"
#include "inla/errors.hpp"
#include "inla/model.hpp"
#include "support.hpp"

using namespace inla;

namespace {

// rows x cols lattice, one observation per unit, with a few covariates
Dataset lattice_data(std::size_t rows, std::size_t cols) {
  Dataset d;
  d.graph = AdjacencyGraph::lattice(rows, cols);
  d.n_units = rows * cols;
  d.covariate_names = {"time", "zone", "density"};
  for (std::size_t u = 0; u < d.n_units; ++u) {
    d.unit.push_back(u);
    d.y.push_back(static_cast<std::int64_t>(u % 7));
    d.n.push_back(40);
    d.covariates["time"].push_back(std::to_string(2.5 * static_cast<double>(u % 9)));
    d.covariates["zone"].push_back(std::to_string(u % 7 + 1));
    d.covariates["density"].push_back(std::to_string(1.0 + 0.1 * static_cast<double>(u)));
  }
  return d;
}

}  // namespace

TEST_CASE("dataset csv ingestion") {
  std::istringstream ok("unit_id,y,N,zone\n0,1,10,a\n1,0,5,b\n2,5,5,a\n");
  const Dataset d = read_dataset_csv(ok, "mem", AdjacencyGraph::from_neighbors({{1}, {0, 2}, {1}}));
  CHECK(d.size() == 3);
  CHECK(d.graph->n_units() == 3);
  CHECK(d.labels("zone")[2] == "a");

  std::istringstream zero_n("unit_id,y,N\n0,0,1\n1,0,0\n");
  try {
    read_dataset_csv(zero_n, "mem");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream too_many("unit_id,y,N\n0,6,5\n");
  CHECK_THROWS_AS(read_dataset_csv(too_many, "mem"), DataError);
  std::istringstream bad_header("unit,y,N\n0,1,5\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_header, "mem"), DataError);
  std::istringstream outside("unit_id,y,N\n4,1,5\n");
  CHECK_THROWS(read_dataset_csv(outside, "mem", AdjacencyGraph::from_neighbors({{1}, {0}})));
}

TEST_CASE("layouts of the standard models") {
  const Dataset d = lattice_data(13, 29);
  const auto icar = LatentModel::build(ModelSpec::preset("icar-only"), d);
  CHECK(icar.latent_dim() == 378);
  CHECK(icar.hyper_dim() == 1);
  REQUIRE(icar.layout().constraint_rows.size() == 1);
  const Eigen::VectorXd& c = icar.layout().constraint_rows[0];
  CHECK(c[0] == 0.0);
  CHECK(c.tail(377).minCoeff() == c.tail(377).maxCoeff());

  const auto conv = LatentModel::build(ModelSpec::preset("convolution"), d);
  CHECK(conv.latent_dim() == 755);
  CHECK(conv.hyper_dim() == 2);

  const auto zone = LatentModel::build(ModelSpec::preset("icar-zone"), d);
  const LatentBlock* zb = zone.layout().find(BlockKind::ZoneFixed);
  REQUIRE(zb != nullptr);
  CHECK(zb->length == 6);
  // observation in the reference zone has no zone column
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d.labels("zone")[j] != "7") continue;
    for (std::size_t col : zone.incidence()[j].cols) CHECK((col < zb->offset || col >= zb->offset + zb->length));
    break;
  }
}

TEST_CASE("block order and incidence against the additive predictor") {
  Dataset d = lattice_data(3, 4);
  const auto spec = ModelSpec::from_json(
      R"({"terms":[{"kind":"iid"},{"kind":"icar"},{"kind":"rw2","covariate":"time","bin":{"rule":"fixed","width":5}},)"
      R"({"kind":"linear","covariate":"density"},{"kind":"intercept"}]})");
  const auto m = LatentModel::build(spec, d);
  const auto& blocks = m.layout().blocks;
  REQUIRE(blocks.size() == 5);
  CHECK(blocks[0].kind == BlockKind::Intercept);
  CHECK(blocks[1].kind == BlockKind::Linear);
  CHECK(blocks[2].kind == BlockKind::RW2);
  CHECK(blocks[3].kind == BlockKind::ICAR);
  CHECK(blocks[4].kind == BlockKind::IID);
  std::size_t end = 0;
  for (const auto& b : blocks) {
    CHECK(b.offset == end);
    end += b.length;
  }
  CHECK(end == m.latent_dim());

  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(static_cast<Eigen::Index>(m.latent_dim()));
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = nd(gen);
  const Eigen::VectorXd eta = m.linear_predictor(x);
  const BinnedCovariate bins = bin_covariate(d.numeric("time"), spec.terms[2].bin);
  const auto dens = d.numeric("density");
  for (std::size_t j = 0; j < d.size(); ++j) {
    CHECK(m.incidence()[j].size() == 5);
    const double direct = x[0] + dens[j] * x[1] + x[static_cast<Eigen::Index>(blocks[2].offset + bins.level_of_row[j])] +
                          x[static_cast<Eigen::Index>(blocks[3].offset + d.unit[j])] +
                          x[static_cast<Eigen::Index>(blocks[4].offset + d.unit[j])];
    CHECK(std::abs(eta[static_cast<Eigen::Index>(j)] - direct) < 1e-14);
  }
}

TEST_CASE("prior precision assembly") {
  Dataset d = support::path_dataset({1, 2}, {5, 5});
  const auto intercept = LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}]})"), d);
  CHECK(intercept.prior_precision(Eigen::VectorXd(0)).to_dense() == 0.01 * Eigen::MatrixXd::Identity(1, 1));

  const auto icar = LatentModel::build(ModelSpec::preset("icar-only"), d);
  Eigen::MatrixXd expected(3, 3);
  expected << 0.01, 0, 0, 0, 1, -1, 0, -1, 1;
  CHECK((icar.prior_precision(Eigen::VectorXd::Zero(1)).to_dense() - expected).cwiseAbs().maxCoeff() < 1e-15);

  const auto conv = LatentModel::build(ModelSpec::preset("convolution"), d);
  const Eigen::MatrixXd q = conv.prior_precision(Eigen::VectorXd::Zero(2)).to_dense();
  CHECK(q.block(1, 1, 2, 2) == expected.block(1, 1, 2, 2));
  CHECK(q.block(3, 3, 2, 2) == Eigen::MatrixXd::Identity(2, 2));

  const auto variance = LatentModel::build(
      ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}],"fixed_prior_variance":0.01})"), d);
  CHECK(variance.prior_precision(Eigen::VectorXd(0)).to_dense()(0, 0) == doctest::Approx(100.0));
}

TEST_CASE("posterior precision is positive definite on the constrained subspace") {
  const Dataset d = lattice_data(4, 5);
  for (const auto& name : {"icar-only", "convolution"}) {
    const auto m = LatentModel::build(ModelSpec::preset(name), d);
    Eigen::MatrixXd p = m.prior_precision(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.hyper_dim()))).to_dense();
    for (const auto& row : m.incidence()) {
      const Eigen::VectorXd a = row.to_dense(m.latent_dim());
      p += 0.1 * a * a.transpose();
    }
    const Eigen::MatrixXd b = support::complement_basis(m.constraint_matrix(), p.rows());
    CHECK(support::eigen_rank(b.transpose() * p * b) == static_cast<int>(b.cols()));
  }
}

TEST_CASE("rw2 constraints") {
  const Dataset d = lattice_data(3, 4);
  const auto smooth =
      LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"},{"kind":"rw2","covariate":"time",)"
                                              R"("bin":{"rule":"fixed","width":5}}]})"),
                         d);
  CHECK(smooth.layout().constraint_rows.size() == 1);
  const auto with_linear = LatentModel::build(
      ModelSpec::from_json(R"({"terms":[{"kind":"intercept"},{"kind":"linear","covariate":"time"},)"
                           R"({"kind":"rw2","covariate":"time","bin":{"rule":"fixed","width":5}}]})"),
      d);
  CHECK(with_linear.layout().constraint_rows.size() == 2);
}

TEST_CASE("binning") {
  BinRule r;
  r.width = 5.0;
  const auto b = bin_covariate({3.0, 7.0, 12.0}, r);
  CHECK(b.level_of_row == std::vector<std::size_t>{0, 1, 2});
  CHECK(b.bin_edges.front() == 0.0);
  CHECK(b.bin_edges.back() == 15.0);
  CHECK_THROWS_AS(bin_covariate({4.0, 4.0, 4.0}, r), SpecError);
  // empty interior bin merged away
  const auto merged = bin_covariate({1.0, 2.0, 11.0, 16.0, 21.0}, r);
  CHECK(merged.levels() == 4);
  CHECK(merged.merged_empty_bins == 1);
  BinRule q;
  q.kind = BinRule::Kind::Quantile;
  q.quantiles = 4;
  std::vector<double> v;
  for (int i = 0; i < 40; ++i) v.push_back(i);
  CHECK(bin_covariate(v, q).levels() == 4);
}

TEST_CASE("model config validation") {
  CHECK_THROWS_AS(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}],"colour":1})"), SpecError);
  CHECK_THROWS_AS(ModelSpec::from_json(R"({"terms":[{"kind":"intercept","x":1}]})"), SpecError);
  CHECK_THROWS_AS(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"},{"kind":"intercept"}]})"), SpecError);
  std::string seven = R"({"terms":[{"kind":"icar"},{"kind":"iid"})";
  for (int k = 0; k < 5; ++k) seven += R"(,{"kind":"rw2","covariate":"time","bin":{"rule":"fixed","width":5}})";
  seven += "]}";
  CHECK_THROWS_AS(ModelSpec::from_json(seven), SpecError);
  CHECK_THROWS_AS(ModelSpec::preset("nonsense"), SpecError);
  CHECK_THROWS_AS(LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"linear","covariate":"x"}]})"),
                                     lattice_data(2, 2)),
                  SpecError);
  const std::string text =
      R"({"terms":[{"kind":"intercept"},{"kind":"icar","graph":"region.adj"},{"kind":"rw2","covariate":"access_time",)"
      R"("bin":{"rule":"fixed","width":5}},{"kind":"zone_factor","covariate":"zone","reference":"7"}],)"
      R"("hyperprior":{"a":0.001,"b":0.001},"fixed_prior_precision":0.01})";
  const auto spec = ModelSpec::from_json(text);
  CHECK(spec.hyperparameter_count() == 2);
  CHECK(ModelSpec::from_json(spec.to_json()).to_json() == spec.to_json());
}

TEST_CASE("layout is deterministic") {
  const Dataset d = lattice_data(4, 4);
  const auto a = LatentModel::build(ModelSpec::preset("icar-zone"), d);
  const auto b = LatentModel::build(ModelSpec::preset("icar-zone"), d);
  CHECK(a.incidence() == b.incidence());
  CHECK(a.constraint_matrix() == b.constraint_matrix());
}
