#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"
#include "splinecos/config.hpp"
#include "splinecos/error.hpp"
#include "splinecos/io.hpp"
#include "splinecos/random.hpp"

using namespace splinecos;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("splinecos_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& text, const fs::path& source) {
  try {
    parse_run_config(text, source);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("numbers round-trip through text") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform() * 200) - 100);
    const std::string s = format_number(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(3.0) == "3");
  CHECK(std::strtod(format_number(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("observation and vector files") {
  const fs::path dir = scratch("obs");
  Rng rng(5);
  std::vector<SupportGeometry> supports;
  std::vector<double> values;
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform() * 10.0, b = a + rng.uniform();
    if (i % 3 == 0) {
      supports.push_back(SupportGeometry::point(a, b));
    } else {
      supports.push_back(SupportGeometry::rect(a, b, b / 3.0, b / 3.0 + 0.1));
    }
    values.push_back(rng.normal() * 1e3);
  }
  write_observations(dir / "o.csv", supports, values);
  const ObservationTable t = read_observations(dir / "o.csv");
  REQUIRE(t.supports.size() == supports.size());
  CHECK(t.values == values);
  for (std::size_t i = 0; i < supports.size(); ++i) {
    REQUIRE(t.supports[i].is_point() == supports[i].is_point());
    if (supports[i].is_point()) {
      CHECK(std::get<Point>(t.supports[i].shape).x1 == std::get<Point>(supports[i].shape).x1);
      CHECK(std::get<Point>(t.supports[i].shape).x2 == std::get<Point>(supports[i].shape).x2);
    } else {
      const Rect& r = std::get<Rect>(t.supports[i].shape);
      const Rect& s = std::get<Rect>(supports[i].shape);
      CHECK((r.lo1 == s.lo1 && r.hi1 == s.hi1 && r.lo2 == s.lo2 && r.hi2 == s.hi2));
    }
  }

  const Eigen::VectorXd v = Eigen::VectorXd::Random(37) * 1e-7;
  write_vector(dir / "v.csv", v);
  CHECK(read_vector(dir / "v.csv") == v);

  write_text(dir / "bad.csv", "kind,lo1,hi1,lo2,hi2,value\nrect,0,1,0,1,2\nhexagon,0,1,0,1,2\n");
  CHECK_THROWS_WITH_AS(read_observations(dir / "bad.csv"), doctest::Contains("bad.csv:3"), ValidationError);
  write_text(dir / "bad2.csv", "kind,lo1,hi1,lo2,hi2,value\npoint,0,1,0,0,2\n");
  CHECK_THROWS_AS(read_observations(dir / "bad2.csv"), ValidationError);
  write_text(dir / "bad3.csv", "kind,lo1,hi1,lo2,hi2,value\nrect,0,1,0,1,abc\n");
  CHECK_THROWS_WITH_AS(read_observations(dir / "bad3.csv"), doctest::Contains("abc"), ValidationError);
  CHECK_THROWS_AS(read_observations(dir / "missing.csv"), ValidationError);
}

TEST_CASE("grids and rasters") {
  const GridSpec g = GridSpec::parse("1,2,0.5,0.25,4,3");
  const auto cells = g.cells();
  REQUIRE(cells.size() == 12);
  // Row from the bottom outer, column inner.
  const Rect& c5 = std::get<Rect>(cells[5].shape);
  CHECK(c5.lo1 == 1.5);
  CHECK(c5.hi1 == 2.0);
  CHECK(c5.lo2 == 2.25);
  CHECK(c5.hi2 == 2.5);
  CHECK_THROWS_AS(GridSpec::parse("1,2,3"), ValidationError);
  CHECK_THROWS_AS(GridSpec::parse("0,0,-1,1,2,2"), ValidationError);

  const fs::path dir = scratch("raster");
  Eigen::VectorXd v(12);
  for (int i = 0; i < 12; ++i) v[i] = 0.5 * i;
  write_raster(dir / "r.asc", g, v);
  GridSpec back;
  CHECK(read_raster(dir / "r.asc", &back) == v);
  CHECK((back.x0 == g.x0 && back.y0 == g.y0 && back.dx == g.dx && back.dy == g.dy));
  CHECK((back.ncols == 4 && back.nrows == 3));
  // The first data row is the top of the grid.
  const std::string text = read_text(dir / "r.asc");
  CHECK(text.find("4 4.5 5 5.5") != std::string::npos);
}

TEST_CASE("chain store round trip") {
  PosteriorSamples s;
  s.layout.names = {"a", "b", "c"};
  s.config.n_iter = 30;
  s.config.burn_in = 10;
  s.config.thin = 2;
  s.config.n_chains = 2;
  s.config.seed = 99;
  Rng rng(1);
  for (int c = 0; c < 2; ++c) {
    DrawMatrix m(10, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() / 7.0;
    s.chains.push_back(m);
  }
  const fs::path dir = scratch("chains");
  write_chain_store(dir, s, "0123456789abcdef");
  ChainMetadata meta;
  const PosteriorSamples back = read_chain_store(dir, &meta);
  CHECK(back.layout.names == s.layout.names);
  REQUIRE(back.chains.size() == 2);
  CHECK(back.chains[0] == s.chains[0]);
  CHECK(back.chains[1] == s.chains[1]);
  CHECK(meta.model_hash == "0123456789abcdef");
  CHECK(meta.sampler.seed == 99);
  CHECK(meta.draws_per_chain == 10);
  CHECK(fs::file_size(dir / "chain_0.bin") == 10 * 3 * 8);

  fs::resize_file(dir / "chain_1.bin", 16);
  CHECK_THROWS_AS(read_chain_store(dir), ValidationError);
}

TEST_CASE("hash") {
  // Published FNV-1a 64 test vectors.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("run configuration") {
  const fs::path dir = scratch("config");
  const std::string good = R"({
  "model": {
    "domain": [0, 10, 0, 5],
    "residual": {"n_basis": [6, 4], "order": 3, "kappa": 2.5},
    "predictor": {"n_basis": [5, 5], "kappa": "unit-variance"}
  },
  "data": {
    "responses": [
      {"id": "y", "path": "y.csv", "reliable": true, "variance": "log-area"},
      {"id": "z", "path": "/abs/z.csv", "family": "probit"}
    ],
    "predictors": [{"id": "x", "path": "x.csv", "field": {"n_basis": [4, 4], "kappa": "sample", "kappa_prior": [2, 3]}}]
  },
  "sampler": {"n_iter": 50, "burn_in": 10, "thin": 2, "chains": 3, "seed": 7}
})";
  const RunConfig c = parse_run_config(good, dir / "run.json");
  CHECK(c.domain[3] == 5.0);
  CHECK(c.residual.treatment == KappaTreatment::Fixed);
  CHECK(c.residual.kappa == 2.5);
  CHECK(c.responses.size() == 2);
  CHECK(c.responses[0].path == dir / "y.csv");
  CHECK(c.responses[1].path == fs::path("/abs/z.csv"));
  CHECK(c.responses[0].variance == VarianceFunction::LogArea);
  CHECK(c.responses[1].family == Family::BernoulliProbit);
  CHECK(c.predictors[0].field.n_basis[0] == 4);
  CHECK(c.predictors[0].field.treatment == KappaTreatment::Sample);
  CHECK(c.predictors[0].field.prior.shape == 2.0);
  CHECK(c.sampler.n_chains == 3);
  CHECK(c.sampler.seed == 7);
  CHECK(c.output_dir == dir / "fit");

  const fs::path src = dir / "run.json";
  CHECK(error_of("{\n  \"model\": {\n    \"order\": 3\n  }\n}", src).find("run.json:3: model.order: unknown key") !=
        std::string::npos);
  CHECK(error_of("{\n  \"data\": {\"responses\": [{\"id\": \"y\"}]}\n}", src).find("missing required key 'path'") !=
        std::string::npos);
  CHECK(error_of("{\n  \"data\": {\"responses\": [{\"id\": \"y\", \"path\": \"y.csv\", \"family\": \"poisson\"}]}\n}",
                 src)
            .find("run.json:2: data.responses[0].family") != std::string::npos);
  CHECK(error_of("{\n  \"data\": {\n  \"responses\": [\n", src).find("invalid JSON") != std::string::npos);
  CHECK(error_of(R"({"data": {"responses": [{"id": "y", "path": "y.csv"}]}, "sampler": {"thin": 0}})", src)
            .find("sampler") != std::string::npos);
  CHECK(error_of(R"({"model": {"residual": {"kappa": -1}}, "data": {"responses": [{"id": "y", "path": "y"}]}})", src)
            .find("model.residual.kappa") != std::string::npos);
}

TEST_CASE("model loading") {
  const fs::path dir = scratch("load");
  std::vector<SupportGeometry> ys, xs;
  std::vector<double> yv, xv;
  for (int i = 0; i < 5; ++i) {
    ys.push_back(SupportGeometry::rect(2.0 * i, 2.0 * i + 2.0, 0, 1));
    yv.push_back(i % 2);
  }
  for (int i = 0; i < 10; ++i) {
    xs.push_back(SupportGeometry::rect(i, i + 1.0, 0, 1));
    xv.push_back(0.1 * i);
  }
  write_observations(dir / "y.csv", ys, yv);
  write_observations(dir / "x.csv", xs, xv);
  const std::string text = R"({
  "model": {"domain": [0, 10, 0, 1], "residual": {"n_basis": [6, 1], "kappa": "unit-variance"}},
  "data": {
    "responses": [{"id": "y", "path": "y.csv", "family": "probit", "reliable": true, "naive": true}],
    "predictors": [{"id": "x", "path": "x.csv"}]
  }
})";
  write_text(dir / "run.json", text);
  const RunConfig cfg = load_run_config(dir / "run.json");
  const LoadedModel m = load_model(cfg);
  CHECK(m.spec.num_responses() == 1);
  CHECK(m.spec.num_predictors() == 1);
  CHECK(m.spec.responses()[0].source.supports[0].is_point());
  CHECK(m.spec.residual_prior().size() == 6);
  // The predictor field defaults to the residual layout.
  CHECK(m.spec.predictor_priors()[0].size() == 6);
  CHECK(m.hash.size() == 16);
  CHECK(load_model(cfg).hash == m.hash);

  // Any change to a data file changes the hash.
  xv[3] += 1e-12;
  write_observations(dir / "x.csv", xs, xv);
  CHECK(load_model(cfg).hash != m.hash);

  // A missing file is reported before any data is parsed.
  RunConfig missing = cfg;
  missing.predictors[0].path = dir / "nothere.csv";
  CHECK_THROWS_WITH_AS(load_model(missing), doctest::Contains("nothere.csv"), ValidationError);

  // A line basis needs the unit second axis.
  FieldSpec line;
  line.n_basis = {6, 1};
  CHECK_THROWS_AS(field_basis({0, 10, 0, 2}, line), ValidationError);
  CHECK(field_basis({0, 10, 0, 1}, line).size() == 6);
}

TEST_CASE("simulate configuration") {
  const SimulateConfig d = parse_simulate_config("", "none", Scenario::FullBinary);
  CHECK(d.sampler.thin == 10);
  CHECK(d.binary.beta1 == 0.7);
  const SimulateConfig s =
      parse_simulate_config(R"({"n_basis": [8, 8], "kappa": 0.5, "sampler": {"n_iter": 100, "burn_in": 10}})", "s.json",
                            Scenario::Sparse);
  CHECK(s.scenario.kind == Scenario::Sparse);
  CHECK(s.scenario.n_basis1 == 8);
  CHECK(s.scenario.kappa == 0.5);
  CHECK(s.sampler.n_iter == 100);
  CHECK_THROWS_WITH_AS(parse_simulate_config(R"({"colour": 1})", "s.json", Scenario::Sparse),
                       doctest::Contains("colour: unknown key"), ValidationError);
  CHECK_THROWS_AS(parse_simulate_config(R"({"coverage": 2})", "s.json", Scenario::Sparse), ValidationError);
}
