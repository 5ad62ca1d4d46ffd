#include "splinecos/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "splinecos/error.hpp"
#include "splinecos/io.hpp"

namespace splinecos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Error reporting with a best-effort line number: the key path is located
// by scanning the raw text for each key in turn.
class Context {
 public:
  Context(const std::string& text, fs::path source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    std::size_t pos = 0;
    bool found = !path.empty();
    for (const auto& key : path) {
      if (!key.empty() && key[0] == '[') continue;
      const auto at = text_.find("\"" + key + "\"", pos);
      if (at == std::string::npos) {
        found = false;
        break;
      }
      pos = at;
    }
    std::ostringstream os;
    os << source_.string();
    if (found) os << ':' << 1 + std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    os << ": ";
    if (!path.empty()) {
      for (std::size_t i = 0; i < path.size(); ++i) {
        if (i && path[i][0] != '[') os << '.';
        os << path[i];
      }
      os << ": ";
    }
    os << message;
    throw ValidationError(os.str());
  }

 private:
  const std::string& text_;
  fs::path source_;
};

class Obj {
 public:
  Obj(const json& j, std::vector<std::string> path, const Context& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) ctx_.fail(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::vector<std::string> at(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return p;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const { ctx_.fail(at(key), message); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback, bool required = false) {
    if (!has(key)) {
      if (required) ctx_.fail(path_, "missing required key '" + key + "'");
      return fallback;
    }
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  template <std::size_t N>
  std::array<double, N> numbers(const std::string& key, std::array<double, N> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array() || v.size() != N) fail(key, "expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      if (!v[i].is_number()) fail(key, "expected an array of " + std::to_string(N) + " numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  std::array<int, 2> int_pair(const std::string& key, std::array<int, 2> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
      fail(key, "expected an array of 2 integers");
    }
    return {v[0].get<int>(), v[1].get<int>()};
  }

  Obj object(const std::string& key) {
    static const json empty = json::object();
    if (!has(key)) return Obj(empty, at(key), ctx_);
    return Obj(raw(key), at(key), ctx_);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) ctx_.fail(at(it.key()), "unknown key");
    }
  }

  const Context& context() const { return ctx_; }
  const std::vector<std::string>& path() const { return path_; }

 private:
  const json& j_;
  std::vector<std::string> path_;
  const Context& ctx_;
  std::set<std::string> used_;
};

json parse_json(const std::string& text, const fs::path& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ValidationError(source.string() + ":" + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
  }
}

FieldSpec read_field(Obj o, const FieldSpec& defaults) {
  FieldSpec f = defaults;
  f.n_basis = o.int_pair("n_basis", defaults.n_basis);
  f.order = o.integer("order", defaults.order);
  if (f.order < 1) o.fail("order", "must be >= 1");
  if (f.n_basis[0] < f.order) o.fail("n_basis", "needs at least `order` functions on the first axis");
  if (f.n_basis[1] != 1 && f.n_basis[1] < f.order) {
    o.fail("n_basis", "needs 1 (a line) or at least `order` functions on the second axis");
  }
  if (o.has("kappa")) {
    const json& k = o.raw("kappa");
    if (k.is_string() && k == "sample") {
      f.treatment = KappaTreatment::Sample;
    } else if (k.is_string() && k == "unit-variance") {
      f.treatment = KappaTreatment::UnitVariance;
    } else if (k.is_number() && k.get<double>() > 0.0) {
      f.treatment = KappaTreatment::Fixed;
      f.kappa = k.get<double>();
    } else {
      o.fail("kappa", "expected \"sample\", \"unit-variance\" or a positive number");
    }
  }
  const auto prior = o.numbers<2>("kappa_prior", {defaults.prior.shape, defaults.prior.rate});
  if (!(prior[0] > 0.0) || !(prior[1] > 0.0)) o.fail("kappa_prior", "hyperparameters must be positive");
  f.prior = {prior[0], prior[1]};
  o.finish();
  return f;
}

VarianceFunction read_variance(Obj& o) {
  const std::string v = o.string("variance", "constant");
  if (v == "constant") return VarianceFunction::Constant;
  if (v == "log-area") return VarianceFunction::LogArea;
  if (v == "inverse-area") return VarianceFunction::InverseArea;
  o.fail("variance", "expected constant, log-area or inverse-area");
}

SamplerConfig read_sampler(Obj o, SamplerConfig s) {
  s.n_iter = o.integer("n_iter", s.n_iter);
  s.burn_in = o.integer("burn_in", s.burn_in);
  s.thin = o.integer("thin", s.thin);
  s.n_chains = o.integer("chains", s.n_chains);
  s.seed = o.seed("seed", s.seed);
  o.finish();
  try {
    s.validate();
  } catch (const ValidationError& e) {
    o.context().fail(o.path(), e.what());
  }
  return s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& source) {
  const json root = parse_json(text, source);
  const Context ctx(text, source);
  Obj top(root, {}, ctx);
  RunConfig cfg;
  cfg.source = source;
  const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");

  Obj model = top.object("model");
  cfg.domain = model.numbers<4>("domain", cfg.domain);
  if (!(cfg.domain[1] > cfg.domain[0]) || !(cfg.domain[3] > cfg.domain[2])) {
    model.fail("domain", "needs lo < hi on both axes");
  }
  cfg.residual = read_field(model.object("residual"), FieldSpec{});
  FieldSpec predictor_default;
  predictor_default.n_basis = cfg.residual.n_basis;
  predictor_default.order = cfg.residual.order;
  predictor_default = read_field(model.object("predictor"), predictor_default);
  cfg.coefficient_prior_variance = model.positive("coefficient_prior_variance", 100.0);
  cfg.intercept_prior_variance = model.positive("intercept_prior_variance", 100.0);
  const auto ry = model.numbers<2>("response_variance_prior", {0.01, 0.01});
  const auto rx = model.numbers<2>("predictor_variance_prior", {0.01, 0.01});
  if (!(ry[0] > 0 && ry[1] > 0)) model.fail("response_variance_prior", "hyperparameters must be positive");
  if (!(rx[0] > 0 && rx[1] > 0)) model.fail("predictor_variance_prior", "hyperparameters must be positive");
  cfg.response_variance_prior = {ry[0], ry[1]};
  cfg.predictor_variance_prior = {rx[0], rx[1]};
  cfg.center_fields = model.boolean("center_fields", true);
  model.finish();

  Obj data = top.object("data");
  if (!data.has("responses")) data.context().fail(data.path(), "missing required key 'responses'");
  const json& responses = data.raw("responses");
  if (!responses.is_array() || responses.empty()) data.fail("responses", "expected a non-empty array");
  for (std::size_t i = 0; i < responses.size(); ++i) {
    Obj r(responses[i], {"data", "responses", "[" + std::to_string(i) + "]"}, ctx);
    ResponseFile f;
    f.id = r.string("id", "", true);
    f.path = resolve(base, r.string("path", "", true));
    const std::string family = r.string("family", "gaussian");
    if (family == "gaussian") {
      f.family = Family::Gaussian;
    } else if (family == "probit" || family == "bernoulli") {
      f.family = Family::BernoulliProbit;
    } else {
      r.fail("family", "expected gaussian or probit");
    }
    f.reliable = r.boolean("reliable", false);
    f.variance = read_variance(r);
    f.naive = r.boolean("naive", false);
    r.finish();
    cfg.responses.push_back(std::move(f));
  }
  if (data.has("predictors")) {
    const json& predictors = data.raw("predictors");
    if (!predictors.is_array()) data.fail("predictors", "expected an array");
    for (std::size_t i = 0; i < predictors.size(); ++i) {
      Obj p(predictors[i], {"data", "predictors", "[" + std::to_string(i) + "]"}, ctx);
      PredictorFile f;
      f.id = p.string("id", "", true);
      f.path = resolve(base, p.string("path", "", true));
      f.variance = read_variance(p);
      f.field = read_field(p.object("field"), predictor_default);
      p.finish();
      cfg.predictors.push_back(std::move(f));
    }
  }
  data.finish();

  cfg.sampler = read_sampler(top.object("sampler"), SamplerConfig{});
  Obj output = top.object("output");
  cfg.output_dir = resolve(base, output.string("directory", "fit"));
  output.finish();
  top.finish();

  json canonical;
  canonical["model"] = root.value("model", json::object());
  canonical["data"] = root.value("data", json::object());
  cfg.canonical_model = canonical.dump();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) { return parse_run_config(read_text(path), path); }

TensorBasis field_basis(const std::array<double, 4>& domain, const FieldSpec& field) {
  if (field.n_basis[1] == 1) {
    if (domain[2] != 0.0 || domain[3] != 1.0) {
      throw ValidationError("a line basis (n_basis [q, 1]) needs the second domain axis [0, 1]");
    }
    return make_line_basis(domain[0], domain[1], field.n_basis[0], field.order);
  }
  return make_tensor_basis(domain[0], domain[1], domain[2], domain[3], field.n_basis[0], field.n_basis[1],
                           field.order);
}

namespace {

FieldConfig to_field_config(const std::array<double, 4>& domain, const FieldSpec& f) {
  FieldConfig out;
  out.basis = field_basis(domain, f);
  out.treatment = f.treatment;
  out.kappa = f.kappa;
  out.kappa_prior = f.prior;
  return out;
}

}  // namespace

LoadedModel load_model(const RunConfig& config) {
  for (const auto& r : config.responses) {
    if (!fs::exists(r.path)) throw ValidationError("response source '" + r.id + "': file not found: " + r.path.string());
  }
  for (const auto& p : config.predictors) {
    if (!fs::exists(p.path)) {
      throw ValidationError("predictor source '" + p.id + "': file not found: " + p.path.string());
    }
  }
  std::string bytes = config.canonical_model;
  ModelConfig mc;
  mc.residual = to_field_config(config.domain, config.residual);
  mc.coefficient_prior_variance = config.coefficient_prior_variance;
  mc.intercept_prior_variance = config.intercept_prior_variance;
  mc.response_variance_prior = config.response_variance_prior;
  mc.predictor_variance_prior = config.predictor_variance_prior;
  mc.center_fields = config.center_fields;

  std::vector<ResponseSource> responses;
  for (const auto& r : config.responses) {
    const std::string text = read_text(r.path);
    bytes += '\0' + text;
    const ObservationTable t = read_observations(r.path);
    ResponseSource src;
    src.id = r.id;
    src.family = r.family;
    src.reliable = r.reliable;
    src.variance = r.variance;
    src.supports = t.supports;
    src.values = t.values;
    responses.push_back(r.naive ? to_centroids(std::move(src)) : std::move(src));
  }
  std::vector<PredictorSource> predictors;
  for (const auto& p : config.predictors) {
    bytes += '\0' + read_text(p.path);
    const ObservationTable t = read_observations(p.path);
    PredictorSource src;
    src.id = p.id;
    src.variance = p.variance;
    src.supports = t.supports;
    src.values = t.values;
    predictors.push_back(std::move(src));
    mc.predictors.push_back(to_field_config(config.domain, p.field));
  }
  return {ModelSpec::build(std::move(mc), std::move(responses), std::move(predictors)), fnv1a_hex(bytes)};
}

SimulateConfig parse_simulate_config(const std::string& text, const fs::path& source, Scenario kind) {
  SimulateConfig cfg;
  cfg.scenario.kind = kind;
  if (kind == Scenario::FullBinary) cfg.sampler.thin = 10;
  if (text.empty()) return cfg;
  const json root = parse_json(text, source);
  const Context ctx(text, source);
  Obj top(root, {}, ctx);
  if (kind == Scenario::FullBinary) {
    FullBinaryConfig& b = cfg.binary;
    b.length = top.positive("length", b.length);
    b.n_basis = top.integer("n_basis", b.n_basis);
    b.order = top.integer("order", b.order);
    b.beta0 = top.number("beta0", b.beta0);
    b.beta1 = top.number("beta1", b.beta1);
    b.beta2 = top.number("beta2", b.beta2);
    b.bias = top.number("bias", b.bias);
    b.alpha1 = top.number("alpha1", b.alpha1);
    b.alpha2 = top.number("alpha2", b.alpha2);
    b.kappa_v = top.positive("kappa_v", b.kappa_v);
    b.kappa_w = top.number("kappa_w", b.kappa_w);
    b.predictor_variance = top.number("predictor_variance", b.predictor_variance);
    b.response_variance = top.positive("response_variance", b.response_variance);
    b.predictor_unit1 = top.positive("predictor_unit1", b.predictor_unit1);
    b.predictor_unit2 = top.positive("predictor_unit2", b.predictor_unit2);
    b.response_unit1 = top.positive("response_unit1", b.response_unit1);
    b.response_unit2 = top.positive("response_unit2", b.response_unit2);
    cfg.truth_cells = top.int_pair("truth_cells", {static_cast<int>(b.length * 4), 1});
  } else {
    ScenarioConfig& s = cfg.scenario;
    if (kind == Scenario::Overlapping) s.n_basis1 = s.n_basis2 = 15;
    const auto domain = top.numbers<4>("domain", {s.lo1, s.hi1, s.lo2, s.hi2});
    s.lo1 = domain[0];
    s.hi1 = domain[1];
    s.lo2 = domain[2];
    s.hi2 = domain[3];
    const auto nb = top.int_pair("n_basis", {s.n_basis1, s.n_basis2});
    s.n_basis1 = nb[0];
    s.n_basis2 = nb[1];
    s.order = top.integer("order", s.order);
    s.kappa = top.positive("kappa", s.kappa);
    s.noise_variance = top.number("noise_variance", s.noise_variance);
    const std::string agg = top.string("aggregation", "average");
    if (agg == "average") {
      s.aggregation = Aggregation::Average;
    } else if (agg == "total") {
      s.aggregation = Aggregation::Total;
    } else {
      top.fail("aggregation", "expected average or total");
    }
    const auto cells = top.int_pair("cells", {s.cells1, s.cells2});
    s.cells1 = cells[0];
    s.cells2 = cells[1];
    s.coverage = top.number("coverage", s.coverage);
    const auto sides = top.numbers<2>("side_fraction", {s.min_side, s.max_side});
    s.min_side = sides[0];
    s.max_side = sides[1];
    s.max_attempts = top.integer("max_attempts", s.max_attempts);
    cfg.truth_cells = top.int_pair("truth_cells", cfg.truth_cells);
    try {
      s.validate();
    } catch (const ValidationError& e) {
      ctx.fail({}, e.what());
    }
  }
  if (cfg.truth_cells[0] < 1 || cfg.truth_cells[1] < 1) top.fail("truth_cells", "counts must be positive");
  cfg.sampler = read_sampler(top.object("sampler"), cfg.sampler);
  top.finish();
  return cfg;
}

}  // namespace splinecos
