#include "splinecos/commands.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "splinecos/config.hpp"
#include "splinecos/diagnostics.hpp"
#include "splinecos/error.hpp"
#include "splinecos/io.hpp"
#include "splinecos/predict.hpp"
#include "splinecos/simulate.hpp"

namespace splinecos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json sampler_json(const SamplerConfig& s) {
  return {{"n_iter", s.n_iter}, {"burn_in", s.burn_in}, {"thin", s.thin}, {"chains", s.n_chains}, {"seed", s.seed}};
}

json field_json(int q1, int q2, int order, const json& kappa) {
  return {{"n_basis", {q1, q2}}, {"order", order}, {"kappa", kappa}};
}

void report(std::ostream& log, const std::string& role, const fs::path& path) {
  log << role << ": " << path.string() << '\n';
}

std::string grid_text(const GridSpec& g) {
  return format_number(g.x0) + "," + format_number(g.y0) + "," + format_number(g.dx) + "," + format_number(g.dy) +
         "," + std::to_string(g.ncols) + "," + std::to_string(g.nrows);
}

void simulate_surface(const SimulateConfig& sim, std::uint64_t seed, const fs::path& out, std::ostream& log) {
  const ScenarioConfig& cfg = sim.scenario;
  Rng rng(seed);
  const auto units = gen_units(cfg, rng);
  const SimulatedData data = gen_data(cfg, units, rng);
  write_observations(out / "observations.csv", units, data.values);
  report(log, "observations", out / "observations.csv");
  write_vector(out / "field.csv", data.field);
  report(log, "field coefficients", out / "field.csv");

  GridSpec grid{cfg.lo1, cfg.lo2, (cfg.hi1 - cfg.lo1) / sim.truth_cells[0], (cfg.hi2 - cfg.lo2) / sim.truth_cells[1],
                sim.truth_cells[0], sim.truth_cells[1]};
  const auto cells = grid.cells();
  const Eigen::VectorXd truth = design_matrix(cfg.basis(), cells) * data.field;
  write_vector(out / "truth.csv", truth);
  write_raster(out / "truth.asc", grid, truth);
  report(log, "truth", out / "truth.csv");
  report(log, "truth raster", out / "truth.asc");
  log << "truth grid: " << grid_text(grid) << '\n';

  json response = {{"id", "y"}, {"path", "observations.csv"}, {"family", "gaussian"}, {"reliable", true},
                   {"variance", cfg.heteroscedastic() ? "inverse-area" : "constant"}};
  SamplerConfig sampler = sim.sampler;
  sampler.seed = seed;
  json fit = {{"model",
               {{"domain", {cfg.lo1, cfg.hi1, cfg.lo2, cfg.hi2}},
                {"residual", field_json(cfg.n_basis1, cfg.n_basis2, cfg.order, "sample")}}},
              {"data", {{"responses", json::array({response})}}},
              {"sampler", sampler_json(sampler)},
              {"output", {{"directory", "fit"}}}};
  write_text(out / "fit.json", fit.dump(2) + "\n");
  report(log, "fit config", out / "fit.json");
}

void simulate_binary(const SimulateConfig& sim, std::uint64_t seed, const fs::path& out, std::ostream& log) {
  const FullBinaryConfig& cfg = sim.binary;
  Rng rng(seed);
  const FullBinaryData data = gen_full_binary(cfg, rng);
  json responses = json::array(), predictors = json::array();
  for (const auto& r : data.responses) {
    const fs::path path = out / (r.id + ".csv");
    write_observations(path, r.supports, r.values);
    report(log, "response " + r.id, path);
    responses.push_back({{"id", r.id}, {"path", r.id + ".csv"}, {"family", "probit"}, {"reliable", r.reliable}});
  }
  for (const auto& p : data.predictors) {
    const fs::path path = out / (p.id + ".csv");
    write_observations(path, p.supports, p.values);
    report(log, "predictor " + p.id, path);
    predictors.push_back({{"id", p.id}, {"path", p.id + ".csv"}, {"field", field_json(cfg.n_basis, 1, cfg.order, "sample")}});
  }
  write_vector(out / "delta_w.csv", data.residual_field);
  report(log, "residual coefficients", out / "delta_w.csv");
  for (std::size_t j = 0; j < data.predictor_fields.size(); ++j) {
    const fs::path path = out / ("delta_v" + std::to_string(j + 1) + ".csv");
    write_vector(path, data.predictor_fields[j]);
    report(log, "predictor coefficients", path);
  }

  GridSpec grid{0.0, 0.0, cfg.length / sim.truth_cells[0], 1.0, sim.truth_cells[0], 1};
  const auto cells = grid.cells();
  const TensorBasis basis = cfg.basis();
  const DesignMatrix b = design_matrix(basis, cells);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cells.size()), cfg.beta0);
  eta += b * data.residual_field;
  const double slopes[2] = {cfg.beta1, cfg.beta2};
  for (std::size_t j = 0; j < data.predictor_fields.size() && j < 2; ++j) eta += slopes[j] * (b * data.predictor_fields[j]);
  write_vector(out / "truth.csv", eta);
  write_raster(out / "truth.asc", grid, eta);
  report(log, "truth", out / "truth.csv");
  report(log, "truth raster", out / "truth.asc");
  log << "truth grid: " << grid_text(grid) << '\n';

  json fit = {{"model",
               {{"domain", {0.0, cfg.length, 0.0, 1.0}},
                {"residual", field_json(cfg.n_basis, 1, cfg.order, "unit-variance")},
                {"predictor", field_json(cfg.n_basis, 1, cfg.order, "sample")},
                {"coefficient_prior_variance", 1.0},
                {"response_variance_prior", {2.0, 1.0}}}},
              {"data", {{"responses", responses}, {"predictors", predictors}}},
              {"sampler", sampler_json([&] {
                 SamplerConfig s = sim.sampler;
                 s.seed = seed;
                 return s;
               }())},
              {"output", {{"directory", "fit"}}}};
  write_text(out / "fit.json", fit.dump(2) + "\n");
  report(log, "fit config", out / "fit.json");
}

std::string stem(std::size_t index) { return "grid" + std::to_string(index + 1); }

void write_rasters(const fs::path& out, const std::string& name, const GridSpec& grid, const PredictionTable& table,
                   std::ostream& log) {
  const auto n = static_cast<Eigen::Index>(table.summaries.size());
  Eigen::VectorXd mean(n), sd(n), lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Summary& s = table.summaries[static_cast<std::size_t>(i)];
    mean[i] = s.mean;
    sd[i] = s.sd;
    lo[i] = s.q025;
    hi[i] = s.q975;
  }
  write_raster(out / (name + "_mean.asc"), grid, mean);
  write_raster(out / (name + "_sd.asc"), grid, sd);
  write_raster(out / (name + "_q025.asc"), grid, lo);
  write_raster(out / (name + "_q975.asc"), grid, hi);
  report(log, name + " rasters", out / (name + "_{mean,sd,q025,q975}.asc"));
  if (table.overprediction) {
    write_raster(out / (name + "_p_over.asc"), grid, *table.overprediction);
    report(log, name + " overprediction", out / (name + "_p_over.asc"));
  }
}

std::size_t source_index(const ModelSpec& spec, const std::string& id) {
  for (std::size_t k = 0; k < spec.num_responses(); ++k) {
    if (spec.responses()[k].source.id == id) return k;
  }
  throw ValidationError("unknown response source '" + id + "'");
}

}  // namespace

void simulate_command(const SimulateArgs& args, std::ostream& log) {
  const Scenario kind = parse_scenario(args.scenario);
  const std::string text = args.config ? read_text(*args.config) : std::string();
  const SimulateConfig sim = parse_simulate_config(text, args.config.value_or("<defaults>"), kind);
  fs::create_directories(args.out);
  log << "scenario: " << to_string(kind) << "\nseed: " << args.seed << '\n';
  if (kind == Scenario::FullBinary) {
    simulate_binary(sim, args.seed, args.out, log);
  } else {
    simulate_surface(sim, args.seed, args.out, log);
  }
}

void fit_command(const FitArgs& args, std::ostream& log) {
  RunConfig cfg = load_run_config(args.config);
  if (args.seed) cfg.sampler.seed = *args.seed;
  if (args.threads) cfg.sampler.threads = *args.threads;
  if (args.out) cfg.output_dir = *args.out;
  cfg.sampler.validate();
  const LoadedModel model = load_model(cfg);
  const PosteriorSamples samples = run(model.spec, cfg.sampler);
  write_chain_store(cfg.output_dir, samples, model.hash);

  std::string table = "parameter,mean,sd,q025,q50,q975\n";
  const DrawMatrix all = samples.stacked();
  const auto summaries = summarize_columns(all);
  for (std::size_t p = 0; p < summaries.size(); ++p) {
    const Summary& s = summaries[p];
    table += samples.layout.names[p] + "," + format_number(s.mean) + "," + format_number(s.sd) + "," +
             format_number(s.q025) + "," + format_number(s.q50) + "," + format_number(s.q975) + "\n";
  }
  write_text(cfg.output_dir / "summary.csv", table);
  log << "model hash: " << model.hash << "\nchains: " << samples.chains.size()
      << "\ndraws per chain: " << samples.config.draws_per_chain() << '\n';
  report(log, "chain store", cfg.output_dir / "chains.json");
  report(log, "summary", cfg.output_dir / "summary.csv");
}

void predict_command(const PredictArgs& args, std::ostream& log) {
  if (args.grids.empty() && !args.rects) throw ValidationError("predict needs at least one --grid or --rects");
  const std::size_t sets = args.grids.size() + (args.rects ? 1 : 0);
  if (args.truth && sets != 1) throw ValidationError("--truth needs exactly one target set");
  const RunConfig cfg = load_run_config(args.config);
  const LoadedModel model = load_model(cfg);
  ChainMetadata meta;
  PosteriorSamples samples = read_chain_store(args.chains, &meta);
  if (meta.model_hash != model.hash) {
    throw ValidationError("chain store " + args.chains.string() + " was fitted to a different model or data (hash " +
                          meta.model_hash + ", config gives " + model.hash + ")");
  }
  const ParameterLayout layout = ParameterLayout::from_spec(model.spec);
  if (layout.names != samples.layout.names) throw ValidationError("chain store parameters do not match the model");
  samples.layout = layout;
  const FieldRequest field = parse_field(args.field, model.spec);
  const std::optional<std::size_t> source =
      args.source ? std::optional<std::size_t>(source_index(model.spec, *args.source)) : std::nullopt;
  fs::create_directories(args.out);

  const auto run_set = [&](const std::string& name, const std::vector<SupportGeometry>& targets,
                           const GridSpec* grid, const std::string& label) {
    std::optional<Eigen::VectorXd> truth;
    if (args.truth) {
      if (args.truth->extension() == ".asc") {
        GridSpec tg;
        truth = read_raster(*args.truth, &tg);
        if (grid && (tg.ncols != grid->ncols || tg.nrows != grid->nrows)) {
          throw ValidationError(args.truth->string() + ": raster is " + std::to_string(tg.ncols) + "x" +
                                std::to_string(tg.nrows) + ", targets are " + std::to_string(grid->ncols) + "x" +
                                std::to_string(grid->nrows));
        }
      } else {
        truth = read_vector(*args.truth);
      }
    }
    PredictionTable table;
    try {
      table = predict_summaries(samples, model.spec, targets, field, truth ? &*truth : nullptr, args.threads);
    } catch (const ValidationError& e) {
      throw ValidationError(label + ": " + e.what());
    }
    write_prediction_table(args.out / (name + ".csv"), targets, table);
    report(log, name + " table", args.out / (name + ".csv"));
    if (grid) write_rasters(args.out, name, *grid, table, log);
    if (source) {
      const Eigen::VectorXd p = success_probability(samples, model.spec, targets, *source);
      if (grid) {
        write_raster(args.out / (name + "_success.asc"), *grid, p);
        report(log, name + " success probability", args.out / (name + "_success.asc"));
      } else {
        write_vector(args.out / (name + "_success.csv"), p);
        report(log, name + " success probability", args.out / (name + "_success.csv"));
      }
    }
  };

  for (std::size_t g = 0; g < args.grids.size(); ++g) {
    const GridSpec grid = GridSpec::parse(args.grids[g]);
    run_set(stem(g), grid.cells(), &grid, "grid " + args.grids[g]);
  }
  if (args.rects) {
    const ObservationTable t = read_observations(*args.rects);
    run_set("rects", t.supports, nullptr, args.rects->string());
  }
  log << "field: " << args.field << "\ndraws: " << samples.num_draws() << '\n';
}

bool diagnose_command(const DiagnoseArgs& args, std::ostream& log) {
  const PosteriorSamples samples = read_chain_store(args.chains);
  const auto rows = diagnose(samples);
  const bool multi = samples.chains.size() > 1;
  std::string table = multi ? "parameter,mean,sd,ess,rhat\n" : "parameter,mean,sd,ess\n";
  double min_ess = std::numeric_limits<double>::infinity();
  double max_rhat = 0.0;
  for (const auto& r : rows) {
    table += r.name + "," + format_number(r.mean) + "," + format_number(r.sd) + "," + format_number(r.ess);
    if (multi) {
      table += "," + format_number(*r.rhat);
      if (!std::isnan(*r.rhat)) max_rhat = std::max(max_rhat, *r.rhat);
    }
    table += "\n";
    min_ess = std::min(min_ess, r.ess);
  }
  const fs::path out = args.out.value_or(args.chains);
  fs::create_directories(out);
  write_text(out / "diagnostics.csv", table);
  report(log, "diagnostics", out / "diagnostics.csv");
  log << "parameters: " << rows.size() << "\nchains: " << samples.chains.size()
      << "\nminimum ess: " << format_number(min_ess) << '\n';
  if (!multi) {
    log << "split R-hat: not available for a single chain\n";
    return true;
  }
  const bool ok = max_rhat < 1.05;
  log << "maximum split R-hat: " << format_number(max_rhat) << "\nall R-hat < 1.05: " << (ok ? "yes" : "no") << '\n';
  return ok;
}

}  // namespace splinecos
