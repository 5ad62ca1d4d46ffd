#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "splinecos/basis.hpp"
#include "splinecos/commands.hpp"
#include "splinecos/error.hpp"
#include "splinecos/io.hpp"
#include "splinecos/sampler.hpp"

namespace py = pybind11;
using namespace splinecos;

namespace {

std::vector<SupportGeometry> supports_from(const std::vector<std::vector<double>>& rows, bool total) {
  std::vector<SupportGeometry> out;
  for (const auto& r : rows) {
    if (r.size() == 2) {
      out.push_back(SupportGeometry::point(r[0], r[1]));
    } else if (r.size() == 4) {
      out.push_back(SupportGeometry::rect(r[0], r[1], r[2], r[3], total ? Aggregation::Total : Aggregation::Average));
    } else {
      throw ValidationError("a support is [x, y] or [x0, x1, y0, y1]");
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatial latent Gaussian models with change of support";

  m.def(
      "basis_integrals",
      [](std::vector<double> knots, int order, double a, double b) {
        return KnotVector(std::move(knots), order).integral_all(a, b);
      },
      py::arg("knots"), py::arg("order"), py::arg("a"), py::arg("b"),
      "Integral of every B-spline over [a, b].");

  m.def(
      "basis_values",
      [](std::vector<double> knots, int order, double x) { return KnotVector(std::move(knots), order).eval_all(x); },
      py::arg("knots"), py::arg("order"), py::arg("x"));

  m.def(
      "design_matrix",
      [](std::array<double, 4> domain, int n_basis1, int n_basis2, int order,
         const std::vector<std::vector<double>>& supports, bool total) -> Eigen::MatrixXd {
        const TensorBasis basis =
            make_tensor_basis(domain[0], domain[1], domain[2], domain[3], n_basis1, n_basis2, order);
        return Eigen::MatrixXd(design_matrix(basis, supports_from(supports, total)));
      },
      py::arg("domain"), py::arg("n_basis1"), py::arg("n_basis2"), py::arg("order"), py::arg("supports"),
      py::arg("total") = false,
      "Dense design matrix; supports are [x, y] points or [x0, x1, y0, y1] rectangles.");

  m.def(
      "simulate",
      [](const std::string& scenario, const std::filesystem::path& out, std::uint64_t seed,
         std::optional<std::filesystem::path> config) {
        std::ostringstream log;
        simulate_command({scenario, std::move(config), seed, out}, log);
        return log.str();
      },
      py::arg("scenario"), py::arg("out"), py::arg("seed") = 1, py::arg("config") = py::none());

  m.def(
      "fit",
      [](const std::filesystem::path& config, std::optional<std::uint64_t> seed, std::optional<int> threads,
         std::optional<std::filesystem::path> out) {
        std::ostringstream log;
        py::gil_scoped_release release;
        fit_command({config, seed, threads, std::move(out)}, log);
        return log.str();
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = py::none(), py::arg("out") = py::none());

  m.def(
      "predict",
      [](const std::filesystem::path& config, const std::filesystem::path& chains, std::vector<std::string> grids,
         std::optional<std::filesystem::path> rects, const std::string& field,
         std::optional<std::filesystem::path> truth, std::optional<std::string> source, int threads,
         const std::filesystem::path& out) {
        std::ostringstream log;
        PredictArgs args{config, chains, std::move(grids), std::move(rects), field, std::move(truth),
                         std::move(source), threads, out};
        predict_command(args, log);
        return log.str();
      },
      py::arg("config"), py::arg("chains"), py::arg("grids") = std::vector<std::string>{},
      py::arg("rects") = py::none(), py::arg("field") = "eta", py::arg("truth") = py::none(),
      py::arg("source") = py::none(), py::arg("threads") = 1, py::arg("out") = "predict");

  m.def(
      "diagnose",
      [](const std::filesystem::path& chains, std::optional<std::filesystem::path> out) {
        std::ostringstream log;
        const bool ok = diagnose_command({chains, std::move(out)}, log);
        return py::make_tuple(ok, log.str());
      },
      py::arg("chains"), py::arg("out") = py::none(),
      "Returns (all split R-hat below 1.05, report).");

  m.def(
      "read_chains",
      [](const std::filesystem::path& dir) {
        const PosteriorSamples s = read_chain_store(dir);
        std::vector<Eigen::MatrixXd> chains;
        for (const auto& c : s.chains) chains.emplace_back(c);
        return py::make_tuple(s.layout.names, chains);
      },
      py::arg("dir"), "Returns (parameter names, one draws x parameters array per chain).");

  m.attr("__version__") = SPLINECOS_VERSION;
}
