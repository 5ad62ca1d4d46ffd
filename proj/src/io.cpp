#include "splinecos/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "splinecos/error.hpp"

namespace splinecos {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef SPLINECOS_VERSION
#define SPLINECOS_VERSION "unknown"
#endif

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_number(const std::string& text, const std::string& where) {
  std::size_t start = 0, stop = text.size();
  while (start < stop && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
  while (stop > start && std::isspace(static_cast<unsigned char>(text[stop - 1]))) --stop;
  const std::string t = text.substr(start, stop - start);
  if (t == "nan") return std::nan("");
  if (t == "inf") return HUGE_VAL;
  if (t == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ValidationError(where + ": cannot parse number '" + t + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || std::isspace(static_cast<unsigned char>(s.back())))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_observations(const fs::path& path, std::span<const SupportGeometry> supports,
                        std::span<const double> values) {
  if (supports.size() != values.size()) throw ValidationError("supports and values differ in length");
  std::ostringstream os;
  os << "kind,lo1,hi1,lo2,hi2,value\n";
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const auto& s = supports[i];
    if (s.is_point()) {
      const Point& p = std::get<Point>(s.shape);
      os << "point," << format_number(p.x1) << ',' << format_number(p.x1) << ',' << format_number(p.x2) << ','
         << format_number(p.x2);
    } else {
      const Rect& r = std::get<Rect>(s.shape);
      os << "rect," << format_number(r.lo1) << ',' << format_number(r.hi1) << ',' << format_number(r.lo2) << ','
         << format_number(r.hi2);
    }
    os << ',' << format_number(values[i]) << '\n';
  }
  write_text(path, os.str());
}

ObservationTable read_observations(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty observation file");
  const auto header = split(strip(line), ',');
  const std::vector<std::string> expected{"kind", "lo1", "hi1", "lo2", "hi2", "value"};
  if (header != expected) {
    throw ValidationError(path.string() + ":1: expected header 'kind,lo1,hi1,lo2,hi2,value'");
  }
  ObservationTable table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 6) throw ValidationError(where + ": expected 6 fields, found " + std::to_string(f.size()));
    const double lo1 = parse_number(f[1], where), hi1 = parse_number(f[2], where);
    const double lo2 = parse_number(f[3], where), hi2 = parse_number(f[4], where);
    const std::string kind = strip(f[0]);
    if (kind == "point") {
      if (lo1 != hi1 || lo2 != hi2) throw ValidationError(where + ": a point must repeat its coordinates");
      table.supports.push_back(SupportGeometry::point(lo1, lo2));
    } else if (kind == "rect") {
      try {
        table.supports.push_back(SupportGeometry::rect(lo1, hi1, lo2, hi2));
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    } else {
      throw ValidationError(where + ": unknown support kind '" + kind + "' (expected point or rect)");
    }
    table.values.push_back(parse_number(f[5], where));
  }
  return table;
}

void write_vector(const fs::path& path, const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "value\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << format_number(v[i]) << '\n';
  write_text(path, os.str());
}

Eigen::VectorXd read_vector(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || strip(line) != "value") {
    throw ValidationError(path.string() + ":1: expected header 'value'");
  }
  std::vector<double> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    out.push_back(parse_number(line, path.string() + ":" + std::to_string(lineno)));
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

// ---------------------------------------------------------------------------
// Chain store

namespace {

std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xffU);
  return out;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t n) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = swap_bytes(std::bit_cast<std::uint64_t>(data[i]));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

void read_doubles(std::ifstream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = std::bit_cast<double>(swap_bytes(std::bit_cast<std::uint64_t>(data[i])));
    }
  }
}

}  // namespace

void write_chain_store(const fs::path& dir, const PosteriorSamples& samples, const std::string& model_hash) {
  fs::create_directories(dir);
  const auto& cfg = samples.config;
  json meta;
  meta["format"] = "splinecos-chains";
  meta["version"] = SPLINECOS_VERSION;
  meta["model_hash"] = model_hash;
  meta["n_chains"] = samples.chains.size();
  meta["draws_per_chain"] = samples.chains.empty() ? 0 : samples.chains.front().rows();
  meta["n_parameters"] = samples.layout.size();
  meta["layout"] = "column-major float64 little-endian";
  meta["sampler"] = {{"n_iter", cfg.n_iter}, {"burn_in", cfg.burn_in}, {"thin", cfg.thin},
                     {"chains", cfg.n_chains}, {"seed", cfg.seed}};
  meta["parameters"] = samples.layout.names;
  json files = json::array();
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    const std::string name = "chain_" + std::to_string(c) + ".bin";
    files.push_back(name);
    const Eigen::MatrixXd colmajor = samples.chains[c];
    std::ofstream out = open_out(dir / name, std::ios::out | std::ios::binary);
    write_doubles(out, colmajor.data(), static_cast<std::size_t>(colmajor.size()));
    if (!out) throw std::runtime_error("failed writing '" + (dir / name).string() + "'");
  }
  meta["files"] = files;
  write_text(dir / "chains.json", meta.dump(2) + "\n");
}

PosteriorSamples read_chain_store(const fs::path& dir, ChainMetadata* metadata) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "chains.json"));
  } catch (const json::exception& e) {
    throw ValidationError((dir / "chains.json").string() + ": " + e.what());
  }
  try {
    if (meta.at("format") != "splinecos-chains") throw ValidationError("not a splinecos chain store");
    PosteriorSamples samples;
    samples.layout.names = meta.at("parameters").get<std::vector<std::string>>();
    const auto draws = meta.at("draws_per_chain").get<std::size_t>();
    const auto& s = meta.at("sampler");
    samples.config.n_iter = s.at("n_iter").get<int>();
    samples.config.burn_in = s.at("burn_in").get<int>();
    samples.config.thin = s.at("thin").get<int>();
    samples.config.n_chains = s.at("chains").get<int>();
    samples.config.seed = s.at("seed").get<std::uint64_t>();
    const auto p = static_cast<Eigen::Index>(samples.layout.names.size());
    for (const auto& f : meta.at("files")) {
      const fs::path file = dir / f.get<std::string>();
      if (fs::file_size(file) != draws * static_cast<std::size_t>(p) * sizeof(double)) {
        throw ValidationError(file.string() + ": size does not match the metadata");
      }
      Eigen::MatrixXd colmajor(static_cast<Eigen::Index>(draws), p);
      std::ifstream in = open_in(file, std::ios::in | std::ios::binary);
      read_doubles(in, colmajor.data(), static_cast<std::size_t>(colmajor.size()));
      samples.chains.emplace_back(colmajor);
    }
    if (metadata) {
      metadata->names = samples.layout.names;
      metadata->draws_per_chain = draws;
      metadata->n_chains = samples.chains.size();
      metadata->sampler = samples.config;
      metadata->model_hash = meta.at("model_hash").get<std::string>();
      metadata->version = meta.at("version").get<std::string>();
    }
    return samples;
  } catch (const json::exception& e) {
    throw ValidationError((dir / "chains.json").string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Grids and tables

std::vector<SupportGeometry> GridSpec::cells() const {
  std::vector<SupportGeometry> out;
  out.reserve(static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows));
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      out.push_back(SupportGeometry::rect(x0 + c * dx, x0 + (c + 1) * dx, y0 + r * dy, y0 + (r + 1) * dy));
    }
  }
  return out;
}

GridSpec GridSpec::parse(const std::string& text) {
  const auto f = split(text, ',');
  if (f.size() != 6) throw ValidationError("grid '" + text + "' must be x0,y0,dx,dy,ncols,nrows");
  GridSpec g;
  g.x0 = parse_number(f[0], "grid");
  g.y0 = parse_number(f[1], "grid");
  g.dx = parse_number(f[2], "grid");
  g.dy = parse_number(f[3], "grid");
  const double nc = parse_number(f[4], "grid");
  const double nr = parse_number(f[5], "grid");
  if (!(g.dx > 0.0) || !(g.dy > 0.0) || nc < 1 || nr < 1 || nc != std::floor(nc) || nr != std::floor(nr)) {
    throw ValidationError("grid '" + text + "' needs positive cell sizes and counts");
  }
  g.ncols = static_cast<int>(nc);
  g.nrows = static_cast<int>(nr);
  return g;
}

void write_raster(const fs::path& path, const GridSpec& grid, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(grid.ncols) * grid.nrows) {
    throw ValidationError("raster values do not match the grid size");
  }
  std::ostringstream os;
  os << "ncols " << grid.ncols << "\nnrows " << grid.nrows << "\nxllcorner " << format_number(grid.x0)
     << "\nyllcorner " << format_number(grid.y0) << "\ncellsize_x " << format_number(grid.dx) << "\ncellsize_y "
     << format_number(grid.dy) << "\n";
  for (int r = grid.nrows - 1; r >= 0; --r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (c) os << ' ';
      os << format_number(values[static_cast<Eigen::Index>(r) * grid.ncols + c]);
    }
    os << '\n';
  }
  write_text(path, os.str());
}

Eigen::VectorXd read_raster(const fs::path& path, GridSpec* grid) {
  std::ifstream in = open_in(path);
  GridSpec g;
  std::string key, value;
  const char* keys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize_x", "cellsize_y"};
  for (const char* expected : keys) {
    if (!(in >> key >> value) || key != expected) {
      throw ValidationError(path.string() + ": expected raster header field '" + expected + "'");
    }
    const double v = parse_number(value, path.string());
    if (key == "ncols") g.ncols = static_cast<int>(v);
    if (key == "nrows") g.nrows = static_cast<int>(v);
    if (key == "xllcorner") g.x0 = v;
    if (key == "yllcorner") g.y0 = v;
    if (key == "cellsize_x") g.dx = v;
    if (key == "cellsize_y") g.dy = v;
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(g.ncols) * g.nrows);
  for (int r = g.nrows - 1; r >= 0; --r) {
    for (int c = 0; c < g.ncols; ++c) {
      if (!(in >> value)) throw ValidationError(path.string() + ": raster has too few values");
      values[static_cast<Eigen::Index>(r) * g.ncols + c] = parse_number(value, path.string());
    }
  }
  if (grid) *grid = g;
  return values;
}

void write_prediction_table(const fs::path& path, std::span<const SupportGeometry> targets,
                            const PredictionTable& table) {
  std::ostringstream os;
  os << "target,kind,lo1,hi1,lo2,hi2,mean,sd,q025,q50,q975";
  if (table.overprediction) os << ",p_over";
  os << '\n';
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& s = targets[i];
    os << i << ',';
    if (s.is_point()) {
      const Point& p = std::get<Point>(s.shape);
      os << "point," << format_number(p.x1) << ',' << format_number(p.x1) << ',' << format_number(p.x2) << ','
         << format_number(p.x2);
    } else {
      const Rect& r = std::get<Rect>(s.shape);
      os << "rect," << format_number(r.lo1) << ',' << format_number(r.hi1) << ',' << format_number(r.lo2) << ','
         << format_number(r.hi2);
    }
    const Summary& m = table.summaries[i];
    os << ',' << format_number(m.mean) << ',' << format_number(m.sd) << ',' << format_number(m.q025) << ','
       << format_number(m.q50) << ',' << format_number(m.q975);
    if (table.overprediction) os << ',' << format_number((*table.overprediction)[static_cast<Eigen::Index>(i)]);
    os << '\n';
  }
  write_text(path, os.str());
}

std::string fnv1a_hex(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace splinecos
