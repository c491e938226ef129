#include "hyperlab/io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace hyperlab {

namespace fs = std::filesystem;

ParseError::ParseError(const std::string& field_, int line_, const std::string& what)
    : std::runtime_error((line_ > 0 ? "line " + std::to_string(line_) + ": " : std::string()) +
                         (field_.empty() ? std::string() : field_ + ": ") + what),
      field(field_),
      line(line_) {}

namespace {

int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

template <typename T>
T as(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception& e) {
    throw ParseError(field, line_of(n), "cannot convert value '" + (n.IsScalar() ? n.Scalar() : std::string("<node>")) + "'");
  }
}

template <typename T>
T get(const YAML::Node& parent, const std::string& key, const std::string& path, const T& fallback) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  return as<T>(n, path + key);
}

void reject_unknown(const YAML::Node& map, const std::vector<std::string>& known, const std::string& path) {
  for (const auto& kv : map) {
    const std::string k = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ParseError(path + k, line_of(kv.first), "unknown key");
  }
}

template <int N>
std::vector<Coefficient<N>> coefficients(const YAML::Node& list, const std::string& path) {
  std::vector<Coefficient<N>> out;
  if (!list) return out;
  if (!list.IsSequence()) throw ParseError(path, line_of(list), "expected a list of (index, value) entries");
  for (std::size_t e = 0; e < list.size(); ++e) {
    const YAML::Node item = list[e];
    const std::string where = path + "[" + std::to_string(e) + "]";
    YAML::Node idx, val;
    if (item.IsMap()) {
      reject_unknown(item, {"index", "value"}, where + ".");
      idx = item["index"];
      val = item["value"];
    } else if (item.IsSequence() && item.size() == 2) {
      idx = item[0];
      val = item[1];
    } else {
      throw ParseError(where, line_of(item), "entry must be {index: [...], value: v} or [[...], v]");
    }
    if (!idx || !idx.IsSequence() || int(idx.size()) != N)
      throw ParseError(where + ".index", line_of(item), "index tuple must have " + std::to_string(N) + " entries");
    Coefficient<N> c;
    for (int q = 0; q < N; ++q) c.idx[q] = as<int>(idx[q], where + ".index");
    if (!val) throw ParseError(where + ".value", line_of(item), "missing value");
    c.value = as<double>(val, where + ".value");
    out.push_back(c);
  }
  return out;
}

SystemSpec system_from_node(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) throw ParseError(path, line_of(n), "system must be a mapping");
  reject_unknown(n, {"preset", "name", "n0", "j0", "mass", "sigma", "components", "A", "B", "P", "Q", "R"}, path);
  SystemSpec spec;
  if (n["preset"]) {
    const std::string p = as<std::string>(n["preset"], path + "preset");
    try {
      spec = preset_system(p);
    } catch (const std::exception& e) {
      throw ParseError(path + "preset", line_of(n["preset"]), e.what());
    }
    for (const char* k : {"n0", "j0", "components", "A", "B", "P", "Q", "R"})
      if (n[k]) throw ParseError(path + k, line_of(n[k]), "cannot be combined with a preset");
  } else {
    spec.n0 = get<int>(n, "n0", path, 1);
    spec.j0 = get<int>(n, "j0", path, spec.n0);
    spec.mass.assign(spec.n0, 0.0);
    spec.components.clear();
    for (int i = 0; i < spec.n0; ++i) spec.components.push_back(spec.n0 == 1 ? "u" : "w" + std::to_string(i));
    spec.components = get<std::vector<std::string>>(n, "components", path, spec.components);
    spec.A = coefficients<6>(n["A"], path + "A");
    spec.B = coefficients<5>(n["B"], path + "B");
    spec.P = coefficients<5>(n["P"], path + "P");
    spec.Q = coefficients<4>(n["Q"], path + "Q");
    spec.R = coefficients<3>(n["R"], path + "R");
  }
  spec.name = get<std::string>(n, "name", path, spec.name);
  spec.mass = get<std::vector<double>>(n, "mass", path, spec.mass);
  spec.sigma = get<double>(n, "sigma", path, spec.sigma);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.empty() ? "system" : path.substr(0, path.size() - 1), line_of(n), e.what());
  }
  return spec;
}

YAML::Node parse(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("", e.mark.line + 1, e.msg);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <int N>
void emit(YAML::Emitter& y, const char* key, const std::vector<Coefficient<N>>& list) {
  if (list.empty()) return;
  y << YAML::Key << key << YAML::Value << YAML::BeginSeq;
  for (const auto& c : list) {
    y << YAML::Flow << YAML::BeginMap << YAML::Key << "index" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int v : c.idx) y << v;
    y << YAML::EndSeq << YAML::Key << "value" << YAML::Value << fmt(c.value) << YAML::EndMap;
  }
  y << YAML::EndSeq;
}

void emit_system(YAML::Emitter& y, const SystemSpec& s) {
  y << YAML::BeginMap;
  y << YAML::Key << "name" << YAML::Value << s.name;
  y << YAML::Key << "n0" << YAML::Value << s.n0;
  y << YAML::Key << "j0" << YAML::Value << s.j0;
  y << YAML::Key << "mass" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double m : s.mass) y << fmt(m);
  y << YAML::EndSeq;
  y << YAML::Key << "sigma" << YAML::Value << fmt(s.sigma);
  y << YAML::Key << "components" << YAML::Value << YAML::Flow << s.components;
  emit(y, "A", s.A);
  emit(y, "B", s.B);
  emit(y, "P", s.P);
  emit(y, "Q", s.Q);
  emit(y, "R", s.R);
  y << YAML::EndMap;
}

InitialProfile profile_from_node(const YAML::Node& n, const std::string& path, int n0) {
  if (!n.IsMap()) throw ParseError(path, line_of(n), "data entry must be a mapping");
  reject_unknown(n, {"component", "kind", "derivative", "amplitude", "center", "radius", "power", "width"}, path);
  InitialProfile p;
  p.component = get<int>(n, "component", path, 0);
  if (p.component < 0 || p.component >= n0) throw ParseError(path + "component", line_of(n), "component out of range");
  const std::string kind = get<std::string>(n, "kind", path, "bump");
  if (kind == "bump") p.kind = InitialProfile::Kind::Bump;
  else if (kind == "gaussian") p.kind = InitialProfile::Kind::Gaussian;
  else throw ParseError(path + "kind", line_of(n["kind"]), "expected bump or gaussian");
  p.derivative = get<bool>(n, "derivative", path, false);
  p.amplitude = get<double>(n, "amplitude", path, p.amplitude);
  const auto c = get<std::vector<double>>(n, "center", path, {0.0, 0.0, 0.0});
  if (c.size() != 3) throw ParseError(path + "center", line_of(n["center"]), "center needs three coordinates");
  p.center = Eigen::Vector3d(c[0], c[1], c[2]);
  p.radius = get<double>(n, "radius", path, p.radius);
  p.power = get<int>(n, "power", path, p.power);
  p.width = get<double>(n, "width", path, p.width);
  if (!(p.radius > 0.0)) throw ParseError(path + "radius", line_of(n), "radius must be positive");
  return p;
}

}  // namespace

SystemSpec system_from_yaml(const std::string& text) { return system_from_node(parse(text), ""); }

SystemSpec load_system(const fs::path& path) {
  try {
    return system_from_yaml(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.field, e.line, path.filename().string() + ": " + e.what());
  }
}

std::string system_to_yaml(const SystemSpec& spec) {
  YAML::Emitter y;
  emit_system(y, spec);
  return std::string(y.c_str()) + "\n";
}

std::vector<InitialProfile> default_data(const SystemSpec& spec, double amplitude) {
  std::vector<InitialProfile> out;
  for (int i = 0; i < spec.n0; ++i) {
    InitialProfile p;
    p.component = i;
    p.amplitude = amplitude;
    out.push_back(p);
  }
  return out;
}

int cells_for_resolution(const SolverConfig& cfg, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("resolution must be positive");
  // R depends on cells through the zero band: h = 2 (rho + pad) / (cells - 2 band)
  const double sr = cfg.grid == SolverConfig::Grid::Fixed ? cfg.s_end : cfg.s0;
  const double span = 2.0 * (slice_support_radius(sr) + cfg.pad);
  int cells = int(std::lround(span / h)) + 2 * cfg.band;
  cells += cells % 2;
  return std::max(cells, 8);
}

RunConfig run_config_from_yaml(const std::string& text, const fs::path& base) {
  const YAML::Node root = parse(text);
  RunConfig cfg;
  if (!root || root.IsNull()) throw ParseError("", 0, "empty configuration");
  if (!root.IsMap()) throw ParseError("", line_of(root), "configuration must be a mapping");
  reject_unknown(root, {"command", "system", "solver", "data", "amplitude", "diagnostics", "snapshots", "verify", "seed",
                        "threads", "out"},
                 "");
  cfg.command = get<std::string>(root, "command", "", cfg.command);
  if (cfg.command != "analyze" && cfg.command != "evolve" && cfg.command != "verify" && cfg.command != "operators")
    throw ParseError("command", line_of(root["command"]), "unknown command '" + cfg.command + "'");

  SolverConfig& sc = cfg.solver;
  if (const YAML::Node sys = root["system"]) {
    if (sys.IsScalar()) {
      sc.spec = preset_system(as<std::string>(sys, "system"));
    } else if (sys.IsMap() && sys["file"]) {
      if (sys.size() != 1) throw ParseError("system.file", line_of(sys), "a file reference takes no other keys");
      fs::path p = as<std::string>(sys["file"], "system.file");
      if (p.is_relative()) p = base / p;
      sc.spec = load_system(p);
    } else {
      sc.spec = system_from_node(sys, "system.");
    }
  } else {
    sc.spec = preset_system("free-wave");
  }

  if (const YAML::Node s = root["solver"]) {
    const std::string P = "solver.";
    reject_unknown(s, {"s0", "s_end", "cells", "resolution", "order", "cfl", "ds", "grid", "pad", "band", "growth_limit"}, P);
    sc.s0 = get<double>(s, "s0", P, sc.s0);
    sc.s_end = get<double>(s, "s_end", P, sc.s_end);
    sc.cells = get<int>(s, "cells", P, sc.cells);
    cfg.resolution = get<double>(s, "resolution", P, 0.0);
    sc.order = get<int>(s, "order", P, sc.order);
    sc.cfl = get<double>(s, "cfl", P, sc.cfl);
    sc.ds = get<double>(s, "ds", P, sc.ds);
    const std::string grid = get<std::string>(s, "grid", P, "comoving");
    if (grid == "comoving") sc.grid = SolverConfig::Grid::Comoving;
    else if (grid == "fixed") sc.grid = SolverConfig::Grid::Fixed;
    else throw ParseError(P + "grid", line_of(s["grid"]), "expected comoving or fixed");
    sc.pad = get<double>(s, "pad", P, sc.pad);
    sc.band = get<int>(s, "band", P, sc.band);
    sc.growth_limit = get<double>(s, "growth_limit", P, sc.growth_limit);
    if (sc.order != 2 && sc.order != 4) throw ParseError(P + "order", line_of(s["order"]), "order must be 2 or 4");
    if (!(sc.s0 > 1.0) || !(sc.s_end > sc.s0)) throw ParseError(P + "s_end", line_of(s), "need 1 < s0 < s_end");
    if (!(sc.cfl > 0.0)) throw ParseError(P + "cfl", line_of(s), "cfl must be positive");
  }
  cfg.amplitude = get<double>(root, "amplitude", "", cfg.amplitude);
  if (const YAML::Node d = root["data"]) {
    if (!d.IsSequence()) throw ParseError("data", line_of(d), "expected a list of profiles");
    for (std::size_t q = 0; q < d.size(); ++q)
      sc.data.push_back(profile_from_node(d[q], "data[" + std::to_string(q) + "].", sc.spec.n0));
  } else {
    sc.data = default_data(sc.spec, cfg.amplitude);
  }
  if (const YAML::Node d = root["diagnostics"]) {
    const std::string P = "diagnostics.";
    reject_unknown(d, {"cadence", "multi", "curved"}, P);
    cfg.cadence = get<int>(d, "cadence", P, cfg.cadence);
    cfg.multi = get<std::vector<std::string>>(d, "multi", P, cfg.multi);
    cfg.curved = get<bool>(d, "curved", P, cfg.curved);
    for (const auto& m : cfg.multi) {
      try {
        parse_multi_index(m);
      } catch (const std::exception& e) {
        throw ParseError(P + "multi", line_of(d["multi"]), e.what());
      }
    }
    if (cfg.cadence < 1) throw ParseError(P + "cadence", line_of(d), "cadence must be >= 1");
  }
  if (const YAML::Node s = root["snapshots"]) {
    if (s.IsScalar()) {
      cfg.snapshots = as<bool>(s, "snapshots");
    } else {
      reject_unknown(s, {"enabled", "every"}, "snapshots.");
      cfg.snapshots = get<bool>(s, "enabled", "snapshots.", true);
      cfg.snapshot_every = get<int>(s, "every", "snapshots.", 0);
    }
  }
  cfg.verify = get<std::vector<std::string>>(root, "verify", "", cfg.verify);
  cfg.seed = get<std::uint64_t>(root, "seed", "", cfg.seed);
  cfg.threads = get<int>(root, "threads", "", cfg.threads);
  cfg.out = get<std::string>(root, "out", "", cfg.out.string());
  if (cfg.resolution > 0.0) sc.cells = cells_for_resolution(sc, cfg.resolution);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  try {
    return run_config_from_yaml(read_file(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(e.field, e.line, path.filename().string() + ": " + e.what());
  }
}

std::string run_config_to_yaml(const RunConfig& cfg) {
  const SolverConfig& sc = cfg.solver;
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "command" << YAML::Value << cfg.command;
  y << YAML::Key << "system" << YAML::Value;
  emit_system(y, sc.spec);
  y << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "s0" << YAML::Value << fmt(sc.s0) << YAML::Key << "s_end" << YAML::Value << fmt(sc.s_end);
  y << YAML::Key << "cells" << YAML::Value << sc.cells << YAML::Key << "order" << YAML::Value << sc.order;
  y << YAML::Key << "cfl" << YAML::Value << fmt(sc.cfl) << YAML::Key << "ds" << YAML::Value << fmt(sc.ds);
  y << YAML::Key << "grid" << YAML::Value << (sc.grid == SolverConfig::Grid::Fixed ? "fixed" : "comoving");
  y << YAML::Key << "pad" << YAML::Value << fmt(sc.pad) << YAML::Key << "band" << YAML::Value << sc.band;
  y << YAML::Key << "growth_limit" << YAML::Value << fmt(sc.growth_limit);
  y << YAML::EndMap;
  y << YAML::Key << "data" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : sc.data) {
    y << YAML::BeginMap;
    y << YAML::Key << "component" << YAML::Value << p.component;
    y << YAML::Key << "kind" << YAML::Value << (p.kind == InitialProfile::Kind::Bump ? "bump" : "gaussian");
    y << YAML::Key << "derivative" << YAML::Value << p.derivative;
    y << YAML::Key << "amplitude" << YAML::Value << fmt(p.amplitude);
    y << YAML::Key << "center" << YAML::Value << YAML::Flow << YAML::BeginSeq << fmt(p.center(0)) << fmt(p.center(1))
      << fmt(p.center(2)) << YAML::EndSeq;
    y << YAML::Key << "radius" << YAML::Value << fmt(p.radius) << YAML::Key << "power" << YAML::Value << p.power;
    y << YAML::Key << "width" << YAML::Value << fmt(p.width);
    y << YAML::EndMap;
  }
  y << YAML::EndSeq;
  y << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "cadence" << YAML::Value << cfg.cadence;
  y << YAML::Key << "multi" << YAML::Value << YAML::Flow << cfg.multi;
  y << YAML::Key << "curved" << YAML::Value << cfg.curved << YAML::EndMap;
  y << YAML::Key << "snapshots" << YAML::Value << YAML::BeginMap << YAML::Key << "enabled" << YAML::Value
    << cfg.snapshots << YAML::Key << "every" << YAML::Value << cfg.snapshot_every << YAML::EndMap;
  y << YAML::Key << "verify" << YAML::Value << YAML::Flow << cfg.verify;
  y << YAML::Key << "seed" << YAML::Value << cfg.seed;
  y << YAML::Key << "threads" << YAML::Value << cfg.threads;
  y << YAML::Key << "out" << YAML::Value << cfg.out.string();
  y << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// csv

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("csv: no column '" + name + "'");
  return int(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_csv(const fs::path& path, const CsvTable& t) {
  std::string s;
  for (std::size_t c = 0; c < t.header.size(); ++c) s += (c ? "," : "") + t.header[c];
  s += "\n";
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw std::invalid_argument("csv: row width does not match the header");
    for (std::size_t c = 0; c < r.size(); ++c) s += (c ? "," : "") + fmt(r[c]);
    s += "\n";
  }
  write_text(path, s);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  CsvTable t;
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header row");
  ++lineno;
  t.header = split(line);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError(path.string(), lineno, "expected " + std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0') throw ParseError(t.header[c], lineno, "not a number: '" + cells[c] + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable energy_table(const RunRecord& rec) {
  CsvTable t;
  t.header = {"s", "step"};
  for (const auto& c : rec.components) t.header.push_back("E_" + c);
  for (const auto& c : rec.components)
    for (const auto& m : rec.multi_names) t.header.push_back("EZ_" + c + "_" + m);
  for (const char* k : {"curved", "coercive", "flux_integral", "identity_residual"}) t.header.push_back(k);
  for (const auto& r : rec.reports) {
    std::vector<double> row{r.s, double(r.step)};
    for (double e : r.energy) row.push_back(e);
    for (std::size_t c = 0; c < rec.components.size(); ++c)
      for (std::size_t m = 0; m < rec.multi_names.size(); ++m)
        row.push_back(c < r.zi_energy.size() && m < r.zi_energy[c].size() ? r.zi_energy[c][m] : 0.0);
    row.insert(row.end(), {r.curved, r.coercive ? 1.0 : 0.0, r.flux_integral, r.identity_residual});
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable monitor_table(const RunRecord& rec) {
  CsvTable t;
  t.header = {"s", "step"};
  for (const char* k : {"value", "gradient", "frame", "radial"})
    for (const auto& c : rec.components) t.header.push_back(std::string(k) + "_" + c);
  for (const auto& r : rec.reports) {
    std::vector<double> row{r.s, double(r.step)};
    for (const auto* v : {&r.monitors.value, &r.monitors.gradient, &r.monitors.frame, &r.monitors.radial})
      row.insert(row.end(), v->begin(), v->end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// snapshots

namespace {

fs::path with_suffix(fs::path stem, const char* ext) { return stem.replace_extension(ext); }

void put_le(std::ofstream& out, const Field& f) {
  static_assert(sizeof(double) == 8);
  std::vector<unsigned char> buf(f.size() * 8);
  for (Eigen::Index q = 0; q < f.size(); ++q) {
    std::uint64_t bits;
    const double v = f(q);
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) buf[q * 8 + b] = (unsigned char)(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

Field get_le(std::ifstream& in, Eigen::Index n) {
  std::vector<unsigned char> buf(n * 8);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (in.gcount() != std::streamsize(buf.size())) throw std::runtime_error("snapshot: binary payload truncated");
  Field f(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(buf[q * 8 + b]) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    f(q) = v;
  }
  return f;
}

}  // namespace

void write_snapshot(const fs::path& stem, const GridSlice& sl) {
  const Lattice& g = sl.lattice;
  std::ostringstream h;
  h << "# hyperlab snapshot\n";
  h << "format = float64-le\n";
  h << "s = " << fmt(sl.s) << "\n";
  h << "h = " << fmt(g.h()) << "\n";
  h << "half_width = " << fmt(g.half_width) << "\n";
  h << "cells = " << g.cells << "\n";
  h << "dims = " << g.n() << " " << g.n() << " " << g.n() << "\n";
  h << "order = i-major, k fastest\n";
  h << "mask_radius = " << fmt(sl.mask_radius) << "\n";
  h << "components =";
  for (const auto& n : sl.names) h << " " << n;
  h << "\n";
  h << "fields = w d_s\n";
  h << "layout = for each component: w then d_s\n";
  write_text(with_suffix(stem, ".hdr"), h.str());
  std::ofstream out(with_suffix(stem, ".bin"), std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write snapshot " + stem.string());
  for (int c = 0; c < sl.components(); ++c) {
    put_le(out, sl.w[c]);
    put_le(out, sl.d_s[c]);
  }
}

GridSlice read_snapshot(const fs::path& stem) {
  std::ifstream in(with_suffix(stem, ".hdr"));
  if (!in) throw ParseError(with_suffix(stem, ".hdr").string(), 0, "cannot open snapshot header");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("snapshot header", lineno, "expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(' '), b = s.find_last_not_of(' ');
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* k : {"format", "s", "half_width", "cells", "mask_radius", "components"})
    if (!kv.count(k)) throw ParseError(k, 0, "snapshot header lacks this key");
  if (kv["format"] != "float64-le") throw ParseError("format", 0, "unsupported snapshot format " + kv["format"]);
  GridSlice sl;
  sl.s = std::stod(kv["s"]);
  sl.lattice = Lattice(std::stoi(kv["cells"]), std::stod(kv["half_width"]));
  sl.mask_radius = std::stod(kv["mask_radius"]);
  std::istringstream names(kv["components"]);
  for (std::string n; names >> n;) sl.names.push_back(n);
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw ParseError(with_suffix(stem, ".bin").string(), 0, "cannot open snapshot payload");
  for (std::size_t c = 0; c < sl.names.size(); ++c) {
    sl.w.push_back(get_le(bin, sl.lattice.size()));
    sl.d_s.push_back(get_le(bin, sl.lattice.size()));
  }
  if (bin.peek() != std::char_traits<char>::eof()) throw std::runtime_error("snapshot: trailing bytes in payload");
  sl.refresh_time_cofield();
  return sl;
}

}  // namespace hyperlab
