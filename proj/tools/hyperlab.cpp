// hyperlab: analyze / evolve / verify / operators
#include <cmath>
#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "hyperlab/diagnostics.hpp"
#include "hyperlab/io.hpp"
#include "hyperlab/nullstruct.hpp"
#include "hyperlab/verify.hpp"

using namespace hyperlab;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kBreakdown = 3 };

struct Flags {
  std::string config, preset, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, order;
  std::optional<double> resolution;
  bool force = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "YAML run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "built-in system (overrides the config's system)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--threads", f.threads, "worker threads (HYPERLAB_THREADS is used when absent)")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", f.force, "evolve even when the structural checks fail");
  cmd->add_option("--resolution", f.resolution, "grid spacing on the initial slice")->check(CLI::PositiveNumber);
  cmd->add_option("--order", f.order, "stencil order")->check(CLI::IsMember({2, 4}));
}

RunConfig resolve(const Flags& f, const std::string& command) {
  RunConfig cfg = f.config.empty() ? run_config_from_yaml("command: " + command + "\n") : load_run_config(f.config);
  cfg.command = command;
  if (!f.preset.empty()) {
    try {
      cfg.solver.spec = preset_system(f.preset);
    } catch (const std::exception& e) {
      throw ParseError("--preset", 0, e.what());
    }
    // profiles written for another system may name components that no longer exist
    bool fits = true;
    for (const auto& p : cfg.solver.data) fits = fits && p.component < cfg.solver.spec.n0;
    if (!fits || f.config.empty()) cfg.solver.data = default_data(cfg.solver.spec, cfg.amplitude);
  }
  if (!f.out.empty()) cfg.out = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.order) cfg.solver.order = *f.order;
  if (f.resolution) {
    cfg.resolution = *f.resolution;
    cfg.solver.cells = cells_for_resolution(cfg.solver, cfg.resolution);
  }
  if (f.threads) cfg.threads = *f.threads;
  if (!f.threads)
    if (const char* env = std::getenv("HYPERLAB_THREADS")) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (end == env || *end || n < 1) throw ParseError("HYPERLAB_THREADS", 0, "expected a positive integer");
      cfg.threads = int(n);
    }
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const StructureReport& r) {
  json j;
  j["system"] = r.system;
  j["passed"] = r.passed();
  json conds = json::array();
  for (const auto& c : r.conditions)
    conds.push_back({{"name", c.name}, {"passed", c.passed}, {"violations", c.violations}, {"offending", c.offending}});
  j["conditions"] = conds;
  json certs = json::array();
  for (const auto& c : r.certificates)
    certs.push_back({{"form", c.label},
                     {"null", c.null},
                     {"relations", c.relations},
                     {"frame_constant", c.frame_constant},
                     {"unbounded_candidate", c.unbounded_candidate}});
  j["certificates"] = certs;
  return j;
}

void print_structure(const StructureReport& r) {
  std::printf("system %s: %s\n", r.system.c_str(), r.passed() ? "all structural checks pass" : "structural checks FAIL");
  for (const auto& c : r.conditions) {
    std::printf("  %-44s %s", c.name.c_str(), c.passed ? "pass" : "FAIL");
    if (!c.passed && !c.offending.empty()) std::printf("  (%s%s)", c.offending.front().c_str(), c.violations > 1 ? ", ..." : "");
    std::printf("\n");
  }
}

int cmd_analyze(const RunConfig& cfg) {
  const StructureReport r = check_structure(cfg.solver.spec);
  print_structure(r);
  write_json(cfg.out / "structure.json", to_json(r));
  return r.passed() ? kOk : kCheckFailed;
}

json band_json(const EnergyBand& b) {
  return {{"min_ratio", b.min_ratio}, {"max_ratio", b.max_ratio}, {"bounded", b.bounded},
          {"exits_upward", b.exits_upward}, {"monotone", b.monotone}};
}

int cmd_evolve(const RunConfig& cfg, bool force) {
  const SolverConfig& sc = cfg.solver;
  const StructureReport structure = check_structure(sc.spec);
  if (!structure.passed()) {
    print_structure(structure);
    if (!force) {
      std::fprintf(stderr, "refusing to evolve a system that fails the structural checks (use --force)\n");
      write_json(cfg.out / "structure.json", to_json(structure));
      return kCheckFailed;
    }
  }
  DiagnosticsConfig dc;
  dc.cadence = cfg.cadence;
  dc.curved = cfg.curved;
  for (const auto& m : cfg.multi) dc.multi.push_back(parse_multi_index(m));
  std::optional<GridSlice> last;
  int reports = 0;
  const fs::path snapdir = cfg.out / "snapshots";
  if (cfg.snapshots) {
    dc.on_report = [&](const GridSlice& sl) {
      if (cfg.snapshot_every > 0 && reports % cfg.snapshot_every == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "slice_%05d", reports);
        write_snapshot(snapdir / name, sl);
      }
      ++reports;
      last = sl;
    };
  }
  std::printf("evolving %s: %d^3 cells, order %d, s in [%g, %g]\n", sc.spec.name.c_str(), sc.cells, sc.order, sc.s0,
              sc.s_end);
  const auto t0 = std::chrono::steady_clock::now();
  const RunRecord rec = evolve_with_diagnostics(sc, dc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cfg.snapshots && last) write_snapshot(snapdir / "final", *last);

  write_csv(cfg.out / "energy.csv", energy_table(rec));
  write_csv(cfg.out / "monitors.csv", monitor_table(rec));
  write_text(cfg.out / "config.yaml", run_config_to_yaml(cfg));

  json s;
  s["system"] = sc.spec.name;
  s["status"] = to_string(rec.status.status);
  s["message"] = rec.status.message;
  s["s_reached"] = rec.status.s_reached;
  s["steps"] = rec.status.steps;
  s["cells"] = sc.cells;
  s["order"] = sc.order;
  s["structure_passed"] = structure.passed();
  s["energy_drift"] = rec.reports.empty() ? 0.0 : rec.energy_drift();
  if (!rec.reports.empty()) s["identity_residual"] = rec.reports.back().identity_residual;
  json comps = json::array();
  for (std::size_t c = 0; c < rec.components.size(); ++c) {
    json jc;
    jc["name"] = rec.components[c];
    jc["kind"] = sc.spec.is_wave(int(c)) ? "wave" : "klein-gordon";
    // decay verdicts on s >= 3 (the first unit of s is transient)
    std::vector<double> ss, val, grad;
    for (const auto& r : rec.reports)
      if (r.s >= 3.0 - 1e-12) {
        ss.push_back(r.s);
        val.push_back(r.monitors.value[c]);
        grad.push_back(r.monitors.gradient[c]);
      }
    const bool kg = !sc.spec.is_wave(int(c));
    const auto& series = kg ? val : grad;
    if (series.size() >= 5 && *std::min_element(series.begin(), series.end()) > 0.0) {
      const DecayFit fit = decay_monitor(ss, series);
      jc["decay_monitor"] = kg ? "sup t^{3/2}|w|" : "sup t^{1/2} s |dw|";
      jc["decay"] = {{"ratio", fit.ratio}, {"slope", fit.slope}, {"bounded", fit.bounded}};
    }
    json bands;
    if (!rec.reports.empty() && rec.reports.front().energy[c] > 0.0)
      bands["energy"] = band_json(energy_band(rec.series([c](const EnergyReport& r) { return r.energy[c]; })));
    for (std::size_t m = 0; m < rec.multi_names.size(); ++m) {
      const auto e = rec.series([c, m](const EnergyReport& r) { return r.zi_energy[c][m]; });
      if (!e.empty() && e.front() > 0.0) bands[rec.multi_names[m]] = band_json(energy_band(e));
    }
    jc["energy_bands"] = bands;
    comps.push_back(jc);
  }
  s["components"] = comps;
  write_json(cfg.out / "summary.json", s);

  std::printf("%s at s = %.4g after %d steps (%.1f s); relative energy drift %.3e\n",
              to_string(rec.status.status).c_str(), rec.status.s_reached, rec.status.steps, secs,
              rec.reports.empty() ? 0.0 : rec.energy_drift());
  std::printf("wrote %s\n", (cfg.out / "summary.json").string().c_str());
  return rec.status.status == RunStatus::Completed ? kOk : kBreakdown;
}

json convergence_json(const ConvergenceCheck& c) {
  return {{"name", c.name}, {"cells", c.cells}, {"errors", c.errors}, {"slope", c.slope}, {"pass", c.pass}};
}

json constant_json(const ConstantReport& c) {
  return {{"name", c.name},     {"coarse", c.coarse}, {"fine", c.fine}, {"change", c.change}, {"median", c.median},
          {"worst_over_median", c.worst_over_median}, {"finite", c.finite}, {"pass", c.stable()}};
}

int cmd_verify(const RunConfig& cfg) {
  json report = json::object();
  bool ok = true;
  auto verdict = [&](const std::string& what, bool pass) {
    std::printf("  %-52s %s\n", what.c_str(), pass ? "pass" : "FAIL");
    ok = ok && pass;
  };
  const int order = cfg.solver.order;
  for (const auto& sel : cfg.verify) {
    std::printf("[%s]\n", sel.c_str());
    if (sel == "frames") {
      const auto r = frame_identity_check(10000, cfg.seed);
      report["frames"] = {{"points", r.points}, {"phi_psi", r.phi_psi}, {"metric", r.metric}};
      verdict("max |Phi Psi - I| = " + sci(r.phi_psi), r.phi_psi < 1e-12);
      verdict("max |m_up m_down - I| = " + sci(r.metric), r.metric < 1e-12);
    } else if (sel == "operators") {
      json list = json::array();
      for (const auto& [name, f] : operator_test_functions()) {
        const auto st = operator_convergence(f, 2.5, {16, 32, 64}, order);
        list.push_back({{"function", name}, {"frame", convergence_json(st.frame)}, {"semi", convergence_json(st.semi)}});
        char line[160];
        std::snprintf(line, sizeof line, "%s: slopes %.2f (s,xbar) / %.2f semi", name.c_str(), st.frame.slope,
                      st.semi.slope);
        verdict(line, st.frame.pass && st.semi.pass);
      }
      report["operators"] = list;
    } else if (sel == "inequalities") {
      TestFunctionFamily fam;
      fam.seed = cfg.seed;
      json list = json::array();
      for (const auto& c : {sobolev_family(fam, 2.5, 24), hardy_flat_family(fam, 2.5, 24),
                            hardy_hyperboloidal_family(fam, 2.0, 10.0, 9, 24)}) {
        list.push_back(constant_json(c));
        char line[160];
        std::snprintf(line, sizeof line, "%s constant %.4g -> %.4g (%.2f%%)", c.name.c_str(), c.coarse, c.fine,
                      100 * c.change);
        verdict(line, c.stable());
      }
      report["inequalities"] = list;
    } else if (sel == "homogeneity") {
      const auto pts = cone_samples(2000, cfg.seed);
      json list = json::array();
      double worst = 0.0;
      const std::vector<std::pair<std::vector<int>, std::string>> budgets{
          {{}, "id"}, {{0}, "id"}, {{1, 2}, "id"}, {{}, "L1"}, {{3}, "L2"}, {{}, "L1.L2"}, {{0}, "d1.L3"}, {{}, "L1.L2.L3"}};
      for (const auto& name : homogeneous_coefficients())
        for (const auto& [p, I] : budgets) {
          const auto h = homogeneity_check(name, p, parse_multi_index(I), pts);
          worst = std::max(worst, h.rel_change);
          list.push_back({{"coefficient", name}, {"partials", p}, {"fields", I}, {"constant", h.constant},
                          {"rel_change", h.rel_change}});
        }
      double xi = 0.0;
      for (const auto& I : multi_indices_up_to(2)) xi = std::max(xi, xi_bound(I, pts));
      report["homogeneity"] = {{"checks", list}, {"worst_rel_change", worst}, {"xi_bound", xi}};
      verdict("rescaling invariance, worst " + sci(worst), worst < 1e-9);
      verdict("(t/s) Z^I (s/t), |I| <= 2, bounded: " + std::to_string(xi), std::isfinite(xi));
    } else if (sel == "commutators") {
      const auto rep = commutator_table_check(100, cfg.seed, order);
      json ex = json::array(), dis = json::array();
      for (const auto& c : rep.exact) {
        ex.push_back({{"identity", c.name}, {"checked", c.checked}, {"failures", c.failures}});
        verdict("exact: " + c.name.substr(0, c.name.find(' ')) + " (" + std::to_string(c.checked) + " checks)", c.failures == 0);
      }
      for (const auto& c : rep.discrete) {
        dis.push_back(convergence_json(c));
        char line[160];
        std::snprintf(line, sizeof line, "%s slope %.2f", c.name.c_str(), c.slope);
        verdict(line, c.pass);
      }
      report["commutators"] = {{"exact", ex}, {"discrete", dis}};
    } else {
      throw ParseError("verify", 0, "unknown selection '" + sel + "'");
    }
  }
  report["passed"] = ok;
  write_json(cfg.out / "verify.json", report);
  std::printf("%s\n", ok ? "all checks pass" : "some checks FAILED");
  return ok ? kOk : kCheckFailed;
}

int cmd_operators(const RunConfig& cfg) {
  // resolutions N/4, N/2, N over the same box; --resolution is the finest spacing on [-2, 2]^3
  int n = cfg.resolution > 0 ? int(std::lround(4.0 / cfg.resolution)) : cfg.solver.cells;
  n = std::max(64, n - n % 4);
  const std::vector<int> cells{n / 4, n / 2, n};
  CsvTable t;
  t.header = {"function", "cells", "frame_error", "semi_error"};
  bool ok = true;
  int fid = 0;
  std::printf("%-26s %8s %14s %14s\n", "function", "cells", "(s,xbar) err", "semi err");
  for (const auto& [name, f] : operator_test_functions()) {
    const auto st = operator_convergence(f, 2.5, cells, cfg.solver.order);
    for (std::size_t q = 0; q < cells.size(); ++q) {
      t.rows.push_back({double(fid), double(cells[q]), st.frame.errors[q], st.semi.errors[q]});
      std::printf("%-26s %8d %14.4e %14.4e\n", name.c_str(), cells[q], st.frame.errors[q], st.semi.errors[q]);
    }
    std::printf("%-26s %8s %14.2f %14.2f\n", "", "slope", st.frame.slope, st.semi.slope);
    ok = ok && st.frame.pass && st.semi.pass;
    ++fid;
  }
  write_csv(cfg.out / "operators.csv", t);
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperlab: wave / Klein-Gordon systems on hyperboloidal slices"};
  app.require_subcommand(1);
  Flags flags;
  auto* analyze = app.add_subcommand("analyze", "structural checks of a system (symmetry, null and related conditions)");
  auto* evolve = app.add_subcommand("evolve", "evolve on H_s and record energies and decay monitors");
  auto* verify = app.add_subcommand("verify", "identity, operator and inequality checks");
  auto* operators = app.add_subcommand("operators", "convergence table of the two wave-operator decompositions");
  std::vector<std::string> select;
  for (auto* c : {analyze, evolve, verify, operators}) add_common(c, flags);
  verify->add_option("--select", select, "frames, operators, inequalities, homogeneity, commutators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    const std::string command = analyze->parsed() ? "analyze" : evolve->parsed() ? "evolve" : verify->parsed() ? "verify" : "operators";
    RunConfig cfg = resolve(flags, command);
    if (!select.empty()) cfg.verify = select;
    if (command == "analyze") return cmd_analyze(cfg);
    if (command == "evolve") return cmd_evolve(cfg, flags.force);
    if (command == "verify") return cmd_verify(cfg);
    return cmd_operators(cfg);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const QuasilinearBreakdown& e) {
    std::fprintf(stderr, "breakdown: %s\n", e.what());
    return kBreakdown;
  } catch (const InstabilityDetected& e) {
    std::fprintf(stderr, "instability: %s\n", e.what());
    return kBreakdown;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
