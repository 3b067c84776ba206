// cutint: mesh sweeps for the cut-cell integration and unfitted FEM model
// problems, method comparison, and cut-cell dumps.

#include <cutint/cutint.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cutint;
using json = nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

// "a..b" or a single level.
std::pair<int, int> parse_levels(const std::string& s) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ConfigError("levels: expected 'a..b', got '" + s + "'");
  }
}

bool parse_bool(const std::string& key, std::string v) {
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_method(item));
  }
  return out;
}

struct Settings {
  ExperimentConfig cfg;
  std::vector<Method> methods{Method::MF, Method::MC, Method::ST, Method::LP};
};

void apply_key(Settings& s, const std::string& key, const std::string& value) {
  auto num = [&](auto& field) {
    try {
      std::size_t pos = 0;
      if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) field = std::stoi(value, &pos);
      else if constexpr (std::is_same_v<std::decay_t<decltype(field)>, std::uint64_t>) field = std::stoull(value, &pos);
      else field = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number: '" + value + "'");
    }
  };
  ExperimentConfig& c = s.cfg;
  try {
    if (key == "experiment") c.experiment = parse_experiment(value);
    else if (key == "method") c.method = parse_method(value);
    else if (key == "methods") s.methods = parse_methods(value);
    else if (key == "m") num(c.m);
    else if (key == "r") num(c.r);
    else if (key == "q") num(c.q);
    else if (key == "levels") std::tie(c.level_min, c.level_max) = parse_levels(value);
    else if (key == "h") num(c.base_h);
    else if (key == "seed") num(c.seed);
    else if (key == "band") num(c.band_factor);
    else if (key == "stabilization") c.stabilization = parse_bool(key, value);
    else if (key == "sigma") num(c.sigma);
    else if (key == "timing") c.timing = parse_bool(key, value);
    else if (key == "mc_tolerance") num(c.mc_tolerance);
    else if (key == "budget") num(c.eval_budget);
    else if (key == "out") c.out = value;
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void load_config(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string t = trim(text);
  if (!t.empty() && t[0] == '{') {
    json j;
    try {
      j = json::parse(t);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string v;
      if (it->is_string()) v = it->get<std::string>();
      else if (it->is_array()) {
        for (const auto& x : *it) v += (v.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      } else v = it->dump();
      apply_key(s, it.key(), v);
    }
    return;
  }
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_key(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string levels_str(const ExperimentConfig& c) {
  return std::to_string(c.effective_level_min()) + ".." + std::to_string(c.effective_level_max());
}

json config_json(const Settings& s) {
  const ExperimentConfig& c = s.cfg;
  json methods = json::array();
  for (Method m : s.methods) methods.push_back(to_string(m));
  return {{"experiment", to_string(c.experiment)},
          {"method", to_string(c.method)},
          {"methods", methods},
          {"m", c.effective_m()},
          {"r", c.r},
          {"q", c.effective_q()},
          {"levels", levels_str(c)},
          {"h", c.effective_base_h()},
          {"seed", c.seed},
          {"band", c.band_factor},
          {"stabilization", c.stabilization},
          {"sigma", c.sigma},
          {"timing", c.timing},
          {"mc_tolerance", c.mc_tolerance},
          {"budget", c.eval_budget},
          {"out", c.out}};
}

void print_defaults(std::ostream& os) {
  Settings s;
  os << "# cutint configuration keys and defaults (key = value; '#' starts a comment; JSON also accepted)\n";
  os << "experiment = integrate-annulus   # integrate-annulus | poisson-disc | laplace-beltrami-circle\n";
  os << "method = LP                      # MF | MC | ST | LP\n";
  os << "methods = MF,MC,ST,LP            # compare only\n";
  os << "m = 0                            # target local order; 0: 4 for integration, min(q,r)+2 otherwise\n";
  os << "r = " << s.cfg.r << "                            # finite element degree 1..3\n";
  os << "q = 0                            # level-set interpolation degree; 0 means r\n";
  os << "levels = -1..-1                  # mesh levels i, h = base_h * 2^-i; -1 uses 0..4 / 0..5 / 1..6\n";
  os << "h = 0                            # base mesh size; 0: 0.1 for integration, 0.5 otherwise\n";
  os << "seed = " << s.cfg.seed << "                         # Monte Carlo seed\n";
  os << "band = " << s.cfg.band_factor << "                         # narrow band half-width in units of h\n";
  os << "stabilization = false            # edge stabilization on faces between cut cells\n";
  os << "sigma = " << s.cfg.sigma << "                        # stabilization weight\n";
  os << "timing = true                    # false writes 0 seconds for byte-identical reruns\n";
  os << "mc_tolerance = " << s.cfg.mc_tolerance << "               # MC standard-error target in units of h^m max|f|\n";
  os << "budget = 1e8                     # compare: stop a method once the predicted eval count exceeds this\n";
  os << "out = " << s.cfg.out << "                        # output directory\n";
}

void print_record(const std::string& tag, const std::vector<std::string>& names, const LevelRecord& r) {
  std::printf("%s level %d h=%.6g", tag.c_str(), r.level, r.h);
  if (r.ok)
    for (std::size_t k = 0; k < r.metrics.size() && k < names.size(); ++k)
      std::printf(" %s=%.4e", names[k].c_str(), r.metrics[k]);
  std::printf(" evals=%zu cut=%zu %.2fs", r.evals_total, r.evals_cut, r.seconds);
  if (!r.ok) std::printf(" FAILED: %s", r.note.c_str());
  else if (!r.note.empty()) std::printf(" [%s]", r.note.c_str());
  std::printf("\n");
  std::fflush(stdout);
}

json records_json(const ConvergenceReport& rep) {
  json out = json::array();
  for (const auto& r : rep.records) {
    json m = json::object();
    for (std::size_t k = 0; k < r.metrics.size() && k < rep.metric_names.size(); ++k)
      m[rep.metric_names[k]] = std::isfinite(r.metrics[k]) ? json(r.metrics[k]) : json(nullptr);
    out.push_back({{"level", r.level},
                   {"h", r.h},
                   {"ok", r.ok},
                   {"metrics", m},
                   {"evals_total", r.evals_total},
                   {"evals_cut", r.evals_cut},
                   {"note", r.note}});
  }
  return out;
}

json fits_json(const ConvergenceReport& rep) {
  json out = json::object();
  for (std::size_t k = 0; k < rep.metric_names.size(); ++k) {
    RateFit f = rep.fit(k);
    out[rep.metric_names[k]] = {{"slope", f.slope ? json(*f.slope) : json(nullptr)},
                                {"points", f.points},
                                {"notices", f.notices}};
  }
  return out;
}

json provenance(const Settings& s, const std::string& command) {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  json p = {{"command", command},
            {"config", config_json(s)},
            {"versions", {{"cutint", CUTINT_VERSION}, {"eigen", eigen}, {"compiler", __VERSION__}}}};
  if (s.cfg.experiment == Experiment::integrate_annulus || command == "integrate") {
    p["annulus_reference"] = annulus_reference();
    p["annulus_quarter_closed_form"] = AnnulusProblem{}.quarter_closed_form();
  }
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out: cannot write '" + path.string() + "'");
  out << text;
}

std::vector<int> guide_slopes(const ExperimentConfig& c) {
  if (c.experiment == Experiment::integrate_annulus) return {c.effective_m() - 1};
  return {c.r + 1, c.r};
}

int run_sweep(const Settings& s, const std::string& command) {
  const ExperimentConfig& c = s.cfg;
  c.validate();
  fs::create_directories(c.out);
  if (c.experiment == Experiment::integrate_annulus)
    std::printf("reference %.15g (untruncated quarter %.15g)\n", annulus_reference(),
                AnnulusProblem{}.quarter_closed_form());
  ConvergenceReport rep = run(c, [&](const LevelRecord& r) {
    print_record(to_string(c.method), metric_names(c.experiment), r);
  });
  std::ostringstream csv;
  write_csv(csv, rep, c.timing);
  write_file(fs::path(c.out) / "report.csv", csv.str());
  std::vector<SvgSeries> series;
  for (std::size_t k = 0; k < rep.metric_names.size(); ++k)
    series.push_back({rep.metric_names[k], rep.hs(), rep.metric(k)});
  std::ostringstream svg;
  write_svg(svg, series, guide_slopes(c), std::string(to_string(c.experiment)) + " " + to_string(c.method));
  write_file(fs::path(c.out) / "report.svg", svg.str());
  json p = provenance(s, command);
  p["records"] = records_json(rep);
  p["fits"] = fits_json(rep);
  write_file(fs::path(c.out) / "provenance.json", p.dump(2) + "\n");
  bool failed = false;
  for (std::size_t k = 0; k < rep.metric_names.size(); ++k) {
    RateFit f = rep.fit(k);
    if (f.slope) std::printf("%s fitted slope %.3f\n", rep.metric_names[k].c_str(), *f.slope);
    for (const auto& n : f.notices) std::printf("notice: %s\n", n.c_str());
  }
  for (const auto& r : rep.records) failed |= !r.ok;
  std::printf("wrote %s\n", (fs::path(c.out) / "report.csv").string().c_str());
  return failed ? 3 : 0;
}

int run_compare(const Settings& s) {
  const ExperimentConfig& c = s.cfg;
  c.validate();
  fs::create_directories(c.out);
  const auto names = metric_names(c.experiment);
  Comparison cmp = compare(s.methods, c, [&](Method m, const LevelRecord& r) { print_record(to_string(m), names, r); });
  // Merged table: error and rate per method, then eval counts per method.
  std::ostringstream csv;
  csv << "h";
  for (Method m : cmp.methods) csv << ',' << to_string(m) << "_error," << to_string(m) << "_rate";
  for (Method m : cmp.methods) csv << ',' << to_string(m) << "_evals";
  csv << "\n";
  std::vector<RateFit> fits;
  for (const auto& rep : cmp.reports) fits.push_back(rep.fit(0));
  bool failed = false;
  for (std::size_t i = 0; i < cmp.hs.size(); ++i) {
    csv << detail::fmt("%.10g", cmp.hs[i]);
    for (std::size_t k = 0; k < cmp.reports.size(); ++k) {
      const auto& rep = cmp.reports[k];
      if (i < rep.records.size() && rep.records[i].ok) {
        csv << ',' << detail::fmt_metric(rep.records[i].metrics[0]) << ','
            << (i > 0 ? detail::fmt_opt(fits[k].step_rates[i - 1]) : "");
      } else {
        csv << ",,";
      }
    }
    for (const auto& rep : cmp.reports) {
      csv << ',';
      if (i < rep.records.size() && rep.records[i].ok) csv << rep.records[i].evals_total;
    }
    csv << "\n";
  }
  write_file(fs::path(c.out) / "compare.csv", csv.str());
  std::vector<SvgSeries> series;
  json p = provenance(s, "compare");
  p["reports"] = json::object();
  for (std::size_t k = 0; k < cmp.reports.size(); ++k) {
    const auto& rep = cmp.reports[k];
    std::ostringstream one;
    write_csv(one, rep, c.timing);
    write_file(fs::path(c.out) / ("report_" + std::string(to_string(cmp.methods[k])) + ".csv"), one.str());
    series.push_back({rep.label, rep.hs(), rep.metric(0)});
    p["reports"][rep.label] = {{"records", records_json(rep)}, {"fits", fits_json(rep)}};
    for (const auto& r : rep.records) failed |= !r.ok;
  }
  std::ostringstream svg;
  write_svg(svg, series, guide_slopes(c), std::string("compare ") + to_string(c.experiment));
  write_file(fs::path(c.out) / "compare.svg", svg.str());
  write_file(fs::path(c.out) / "provenance.json", p.dump(2) + "\n");
  std::printf("wrote %s\n", (fs::path(c.out) / "compare.csv").string().c_str());
  return failed ? 3 : 0;
}

struct DumpOptions {
  std::string shape = "circle";
  double h = 0.1;
  int cell = -1;
  int q = 0;
};

int run_dump(const Settings& s, const DumpOptions& d) {
  const ExperimentConfig& c = s.cfg;
  fs::create_directories(c.out);
  Rect bulk = d.shape == "annulus" ? Rect{0.0, 1.0, 0.0, 1.0} : Rect{-1.5, 1.5, -1.5, 1.5};
  if (d.shape != "annulus" && d.shape != "circle") throw ConfigError("shape: expected circle or annulus");
  if (!(d.h > 0.0)) throw ConfigError("h: must be positive");
  Mesh mesh = build_uniform(bulk, d.h);
  auto dump = [&](const auto& field) {
    CellClassification cls = classify(mesh, field, 0.0);
    if (cls.cut_cells.empty()) throw ConfigError("cell: the mesh has no cut cells");
    int cell = d.cell < 0 ? cls.cut_cells.front() : d.cell;
    if (cell >= static_cast<int>(mesh.num_cells())) throw ConfigError("cell: id out of range");
    if (cls.tags[cell] != CellTag::cut) throw ConfigError("cell: " + std::to_string(cell) + " is not a cut cell");
    const auto& local = restrict_to_cell(field, mesh, cell);
    CutCellGeometry g = build_cut_geometry(mesh, cell, field, cls.levels[0].cut);
    CutRuleOptions o;
    o.method = c.method;
    o.m = c.effective_m();
    o.seed = c.seed;
    o.h = mesh.h;
    o.mc_tolerance = c.mc_tolerance;
    CutRule rule = build_cut_rule(g, local, o);
    std::ostringstream txt, svg;
    write_cell_text(txt, g, rule);
    write_cell_svg(svg, g, rule, local);
    const std::string stem = "cell_" + std::to_string(cell);
    write_file(fs::path(c.out) / (stem + ".txt"), txt.str());
    write_file(fs::path(c.out) / (stem + ".svg"), svg.str());
    std::printf("cell %d: %zu nodes, weight sum %.15g; wrote %s.{txt,svg}\n", cell, rule.nodes.size(),
                rule.sum_weights(), (fs::path(c.out) / stem).string().c_str());
  };
  if (d.shape == "annulus") {
    dump(AnnulusLevelSet(1.0, 0.1));
  } else if (d.q > 0) {
    dump(interpolate(CircleLevelSet(1.0), mesh, d.q));
  } else {
    dump(CircleLevelSet(1.0));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cut-cell quadrature and unfitted finite element sweeps"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  app.set_version_flag("--version", CUTINT_VERSION);

  Settings s;
  std::string config_path;
  std::map<std::string, std::string> flags;
  bool no_timing = false, stabilization = false;
  DumpOptions dump;

  auto add_common = [&](CLI::App* sub, bool fem) {
    sub->add_option("--config", config_path, "key = value or JSON configuration file");
    for (const char* key : {"method", "m", "levels", "h", "seed", "mc_tolerance", "out"})
      sub->add_option(std::string("--") + key, flags[key], std::string("overrides config key '") + key + "'");
    sub->add_flag("--no-timing", no_timing, "write 0 seconds (byte-identical reruns)");
    if (fem) {
      for (const char* key : {"r", "q", "band", "sigma"})
        sub->add_option(std::string("--") + key, flags[key], std::string("overrides config key '") + key + "'");
      sub->add_flag("--stabilization", stabilization, "add edge stabilization");
    }
  };
  auto* integrate = app.add_subcommand("integrate", "annulus integration sweep");
  add_common(integrate, false);
  auto* poisson = app.add_subcommand("poisson", "unfitted Poisson sweep on the unit disc");
  add_common(poisson, true);
  auto* lb = app.add_subcommand("laplace-beltrami", "narrow-band Laplace-Beltrami sweep on the unit circle");
  add_common(lb, true);
  auto* cmp = app.add_subcommand("compare", "one sweep per method, merged table");
  add_common(cmp, true);
  cmp->add_option("--experiment", flags["experiment"], "integrate-annulus | poisson-disc | laplace-beltrami-circle");
  cmp->add_option("--methods", flags["methods"], "comma-separated methods");
  cmp->add_option("--budget", flags["budget"], "eval budget per level");
  auto* defaults = app.add_subcommand("defaults", "print all configuration keys with defaults");
  auto* dumpcmd = app.add_subcommand("dump-cell", "text and SVG dump of one cut cell");
  dumpcmd->add_option("--method", flags["method"], "MF | MC | ST | LP");
  dumpcmd->add_option("--m", flags["m"], "target order");
  dumpcmd->add_option("--seed", flags["seed"], "MC seed");
  dumpcmd->add_option("--out", flags["out"], "output directory");
  dumpcmd->add_option("--shape", dump.shape, "circle | annulus");
  dumpcmd->add_option("--h", dump.h, "mesh size");
  dumpcmd->add_option("--cell", dump.cell, "cell id (default: first cut cell)");
  dumpcmd->add_option("--q", dump.q, "interpolate the circle with degree q (0: exact field)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (defaults->parsed()) {
      print_defaults(std::cout);
      return 0;
    }
    if (integrate->parsed()) s.cfg.experiment = Experiment::integrate_annulus;
    if (poisson->parsed()) s.cfg.experiment = Experiment::poisson_disc;
    if (lb->parsed()) s.cfg.experiment = Experiment::laplace_beltrami_circle;
    if (!config_path.empty()) load_config(s, config_path);
    // The subcommand fixes the experiment even if the config names another.
    if (integrate->parsed()) s.cfg.experiment = Experiment::integrate_annulus;
    if (poisson->parsed()) s.cfg.experiment = Experiment::poisson_disc;
    if (lb->parsed()) s.cfg.experiment = Experiment::laplace_beltrami_circle;
    for (const auto& [key, value] : flags)
      if (!value.empty()) apply_key(s, key, value);
    if (no_timing) s.cfg.timing = false;
    if (stabilization) s.cfg.stabilization = true;

    if (dumpcmd->parsed()) return run_dump(s, dump);
    if (cmp->parsed()) return run_compare(s);
    std::string command = integrate->parsed() ? "integrate" : poisson->parsed() ? "poisson" : "laplace-beltrami";
    return run_sweep(s, command);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 2;
    }
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
