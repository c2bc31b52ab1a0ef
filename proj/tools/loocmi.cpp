// loocmi: command-line front end for the exact leave-one-out CMI engines.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loocmi/bounds.hpp"
#include "loocmi/errors.hpp"
#include "loocmi/experiment.hpp"
#include "loocmi/learners.hpp"
#include "loocmi/oig.hpp"

namespace fs = std::filesystem;
using namespace loocmi;

namespace {

struct Common {
  std::string config;
  std::string mode;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  std::string out;
  std::string format = "json";
  bool bits = false;
  bool timing = false;
  bool serial = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "config file (JSON)");
  if (config_required) opt->required();
  sub->add_option("--mode", c.mode, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  sub->add_option("--samples", c.samples, "Monte-Carlo sample count");
  sub->add_option("--seed", c.seed, "Monte-Carlo seed");
  sub->add_option("--budget", c.budget, "maximum enumeration terms");
  sub->add_option("--out", c.out, "write output here instead of stdout");
  sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--bits", c.bits, "report information in bits");
  sub->add_flag("--timing", c.timing, "include wall-clock time in reports");
  sub->add_flag("--serial", c.serial, "use the serial reference kernels");
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read " + path});
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

void apply_overrides(Json& doc, const Common& c) {
  if (!c.mode.empty()) doc["mode"] = c.mode;
  if (c.samples != 0) doc["samples"] = c.samples;
  if (c.seed) doc["seed"] = *c.seed;
  if (c.budget) doc["budget"] = *c.budget;
}

RunOptions run_options(const Common& c) {
  RunOptions o;
  o.exec = c.serial ? Exec::serial : Exec::parallel;
  o.bits = c.bits;
  o.timing = c.timing;
  return o;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out, std::ios::binary);
  if (!out) throw ConfigError({"cannot write " + c.out});
  out << text;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + csv_field(cells[i]);
  return line + "\r\n";
}

std::string num(const Json& v) {
  if (v.is_number()) return format_sig12(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  return "";
}

const std::vector<std::string> kBoundColumns = {"config",    "fingerprint", "theorem", "claim",
                                                "lhs",       "rhs",         "slack",   "tolerance",
                                                "identity",  "skipped",     "pass",    "note"};

void bound_rows(const Json& report, std::string& csv) {
  for (const auto& b : report["bounds"]) {
    csv += csv_line({report.value("name", ""), report.value("fingerprint", ""), num(b["theorem"]),
                     num(b["claim"]), num(b.value("lhs", Json())), num(b.value("rhs", Json())),
                     num(b.value("slack", Json())), num(b.value("tolerance", Json())),
                     num(b.value("identity", Json())), num(b["skipped"]), num(b["pass"]),
                     num(b.value("note", Json()))});
  }
}

std::string measure_csv(const Json& report) {
  std::vector<std::string> header = {"name", "fingerprint", "mode", "n"};
  std::vector<std::string> row = {report.value("name", ""), report["fingerprint"], report["mode"],
                                  report["n"].dump()};
  for (const auto& m : known_measures()) {
    header.push_back(m);
    row.push_back(report["measures"].contains(m) ? num(report["measures"][m]) : "");
  }
  header.push_back("loo_ecmi_stderr");
  row.push_back(report.contains("mc") ? num(report["mc"]["stderr"]) : "");
  header.push_back("failures");
  row.push_back(report["failures"].dump());
  return csv_line(header) + csv_line(row);
}

int cmd_measure(const Common& c) {
  Json doc = read_json(c.config);
  apply_overrides(doc, c);
  const auto config = parse_config(doc);
  const auto result = run(config, run_options(c));
  emit(c, c.format == "csv" ? measure_csv(result.report) : result.report.dump(2) + "\n");
  return result.failures == 0 ? 0 : 1;
}

std::vector<std::string> corpus_files(const std::string& path) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty()) throw ConfigError({"no configs found in " + path});
  return files;
}

Json counterexample_report(const std::vector<LabeledExample>& z, std::size_t m) {
  const auto domain = std::make_shared<const FiniteDomain>(FiniteDomain::integer_range(m));
  const Fig1ThresholdLearner learner(domain);
  const auto r = counterexample_fig1(learner, LossFunction{}, z);
  Json j;
  j["name"] = "fig1_counterexample";
  Json pts = Json::array();
  for (const auto& e : r.supersample) pts.push_back({domain->coordinate(e.input), e.label});
  j["supersample"] = pts;
  j["posterior"] = r.posterior;
  j["prob_all_zero"] = r.prob_all_zero;
  j["conditional_entropy"] = r.conditional_entropy;
  j["log_n_plus_1"] = r.log_n_plus_1;
  j["flagged_index"] = r.flagged_index;
  j["posterior_zero_at_flagged"] = r.posterior_zero_at_flagged;
  j["entropy_below_log"] = r.entropy_below_log;
  j["pass"] = r.pass();
  return j;
}

std::vector<LabeledExample> preset_supersample() {
  return {{0, 1}, {1, 1}, {2, 1}, {3, 0}, {4, 0}};
}

int cmd_verify(const Common& c) {
  const auto files = corpus_files(c.config.empty() ? "configs/corpus" : c.config);
  const auto options = run_options(c);
  Json reports = Json::array();
  std::size_t checks = 0, failures = 0, skipped = 0, errors = 0;
  std::string csv = csv_line(kBoundColumns);
  for (const auto& file : files) {
    try {
      Json doc = read_json(file);
      apply_overrides(doc, c);
      const auto config = parse_config(doc);
      auto result = run(config, options);
      result.report["config"] = fs::path(file).filename().string();
      checks += result.checks;
      failures += result.failures;
      skipped += result.skipped;
      bound_rows(result.report, csv);
      reports.push_back(std::move(result.report));
    } catch (const std::exception& e) {
      ++errors;
      reports.push_back({{"config", fs::path(file).filename().string()}, {"error", e.what()}});
      csv += csv_line({fs::path(file).filename().string(), "", "error", e.what(), "", "", "", "",
                       "", "false", "false", ""});
    }
  }
  const auto cx = counterexample_report(preset_supersample(), 5);
  ++checks;
  if (!cx["pass"].get<bool>()) ++failures;
  csv += csv_line({"fig1_counterexample", "", "counterexample",
                   "P[U=3 | L=0, z] = 0 and H(U | L=0, z) < ln 5",
                   num(cx["conditional_entropy"]), num(cx["log_n_plus_1"]), "", "1e-06", "false",
                   "false", num(cx["pass"]), ""});

  Json out;
  out["version"] = kVersion;
  out["schema"] = kSchemaVersion;
  out["units"] = c.bits ? "bits" : "nats";
  out["configs"] = files.size();
  out["checks"] = checks;
  out["failures"] = failures;
  out["skipped"] = skipped;
  out["errors"] = errors;
  out["pass"] = failures == 0 && errors == 0;
  out["reports"] = std::move(reports);
  out["counterexample"] = cx;
  emit(c, c.format == "csv" ? csv : out.dump(2) + "\n");
  std::cerr << "verify: " << files.size() << " configs, " << checks << " checks, " << failures
            << " failures, " << skipped << " skipped, " << errors << " errors\n";
  return failures == 0 && errors == 0 ? 0 : 1;
}

std::vector<double> parse_coords(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_oig(const Common& c, const std::string& points_text) {
  Json doc = read_json(c.config);
  apply_overrides(doc, c);
  const auto config = parse_config(doc);
  const OigLearner learner(*config.cls,
                           config.learner == "oig" && config.learner_params.contains("d")
                               ? std::optional<std::size_t>(config.learner_params["d"].get<std::size_t>())
                               : std::nullopt);
  std::vector<InputId> points;
  if (points_text.empty()) {
    if (config.n + 1 > config.domain->size()) {
      throw ConfigError({"oig: domain has fewer than n+1 points; pass --points"});
    }
    for (InputId x = 0; x <= config.n; ++x) points.push_back(x);
  } else {
    for (const double coord : parse_coords(points_text)) {
      const auto id = config.domain->find(coord);
      if (!id) throw ConfigError({"--points: " + format_sig12(coord) + " is not a domain point"});
      points.push_back(*id);
    }
  }
  const auto g = OneInclusionGraph::build(*config.cls, points);
  const auto p = orient_bounded(g, learner.d());
  const auto label_string = [&](std::size_t v) {
    std::string s;
    for (std::size_t i = 0; i < g.points().size(); ++i) s += g.label(v, i) == 1.0 ? '1' : '0';
    return s;
  };

  Json j;
  j["version"] = kVersion;
  j["fingerprint"] = config.fingerprint;
  j["d"] = learner.d();
  Json coords = Json::array();
  for (const auto x : g.points()) coords.push_back(config.domain->coordinate(x));
  j["points"] = coords;
  Json vertices = Json::array();
  std::map<std::size_t, std::size_t> histogram;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    vertices.push_back({{"index", v},
                        {"labels", label_string(v)},
                        {"out_degree", p.out_weight(v)},
                        {"rloo", oig_loo_error(g, p, v)}});
    ++histogram[static_cast<std::size_t>(std::lround(p.out_weight(v)))];
  }
  j["vertices"] = vertices;
  Json edges = Json::array();
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges()[e];
    const bool forward = p.forward(e) == 1.0;
    edges.push_back({{"a", edge.a},
                     {"b", edge.b},
                     {"coordinate", edge.coordinate},
                     {"from", forward ? edge.a : edge.b},
                     {"to", forward ? edge.b : edge.a}});
  }
  j["edges"] = edges;
  Json hist = Json::object();
  for (const auto& [deg, count] : histogram) hist[std::to_string(deg)] = count;
  j["out_degree_histogram"] = hist;
  j["max_out_degree"] = p.max_out_weight();
  j["max_subgraph_density"] = max_subgraph_density(g).str();
  emit(c, j.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const Common& c, const std::string& grid_path) {
  Json spec = read_json(c.config);
  Json tmpl;
  Json grid;
  if (spec.contains("template")) {
    tmpl = spec["template"].is_string()
               ? read_json((fs::path(c.config).parent_path() / spec["template"].get<std::string>())
                               .string())
               : spec["template"];
    grid = spec.value("grid", Json::object());
  } else {
    tmpl = spec;
  }
  if (!grid_path.empty()) grid = read_json(grid_path);
  apply_overrides(tmpl, c);
  const auto result = sweep(tmpl, grid, run_options(c));
  emit(c, result.csv);
  std::cerr << "sweep: " << result.cells << " cells, " << result.cell_errors << " errors, "
            << result.failures << " failures\n";
  return result.cell_errors == 0 && result.failures == 0 ? 0 : 1;
}

int cmd_counterexample(const Common& c) {
  std::vector<LabeledExample> z = preset_supersample();
  std::size_t m = 5;
  if (!c.config.empty()) {
    const auto config = parse_config(read_json(c.config));
    const auto support = config.distribution->support();
    z.assign(support.begin(), support.end());
    std::sort(z.begin(), z.end());
    m = config.domain->size();
  }
  const auto report = counterexample_report(z, m);
  emit(c, report.dump(2) + "\n");
  return report["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact leave-one-out conditional mutual information for finite learning problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common measure_opts, verify_opts, oig_opts, sweep_opts, cx_opts;
  std::string points, grid;
  auto* measure = app.add_subcommand("measure", "measure one config and emit a run report");
  add_common(measure, measure_opts, true);
  auto* verify = app.add_subcommand("verify", "run the theorem suite over a config or directory");
  add_common(verify, verify_opts, false);
  auto* oig = app.add_subcommand("oig", "dump a one-inclusion graph and its orientation");
  add_common(oig, oig_opts, true);
  oig->add_option("--points", points, "comma-separated point coordinates");
  auto* sw = app.add_subcommand("sweep", "run a parameter grid and emit CSV");
  add_common(sw, sweep_opts, true);
  sw->add_option("--grid", grid, "grid file (JSON object of lists)");
  auto* cx = app.add_subcommand("counterexample", "posterior of U given an all-zero loss profile");
  add_common(cx, cx_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*measure) return cmd_measure(measure_opts);
    if (*verify) return cmd_verify(verify_opts);
    if (*oig) return cmd_oig(oig_opts, points);
    if (*sw) return cmd_sweep(sweep_opts, grid);
    if (*cx) return cmd_counterexample(cx_opts);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
