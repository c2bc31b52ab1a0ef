#include "loocmi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "loocmi/errors.hpp"
#include "loocmi/learners.hpp"
#include "loocmi/numeric.hpp"
#include "loocmi/oig.hpp"

namespace loocmi {

namespace {

const std::set<std::string> kTopLevelKeys = {
    "name", "description", "domain", "class", "convention", "distribution", "supersample_law",
    "learner", "n", "loss", "mode", "samples", "seed", "budget", "measures", "theorems"};

const std::set<std::string> kLearners = {"fig1",       "erm",        "max_margin", "encoder",
                                         "copy_input", "always_err", "constant",   "oig"};

const std::set<std::string> kInformationMeasures = {
    "loo_ecmi", "mi_L_U", "mi_Yhat_U_given_Z", "mi_hyp_U_given_Z", "mi_hyp_S", "entropy_L"};

constexpr std::uint64_t kDefaultSamples = 100000;

// A number, or a string holding a rational / decimal literal.
std::optional<double> parse_number(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return Rational::parse(v.get<std::string>()).to_double();
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::uint64_t> parse_count(const Json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  return std::nullopt;
}

std::optional<std::string> parse_string(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return std::nullopt;
}

std::string message(const std::exception& e) { return e.what(); }

DomainPtr parse_domain(const Json& doc, std::vector<std::string>& errs) {
  if (!doc.contains("domain")) {
    errs.push_back("domain: missing");
    return nullptr;
  }
  const auto& d = doc["domain"];
  try {
    if (d.is_object() && d.contains("size")) {
      const auto m = parse_count(d["size"]);
      if (!m || *m == 0) {
        errs.push_back("domain.size: must be a positive integer");
        return nullptr;
      }
      return std::make_shared<const FiniteDomain>(FiniteDomain::integer_range(*m));
    }
    if (d.is_object() && d.contains("coords") && d["coords"].is_array()) {
      std::vector<double> coords;
      for (const auto& c : d["coords"]) {
        const auto x = parse_number(c);
        if (!x) {
          errs.push_back("domain.coords: entries must be numbers");
          return nullptr;
        }
        coords.push_back(*x);
      }
      return std::make_shared<const FiniteDomain>(std::move(coords));
    }
  } catch (const std::exception& e) {
    errs.push_back("domain: " + message(e));
    return nullptr;
  }
  errs.push_back("domain: expected {\"size\": m} or {\"coords\": [...]}");
  return nullptr;
}

std::shared_ptr<const HypothesisClass> parse_class(const Json& doc, const DomainPtr& domain,
                                                   ThresholdConvention convention,
                                                   std::vector<std::string>& errs) {
  if (!domain) return nullptr;
  const Json spec = doc.value("class", Json{{"family", "thresholds"}});
  try {
    if (spec.contains("family")) {
      const auto family = parse_string(spec["family"]).value_or("");
      if (family == "thresholds") {
        return std::make_shared<const HypothesisClass>(
            HypothesisClass::thresholds(domain, convention));
      }
      if (family == "all_labelings") {
        return std::make_shared<const HypothesisClass>(HypothesisClass::all_labelings(domain));
      }
      errs.push_back("class.family: unknown family '" + family + "'");
      return nullptr;
    }
    if (spec.contains("table") && spec["table"].is_array()) {
      std::vector<std::vector<Label>> table;
      for (const auto& row : spec["table"]) {
        std::vector<Label> r;
        for (const auto& v : row) {
          const auto x = parse_number(v);
          if (!x) {
            errs.push_back("class.table: entries must be numbers");
            return nullptr;
          }
          r.push_back(*x);
        }
        table.push_back(std::move(r));
      }
      std::vector<std::string> names;
      if (spec.contains("names")) names = spec["names"].get<std::vector<std::string>>();
      return std::make_shared<const HypothesisClass>(domain, std::move(table), std::move(names));
    }
  } catch (const std::exception& e) {
    errs.push_back("class: " + message(e));
    return nullptr;
  }
  errs.push_back("class: expected {\"family\": ...} or {\"table\": [...]}");
  return nullptr;
}

std::shared_ptr<const FiniteDistribution> parse_distribution(
    const Json& doc, const DomainPtr& domain, const std::shared_ptr<const HypothesisClass>& cls,
    std::vector<std::string>& errs) {
  if (!doc.contains("distribution")) {
    errs.push_back("distribution: missing");
    return nullptr;
  }
  if (!domain) return nullptr;
  const auto& spec = doc["distribution"];
  std::vector<LabeledExample> support;
  std::vector<double> mass;
  const std::size_t before = errs.size();

  if (spec.contains("support") && spec["support"].is_array()) {
    std::size_t i = 0;
    for (const auto& entry : spec["support"]) {
      const std::string where = "distribution.support[" + std::to_string(i++) + "]";
      if (!entry.is_array() || entry.size() != 3) {
        errs.push_back(where + ": expected [x, y, mass]");
        continue;
      }
      const auto x = parse_number(entry[0]);
      const auto y = parse_number(entry[1]);
      const auto p = parse_number(entry[2]);
      if (!x || !y || !p) {
        errs.push_back(where + ": entries must be numbers or \"a/b\" strings");
        continue;
      }
      const auto id = domain->find(*x);
      if (!id) {
        errs.push_back(where + ": x = " + format_sig12(*x) + " is not a domain point");
        continue;
      }
      if (*p < 0.0) errs.push_back(where + ": negative mass");
      support.push_back({*id, *y});
      mass.push_back(*p);
    }
  } else if (spec.contains("uniform_labels") && spec["uniform_labels"].is_array()) {
    const auto& labels = spec["uniform_labels"];
    if (labels.size() != domain->size()) {
      errs.push_back("distribution.uniform_labels: needs one label per domain point");
    } else {
      for (InputId x = 0; x < domain->size(); ++x) {
        const auto y = parse_number(labels[x]);
        if (!y) {
          errs.push_back("distribution.uniform_labels: entries must be numbers");
          break;
        }
        support.push_back({x, *y});
        mass.push_back(1.0 / static_cast<double>(domain->size()));
      }
    }
  } else if (spec.contains("target")) {
    if (!cls) return nullptr;
    std::optional<std::size_t> row;
    if (const auto idx = parse_count(spec["target"]); idx && *idx < cls->size()) {
      row = static_cast<std::size_t>(*idx);
    } else if (const auto nm = parse_string(spec["target"])) {
      for (std::size_t h = 0; h < cls->size(); ++h) {
        if (cls->name(h) == *nm) row = h;
      }
    }
    if (!row) {
      errs.push_back("distribution.target: not a hypothesis of the class");
      return nullptr;
    }
    for (InputId x = 0; x < domain->size(); ++x) {
      support.push_back({x, cls->predict(*row, x)});
      mass.push_back(1.0 / static_cast<double>(domain->size()));
    }
  } else {
    errs.push_back("distribution: expected \"support\", \"uniform_labels\" or \"target\"");
    return nullptr;
  }
  if (errs.size() != before) return nullptr;

  CompensatedSum total;
  for (const double p : mass) total.add(p);
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    errs.push_back("distribution: masses sum to " + format_sig12(total.value()) + ", expected 1");
    return nullptr;
  }
  try {
    return std::make_shared<const FiniteDistribution>(std::move(support), std::move(mass));
  } catch (const std::exception& e) {
    errs.push_back("distribution: " + message(e));
    return nullptr;
  }
}

template <class Known>
std::vector<std::string> parse_names(const Json& doc, const char* key, const Known& known,
                                     std::vector<std::string>& errs) {
  if (!doc.contains(key)) return {known.begin(), known.end()};
  std::vector<std::string> out;
  if (!doc[key].is_array()) {
    errs.push_back(std::string(key) + ": expected a list of names");
    return out;
  }
  for (const auto& v : doc[key]) {
    const auto s = parse_string(v);
    if (!s || std::find(known.begin(), known.end(), *s) == known.end()) {
      errs.push_back(std::string(key) + ": unknown entry " + v.dump());
    } else {
      out.push_back(*s);
    }
  }
  return out;
}

}  // namespace

double default_budget() {
  if (const char* env = std::getenv(kBudgetEnv)) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && v > 0.0) return v;
    throw ConfigError({std::string(kBudgetEnv) + ": expected a positive number, got '" + env + "'"});
  }
  return kDefaultBudget;
}

const std::vector<std::string>& known_measures() {
  static const std::vector<std::string> names = {
      "loo_ecmi",  "mi_L_U",         "mi_Yhat_U_given_Z", "mi_hyp_U_given_Z",
      "mi_hyp_S",  "entropy_L",      "risk",              "empirical_risk",
      "ege",       "heldout_loss",   "train_loss",        "max_rloo",
      "theta_mean"};
  return names;
}

const std::vector<std::string>& known_theorems() {
  static const std::vector<std::string> names = {"thm21", "thm23", "thm31", "cor32", "certificate",
                                                 "svm",   "thm33", "thm51", "chain", "thm41"};
  return names;
}

std::string fingerprint(const Json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

ExperimentConfig parse_config(const Json& doc, std::optional<double> fallback_budget) {
  if (!doc.is_object()) throw ConfigError({"config: expected a JSON object"});
  std::vector<std::string> errs;
  for (const auto& [k, v] : doc.items()) {
    if (!kTopLevelKeys.count(k)) errs.push_back("unknown key '" + k + "'");
  }

  ExperimentConfig c;
  c.canonical = doc;
  c.fingerprint = fingerprint(doc);
  c.name = doc.contains("name") ? parse_string(doc["name"]).value_or("") : "";

  if (doc.contains("convention")) {
    const auto s = parse_string(doc["convention"]).value_or("");
    if (s == "upper") {
      c.convention = ThresholdConvention::upper;
    } else if (s == "lower") {
      c.convention = ThresholdConvention::lower;
    } else {
      errs.push_back("convention: expected \"upper\" or \"lower\"");
    }
  }
  c.domain = parse_domain(doc, errs);
  c.cls = parse_class(doc, c.domain, c.convention, errs);
  c.distribution = parse_distribution(doc, c.domain, c.cls, errs);
  if (c.distribution && c.domain) {
    try {
      c.distribution->check_within(*c.domain);
    } catch (const std::exception& e) {
      errs.push_back("distribution: " + message(e));
    }
  }

  if (doc.contains("supersample_law")) {
    const auto s = parse_string(doc["supersample_law"]).value_or("");
    if (s == "iid") {
      c.law = SupersampleLaw::iid;
    } else if (s == "distinct") {
      c.law = SupersampleLaw::distinct;
    } else {
      errs.push_back("supersample_law: expected \"iid\" or \"distinct\"");
    }
  }

  if (!doc.contains("n")) {
    errs.push_back("n: missing");
  } else if (const auto n = parse_count(doc["n"]); !n || *n == 0) {
    errs.push_back("n: must be a positive integer");
  } else {
    c.n = static_cast<std::size_t>(*n);
  }

  if (doc.contains("loss")) {
    try {
      c.loss = LossFunction::parse(parse_string(doc["loss"]).value_or(""));
    } catch (const std::exception& e) {
      errs.push_back("loss: " + message(e));
    }
  }

  if (doc.contains("mode")) {
    const auto s = parse_string(doc["mode"]).value_or("");
    if (s == "exact") {
      c.mode = Mode::exact;
    } else if (s == "mc") {
      c.mode = Mode::mc;
    } else {
      errs.push_back("mode: expected \"exact\" or \"mc\"");
    }
  }
  if (doc.contains("seed")) {
    if (const auto s = parse_count(doc["seed"])) {
      c.seed = *s;
    } else {
      errs.push_back("seed: must be a nonnegative integer");
    }
  }
  c.samples = kDefaultSamples;
  if (doc.contains("samples")) {
    const auto s = parse_count(doc["samples"]);
    if (!s || *s < 2) {
      errs.push_back("samples: must be an integer >= 2");
    } else {
      c.samples = *s;
    }
  }
  if (c.mode == Mode::mc && !c.seed) errs.push_back("seed: required when mode is \"mc\"");

  if (doc.contains("budget")) {
    const auto b = parse_number(doc["budget"]);
    if (!b || !(*b > 0.0)) {
      errs.push_back("budget: must be a positive number");
    } else {
      c.budget = *b;
    }
  } else {
    try {
      c.budget = fallback_budget ? *fallback_budget : default_budget();
    } catch (const ConfigError& e) {
      errs.insert(errs.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!(c.budget > 0.0)) errs.push_back("budget: must be a positive number");

  c.measures = parse_names(doc, "measures", known_measures(), errs);
  c.theorems = parse_names(doc, "theorems", known_theorems(), errs);

  if (!doc.contains("learner") || !doc["learner"].is_object()) {
    errs.push_back("learner: expected an object with a \"name\"");
  } else {
    const auto name = parse_string(doc["learner"].value("name", Json())).value_or("");
    if (!kLearners.count(name)) {
      errs.push_back("learner.name: unknown learner '" + name + "'");
    } else {
      c.learner = name;
      c.learner_params = doc["learner"];
      c.learner_params.erase("name");
    }
  }

  // construct the learner once so parameter problems surface here
  if (errs.empty()) {
    try {
      make_learner(c);
    } catch (const ConfigError& e) {
      errs.insert(errs.end(), e.problems().begin(), e.problems().end());
    } catch (const std::exception& e) {
      errs.push_back("learner: " + message(e));
    }
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return c;
}

ExperimentConfig parse_config_text(std::string_view text, std::optional<double> fallback_budget) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  }
  return parse_config(doc, fallback_budget);
}

ExperimentConfig load_config(const std::string& path, std::optional<double> fallback_budget) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), fallback_budget);
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& c) {
  const auto& p = c.learner_params;
  if (c.learner == "fig1") return std::make_unique<Fig1ThresholdLearner>(c.domain);
  if (c.learner == "erm") return std::make_unique<ErmLearner>(*c.cls, c.loss);
  if (c.learner == "max_margin") return std::make_unique<MaxMarginThreshold>(c.domain, c.convention);
  if (c.learner == "copy_input") return std::make_unique<CopyInputLearner>(c.domain);
  if (c.learner == "always_err") {
    if (!c.distribution->is_function_labeled()) {
      throw ConfigError({"learner: always_err needs a function-labeled distribution"});
    }
    return std::make_unique<AlwaysErrLearner>(c.domain, *c.distribution);
  }
  if (c.learner == "constant") {
    const auto label = p.contains("label") ? parse_number(p["label"]) : std::optional<double>(0.0);
    if (!label) throw ConfigError({"learner.label: must be a number"});
    return std::make_unique<ConstantLearner>(*label);
  }
  if (c.learner == "encoder") {
    std::vector<std::string> errs;
    EncoderParams params;
    params.convention = c.convention;
    if (!p.contains("margin") || !p["margin"].is_array() || p["margin"].size() != 2) {
      errs.push_back("learner.margin: expected [low, high]");
    } else {
      const auto lo = parse_number(p["margin"][0]);
      const auto hi = parse_number(p["margin"][1]);
      if (!lo || !hi) {
        errs.push_back("learner.margin: entries must be numbers");
      } else {
        params.margin_low = *lo;
        params.margin_high = *hi;
      }
    }
    const auto res = p.contains("resolution") ? parse_number(p["resolution"]) : std::nullopt;
    if (!res) {
      errs.push_back("learner.resolution: expected a number or \"a/b\"");
    } else {
      params.resolution = *res;
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
    const auto positive = c.distribution->positive_part();
    const auto support = positive.support();
    return std::make_unique<EncoderLearner>(
        c.domain, std::vector<LabeledExample>(support.begin(), support.end()), c.n, params);
  }
  if (c.learner == "oig") {
    std::optional<std::size_t> d;
    if (p.contains("d")) {
      const auto v = parse_count(p["d"]);
      if (!v) throw ConfigError({"learner.d: must be a nonnegative integer"});
      d = static_cast<std::size_t>(*v);
    }
    return std::make_unique<OigLearner>(*c.cls, d);
  }
  throw ConfigError({"learner.name: unknown learner '" + c.learner + "'"});
}

Json to_json(const BoundReport& r) {
  Json j;
  j["theorem"] = r.theorem;
  j["claim"] = r.claim;
  j["skipped"] = r.skipped;
  j["pass"] = r.pass;
  if (!r.skipped) {
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["identity"] = r.identity;
    j["tolerance"] = r.tolerance;
  }
  j["fingerprint"] = r.fingerprint;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

namespace {

Json optional_json(const std::optional<double>& v, double scale = 1.0) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v * scale;
}

std::vector<BoundReport> theorem_reports(const std::string& id, const MeasureBundle& m,
                                         const Learner& learner) {
  if (id == "thm21") return verify_thm21(m);
  if (id == "thm23") return {verify_thm23(m)};
  if (id == "thm31") return {verify_thm31_pointwise(m)};
  if (id == "cor32") return {verify_cor32(m)};
  if (id == "certificate") return {verify_certificate_premise(m)};
  if (id == "svm") {
    if (learner.name() != "max_margin") {
      return {BoundReport::skip("svm", "support-vector bound", "learner is not max_margin")};
    }
    return {verify_support_vector_bound(m)};
  }
  if (id == "thm33") {
    auto [lo, hi] = verify_sandwich_thm33(m);
    return {lo, hi};
  }
  if (id == "thm51") return {verify_thm51(m)};
  if (id == "chain") return verify_chain(m);
  if (id == "thm41") {
    if (const auto* oig = dynamic_cast<const OigLearner*>(&learner)) return verify_thm41(m, *oig);
    return {BoundReport::skip("thm41", "one-inclusion graph bounds", "learner is not oig")};
  }
  throw InputError("unknown theorem " + id);
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto learner = make_learner(config);
  const MeasureSetting setting{*learner,   *config.distribution, config.n,
                               config.loss, config.law,           config.budget};
  const double info_scale = options.bits ? 1.0 / std::log(2.0) : 1.0;

  RunResult result;
  Json& r = result.report;
  r["version"] = kVersion;
  r["schema"] = kSchemaVersion;
  r["name"] = config.name;
  r["fingerprint"] = config.fingerprint;
  r["learner"] = config.learner;
  r["n"] = config.n;
  r["loss"] = std::string(config.loss.name());
  r["supersample_law"] = std::string(to_string(config.law));
  r["mode"] = config.mode == Mode::exact ? "exact" : "mc";
  r["units"] = options.bits ? "bits" : "nats";

  Json measures = Json::object();
  if (config.mode == Mode::mc) {
    const auto est = loo_ecmi_mc(setting, config.samples, *config.seed, options.exec);
    measures["loo_ecmi"] = est.estimate * info_scale;
    r["mc"] = {{"estimate", est.estimate * info_scale},
               {"stderr", est.standard_error * info_scale},
               {"samples", est.samples},
               {"seed", *config.seed}};
    r["budget"] = {{"limit", config.budget}, {"terms", static_cast<double>(config.samples)}};
    r["bounds"] = Json::array();
  } else {
    const auto m = compute_bundle(setting, options.exec);
    const auto& s = m.summary;
    const std::map<std::string, std::optional<double>> values = {
        {"loo_ecmi", s.loo_ecmi},
        {"mi_L_U", s.mi_L_U},
        {"mi_Yhat_U_given_Z", s.mi_Yhat_U},
        {"mi_hyp_U_given_Z", s.mi_hyp_U},
        {"mi_hyp_S", m.mi_hyp_S},
        {"entropy_L", s.entropy_L},
        {"risk", m.risk.risk},
        {"empirical_risk", m.risk.empirical_risk},
        {"ege", m.risk.ege},
        {"heldout_loss", s.heldout_loss},
        {"train_loss", s.train_loss},
        {"max_rloo", s.max_rloo},
        {"theta_mean", s.theta_mean},
    };
    for (const auto& name : config.measures) {
      const double scale = kInformationMeasures.count(name) ? info_scale : 1.0;
      measures[name] = optional_json(values.at(name), scale);
    }
    r["budget"] = {{"limit", config.budget}, {"terms", s.terms + m.risk.terms}};
    r["enumeration"] = {{"supersamples", s.supersamples},
                        {"multisets", s.multisets},
                        {"total_weight", s.total_weight},
                        {"interpolating", m.interpolating}};

    Json bounds = Json::array();
    for (const auto& id : known_theorems()) {
      if (std::find(config.theorems.begin(), config.theorems.end(), id) == config.theorems.end()) {
        continue;
      }
      for (auto& b : theorem_reports(id, m, *learner)) {
        b.fingerprint = config.fingerprint;
        ++result.checks;
        if (b.skipped) ++result.skipped;
        if (!b.pass) ++result.failures;
        bounds.push_back(to_json(b));
      }
    }
    r["bounds"] = std::move(bounds);

    const auto rate = rate_diagnostic(m);
    r["diagnostics"] = {{"rate_ratio", optional_json(rate.ratio)},
                        {"rate_constant", rate.constant},
                        {"rate_within", rate.within}};
  }
  r["measures"] = std::move(measures);
  r["checks"] = result.checks;
  r["failures"] = result.failures;
  r["skipped"] = result.skipped;
  r["pass"] = result.failures == 0;
  if (options.timing) {
    r["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return result;
}

void set_path(Json& doc, std::string_view dotted, const Json& value) {
  Json* node = &doc;
  while (true) {
    const auto dot = dotted.find('.');
    const std::string key(dotted.substr(0, dot));
    if (key.empty()) throw InputError("empty path component");
    if (dot == std::string_view::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    dotted.remove_prefix(dot + 1);
  }
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (const char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

namespace {

const std::vector<std::string> kSweepMeasures = {"loo_ecmi", "mi_L_U", "mi_Yhat_U_given_Z",
                                                 "mi_hyp_U_given_Z", "mi_hyp_S", "risk", "ege"};

std::string number_cell(const Json& v) {
  if (v.is_number()) return format_sig12(v.get<double>());
  return "";
}

std::string value_cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number()) return format_sig12(v.get<double>());
  return v.dump();
}

}  // namespace

SweepResult sweep(const Json& template_doc, const Json& grid, const RunOptions& options) {
  if (!grid.is_object()) throw ConfigError({"grid: expected an object of lists"});
  std::vector<std::string> keys;
  std::vector<std::vector<Json>> axes;
  for (const auto& [k, v] : grid.items()) {
    if (!v.is_array()) throw ConfigError({"grid." + k + ": expected a list"});
    keys.push_back(k);
    axes.emplace_back(v.begin(), v.end());
  }
  std::size_t cells = keys.empty() ? 0 : 1;
  for (const auto& a : axes) cells *= a.size();

  std::vector<std::string> header = {"cell"};
  header.insert(header.end(), keys.begin(), keys.end());
  for (const char* col : {"name", "fingerprint", "n", "mode"}) header.emplace_back(col);
  header.insert(header.end(), kSweepMeasures.begin(), kSweepMeasures.end());
  for (const char* col : {"loo_ecmi_stderr", "bound_thm21", "bound_thm23", "bound_thm41", "checks",
                          "failures", "error"}) {
    header.emplace_back(col);
  }

  std::vector<std::string> rows(cells);
  std::vector<char> errored(cells, 0);
  std::vector<std::size_t> failures(cells, 0);
  RunOptions inner = options;
  inner.exec = Exec::serial;  // cells are the parallel unit
  inner.timing = false;
  const auto n_cells = static_cast<std::int64_t>(cells);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t cell = 0; cell < n_cells; ++cell) {
    std::vector<std::string> out = {std::to_string(cell)};
    Json doc = template_doc;
    std::size_t rest = static_cast<std::size_t>(cell);
    std::vector<Json> picked(keys.size());
    for (std::size_t k = keys.size(); k-- > 0;) {
      picked[k] = axes[k][rest % axes[k].size()];
      rest /= axes[k].size();
    }
    for (std::size_t k = 0; k < keys.size(); ++k) out.push_back(csv_field(value_cell(picked[k])));
    std::string error;
    Json report;
    std::size_t checks = 0;
    std::size_t fails = 0;
    try {
      for (std::size_t k = 0; k < keys.size(); ++k) set_path(doc, keys[k], picked[k]);
      const auto config = parse_config(doc);
      auto result = run(config, inner);
      report = std::move(result.report);
      checks = result.checks;
      fails = result.failures;
      if (config.learner == "oig") {
        const auto learner = make_learner(config);
        const auto d = static_cast<const OigLearner&>(*learner).d();
        if (d >= 1 && d <= config.n) report["bound_thm41"] = bound_thm41(d, config.n);
      }
    } catch (const std::exception& e) {
      // one row per cell: fold multi-line config problems onto a single line
      error = e.what();
      for (std::size_t at; (at = error.find("\n  - ")) != std::string::npos;) error.replace(at, 5, "; ");
      std::replace(error.begin(), error.end(), '\n', ' ');
    }
    const auto cell_index = static_cast<std::size_t>(cell);
    if (!error.empty()) {
      errored[cell_index] = 1;
      for (std::size_t i = out.size(); i + 1 < header.size(); ++i) out.emplace_back();
      out.push_back(csv_field(error));
    } else {
      out.push_back(csv_field(report.value("name", "")));
      out.push_back(report["fingerprint"].get<std::string>());
      out.push_back(report["n"].dump());
      out.push_back(report["mode"].get<std::string>());
      const auto& ms = report["measures"];
      for (const auto& m : kSweepMeasures) out.push_back(ms.contains(m) ? number_cell(ms[m]) : "");
      out.push_back(report.contains("mc") ? number_cell(report["mc"]["stderr"]) : "");
      const auto n = report["n"].get<std::size_t>();
      if (ms.contains("loo_ecmi") && ms["loo_ecmi"].is_number()) {
        double loo = ms["loo_ecmi"].get<double>();
        if (options.bits) loo *= std::log(2.0);
        out.push_back(format_sig12(bound_thm21(loo, n)));
        out.push_back(format_sig12(bound_thm23(loo)));
      } else {
        out.emplace_back();
        out.emplace_back();
      }
      out.push_back(report.contains("bound_thm41") ? number_cell(report["bound_thm41"]) : "");
      out.push_back(std::to_string(checks));
      out.push_back(std::to_string(fails));
      out.emplace_back();
      failures[cell_index] = fails;
    }
    std::string line;
    for (std::size_t i = 0; i < out.size(); ++i) line += (i ? "," : "") + out[i];
    rows[cell_index] = std::move(line);
  }

  SweepResult result;
  result.cells = cells;
  for (std::size_t i = 0; i < header.size(); ++i) result.csv += (i ? "," : "") + csv_field(header[i]);
  result.csv += "\r\n";
  for (std::size_t i = 0; i < cells; ++i) {
    result.csv += rows[i] + "\r\n";
    result.cell_errors += errored[i];
    result.failures += failures[i];
  }
  return result;
}

}  // namespace loocmi
