#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace hcrep::cli {

namespace {

/// Reads one JSON object and remembers which keys were consumed, so that
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool present() const { return j_ != nullptr; }
  bool has(const char* key) const { return j_ && j_->contains(key) && !(*j_)[key].is_null(); }

  const json& raw(const char* key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError("missing required key '" + where(key) + "'");
    return (*j_)[key];
  }

  Section child(const char* key) {
    used_.insert(key);
    return Section(has(key) ? &(*j_)[key] : nullptr, where(key));
  }

  std::int64_t integer(const char* key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const char* key, std::int64_t def) { return has(key) ? integer(key) : (used_.insert(key), def); }

  std::uint64_t seed(const char* key) {
    if (!has(key)) {
      used_.insert(key);
      return 0;
    }
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where(key) + ": expected a non-negative integer seed");
  }

  double real(const char* key, double def) {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  std::optional<double> opt_real(const char* key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    return real(key, 0);
  }

  bool boolean(const char* key, bool def) {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& def) {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  Ratio ratio(const char* key) { return to_ratio(raw(key), where(key)); }
  Ratio ratio(const char* key, Ratio def) { return has(key) ? ratio(key) : (used_.insert(key), def); }

  std::optional<ConceptId> concept_id(const char* key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      throw ConfigError(where(key) + ": expected [level, index]");
    return ConceptId{v[0].get<int>(), v[1].get<std::int64_t>()};
  }

  std::vector<std::int64_t> int_list(const char* key) {
    std::vector<std::int64_t> out;
    if (!has(key)) {
      used_.insert(key);
      return out;
    }
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected a list");
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ConfigError(where(key) + ": expected integers");
      out.push_back(x.get<std::int64_t>());
    }
    return out;
  }

  std::vector<Ratio> ratio_list(const char* key) {
    std::vector<Ratio> out;
    if (!has(key)) {
      used_.insert(key);
      return out;
    }
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected a list");
    for (const auto& x : v) out.push_back(to_ratio(x, where(key)));
    return out;
  }

  /// Every key must have been consumed.
  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + where(it.key().c_str()) + "'");
  }

 private:
  static Ratio to_ratio(const json& v, const std::string& at) {
    try {
      if (v.is_number_integer()) return Ratio(v.get<std::int64_t>());
      if (v.is_number()) return Ratio::from_double(v.get<double>());
      if (v.is_string()) return Ratio::parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ": " + e.what());
    }
    throw ConfigError(at + ": expected a number or a \"p/q\" string");
  }

  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E, typename F>
E parse_enum(const std::string& s, const std::string& at, F&& f) {
  try {
    return f(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(at + ": " + e.what());
  }
}

ReprKind parse_kind(const std::string& s) {
  for (const auto k : {ReprKind::HighFF, ReprKind::LowFF, ReprKind::Lateral})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown representation kind '" + s + "' (high, low, lateral)");
}

SamplingMode parse_sampling(const std::string& s) {
  if (s == to_string(SamplingMode::ExactQuota)) return SamplingMode::ExactQuota;
  if (s == to_string(SamplingMode::Bernoulli)) return SamplingMode::Bernoulli;
  throw std::invalid_argument("unknown sampling mode '" + s + "'");
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    if (!node->is_object()) throw ConfigError("override '" + assignment + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RootConfig resolve(const json& doc) {
  Section root(&doc, "");
  RootConfig cfg;

  Section h = root.child("hierarchy");
  if (!h.present()) throw ConfigError("missing required key 'hierarchy'");
  cfg.hierarchy.k = static_cast<int>(h.integer("k"));
  cfg.hierarchy.l_max = static_cast<int>(h.integer("l_max"));
  if (cfg.hierarchy.k < 1 || cfg.hierarchy.l_max < 1) throw std::invalid_argument("hierarchy: k and l_max must be >= 1");
  cfg.hierarchy.n = h.integer("n", checked_pow(cfg.hierarchy.k, cfg.hierarchy.l_max + 1));
  h.finish();

  Section c = root.child("common");
  if (!c.present()) throw ConfigError("missing required key 'common'");
  CommonParams& cp = cfg.repr.common;
  cp.k = cfg.hierarchy.k;
  cp.l_max = cfg.hierarchy.l_max;
  cp.m = c.integer("m");
  cp.q = c.ratio("q");
  cp.zeta = c.ratio("zeta");
  cp.r1 = c.ratio("r1");
  cp.r2 = c.ratio("r2");
  c.finish();

  Section cn = root.child("connectivity");
  ConnectivityParams& conn = cfg.repr.conn;
  conn.a = cn.ratio("a", Ratio(1));
  conn.a1 = cn.ratio("a1", conn.a);
  conn.a2 = cn.ratio("a2", Ratio(0));
  conn.m2 = cn.integer("m2", 0);
  conn.m1 = cn.integer("m1", cp.m - conn.m2);
  cn.finish();

  Section r = root.child("representation");
  cfg.repr.kind = parse_enum<ReprKind>(r.string("kind", "high"), "representation.kind", parse_kind);
  cfg.repr.sampling = parse_enum<SamplingMode>(r.string("sampling", "exact-quota"), "representation.sampling", parse_sampling);
  cfg.repr.p_prime = r.real("p_prime", 1.0);
  cfg.repr.max_attempts = r.integer("max_attempts", 1000);
  cfg.repr.seed = r.seed("seed");
  cfg.repr.scope = r.concept_id("scope");
  r.finish();

  Section l = root.child("learning");
  LearnConfig& lc = cfg.learn;
  lc.algorithm = parse_enum<LearnAlgorithm>(l.string("algorithm", "ff-high"), "learning.algorithm", parse_learn_algorithm);
  lc.target = l.concept_id("target");
  lc.layer_concepts = l.integer("layer_concepts", 0);
  lc.p_prime = l.real("p_prime", 1.0);
  lc.b = l.ratio("b", Ratio(1));
  lc.b1 = l.ratio("b1", Ratio(1));
  lc.t_steps = static_cast<int>(l.integer("t_steps", 1));
  lc.rho = l.real("rho", 0.1);
  lc.beta = l.real("beta", 0.1);
  lc.eta = l.real("eta", 0.05);
  lc.w0 = l.opt_real("w0");
  lc.oja = l.boolean("oja", false);
  lc.oja_max_iterations = static_cast<int>(l.integer("oja_max_iterations", 100000));
  lc.seed = l.seed("seed");
  l.finish();

  Section g = root.child("recognition");
  cfg.recognize.target = g.concept_id("target");
  cfg.recognize.bgen = parse_enum<BGen>(g.string("b_generator", "full-leaves"), "recognition.b_generator", parse_bgen);
  cfg.recognize.schedule = g.string("schedule", "default");
  if (cfg.recognize.schedule != "default" && cfg.recognize.schedule != "once" && cfg.recognize.schedule != "continuous")
    throw ConfigError("recognition.schedule: expected default, once or continuous");
  if (g.has("horizon")) cfg.recognize.horizon = static_cast<int>(g.integer("horizon"));
  else g.integer("horizon", 0);
  cfg.recognize.seed = g.seed("seed");
  g.finish();

  Section e = root.child("experiment");
  ExperimentConfig& ex = cfg.experiment;
  const std::string source = e.string("source", "build");
  if (source != "build" && source != "learn") throw ConfigError("experiment.source: expected build or learn");
  cfg.experiment_learns = source == "learn";
  ex.target = e.concept_id("target");
  ex.bgen = parse_enum<BGen>(e.string("b_generator", "minimal-r2"), "experiment.b_generator", parse_bgen);
  ex.trials = e.integer("trials", 1000);
  ex.seed = e.seed("seed");
  ex.threads = static_cast<int>(e.integer("threads", 0));
  Section s = e.child("sweep");
  ex.axes.m = s.int_list("m");
  ex.axes.q = s.ratio_list("q");
  ex.axes.zeta = s.ratio_list("zeta");
  ex.axes.a = s.ratio_list("a");
  s.finish();
  e.finish();

  Section o = root.child("output");
  cfg.output.csv = o.string("csv", "");
  cfg.output.network = o.string("network", "");
  o.finish();

  root.finish();

  // Invariants shared by every subcommand.
  cfg.hierarchy.validate();
  cp.validate();
  if (cfg.repr.kind == ReprKind::LowFF) conn.validate_low();
  if (cfg.repr.kind == ReprKind::Lateral) conn.validate(cp);
  ex.spec = cfg.repr;
  ex.n = cfg.hierarchy.n;
  if (cfg.experiment_learns) ex.learn = lc;
  ex.validate();
  return cfg;
}

json ratio_json(Ratio r) { return r.str(); }
json concept_json(ConceptId c) { return json::array({c.level, c.index}); }

json to_json(const RootConfig& cfg) {
  const auto& cp = cfg.repr.common;
  const auto& cn = cfg.repr.conn;
  const auto& lc = cfg.learn;
  const auto& ex = cfg.experiment;
  const auto opt_concept = [](const std::optional<ConceptId>& c) { return c ? concept_json(*c) : json(nullptr); };
  const auto ratios = [](const std::vector<Ratio>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back(r.str());
    return a;
  };
  json j;
  j["hierarchy"] = {{"k", cfg.hierarchy.k}, {"l_max", cfg.hierarchy.l_max}, {"n", cfg.hierarchy.n}};
  j["common"] = {{"m", cp.m}, {"q", ratio_json(cp.q)}, {"zeta", ratio_json(cp.zeta)}, {"r1", ratio_json(cp.r1)},
                 {"r2", ratio_json(cp.r2)}};
  j["connectivity"] = {{"a", ratio_json(cn.a)}, {"a1", ratio_json(cn.a1)}, {"a2", ratio_json(cn.a2)},
                       {"m1", cn.m1}, {"m2", cn.m2}};
  j["representation"] = {{"kind", to_string(cfg.repr.kind)}, {"sampling", to_string(cfg.repr.sampling)},
                         {"p_prime", cfg.repr.p_prime}, {"max_attempts", cfg.repr.max_attempts},
                         {"seed", cfg.repr.seed}, {"scope", opt_concept(cfg.repr.scope)}};
  j["learning"] = {{"algorithm", to_string(lc.algorithm)}, {"target", opt_concept(lc.target)},
                   {"layer_concepts", lc.layer_concepts}, {"p_prime", lc.p_prime}, {"b", ratio_json(lc.b)},
                   {"b1", ratio_json(lc.b1)}, {"t_steps", lc.t_steps}, {"rho", lc.rho}, {"beta", lc.beta},
                   {"eta", lc.eta}, {"w0", lc.w0 ? json(*lc.w0) : json(nullptr)}, {"oja", lc.oja},
                   {"oja_max_iterations", lc.oja_max_iterations}, {"seed", lc.seed}};
  j["recognition"] = {{"target", opt_concept(cfg.recognize.target)}, {"b_generator", to_string(cfg.recognize.bgen)},
                      {"schedule", cfg.recognize.schedule},
                      {"horizon", cfg.recognize.horizon ? json(*cfg.recognize.horizon) : json(nullptr)},
                      {"seed", cfg.recognize.seed}};
  j["experiment"] = {{"source", cfg.experiment_learns ? "learn" : "build"}, {"target", opt_concept(ex.target)},
                     {"b_generator", to_string(ex.bgen)}, {"trials", ex.trials}, {"seed", ex.seed},
                     {"threads", ex.threads},
                     {"sweep", {{"m", ex.axes.m}, {"q", ratios(ex.axes.q)}, {"zeta", ratios(ex.axes.zeta)},
                                {"a", ratios(ex.axes.a)}}}};
  j["output"] = {{"csv", cfg.output.csv}, {"network", cfg.output.network}};
  return j;
}

}  // namespace hcrep::cli
