#include "commands.hpp"

#include <fstream>
#include <ostream>

#include "hcrep/recognition.hpp"
#include "netio.hpp"

#ifndef HCREP_VERSION
#define HCREP_VERSION "unknown"
#endif

namespace hcrep::cli {

namespace {

json header(const std::string& command, const RootConfig& cfg) {
  return {{"command", command}, {"version", version()}, {"config", to_json(cfg)}};
}

std::shared_ptr<const ConceptHierarchy> hierarchy(const RootConfig& cfg) {
  return std::make_shared<const ConceptHierarchy>(cfg.hierarchy);
}

std::shared_ptr<const LayeredNetwork> network(const Options& opt, const RootConfig& cfg, std::string& source) {
  if (!opt.network.empty()) {
    source = "file:" + opt.network;
    return load_network(opt.network);
  }
  source = "build";
  return std::make_shared<const LayeredNetwork>(build(hierarchy(cfg), cfg.repr));
}

std::string target_override(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return s;
  return "[" + s.substr(0, colon) + "," + s.substr(colon + 1) + "]";
}

json bounds_json(const BoundsReport& r) {
  json levels = json::array();
  for (std::size_t l = 0; l < r.delta.size(); ++l) {
    json terms = json::array();
    for (const double t : r.terms[l].log_terms) terms.push_back(t);
    levels.push_back({{"level", l},
                      {"delta", r.delta[l]},
                      {"delta_clamped", r.delta_clamped[l]},
                      {"log_delta", r.log_delta[l]},
                      {"log_terms", terms}});
  }
  return {{"pipeline", to_string(r.pipeline)},
          {"tau", ratio_json(r.tau)},
          {"epsilon", ratio_json(r.epsilon)},
          {"firing_floor", ratio_json(r.firing_floor)},
          {"levels", levels}};
}

void bounds_table(const BoundsReport& ex, const BoundsReport& ps, std::ostream& err) {
  char line[160];
  std::snprintf(line, sizeof line, "%-5s  %-14s  %-14s  %-12s  %-12s\n", "level", "delta exact", "delta paper",
                "log exact", "log paper");
  err << to_string(ex.kind) << "  tau = " << ex.tau.str() << "  epsilon = " << ex.epsilon.str() << '\n' << line;
  for (std::size_t l = 0; l < ex.delta.size(); ++l) {
    std::snprintf(line, sizeof line, "%-5zu  %-14.6g  %-14.6g  %-12.4f  %-12.4f\n", l, ex.delta[l], ps.delta[l],
                  ex.log_delta[l], ps.log_delta[l]);
    err << line;
  }
}

std::int64_t mask_size(const FailureMask& mask) {
  std::int64_t n = 0;
  for (int l = 0; l < mask.failed.layer_count(); ++l) n += static_cast<std::int64_t>(popcount(mask.failed.layer(l)));
  return n;
}

json check_json(const LayeredNetwork& net, bool& pass) {
  json j = {{"kind", to_string(net.kind())}, {"wired_concepts", net.wired_concepts().size()}};
  if (net.topology() == Topology::FeedForward) {
    const Ratio a = net.kind() == ReprKind::HighFF ? Ratio(1) : net.connectivity().value_or(ConnectivityParams{}).a;
    const auto v = check_low_connectivity(net, a);
    pass = v.empty();
    json list = json::array();
    for (std::size_t i = 0; i < v.size() && i < 50; ++i)
      list.push_back({{"concept", concept_json(v[i].concept_id)}, {"rep", v[i].rep}, {"child", v[i].child},
                      {"count", v[i].count}, {"quota", v[i].quota}});
    j["a"] = ratio_json(a);
    j["violation_count"] = v.size();
    j["violations"] = list;
  } else {
    const auto r = check_class_assumption(net);
    pass = r.pass();
    json concepts = json::array();
    for (const auto& c : r.concepts) {
      json vs = json::array();
      for (const auto& v : c.violations)
        vs.push_back({{"rep", v.rep}, {"declared", v.declared}, {"derived", v.derived}, {"clauses", v.clauses}});
      concepts.push_back({{"concept", concept_json(c.concept_id)},
                          {"class1", c.class1.size()},
                          {"class2", c.class2.size()},
                          {"violations", vs}});
    }
    j["violation_count"] = r.violation_count();
    j["concepts"] = concepts;
  }
  j["pass"] = pass;
  return j;
}

json learn_json(const LearnReport& r) {
  json concepts = json::array();
  for (const auto& c : r.concepts)
    concepts.push_back({{"concept", concept_json(c.concept_id)},
                        {"reps", c.reps},
                        {"classes", c.classes},
                        {"child_in_degree", c.child_in_degree},
                        {"lateral_in_degree", c.lateral_in_degree},
                        {"churn", c.churn},
                        {"children_fired", c.children_fired},
                        {"per_child_ok", c.per_child_ok},
                        {"total_ok", c.total_ok},
                        {"converged", c.converged}});
  json j = {{"algorithm", to_string(r.algorithm)},
            {"target", concept_json(r.target)},
            {"learn_threshold", ratio_json(r.learn_threshold)},
            {"success", r.success},
            {"failure", r.failure},
            {"soundness_ok", r.soundness_ok},
            {"weights_binary", r.weights_binary},
            {"labels_disjoint", r.labels_disjoint},
            {"stray_edges", r.stray_edges},
            {"low_violations", r.low_violations.size()},
            {"class_violations", r.class_report ? json(r.class_report->violation_count()) : json(nullptr)},
            {"per_child_audit", r.per_child_audit},
            {"total_audit", r.total_audit},
            {"converged", r.converged},
            {"concepts", concepts}};
  return j;
}

json stats_json(const TrialStats& s) {
  json j = {{"kind", to_string(s.kind)},
            {"level", s.level},
            {"m", s.common.m},
            {"q", ratio_json(s.common.q)},
            {"zeta", ratio_json(s.common.zeta)},
            {"a", ratio_json(s.kind == ReprKind::HighFF ? Ratio(1) : s.conn.a)},
            {"b_generator", to_string(s.bgen)},
            {"trials", s.trials},
            {"failures", s.failures},
            {"rate", s.rate},
            {"ci", {s.ci.lo, s.ci.hi}},
            {"delta_exact", s.delta_exact},
            {"delta_paper_style", s.delta_paper_style},
            {"bound_satisfied", s.bound_satisfied},
            {"nonfire_violations", s.nonfire_violations},
            {"mean_fired_fraction", s.mean_fired_fraction},
            {"first_stable_time_p95", s.first_stable_time_p95 ? json(*s.first_stable_time_p95) : json(nullptr)},
            {"build", s.build}};
  if (s.kind == ReprKind::Lateral) j["m1"] = s.conn.m1, j["m2"] = s.conn.m2;
  return j;
}

}  // namespace

const char* version() { return HCREP_VERSION; }

json assemble(const Options& opt, const std::string& command) {
  json doc = opt.config.empty() ? json::object() : load_json_file(opt.config);
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  if (opt.config.empty() && !opt.network.empty()) {
    const json dump = load_json_file(opt.network);
    for (const char* key : {"hierarchy", "common", "connectivity"})
      if (dump.contains(key) && !dump[key].is_null()) doc[key] = dump[key];
    doc["representation"]["kind"] = dump.value("kind", "high");
  }
  const bool rec = command == "recognize";
  std::vector<std::string> sets;
  if (opt.kind) sets.push_back("representation.kind=" + *opt.kind);
  if (opt.target)
    sets.push_back(std::string(command == "learn" ? "learning" : command == "montecarlo" ? "experiment" : "recognition") +
                   ".target=" + target_override(*opt.target));
  if (opt.r1) sets.push_back("common.r1=" + *opt.r1);
  if (opt.r2) sets.push_back("common.r2=" + *opt.r2);
  if (opt.q) sets.push_back("common.q=" + *opt.q);
  if (opt.mode) sets.push_back("recognition.schedule=" + *opt.mode);
  if (opt.algorithm) sets.push_back("learning.algorithm=" + *opt.algorithm);
  if (opt.seed)
    sets.push_back(std::string(rec ? "recognition" : command == "learn" ? "learning"
                                                   : command == "montecarlo" ? "experiment" : "representation") +
                   ".seed=" + std::to_string(*opt.seed));
  if (opt.threads) sets.push_back("experiment.threads=" + std::to_string(*opt.threads));
  sets.insert(sets.end(), opt.sets.begin(), opt.sets.end());
  for (const auto& s : sets) apply_override(doc, s);
  return doc;
}

int cmd_bounds(const Options& opt, std::ostream& out, std::ostream& err) {
  const RootConfig cfg = resolve(assemble(opt, "bounds"));
  const auto ex = bounds_report(cfg.repr.kind, cfg.repr.common, cfg.repr.conn, Pipeline::Exact);
  const auto ps = bounds_report(cfg.repr.kind, cfg.repr.common, cfg.repr.conn, Pipeline::PaperStyle);
  json j = header("bounds", cfg);
  j["kind"] = to_string(cfg.repr.kind);
  j["selected"] = to_string(opt.paper_style ? Pipeline::PaperStyle : Pipeline::Exact);
  j["report"] = bounds_json(opt.paper_style ? ps : ex);
  j["exact"] = bounds_json(ex);
  j["paper_style"] = bounds_json(ps);
  out << j.dump(2) << '\n';
  bounds_table(ex, ps, err);
  return kOk;
}

int cmd_build(const Options& opt, std::ostream& out, std::ostream&) {
  const RootConfig cfg = resolve(assemble(opt, "build"));
  const LayeredNetwork net = build(hierarchy(cfg), cfg.repr);
  const std::string path = !opt.out.empty() ? opt.out : cfg.output.network;
  json j = header("build", cfg);
  j["network"] = network_summary(net);
  j["network"].erase("concepts");
  if (!path.empty()) {
    save_network(net, path);
    j["written"] = {path, path + ".bin"};
  }
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_check(const Options& opt, std::ostream& out, std::ostream&) {
  const RootConfig cfg = resolve(assemble(opt, "check"));
  std::string source;
  const auto net = network(opt, cfg, source);
  bool pass = false;
  json j = header("check", cfg);
  j["network_source"] = source;
  j["check"] = check_json(*net, pass);
  out << j.dump(2) << '\n';
  return pass ? kOk : kFailed;
}

int cmd_recognize(const Options& opt, std::ostream& out, std::ostream&) {
  const RootConfig cfg = resolve(assemble(opt, "recognize"));
  std::string source;
  const auto net = network(opt, cfg, source);
  const auto& h = net->hierarchy();
  const CommonParams& cp = net->params();
  const ConceptId target =
      cfg.recognize.target.value_or(net->scope().value_or(ConceptId{cp.l_max, 0}));
  h.require(target);
  const Ratio r1 = cfg.repr.common.r1, r2 = cfg.repr.common.r2;
  PresentationSchedule s = default_schedule(*net, generate_b(h, cfg.recognize.bgen, target, r1, r2));
  if (cfg.recognize.schedule == "once") s.mode = PresentMode::OnceAtZero;
  if (cfg.recognize.schedule == "continuous") s.mode = PresentMode::Continuous;
  if (cfg.recognize.horizon) s.horizon = *cfg.recognize.horizon;
  Rng rng = make_rng(cfg.recognize.seed, 0x50);
  const FailureMask mask = sample_failures(*net, cfg.repr.common.q, rng);
  Simulator sim(*net);
  const RecognitionOutcome o = run_recognition(sim, s, mask, target);
  const SupportStatus status = support_status(h, s.B, target, r1, r2);
  const Verdict v = verdict(o, status);

  json j = header("recognize", cfg);
  j["network_source"] = source;
  j["target"] = concept_json(target);
  j["b"] = {{"generator", to_string(cfg.recognize.bgen)}, {"size", s.B.size()}, {"leaves", s.B.members()}};
  j["schedule"] = {{"mode", to_string(s.mode)}, {"horizon", s.horizon}};
  j["failed_neurons"] = mask_size(mask);
  j["outcome"] = {{"fired_count", o.fired_count},
                  {"check_time", o.check_time},
                  {"firing_floor", ratio_json(firing_floor(cp))},
                  {"recognized", o.recognized},
                  {"fired_when_checked", o.fired_when_checked},
                  {"first_stable_time", o.first_stable_time ? json(*o.first_stable_time) : json(nullptr)},
                  {"timing_ok", o.timing_ok ? json(*o.timing_ok) : json(nullptr)},
                  {"notes", o.notes}};
  j["support_status"] = to_string(status);
  j["verdict"] = to_string(v);
  out << j.dump(2) << '\n';
  return v == Verdict::MustNotFireViolated ? kFailed : kOk;
}

int cmd_learn(const Options& opt, std::ostream& out, std::ostream&) {
  const RootConfig cfg = resolve(assemble(opt, "learn"));
  LearnConfig lc = cfg.learn;
  if (!lc.target) lc.target = cfg.repr.scope.value_or(ConceptId{cfg.hierarchy.l_max, 0});
  const auto res = learn(hierarchy(cfg), cfg.repr.common, cfg.repr.conn, lc);
  json j = header("learn", cfg);
  j["report"] = learn_json(res.report);
  const std::string path = !opt.out.empty() ? opt.out : cfg.output.network;
  if (!path.empty() && res.net) {
    save_network(*res.net, path);
    j["written"] = {path, path + ".bin"};
  }
  out << j.dump(2) << '\n';
  return res.report.success ? kOk : kFailed;
}

int cmd_montecarlo(const Options& opt, std::ostream& out, std::ostream& err) {
  const RootConfig cfg = resolve(assemble(opt, "montecarlo"));
  const auto rows = run_trials(cfg.experiment);
  const std::string path = !opt.csv.empty() ? opt.csv : cfg.output.csv;
  if (!path.empty()) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << to_csv(rows);
  }
  const bool ok = all_passed(rows);
  json j = header("montecarlo", cfg);
  j["points"] = rows.size();
  j["all_passed"] = ok;
  j["csv"] = path.empty() ? json(nullptr) : json(path);
  json list = json::array();
  for (const auto& r : rows) list.push_back(stats_json(r));
  j["rows"] = list;
  out << j.dump(2) << '\n';
  if (!ok) err << "montecarlo: at least one point failed its bound or had must-not-fire violations\n";
  return ok ? kOk : kFailed;
}

int dispatch(const std::string& command, const Options& opt, std::ostream& out, std::ostream& err) {
  try {
    if (command == "bounds") return cmd_bounds(opt, out, err);
    if (command == "build") return cmd_build(opt, out, err);
    if (command == "check") return cmd_check(opt, out, err);
    if (command == "recognize") return cmd_recognize(opt, out, err);
    if (command == "learn") return cmd_learn(opt, out, err);
    if (command == "montecarlo") return cmd_montecarlo(opt, out, err);
    err << "unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  }
}

}  // namespace hcrep::cli
