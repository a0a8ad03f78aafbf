#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcrep/experiments.hpp"
#include "hcrep/learning.hpp"
#include "hcrep/representation.hpp"

namespace hcrep::cli {

using json = nlohmann::ordered_json;

/// Malformed document: unknown or missing keys, wrong types, bad overrides.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecognizeSettings {
  std::optional<ConceptId> target;
  BGen bgen = BGen::FullLeaves;
  std::string schedule = "default";  ///< default | once | continuous
  std::optional<int> horizon;
  std::uint64_t seed = 0;
};

struct OutputPaths {
  std::string csv;
  std::string network;
};

struct RootConfig {
  HierarchyParams hierarchy;
  ReprSpec repr;              ///< carries CommonParams and ConnectivityParams
  LearnConfig learn;
  ExperimentConfig experiment;
  bool experiment_learns = false;
  RecognizeSettings recognize;
  OutputPaths output;
};

json load_json_file(const std::string& path);

/// "a.b.c=value"; the value is parsed as JSON when possible, else kept as a string.
void apply_override(json& doc, const std::string& assignment);

/// Schema check plus defaults. Throws ConfigError for schema problems and
/// std::invalid_argument for violated parameter invariants.
RootConfig resolve(const json& doc);

/// Fully resolved document with every default written out.
json to_json(const RootConfig& cfg);

json ratio_json(Ratio r);
json concept_json(ConceptId c);

}  // namespace hcrep::cli
