#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace hcrep::cli {

enum ExitCode { kOk = 0, kFailed = 1, kConfigError = 2 };

struct Options {
  std::string config;             ///< empty: start from an empty document
  std::vector<std::string> sets;  ///< dotted overrides, applied in order
  std::optional<int> threads;
  bool paper_style = false;       ///< bounds
  std::string out;                ///< build / learn: network dump path
  std::string network;            ///< check / recognize: existing dump
  std::string csv;                ///< montecarlo

  // Shortcuts for common dotted paths.
  std::optional<std::string> kind, target, r1, r2, q, mode, algorithm;
  std::optional<std::uint64_t> seed;
};

const char* version();

/// Config file plus overrides, shortcuts folded in as overrides.
json assemble(const Options& opt, const std::string& command);

int cmd_bounds(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_build(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_check(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_recognize(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_learn(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_montecarlo(const Options& opt, std::ostream& out, std::ostream& err);

/// Runs one subcommand, mapping exceptions to exit codes: config and
/// parameter errors give 2, anything else unexpected gives 1.
int dispatch(const std::string& command, const Options& opt, std::ostream& out, std::ostream& err);

}  // namespace hcrep::cli
