#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace hcrep::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical concept representations: bounds, networks, recognition, learning, Monte Carlo"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("-c,--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", opt.sets, "dotted override, e.g. common.q=1/32 (repeatable)");
  app.add_option("--threads", opt.threads, "worker threads (0 = logical cores)");

  auto* bounds = app.add_subcommand("bounds", "analytic failure bounds per level");
  bounds->add_flag("--paper-style", opt.paper_style, "report the rounded pipeline as the primary one");
  bounds->add_option("--kind", opt.kind, "high | low | lateral");
  bounds->add_option("--q", opt.q, "failure probability");

  auto* build = app.add_subcommand("build", "build a network and dump it");
  build->add_option("--kind", opt.kind, "high | low | lateral");
  build->add_option("--seed", opt.seed, "representation seed");
  build->add_option("--out", opt.out, "dump path (writes <out> and <out>.bin)");

  auto* check = app.add_subcommand("check", "verify the connectivity assumptions of a network");
  check->add_option("--network", opt.network, "existing dump; otherwise build from the config")->check(CLI::ExistingFile);
  check->add_option("--kind", opt.kind, "high | low | lateral");
  check->add_option("--seed", opt.seed, "representation seed");

  auto* recognize = app.add_subcommand("recognize", "one recognition run with sampled failures");
  recognize->add_option("--network", opt.network, "existing dump; otherwise build from the config")->check(CLI::ExistingFile);
  recognize->add_option("--kind", opt.kind, "high | low | lateral");
  recognize->add_option("--target", opt.target, "target concept as level:index");
  recognize->add_option("--r1", opt.r1, "lower support ratio");
  recognize->add_option("--r2", opt.r2, "upper support ratio");
  recognize->add_option("--q", opt.q, "failure probability");
  recognize->add_option("--seed", opt.seed, "failure seed");
  recognize->add_option("--mode", opt.mode, "default | once | continuous");

  auto* learn = app.add_subcommand("learn", "learn a representation of one concept subtree");
  learn->add_option("--algorithm", opt.algorithm, "ff-high | ff-low | lateral-multistep | lateral-twophase");
  learn->add_option("--target", opt.target, "target concept as level:index");
  learn->add_option("--seed", opt.seed, "learning seed");
  learn->add_option("--out", opt.out, "dump path for the learned network");

  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo sweep against the analytic bounds");
  mc->add_option("--csv", opt.csv, "CSV output path");
  mc->add_option("--target", opt.target, "target concept as level:index");
  mc->add_option("--seed", opt.seed, "experiment seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  return dispatch(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
