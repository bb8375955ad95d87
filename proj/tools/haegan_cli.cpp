// Command-line front end. Uses only the C interface.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "haegan/haegan.h"

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string scale = "ci";
  std::vector<std::string> sets;
  long long seed = -1;
  bool quiet = false;
};

int exit_code(hg_status s) {
  switch (s) {
    case HG_OK: return 0;
    case HG_TEST_FAILURE: return 1;
    case HG_NUMERICAL_ABORT: return 3;
    case HG_INTERNAL_ERROR: return 1;
    default: return 2;  // configuration, argument and file problems
  }
}

int report(hg_status s) {
  if (s != HG_OK) std::fprintf(stderr, "error: %s\n", hg_last_error());
  return exit_code(s);
}

int run(const std::string& name, const Common& c, bool print_config) {
  hg_run_config* cfg = nullptr;
  hg_status s = hg_run_config_new(name.c_str(), c.scale.c_str(), &cfg);
  if (s != HG_OK) return report(s);
  if (!c.config.empty() && (s = hg_run_config_load_file(cfg, c.config.c_str())) != HG_OK) {
    hg_run_config_free(cfg);
    return report(s);
  }
  for (const auto& kv : c.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      hg_run_config_free(cfg);
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    if ((s = hg_run_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != HG_OK) {
      hg_run_config_free(cfg);
      return report(s);
    }
  }
  if (c.seed >= 0) hg_run_config_set_seed(cfg, static_cast<uint64_t>(c.seed));

  if (print_config) {
    size_t needed = 0;
    hg_run_config_resolved(cfg, nullptr, 0, &needed);
    std::string text(needed, '\0');
    s = hg_run_config_resolved(cfg, text.data(), text.size(), &needed);
    hg_run_config_free(cfg);
    if (s != HG_OK) return report(s);
    std::fputs(text.c_str(), stdout);
    return 0;
  }

  char dir[4096] = {0};
  s = hg_run(cfg, c.out.c_str(), c.quiet ? 0 : 1, dir, sizeof dir);
  hg_run_config_free(cfg);
  if (dir[0]) std::printf("%s\n", dir);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic generative models: experiments and checks"};
  app.require_subcommand(1);
  Common common;
  bool print_config = false;
  std::string selected;

  for (size_t i = 0; i < hg_experiment_count(); ++i) {
    std::string name = hg_experiment_name(i);
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", common.config, "configuration file (key = value)");
    sub->add_option("--seed", common.seed, "random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", common.out, "output root directory");
    sub->add_option("--scale", common.scale, "default preset")->check(CLI::IsMember({"paper", "ci"}));
    sub->add_option("--set", common.sets, "override one key, key=value (repeatable)");
    sub->add_flag("--quiet", common.quiet, "suppress progress output");
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
    sub->callback([&selected, name] { selected = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(selected, common, print_config);
}
