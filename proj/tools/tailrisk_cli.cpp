// Command-line front end: every subcommand reads a JSON run config and runs
// the pipeline through the named stage.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tailrisk/pipeline.hpp"

namespace {

using tailrisk::io::json;

int fail(const std::string& kind, const std::string& message, int code, json extra = json::object()) {
  json j = {{"kind", kind}, {"message", message}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::cout << j.dump() << std::endl;
  return code;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string pair;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override every seed in the config");
  cmd->add_option("--out", c.out, "output directory (overrides output_dir)");
}

tailrisk::RunConfig load(const Common& c) {
  auto cfg = tailrisk::load_config(c.config);
  if (c.seed) {
    cfg.seeds.set_all(*c.seed);
    cfg.echo["seeds"] = *c.seed;
  }
  if (!c.out.empty()) {
    cfg.output_dir = c.out;
    cfg.echo["output_dir"] = c.out;
  }
  return cfg;
}

void print_summary(const json& manifest) {
  for (const auto& p : manifest["pairs"]) {
    std::printf("%-16s %s", p["label"].get<std::string>().c_str(), p["status"].get<std::string>().c_str());
    if (p.contains("failed_stage")) {
      std::printf(" at %s: %s", p["failed_stage"].get<std::string>().c_str(),
                  p["error"]["message"].get<std::string>().c_str());
    }
    std::printf("\n");
  }
}

int run_stage(const Common& c, tailrisk::Stage last) {
  const auto cfg = load(c);
  const auto summary = tailrisk::run_pipeline(cfg, last, c.pair);
  print_summary(summary.manifest);
  std::printf("artifacts: %s\n", cfg.output_dir.string().c_str());
  if (summary.failed_pairs > 0) {
    return fail("pair_failure", std::to_string(summary.failed_pairs) + " pair(s) failed; see manifest.json", 3,
                {{"manifest", (cfg.output_dir / "manifest.json").string()}});
  }
  return 0;
}

int run_simulate(const Common& c) {
  const auto cfg = load(c);
  if (!cfg.simulate) throw tailrisk::ConfigError("config has no 'simulate' section");
  const auto& s = *cfg.simulate;
  const auto sim = tailrisk::simulate_pair(s, cfg.seeds.simulate);
  tailrisk::fs::create_directories(cfg.output_dir);
  const auto fut = cfg.output_dir / (s.label + "_futures.csv");
  const auto spot = cfg.output_dir / (s.label + "_spot.csv");
  tailrisk::io::write_prices_csv(fut, sim.futures_prices);
  tailrisk::io::write_prices_csv(spot, sim.spot_prices);
  json j = {{"label", s.label},
            {"T", s.T},
            {"seed", cfg.seeds.simulate},
            {"copula", s.copula.name()},
            {"futures", fut.string()},
            {"spot", spot.string()}};
  std::cout << j.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula-based VaR/CoVaR spillover analysis between futures and spot markets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TAILRISK_VERSION);

  Common c;
  std::string method;
  int n_boot = 0;

  struct Sub {
    const char* name;
    const char* help;
    std::optional<tailrisk::Stage> last;
  };
  const Sub subs[] = {
      {"run", "full pipeline", tailrisk::Stage::Tests},
      {"fit-marginal", "ingest through marginal fits", tailrisk::Stage::Marginal},
      {"fit-copula", "ingest through copula fits", tailrisk::Stage::Copula},
      {"risk", "ingest through VaR/CoVaR series", tailrisk::Stage::Risk},
      {"test", "full pipeline with test overrides", tailrisk::Stage::Tests},
      {"simulate", "write a synthetic coupled price pair", std::nullopt},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> cmds;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, c);
    if (s.last) cmd->add_option("--pair", c.pair, "only run the pair with this label");
    if (std::string(s.name) == "test") {
      cmd->add_option("--method", method, "p-value method")->check(CLI::IsMember({"asymptotic", "bootstrap"}));
      cmd->add_option("--n-boot", n_boot, "bootstrap resamples")->check(CLI::PositiveNumber);
    }
    cmds.emplace_back(cmd, &s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return fail("usage_error", e.what(), 2);
  }

  try {
    for (const auto& [cmd, s] : cmds) {
      if (!cmd->parsed()) continue;
      if (!s->last) return run_simulate(c);
      if (std::string(s->name) == "test" && (!method.empty() || n_boot > 0)) {
        auto cfg_json = json::parse(std::ifstream(c.config), nullptr, true, true);
        auto& t = cfg_json["tests"];
        if (!method.empty()) t["method"] = method;
        if (n_boot > 0) t["n_boot"] = n_boot;
        auto cfg = tailrisk::parse_config(cfg_json, tailrisk::fs::path(c.config).parent_path());
        if (c.seed) cfg.seeds.set_all(*c.seed);
        if (!c.out.empty()) cfg.output_dir = c.out;
        const auto summary = tailrisk::run_pipeline(cfg, *s->last, c.pair);
        print_summary(summary.manifest);
        if (summary.failed_pairs > 0) {
          return fail("pair_failure", std::to_string(summary.failed_pairs) + " pair(s) failed; see manifest.json", 3);
        }
        return 0;
      }
      return run_stage(c, *s->last);
    }
  } catch (const tailrisk::ConfigError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const tailrisk::Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), 1);
  }
  return 0;
}
