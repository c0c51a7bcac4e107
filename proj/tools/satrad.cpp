// Command-line driver: satrad <env|transport|damage|compare|all> --config run.json
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "satrad/error.hpp"
#include "satrad/pipeline.hpp"

namespace {

int fail(const char* kind, const std::string& message) {
  const satrad::Json err{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satrad: radiation dose and dark-count pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool force = false;
  bool quiet = false;

  const char* names[] = {"env", "transport", "damage", "compare", "all"};
  const char* help[] = {"build mission segments and spectra", "run the dose tallies",
                        "predict dark-count increases", "compare with telemetry",
                        "run every stage"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override transport.seed");
    sub->add_option("--workers", workers, "worker threads for transport");
    sub->add_option("--out", out, "override the output directory");
    sub->add_flag("--force", force, "overwrite non-empty stage directories");
    sub->add_flag("-q,--quiet", quiet, "no progress lines");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    satrad::RunConfig config = satrad::load_config(config_path);
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) config.seed = seed;
    if (sub->count("--workers") > 0) config.workers = workers;
    if (sub->count("--out") > 0) config.output = std::filesystem::absolute(out).lexically_normal();
    if (config.workers == 0) return fail("config", "--workers must be >= 1");

    satrad::RunContext ctx;
    ctx.force = force;
    ctx.log = quiet ? nullptr : &std::cout;
    const std::string name = sub->get_name();
    if (name == "env") satrad::cmd_env(config, ctx);
    else if (name == "transport") satrad::cmd_transport(config, ctx);
    else if (name == "damage") satrad::cmd_damage(config, ctx);
    else if (name == "compare") satrad::cmd_compare(config, ctx);
    else satrad::cmd_all(config, ctx);
  } catch (const satrad::Error& e) {
    return fail(satrad::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
