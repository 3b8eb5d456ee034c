#include <CLI11.hpp>

#include "anc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"anc — feedforward active-noise-control simulation toolkit"};
  app.require_subcommand(1);

  anc::cli::RunManifest manifest;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", manifest.config_file, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", manifest.out_dir, "output directory");
    cmd->add_option("--seed", seed_flag, "override the config root seed")
        ->each([&](const std::string&) { manifest.seed_override = seed_flag; });
    cmd->add_flag("--quiet", manifest.quiet, "suppress log lines");
  };

  CLI::App* meta_train = app.add_subcommand(
      "meta-train", "learn a (phi, psi) co-initialization from training tasks");
  add_common(meta_train);

  CLI::App* run =
      app.add_subcommand("run", "simulate a scenario and export report CSVs");
  add_common(run);

  CLI::App* diversity = app.add_subcommand(
      "diversity", "train per set and tabulate dispersion vs mean reduction");
  add_common(diversity);

  CLI::App* paths = app.add_subcommand("paths", "impulse-response utilities");
  paths->require_subcommand(1);

  anc::cli::PathsSynthArgs synth_args;
  CLI::App* synth = paths->add_subcommand("synth", "write surrogate IR files");
  synth->add_option("--out", synth_args.out_dir, "output directory");
  synth->add_option("--seed", synth_args.seed, "base seed");
  synth->add_option("--taps", synth_args.taps, "IR length");
  synth->add_option("--decay", synth_args.decay, "per-sample decay in (0,1)");
  synth->add_option("--delay", synth_args.delay, "leading zero taps");
  synth->add_option("--count", synth_args.count, "number of IRs");
  synth->add_option("--prefix", synth_args.prefix, "file name prefix");
  synth->add_flag("--quiet", synth_args.quiet, "suppress log lines");

  anc::cli::PathsInspectArgs inspect_args;
  CLI::App* inspect =
      paths->add_subcommand("inspect", "print length, norm and grid magnitudes");
  inspect->add_option("file", inspect_args.file, "IR file")
      ->required()
      ->check(CLI::ExistingFile);
  inspect->add_option("--fmin", inspect_args.f_min, "grid start, Hz");
  inspect->add_option("--fmax", inspect_args.f_max, "grid end, Hz");
  inspect->add_option("--points", inspect_args.points, "grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return anc::cli::kExitConfig;
  }

  try {
    if (meta_train->parsed()) return anc::cli::cmd_meta_train(manifest);
    if (run->parsed()) return anc::cli::cmd_run(manifest);
    if (diversity->parsed()) return anc::cli::cmd_diversity(manifest);
    if (paths->parsed()) {
      if (synth->parsed()) return anc::cli::cmd_paths_synth(synth_args);
      if (inspect->parsed()) return anc::cli::cmd_paths_inspect(inspect_args);
    }
  } catch (...) {
    return anc::cli::exit_code_for_current_exception();
  }
  return anc::cli::kExitConfig;
}
