// Command-line front end for the stylenet shared library: curate a MIDI
// corpus, inspect files, train the velocity model, render performances and
// verify gradients. Exit codes: 0 success, 1 runtime/numeric failure,
// 2 usage error.

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stylenet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code_for(sn_status status) {
  switch (status) {
    case SN_OK:
      return kExitOk;
    case SN_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

int report_failure(sn_status status) {
  std::fprintf(stderr, "error: %s\n", sn_last_error());
  return exit_code_for(status);
}

struct CurateArgs {
  std::string classical_dir;
  std::string jazz_dir;
  std::string out_path;
  std::size_t threshold = 20;
  double split = 0.95;
  std::uint64_t seed = 0;
};

int run_curate(const CurateArgs& args) {
  std::printf("config: classical=%s jazz=%s out=%s threshold=%zu split=%g seed=%" PRIu64 "\n",
              args.classical_dir.c_str(), args.jazz_dir.c_str(), args.out_path.c_str(),
              args.threshold, args.split, args.seed);
  const char* names[] = {"classical", "jazz"};
  const char* dirs[] = {args.classical_dir.c_str(), args.jazz_dir.c_str()};
  sn_genre_summary summaries[2];
  size_t count = 0;
  const sn_status status = sn_curate(names, dirs, 2, args.threshold, args.split, args.seed,
                                     args.out_path.c_str(), summaries, 2, &count);
  if (status != SN_OK) return report_failure(status);
  for (size_t i = 0; i < count; ++i) {
    std::printf("%s: accepted %zu (train %zu, validation %zu), rejected %zu\n",
                summaries[i].genre, summaries[i].accepted, summaries[i].train,
                summaries[i].validation, summaries[i].rejected);
  }
  std::printf("manifest written to %s\n", args.out_path.c_str());
  return kExitOk;
}

struct InspectArgs {
  std::string in_path;
  std::string csv_prefix;
};

int run_inspect(const InspectArgs& args) {
  std::printf("config: in=%s csv=%s\n", args.in_path.c_str(),
              args.csv_prefix.empty() ? "(none)" : args.csv_prefix.c_str());
  sn_midi* midi = nullptr;
  sn_status status = sn_midi_open(args.in_path.c_str(), &midi);
  if (status != SN_OK) return report_failure(status);

  char signatures[256];
  sn_midi_time_signatures(midi, signatures, sizeof signatures);
  std::printf("format: %d\n", sn_midi_format(midi));
  std::printf("division: %d\n", sn_midi_division(midi));
  std::printf("time-signatures: %s\n",
              signatures[0] ? signatures : "(none, default 4/4)");
  std::printf("notes: %zu\n", sn_midi_note_count(midi));
  std::printf("distinct velocities: %zu\n", sn_midi_distinct_velocities(midi));
  if (!args.csv_prefix.empty()) {
    status = sn_midi_dump_csv(midi, args.csv_prefix.c_str());
    if (status != SN_OK) {
      sn_midi_close(midi);
      return report_failure(status);
    }
    std::printf("wrote %s_roll.csv and %s_velocity.csv\n", args.csv_prefix.c_str(),
                args.csv_prefix.c_str());
  }
  sn_midi_close(midi);
  return kExitOk;
}

struct TrainArgs {
  std::string manifest_path;
  std::string out_path;
  std::string resume_path;
  CLI::App* cmd = nullptr;
  sn_train_config config{};
};

void print_train_config(const sn_train_config& c) {
  std::printf("config: epochs=%zu lr=%g window=%zu clip=%g keep-prob=%g batch=%zu "
              "genre-hidden=%zu interp-hidden=%zu seed=%" PRIu64 " interval=%zu\n",
              c.epochs, c.learning_rate, c.window, c.clip_norm, c.keep_prob, c.batch_size,
              c.genre_hidden, c.interp_hidden, c.seed, c.checkpoint_interval);
}

void progress_row(size_t epoch, const char* genre, double train_loss, double val_loss,
                  void*) {
  std::printf("epoch %zu %s train %.6e val %.6e\n", epoch, genre, train_loss, val_loss);
}

int run_train(TrainArgs& args) {
  // Precedence: explicit flags > resumed checkpoint config > defaults.
  sn_train_config defaults;
  sn_train_config_default(&defaults);
  sn_train_config resolved = defaults;
  if (!args.resume_path.empty()) {
    sn_model* model = nullptr;
    const sn_status status = sn_model_open(args.resume_path.c_str(), &model);
    if (status != SN_OK) return report_failure(status);
    sn_model_config(model, &resolved);
    sn_model_close(model);
  }
  auto given = [&](const char* flag) { return args.cmd->count(flag) > 0; };
  if (given("--epochs")) resolved.epochs = args.config.epochs;
  if (given("--lr")) resolved.learning_rate = args.config.learning_rate;
  if (given("--window")) resolved.window = args.config.window;
  if (given("--clip")) resolved.clip_norm = args.config.clip_norm;
  if (given("--keep-prob")) resolved.keep_prob = args.config.keep_prob;
  if (given("--seed")) resolved.seed = args.config.seed;
  if (given("--batch-size")) resolved.batch_size = args.config.batch_size;
  if (given("--genre-hidden")) resolved.genre_hidden = args.config.genre_hidden;
  if (given("--interval")) resolved.checkpoint_interval = args.config.checkpoint_interval;
  print_train_config(resolved);

  const std::string csv_path = args.out_path + ".loss.csv";
  const sn_status status =
      sn_train(args.manifest_path.c_str(), &resolved, args.out_path.c_str(), csv_path.c_str(),
               args.resume_path.empty() ? nullptr : args.resume_path.c_str(), progress_row,
               nullptr);
  if (status != SN_OK) return report_failure(status);
  std::printf("checkpoint written to %s (loss log %s)\n", args.out_path.c_str(),
              csv_path.c_str());
  return kExitOk;
}

struct RenderArgs {
  std::string ckpt_path;
  std::string in_path;
  std::string genre;
  std::string out_path;
};

int run_render(const RenderArgs& args) {
  std::printf("config: ckpt=%s in=%s genre=%s out=%s\n", args.ckpt_path.c_str(),
              args.in_path.c_str(), args.genre.c_str(), args.out_path.c_str());
  sn_model* model = nullptr;
  sn_status status = sn_model_open(args.ckpt_path.c_str(), &model);
  if (status != SN_OK) return report_failure(status);

  bool known = false;
  for (size_t i = 0; i < sn_model_genre_count(model); ++i) {
    if (args.genre == sn_model_genre_name(model, i)) known = true;
  }
  if (!known) {
    std::fprintf(stderr, "error: unknown genre '%s'; available:", args.genre.c_str());
    for (size_t i = 0; i < sn_model_genre_count(model); ++i) {
      std::fprintf(stderr, " %s", sn_model_genre_name(model, i));
    }
    std::fprintf(stderr, "\n");
    sn_model_close(model);
    return kExitUsage;
  }

  status = sn_render(model, args.in_path.c_str(), args.genre.c_str(), args.out_path.c_str());
  sn_model_close(model);
  if (status != SN_OK) return report_failure(status);
  std::printf("performance written to %s\n", args.out_path.c_str());
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  std::size_t seeds = 20;
};

int run_gradcheck(const GradcheckArgs& args) {
  std::printf("config: seed=%" PRIu64 " tolerance=%g seeds=%zu\n", args.seed, args.tolerance,
              args.seeds);
  int pass = 0;
  char report[4096];
  const sn_status status =
      sn_gradcheck(args.seed, args.tolerance, args.seeds, &pass, report, sizeof report);
  if (status != SN_OK) return report_failure(status);
  std::fputs(report, stdout);
  return pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylenet: expressive velocity rendering for piano MIDI"};
  app.require_subcommand(1);

  CurateArgs curate;
  CLI::App* curate_cmd = app.add_subcommand("curate", "filter a MIDI corpus and write a manifest");
  curate_cmd->add_option("--classical", curate.classical_dir, "classical MIDI directory")
      ->required();
  curate_cmd->add_option("--jazz", curate.jazz_dir, "jazz MIDI directory")->required();
  curate_cmd->add_option("--out", curate.out_path, "manifest output path")->required();
  curate_cmd->add_option("--threshold", curate.threshold, "minimum distinct velocities");
  curate_cmd->add_option("--split", curate.split, "training fraction");
  curate_cmd->add_option("--seed", curate.seed, "shuffle seed");

  InspectArgs inspect;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "summarize a MIDI file");
  inspect_cmd->add_option("--in", inspect.in_path, "MIDI file")->required();
  inspect_cmd->add_option("--csv", inspect.csv_prefix, "dump note-state/velocity matrices");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train the velocity model");
  train_cmd->add_option("--manifest", train.manifest_path, "manifest JSON")->required();
  train_cmd->add_option("--out", train.out_path, "checkpoint output path")->required();
  train_cmd->add_option("--epochs", train.config.epochs, "training epochs");
  train_cmd->add_option("--lr", train.config.learning_rate, "learning rate");
  train_cmd->add_option("--window", train.config.window, "truncated-backprop window");
  train_cmd->add_option("--clip", train.config.clip_norm, "gradient norm ceiling");
  train_cmd->add_option("--keep-prob", train.config.keep_prob, "dropout keep probability");
  train_cmd->add_option("--seed", train.config.seed, "run seed");
  train_cmd->add_option("--batch-size", train.config.batch_size, "windows per optimizer step");
  train_cmd->add_option("--genre-hidden", train.config.genre_hidden,
                        "branch hidden units per direction");
  train_cmd->add_option("--interval", train.config.checkpoint_interval,
                        "epochs between checkpoint writes");
  train_cmd->add_option("--resume", train.resume_path, "checkpoint to resume from");
  train.cmd = train_cmd;

  RenderArgs render;
  CLI::App* render_cmd = app.add_subcommand("render", "render a performance of a score");
  render_cmd->add_option("--ckpt", render.ckpt_path, "trained checkpoint")->required();
  render_cmd->add_option("--in", render.in_path, "input score MIDI")->required();
  render_cmd->add_option("--genre", render.genre, "genre branch to use")->required();
  render_cmd->add_option("--out", render.out_path, "output MIDI path")->required();

  GradcheckArgs gradcheck;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference verification of all backward passes");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "base seed");
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance, "max relative error");
  gradcheck_cmd->add_option("--seeds", gradcheck.seeds, "number of random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (curate_cmd->parsed()) return run_curate(curate);
    if (inspect_cmd->parsed()) return run_inspect(inspect);
    if (train_cmd->parsed()) return run_train(train);
    if (render_cmd->parsed()) return run_render(render);
    if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
