#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <string>

#include "common/rng.hpp"
#include "fixtures.hpp"
#include "midi/midi.hpp"

#ifndef CLI_BINARY_PATH
#error "CLI_BINARY_PATH must point at the stylenet-cli binary"
#endif

using testsupport::TempDir;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const auto out_path = tmp.file("cli_out_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string("\"") + CLI_BINARY_PATH + "\" " + args + " > " + out_path.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = raw;
#else
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
#endif
  std::ifstream in(out_path);
  r.output.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return r;
}

void make_corpus(const TempDir& tmp) {
  stylenet::Rng rng(83);
  for (const char* genre : {"classical", "jazz"}) {
    std::filesystem::create_directories(tmp.file(genre));
    for (int i = 0; i < 2; ++i) {
      const auto spans = testsupport::random_spans(rng, 28, 20);
      stylenet::midi::write_midi_file(testsupport::file_from_spans(spans),
                                      tmp.file(genre) / ("p" + std::to_string(i) + ".mid"));
    }
  }
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown flags and missing directories exit 2") {
  TempDir tmp("cli_usage");
  CHECK(run_cli(tmp, "curate --bogus x").exit_code == 2);
  CHECK(run_cli(tmp, "nonsense").exit_code == 2);
  const RunResult missing = run_cli(
      tmp, "curate --classical " + q(tmp.file("absent")) + " --jazz " + q(tmp.file("absent")) +
               " --out " + q(tmp.file("m.json")));
  CHECK(missing.exit_code == 2);
}

TEST_CASE("curate writes a manifest and reruns byte-stably") {
  TempDir tmp("cli_curate");
  make_corpus(tmp);
  const std::string args = "curate --classical " + q(tmp.file("classical")) + " --jazz " +
                           q(tmp.file("jazz")) + " --out " + q(tmp.file("m.json")) +
                           " --seed 11";
  const RunResult first = run_cli(tmp, args);
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("config:") != std::string::npos);
  CHECK(first.output.find("classical: accepted 2") != std::string::npos);
  const auto bytes = testsupport::read_bytes(tmp.file("m.json"));
  CHECK(run_cli(tmp, args).exit_code == 0);
  CHECK(testsupport::read_bytes(tmp.file("m.json")) == bytes);
}

TEST_CASE("inspect prints the file summary and dumps matrices") {
  TempDir tmp("cli_inspect");
  stylenet::midi::write_midi_file(testsupport::make_velocity_spread_file(1),
                                  tmp.file("one.mid"));
  const RunResult r =
      run_cli(tmp, "inspect --in " + q(tmp.file("one.mid")) + " --csv " + q(tmp.file("dump")));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("format: 0") != std::string::npos);
  CHECK(r.output.find("division: 480") != std::string::npos);
  CHECK(r.output.find("time-signatures: 4/4") != std::string::npos);
  CHECK(r.output.find("notes: 1") != std::string::npos);
  CHECK(r.output.find("distinct velocities: 1") != std::string::npos);

  // row counts equal the quantized length
  std::ifstream roll(tmp.file("dump").string() + "_roll.csv");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(roll, line)) ++rows;
  CHECK(rows == 1);
  CHECK(std::filesystem::exists(tmp.file("dump").string() + "_velocity.csv"));
}

TEST_CASE("train then render end to end") {
  TempDir tmp("cli_train");
  make_corpus(tmp);
  REQUIRE(run_cli(tmp, "curate --classical " + q(tmp.file("classical")) + " --jazz " +
                           q(tmp.file("jazz")) + " --out " + q(tmp.file("m.json")) +
                           " --seed 1")
              .exit_code == 0);

  const std::string train_args =
      "train --manifest " + q(tmp.file("m.json")) + " --out " + q(tmp.file("model.ckpt")) +
      " --epochs 2 --window 16 --batch-size 2 --genre-hidden 4 --interval 1 --seed 3";
  const RunResult trained = run_cli(tmp, train_args);
  CHECK(trained.exit_code == 0);
  CHECK(trained.output.find("config:") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.file("model.ckpt")));
  std::ifstream csv(tmp.file("model.ckpt").string() + ".loss.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 5);  // header + 2 epochs x 2 genres

  const RunResult rendered = run_cli(
      tmp, "render --ckpt " + q(tmp.file("model.ckpt")) + " --in " +
               q(tmp.file("classical") / "p0.mid") + " --genre jazz --out " +
               q(tmp.file("performed.mid")));
  CHECK(rendered.exit_code == 0);

  // note timings survive rendering untouched
  const auto before = stylenet::midi::extract_notes(
      stylenet::midi::read_midi_file(tmp.file("classical") / "p0.mid"));
  const auto after =
      stylenet::midi::extract_notes(stylenet::midi::read_midi_file(tmp.file("performed.mid")));
  REQUIRE(before.spans.size() == after.spans.size());
  for (std::size_t i = 0; i < before.spans.size(); ++i) {
    CHECK(before.spans[i].onset_tick == after.spans[i].onset_tick);
    CHECK(before.spans[i].duration_ticks == after.spans[i].duration_ticks);
  }

  const RunResult unknown = run_cli(
      tmp, "render --ckpt " + q(tmp.file("model.ckpt")) + " --in " +
               q(tmp.file("classical") / "p0.mid") + " --genre polka --out " +
               q(tmp.file("x.mid")));
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.output.find("classical") != std::string::npos);
  CHECK(unknown.output.find("jazz") != std::string::npos);
}

TEST_CASE("train resumes from a checkpoint and reproduces the full run") {
  TempDir tmp("cli_resume");
  make_corpus(tmp);
  REQUIRE(run_cli(tmp, "curate --classical " + q(tmp.file("classical")) + " --jazz " +
                           q(tmp.file("jazz")) + " --out " + q(tmp.file("m.json")) +
                           " --seed 1")
              .exit_code == 0);
  const std::string base =
      " --manifest " + q(tmp.file("m.json")) +
      " --window 16 --batch-size 2 --genre-hidden 4 --interval 1 --seed 6";

  REQUIRE(run_cli(tmp, "train --out " + q(tmp.file("full.ckpt")) + base + " --epochs 4")
              .exit_code == 0);
  REQUIRE(run_cli(tmp, "train --out " + q(tmp.file("part.ckpt")) + base + " --epochs 2")
              .exit_code == 0);
  // settings come from the resumed checkpoint; only the epoch target moves
  const RunResult resumed =
      run_cli(tmp, "train --out " + q(tmp.file("part.ckpt")) + " --manifest " +
                       q(tmp.file("m.json")) + " --resume " + q(tmp.file("part.ckpt")) +
                       " --epochs 4");
  CHECK(resumed.exit_code == 0);
  CHECK(testsupport::read_bytes(tmp.file("part.ckpt")) ==
        testsupport::read_bytes(tmp.file("full.ckpt")));
  CHECK(testsupport::read_bytes(tmp.file("part.ckpt").string() + ".loss.csv") ==
        testsupport::read_bytes(tmp.file("full.ckpt").string() + ".loss.csv"));
}

TEST_CASE("gradcheck passes and its report is reproducible") {
  TempDir tmp("cli_gradcheck");
  const RunResult a = run_cli(tmp, "gradcheck --seed 5 --seeds 1");
  CHECK(a.exit_code == 0);
  CHECK(a.output.find("PASS") != std::string::npos);
  const RunResult b = run_cli(tmp, "gradcheck --seed 5 --seeds 1");
  CHECK(b.output == a.output);
}

}  // TEST_SUITE
