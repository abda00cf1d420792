#include "doctest.h"

#include <cstring>
#include <string>

#include "common/rng.hpp"
#include "fixtures.hpp"
#include "midi/midi.hpp"
#include "stylenet.h"

using testsupport::TempDir;

namespace {

// Minimal corpus on disk shared by the training-path cases.
struct CorpusFixture {
  TempDir tmp{"capi"};
  std::string manifest;

  CorpusFixture() {
    stylenet::Rng rng(41);
    for (const char* genre : {"classical", "jazz"}) {
      std::filesystem::create_directories(tmp.file(genre));
      for (int i = 0; i < 2; ++i) {
        const auto spans = testsupport::random_spans(rng, 30, 24);
        stylenet::midi::write_midi_file(
            testsupport::file_from_spans(spans),
            tmp.file(genre) / ("p" + std::to_string(i) + ".mid"));
      }
    }
    manifest = tmp.file("manifest.json").string();
    const char* names[] = {"classical", "jazz"};
    const std::string cdir = tmp.file("classical").string();
    const std::string jdir = tmp.file("jazz").string();
    const char* dirs[] = {cdir.c_str(), jdir.c_str()};
    REQUIRE(sn_curate(names, dirs, 2, 20, 0.95, 3, manifest.c_str(), nullptr, 0, nullptr) ==
            SN_OK);
  }
};

sn_train_config tiny_config() {
  sn_train_config c;
  sn_train_config_default(&c);
  c.epochs = 2;
  c.window = 16;
  c.batch_size = 2;
  c.interp_hidden = 3;
  c.genre_hidden = 4;
  c.checkpoint_interval = 1;
  c.seed = 9;
  return c;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("defaults mirror the training setup") {
  sn_train_config c;
  sn_train_config_default(&c);
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.keep_prob == 0.8);
  CHECK(c.clip_norm == 10.0);
  CHECK(c.window == 200);
  CHECK(c.epochs == 160);
  CHECK(c.interp_hidden == 88);
}

TEST_CASE("midi handle exposes file facts") {
  TempDir tmp("capi_midi");
  const auto path = tmp.file("spread.mid");
  stylenet::midi::write_midi_file(testsupport::make_velocity_spread_file(25), path);

  sn_midi* midi = nullptr;
  REQUIRE(sn_midi_open(path.string().c_str(), &midi) == SN_OK);
  CHECK(sn_midi_format(midi) == 0);
  CHECK(sn_midi_division(midi) == 480);
  CHECK(sn_midi_is_4_4(midi) == 1);
  CHECK(sn_midi_note_count(midi) == 25);
  CHECK(sn_midi_distinct_velocities(midi) == 25);
  char buf[64];
  CHECK(sn_midi_time_signatures(midi, buf, sizeof buf) == 3);
  CHECK(std::string(buf) == "4/4");

  const auto csv_prefix = tmp.file("dump").string();
  CHECK(sn_midi_dump_csv(midi, csv_prefix.c_str()) == SN_OK);
  CHECK(std::filesystem::exists(csv_prefix + "_roll.csv"));
  CHECK(std::filesystem::exists(csv_prefix + "_velocity.csv"));

  const auto copy = tmp.file("copy.mid");
  CHECK(sn_midi_write(midi, copy.string().c_str()) == SN_OK);
  CHECK(testsupport::read_bytes(copy) == testsupport::read_bytes(path));
  sn_midi_close(midi);
}

TEST_CASE("errors carry a status and a message") {
  sn_midi* midi = nullptr;
  CHECK(sn_midi_open("/no/such/file.mid", &midi) == SN_IO_ERROR);
  CHECK(std::strlen(sn_last_error()) > 0);
  CHECK(sn_midi_open(nullptr, &midi) == SN_INVALID_ARGUMENT);

  const std::uint8_t junk[] = {'n', 'o', 't', 'm', 'i', 'd', 'i'};
  CHECK(sn_midi_from_bytes(junk, sizeof junk, &midi) == SN_PARSE_ERROR);
}

TEST_CASE("curate reports per-genre summaries") {
  CorpusFixture fx;
  sn_genre_summary summaries[2];
  size_t count = 0;
  const char* names[] = {"classical", "jazz"};
  const std::string cdir = fx.tmp.file("classical").string();
  const std::string jdir = fx.tmp.file("jazz").string();
  const char* dirs[] = {cdir.c_str(), jdir.c_str()};
  const std::string out = fx.tmp.file("manifest2.json").string();
  REQUIRE(sn_curate(names, dirs, 2, 20, 0.95, 3, out.c_str(), summaries, 2, &count) == SN_OK);
  REQUIRE(count == 2);
  CHECK(std::string(summaries[0].genre) == "classical");
  CHECK(summaries[0].accepted == 2);
  CHECK(summaries[0].train == 2);
  CHECK(std::string(summaries[1].genre) == "jazz");
  CHECK(testsupport::read_bytes(out) == testsupport::read_bytes(fx.manifest));
}

TEST_CASE("train, inspect the model, and render through the shared library") {
  CorpusFixture fx;
  const sn_train_config config = tiny_config();
  const std::string ckpt = fx.tmp.file("model.ckpt").string();
  const std::string csv = fx.tmp.file("loss.csv").string();

  size_t rows = 0;
  auto progress = [](size_t, const char*, double, double, void* user) {
    ++*static_cast<size_t*>(user);
  };
  REQUIRE(sn_train(fx.manifest.c_str(), &config, ckpt.c_str(), csv.c_str(), nullptr, progress,
                   &rows) == SN_OK);
  CHECK(rows == 4);  // 2 epochs x 2 genres
  CHECK(std::filesystem::exists(csv));

  sn_model* model = nullptr;
  REQUIRE(sn_model_open(ckpt.c_str(), &model) == SN_OK);
  CHECK(sn_model_epoch(model) == 2);
  REQUIRE(sn_model_genre_count(model) == 2);
  CHECK(std::string(sn_model_genre_name(model, 0)) == "classical");
  CHECK(std::string(sn_model_genre_name(model, 1)) == "jazz");
  sn_train_config embedded;
  CHECK(sn_model_config(model, &embedded) == SN_OK);
  CHECK(embedded.window == config.window);
  CHECK(embedded.seed == config.seed);

  stylenet::Rng rng(55);
  const auto spans = testsupport::random_spans(rng, 20, 20);
  const auto score = fx.tmp.file("score.mid");
  stylenet::midi::write_midi_file(testsupport::file_from_spans(spans), score);
  const auto performed = fx.tmp.file("performed.mid");
  CHECK(sn_render(model, score.string().c_str(), "jazz", performed.string().c_str()) == SN_OK);
  CHECK(std::filesystem::exists(performed));

  CHECK(sn_render(model, score.string().c_str(), "polka", performed.string().c_str()) ==
        SN_INVALID_ARGUMENT);
  sn_model_close(model);
}

TEST_CASE("gradcheck runs through the C surface") {
  int pass = -1;
  char report[2048];
  REQUIRE(sn_gradcheck(77, 1e-4, 1, &pass, report, sizeof report) == SN_OK);
  CHECK(pass == 1);
  CHECK(std::string(report).find("stylenet") != std::string::npos);
  CHECK(sn_gradcheck(77, -1.0, 1, &pass, report, sizeof report) == SN_INVALID_ARGUMENT);
}

}  // TEST_SUITE
