#include "doctest.h"

#include <fstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/corpus.hpp"
#include "fixtures.hpp"
#include "midi/midi.hpp"

using namespace stylenet;
using testsupport::FileOptions;
using testsupport::TempDir;

namespace {

void write_fixture(const std::filesystem::path& path, const midi::MidiFile& file) {
  midi::write_midi_file(file, path);
}

void fill_genre_dir(const std::filesystem::path& dir, std::size_t accepted_files,
                    std::size_t rejected_files) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < accepted_files; ++i) {
    write_fixture(dir / ("good_" + std::to_string(i) + ".mid"),
                  testsupport::make_velocity_spread_file(25));
  }
  for (std::size_t i = 0; i < rejected_files; ++i) {
    write_fixture(dir / ("flat_" + std::to_string(i) + ".mid"),
                  testsupport::make_velocity_spread_file(3));
  }
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("distinct_velocities counts unique values") {
  CHECK(corpus::distinct_velocities({}) == 0);

  std::vector<midi::NoteSpan> flat(5, midi::NoteSpan{60, 0, 480, 64, 0});
  CHECK(corpus::distinct_velocities(flat) == 1);

  std::vector<midi::NoteSpan> spread;
  for (int i = 0; i < 25; ++i) {
    spread.push_back({60, i * 480, 480, static_cast<std::uint8_t>(10 + i * 4), 0});
  }
  CHECK(corpus::distinct_velocities(spread) == 25);
}

TEST_CASE("eligibility rejects non-format-0 first") {
  midi::MidiFile f = testsupport::make_velocity_spread_file(3);  // would also fail velocity
  f.format = 1;
  f.tracks.push_back({midi::end_of_track()});
  const corpus::Eligibility e = corpus::check_eligibility(f, 20);
  CHECK_FALSE(e.accepted);
  CHECK(e.reason == "format");
}

TEST_CASE("eligibility accepts a compliant file") {
  const midi::MidiFile f = testsupport::make_velocity_spread_file(25);
  const corpus::Eligibility e = corpus::check_eligibility(f, 20);
  CHECK(e.accepted);
}

TEST_CASE("eligibility rejects narrow velocity range") {
  const midi::MidiFile f = testsupport::make_velocity_spread_file(10);
  const corpus::Eligibility e = corpus::check_eligibility(f, 20);
  CHECK_FALSE(e.accepted);
  CHECK(e.reason == "velocity-range");
}

TEST_CASE("eligibility rejects non-4/4 time signatures") {
  FileOptions options;
  options.ts_numerator = 3;
  midi::MidiFile f = testsupport::make_file({{0, 480, 60, 80}}, options);
  const corpus::Eligibility e = corpus::check_eligibility(f, 1);
  CHECK_FALSE(e.accepted);
  CHECK(e.reason == "time-signature");
}

TEST_CASE("files without a time signature default to 4/4") {
  FileOptions options;
  options.with_time_signature = false;
  midi::MidiFile f = testsupport::make_file({{0, 480, 60, 80}}, options);
  CHECK(corpus::all_time_signatures_4_4(f));
}

TEST_CASE("eligibility matches the predicates on randomized files") {
  Rng rng(23);
  for (int iter = 0; iter < 40; ++iter) {
    FileOptions options;
    options.format = rng.bounded(2) ? 1 : 0;
    options.ts_numerator = rng.bounded(2) ? 4 : 3;
    const std::size_t distinct = 1 + rng.bounded(30);
    midi::MidiFile f = testsupport::make_velocity_spread_file(distinct);
    f.format = options.format;
    if (options.format == 1) f.tracks.push_back({midi::end_of_track()});
    if (options.ts_numerator != 4) {
      f.tracks[0][0] = {0, midi::TimeSignature{options.ts_numerator, 2, 24, 8}};
    }
    const corpus::Eligibility e = corpus::check_eligibility(f, 20);
    const bool expect = options.format == 0 && options.ts_numerator == 4 && distinct >= 20;
    CHECK(e.accepted == expect);
    if (!expect) {
      if (options.format != 0) {
        CHECK(e.reason == "format");
      } else if (options.ts_numerator != 4) {
        CHECK(e.reason == "time-signature");
      } else {
        CHECK(e.reason == "velocity-range");
      }
    }
  }
}

TEST_CASE("curate splits 20 accepted files as 19 train + 1 validation") {
  TempDir tmp("curate_split");
  fill_genre_dir(tmp.file("classical"), 20, 2);
  fill_genre_dir(tmp.file("jazz"), 20, 0);
  const corpus::DatasetManifest m =
      corpus::curate({{"classical", tmp.file("classical")}, {"jazz", tmp.file("jazz")}}, 20,
                     0.95, 42);
  REQUIRE(m.genre_counts.size() == 2);
  for (const corpus::GenreCount& c : m.genre_counts) {
    CHECK(c.accepted == 20);
    CHECK(c.train == 19);
    CHECK(c.validation == 1);
  }
  CHECK(m.genre_counts[0].rejected == 2);
  std::size_t train = 0, val = 0;
  for (const auto& e : m.entries) {
    if (e.split == "train") ++train;
    if (e.split == "validation") ++val;
    if (e.accepted) {
      CHECK(e.format == 0);
      CHECK(e.is_4_4);
      CHECK(e.distinct_velocity_count >= 20);
      CHECK_FALSE(e.split.empty());
    } else {
      CHECK(e.split.empty());
      CHECK(e.rejection_reason.has_value());
    }
  }
  CHECK(train == 38);
  CHECK(val == 2);
}

TEST_CASE("curate keeps a lone file in training and warns") {
  TempDir tmp("curate_lone");
  fill_genre_dir(tmp.file("classical"), 1, 0);
  fill_genre_dir(tmp.file("jazz"), 1, 0);
  const corpus::DatasetManifest m =
      corpus::curate({{"classical", tmp.file("classical")}, {"jazz", tmp.file("jazz")}}, 20,
                     0.95, 0);
  for (const corpus::GenreCount& c : m.genre_counts) {
    CHECK(c.train == 1);
    CHECK(c.validation == 0);
  }
}

TEST_CASE("curate rejects a genre with no accepted files") {
  TempDir tmp("curate_empty");
  std::filesystem::create_directories(tmp.file("classical"));
  fill_genre_dir(tmp.file("jazz"), 2, 0);
  CHECK_THROWS_AS(
      corpus::curate({{"classical", tmp.file("classical")}, {"jazz", tmp.file("jazz")}}, 20,
                     0.95, 0),
      InvalidArgument);
}

TEST_CASE("curate rejects a missing directory") {
  TempDir tmp("curate_missing");
  fill_genre_dir(tmp.file("jazz"), 2, 0);
  CHECK_THROWS_AS(
      corpus::curate({{"classical", tmp.file("nope")}, {"jazz", tmp.file("jazz")}}, 20, 0.95, 0),
      InvalidArgument);
}

TEST_CASE("curate records unreadable files") {
  TempDir tmp("curate_bad");
  fill_genre_dir(tmp.file("classical"), 2, 0);
  {
    std::ofstream junk(tmp.file("classical") / "junk.mid", std::ios::binary);
    junk << "not midi";
  }
  const corpus::DatasetManifest m =
      corpus::curate({{"classical", tmp.file("classical")}}, 20, 0.95, 0);
  bool found = false;
  for (const auto& e : m.entries) {
    if (e.rejection_reason && *e.rejection_reason == "unreadable") found = true;
  }
  CHECK(found);
}

TEST_CASE("curate is byte-stable under a fixed seed") {
  TempDir tmp("curate_stable");
  fill_genre_dir(tmp.file("classical"), 8, 1);
  fill_genre_dir(tmp.file("jazz"), 6, 0);
  const std::vector<corpus::GenreRoot> roots{{"classical", tmp.file("classical")},
                                             {"jazz", tmp.file("jazz")}};
  const std::string a = corpus::manifest_to_json(corpus::curate(roots, 20, 0.9, 7));
  const std::string b = corpus::manifest_to_json(corpus::curate(roots, 20, 0.9, 7));
  CHECK(a == b);
  const std::string c = corpus::manifest_to_json(corpus::curate(roots, 20, 0.9, 8));
  CHECK(a != c);  // the seed moves the split
}

TEST_CASE("manifest json round trips") {
  TempDir tmp("manifest_rt");
  fill_genre_dir(tmp.file("classical"), 3, 1);
  fill_genre_dir(tmp.file("jazz"), 3, 0);
  const corpus::DatasetManifest m =
      corpus::curate({{"classical", tmp.file("classical")}, {"jazz", tmp.file("jazz")}}, 20,
                     0.95, 3);
  const std::string json = corpus::manifest_to_json(m);
  const corpus::DatasetManifest back = corpus::manifest_from_json(json);
  CHECK(corpus::manifest_to_json(back) == json);
  CHECK(back.entries.size() == m.entries.size());
  CHECK(back.threshold == m.threshold);
  CHECK_THROWS_AS(corpus::manifest_from_json("{"), ParseError);
}

}  // TEST_SUITE
