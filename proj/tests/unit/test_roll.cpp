#include "doctest.h"

#include "common/error.hpp"
#include "common/rng.hpp"
#include "fixtures.hpp"
#include "roll/roll.hpp"

using namespace stylenet;

namespace {

roll::GridSpec grid480() {
  roll::GridSpec g;
  g.division = 480;
  return g;
}

}  // namespace

TEST_SUITE("roll") {

TEST_CASE("quantize maps ticks to sixteenth steps") {
  const roll::GridSpec g = grid480();  // 120 ticks per step

  auto q = roll::quantize_span({60, 240, 480, 80, 0}, g);
  CHECK(q.onset_step == 2);
  CHECK(q.duration_steps == 4);

  q = roll::quantize_span({60, 0, 1, 80, 0}, g);
  CHECK(q.onset_step == 0);
  CHECK(q.duration_steps == 1);  // minimum-duration clamp

  q = roll::quantize_span({60, 179, 120, 80, 0}, g);
  CHECK(q.onset_step == 1);  // 179/120 = 1.49...
  CHECK(q.duration_steps == 1);
}

TEST_CASE("quantize rounds half-steps toward positive infinity") {
  const roll::GridSpec g = grid480();
  const auto q = roll::quantize_span({60, 60, 180, 80, 0}, g);  // 0.5 steps, 1.5 steps
  CHECK(q.onset_step == 1);
  CHECK(q.duration_steps == 2);
}

TEST_CASE("quantize handles divisions not divisible by four") {
  roll::GridSpec g;
  g.division = 6;  // 1.5 ticks per step
  auto q = roll::quantize_span({60, 9000003, 3, 80, 0}, g);
  CHECK(q.onset_step == 6000002);  // exact rational arithmetic, no drift
  CHECK(q.duration_steps == 2);
  q = roll::quantize_span({60, 4, 7, 80, 0}, g);
  CHECK(q.onset_step == 3);       // 2.67 rounds up
  CHECK(q.duration_steps == 5);   // 4.67 rounds up
}

TEST_CASE("encode places onset and continuation cells") {
  const roll::GridSpec g = grid480();
  // pitch 60 -> key 39; two steps long
  const roll::EncodeResult r = roll::encode({{60, 0, 240, 127, 0}}, g);
  REQUIRE(r.roll.steps == 2);
  CHECK(r.roll.played(0, 39) == 1);
  CHECK(r.roll.held(0, 39) == 1);
  CHECK(r.velocities.at(0, 39) == 1.0);  // 127/127
  CHECK(r.roll.played(1, 39) == 0);
  CHECK(r.roll.held(1, 39) == 1);
  CHECK(r.velocities.at(1, 39) == 0.0);
  CHECK(r.dropped_notes == 0);
}

TEST_CASE("encode normalizes velocity 1 to 1/127") {
  const roll::GridSpec g = grid480();
  const roll::EncodeResult r = roll::encode({{60, 0, 120, 1, 0}}, g);
  CHECK(r.velocities.at(0, 39) == doctest::Approx(0.007874).epsilon(1e-4));
  CHECK(r.velocities.at(0, 39) == 1.0 / 127.0);
}

TEST_CASE("encode marks a restrike as an onset again") {
  const roll::GridSpec g = grid480();
  const roll::EncodeResult r =
      roll::encode({{60, 0, 480, 80, 0}, {60, 240, 240, 90, 0}}, g);
  CHECK(r.roll.played(2, 39) == 1);
  CHECK(r.roll.held(2, 39) == 1);
  CHECK(r.velocities.at(2, 39) == 90.0 / 127.0);
}

TEST_CASE("encode drops out-of-range pitches and reports the count") {
  const roll::GridSpec g = grid480();
  const roll::EncodeResult r =
      roll::encode({{12, 0, 240, 80, 0}, {60, 0, 240, 90, 0}, {115, 0, 240, 70, 0}}, g);
  CHECK(r.dropped_notes == 2);
  CHECK(r.roll.steps == 2);
}

TEST_CASE("encode of no spans yields empty matrices") {
  const roll::EncodeResult r = roll::encode({}, grid480());
  CHECK(r.roll.steps == 0);
  CHECK(r.velocities.steps == 0);
}

TEST_CASE("later span wins a shared onset cell") {
  const roll::GridSpec g = grid480();
  const roll::EncodeResult r =
      roll::encode({{60, 0, 240, 80, 0}, {60, 0, 240, 90, 1}}, g);
  CHECK(r.velocities.at(0, 39) == 90.0 / 127.0);
  CHECK(r.roll.played(0, 39) == 1);
}

TEST_CASE("decode velocity endpoints and rounding") {
  const roll::GridSpec g = grid480();
  const std::vector<midi::NoteSpan> spans{{60, 0, 120, 64, 0}};
  roll::VelocityRoll v;
  v.steps = 1;
  v.keys = 88;
  v.data.assign(88, 0.0);

  v.at(0, 39) = 1.0;
  CHECK(roll::decode_velocities(v, spans, g)[0] == 127);
  v.at(0, 39) = 0.0;
  CHECK(roll::decode_velocities(v, spans, g)[0] == 1);  // clamp floor
  v.at(0, 39) = 0.5;
  CHECK(roll::decode_velocities(v, spans, g)[0] == 64);  // round(63.5) away from zero
  v.at(0, 39) = -3.0;
  CHECK(roll::decode_velocities(v, spans, g)[0] == 1);
  v.at(0, 39) = 9.0;
  CHECK(roll::decode_velocities(v, spans, g)[0] == 127);
}

TEST_CASE("decode rejects a roll that does not cover the spans") {
  const roll::GridSpec g = grid480();
  const std::vector<midi::NoteSpan> spans{{60, 480, 120, 64, 0}};
  roll::VelocityRoll v;
  v.steps = 1;
  v.keys = 88;
  v.data.assign(88, 0.0);
  CHECK_THROWS_AS(roll::decode_velocities(v, spans, g), InvalidArgument);
}

TEST_CASE("encode/decode returns original velocities exactly") {
  Rng rng(31);
  const roll::GridSpec g = grid480();
  for (int iter = 0; iter < 20; ++iter) {
    const auto spans = testsupport::random_spans(rng, 60, 64);
    const roll::EncodeResult enc = roll::encode(spans, g);
    const std::vector<std::uint8_t> decoded = roll::decode_velocities(enc.velocities, spans, g);
    REQUIRE(decoded.size() == spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
      CHECK(decoded[i] == spans[i].velocity);
    }
  }
}

TEST_CASE("the [1,0] bit pair never occurs") {
  Rng rng(37);
  const roll::GridSpec g = grid480();
  for (int iter = 0; iter < 20; ++iter) {
    // deliberately allows same-pitch overlaps and collisions
    std::vector<midi::NoteSpan> spans;
    for (int i = 0; i < 50; ++i) {
      midi::NoteSpan s;
      s.pitch = static_cast<std::uint8_t>(21 + rng.bounded(88));
      s.onset_tick = static_cast<std::int64_t>(rng.bounded(40)) * 120;
      s.duration_ticks = static_cast<std::int64_t>(1 + rng.bounded(6)) * 120;
      s.velocity = static_cast<std::uint8_t>(1 + rng.bounded(127));
      spans.push_back(s);
    }
    const roll::EncodeResult enc = roll::encode(spans, g);
    for (std::size_t t = 0; t < enc.roll.steps; ++t) {
      for (std::size_t k = 0; k < 88; ++k) {
        const bool bad = enc.roll.played(t, k) == 1 && enc.roll.held(t, k) == 0;
        REQUIRE_FALSE(bad);
        if (enc.velocities.at(t, k) > 0.0) {
          REQUIRE(enc.roll.played(t, k) == 1);  // velocity only at onset cells
        }
      }
    }
  }
}

}  // TEST_SUITE
