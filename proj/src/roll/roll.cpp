#include "roll/roll.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "common/error.hpp"

namespace stylenet::roll {

namespace {

// round(n/d) with ties toward +inf, exact in integers.
std::int64_t round_ratio_half_up(std::int64_t n, std::int64_t d) {
  // floor((2n + d) / (2d)) for d > 0
  const std::int64_t num = 2 * n + d;
  const std::int64_t den = 2 * d;
  std::int64_t q = num / den;
  if (num % den != 0 && num < 0) --q;
  return q;
}

}  // namespace

QuantizedSpan quantize_span(const midi::NoteSpan& span, const GridSpec& grid) {
  if (grid.division == 0) throw InvalidArgument("quantize_span: zero division");
  const auto spq = static_cast<std::int64_t>(grid.steps_per_quarter);
  const auto div = static_cast<std::int64_t>(grid.division);
  QuantizedSpan q;
  q.onset_step = static_cast<std::size_t>(round_ratio_half_up(span.onset_tick * spq, div));
  const std::int64_t dur = round_ratio_half_up(span.duration_ticks * spq, div);
  q.duration_steps = static_cast<std::size_t>(std::max<std::int64_t>(1, dur));
  return q;
}

EncodeResult encode(const std::vector<midi::NoteSpan>& spans, const GridSpec& grid) {
  EncodeResult res;
  std::size_t steps = 0;
  std::vector<QuantizedSpan> quantized(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    quantized[i] = quantize_span(spans[i], grid);
    if (grid.in_range(spans[i].pitch)) {
      steps = std::max(steps, quantized[i].onset_step + quantized[i].duration_steps);
    }
  }

  res.roll.steps = steps;
  res.roll.width = grid.input_width();
  res.roll.data.assign(steps * res.roll.width, 0);
  res.velocities.steps = steps;
  res.velocities.keys = grid.num_keys;
  res.velocities.data.assign(steps * grid.num_keys, 0.0);

  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!grid.in_range(spans[i].pitch)) {
      ++res.dropped_notes;
      continue;
    }
    const std::size_t key = grid.key_of(spans[i].pitch);
    const std::size_t on = quantized[i].onset_step;
    res.roll.at(on, 2 * key) = 1;
    res.roll.at(on, 2 * key + 1) = 1;
    // Same onset cell struck twice: the later-extracted span wins.
    res.velocities.at(on, key) = spans[i].velocity / 127.0;
    for (std::size_t t = on + 1; t < on + quantized[i].duration_steps; ++t) {
      res.roll.at(t, 2 * key + 1) = 1;
    }
  }
  return res;
}

std::vector<std::uint8_t> decode_velocities(const VelocityRoll& velocities,
                                            const std::vector<midi::NoteSpan>& spans,
                                            const GridSpec& grid) {
  std::vector<std::uint8_t> out;
  out.reserve(spans.size());
  for (const midi::NoteSpan& span : spans) {
    if (!grid.in_range(span.pitch)) {
      out.push_back(span.velocity);
      continue;
    }
    const QuantizedSpan q = quantize_span(span, grid);
    if (q.onset_step >= velocities.steps || grid.key_of(span.pitch) >= velocities.keys) {
      throw InvalidArgument("decode_velocities: roll does not cover span");
    }
    const double v = velocities.at(q.onset_step, grid.key_of(span.pitch));
    const long long scaled = std::llround(v * 127.0);
    out.push_back(static_cast<std::uint8_t>(std::clamp<long long>(scaled, 1, 127)));
  }
  return out;
}

void dump_roll_csv(const PianoRoll& roll, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t t = 0; t < roll.steps; ++t) {
    for (std::size_t c = 0; c < roll.width; ++c) {
      if (c) out << ',';
      out << static_cast<int>(roll.at(t, c));
    }
    out << '\n';
  }
}

void dump_velocity_csv(const VelocityRoll& velocities, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  for (std::size_t t = 0; t < velocities.steps; ++t) {
    for (std::size_t k = 0; k < velocities.keys; ++k) {
      if (k) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", velocities.at(t, k));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace stylenet::roll
