#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "midi/midi.hpp"

namespace stylenet::roll {

// Sixteenth-note grid over the 88 piano keys (MIDI 21-108). ticks_per_step
// is division/4, kept as the exact rational division : steps_per_quarter.
struct GridSpec {
  std::uint16_t division = 480;
  std::uint32_t steps_per_quarter = 4;
  std::size_t num_keys = 88;
  std::uint8_t lowest_pitch = 21;

  std::size_t input_width() const { return num_keys * 2; }
  bool in_range(std::uint8_t pitch) const {
    return pitch >= lowest_pitch && pitch < lowest_pitch + num_keys;
  }
  std::size_t key_of(std::uint8_t pitch) const { return pitch - lowest_pitch; }
};

// T x 176 note-state bits. Per key the (played, held) pair is one of
// [1,1] onset, [0,1] sustained, [0,0] silent; [1,0] never occurs.
struct PianoRoll {
  std::size_t steps = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;  // row-major, steps x width

  std::uint8_t at(std::size_t t, std::size_t col) const { return data[t * width + col]; }
  std::uint8_t& at(std::size_t t, std::size_t col) { return data[t * width + col]; }
  std::uint8_t played(std::size_t t, std::size_t key) const { return at(t, 2 * key); }
  std::uint8_t held(std::size_t t, std::size_t key) const { return at(t, 2 * key + 1); }
};

// T x 88 velocities scaled to [0,1]; nonzero only at onset cells.
struct VelocityRoll {
  std::size_t steps = 0;
  std::size_t keys = 0;
  std::vector<double> data;

  double at(std::size_t t, std::size_t key) const { return data[t * keys + key]; }
  double& at(std::size_t t, std::size_t key) { return data[t * keys + key]; }
};

struct QuantizedSpan {
  std::size_t onset_step = 0;
  std::size_t duration_steps = 1;
};

// Nearest grid step, ties toward +inf; duration clamped to >= 1 step.
QuantizedSpan quantize_span(const midi::NoteSpan& span, const GridSpec& grid);

struct EncodeResult {
  PianoRoll roll;
  VelocityRoll velocities;
  std::size_t dropped_notes = 0;  // pitches outside the key range
};

EncodeResult encode(const std::vector<midi::NoteSpan>& spans, const GridSpec& grid);

// Reads the predicted velocity at each span's onset cell and rescales to
// 1..127. Spans outside the key range keep their original velocity.
std::vector<std::uint8_t> decode_velocities(const VelocityRoll& velocities,
                                            const std::vector<midi::NoteSpan>& spans,
                                            const GridSpec& grid);

void dump_roll_csv(const PianoRoll& roll, const std::filesystem::path& path);
void dump_velocity_csv(const VelocityRoll& velocities, const std::filesystem::path& path);

}  // namespace stylenet::roll
