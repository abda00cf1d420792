#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "common/rng.hpp"
#include "midi/midi.hpp"

namespace testsupport {

// One scheduled note for fixture construction.
struct NoteEvent {
  std::int64_t on_tick = 0;
  std::int64_t off_tick = 0;
  std::uint8_t pitch = 60;
  std::uint8_t velocity = 64;
  std::uint8_t channel = 0;
};

struct FileOptions {
  std::uint16_t division = 480;
  std::uint16_t format = 0;
  bool with_time_signature = true;
  std::uint8_t ts_numerator = 4;
  std::uint8_t ts_denominator_power = 2;
};

// Single-track file: optional time signature, tempo, then the notes (offs
// before ons at equal ticks), closed by end-of-track at the last tick.
stylenet::midi::MidiFile make_file(const std::vector<NoteEvent>& notes,
                                   const FileOptions& options = {});

// n notes with n distinct velocities (1..n), one per sixteenth step.
stylenet::midi::MidiFile make_velocity_spread_file(std::size_t n_distinct,
                                                   std::uint16_t division = 480);

// Random grid-aligned spans over the 88 keys with unique onset cells and no
// same-pitch overlap, so encode/decode and extraction round-trip exactly.
std::vector<stylenet::midi::NoteSpan> random_spans(stylenet::Rng& rng, std::size_t count,
                                                   std::size_t max_steps,
                                                   std::uint16_t division = 480);

stylenet::midi::MidiFile file_from_spans(const std::vector<stylenet::midi::NoteSpan>& spans,
                                         const FileOptions& options = {});

// Unique writable directory under the test working directory, removed on
// destruction.
class TempDir {
public:
  explicit TempDir(const std::string& label);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace testsupport
