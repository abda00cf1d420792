#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace stylenet::midi {

// Channel voice and meta events. Anything the toolkit does not interpret is
// preserved verbatim so files survive a parse/write round trip.
struct NoteOn {
  std::uint8_t channel = 0;  // 0-15
  std::uint8_t pitch = 0;    // 0-127
  std::uint8_t velocity = 0; // 0-127; 0 is semantically a note-off

  bool operator==(const NoteOn&) const = default;
};

struct NoteOff {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 0;

  bool operator==(const NoteOff&) const = default;
};

struct Tempo {
  std::uint32_t microseconds_per_quarter = 500000;

  bool operator==(const Tempo&) const = default;
};

struct TimeSignature {
  std::uint8_t numerator = 4;
  std::uint8_t denominator_power = 2;  // denominator = 2^power
  std::uint8_t clocks_per_click = 24;
  std::uint8_t notated_32nds_per_quarter = 8;

  bool operator==(const TimeSignature&) const = default;
};

struct MetaOther {
  std::uint8_t type = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const MetaOther&) const = default;
};

// Non-meta event passed through untouched (controllers, program change,
// pitch bend, sysex, ...). payload excludes the status byte.
struct Other {
  std::uint8_t status = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Other&) const = default;
};

using EventKind = std::variant<NoteOn, NoteOff, Tempo, TimeSignature, MetaOther, Other>;

struct MidiEvent {
  std::uint32_t delta_ticks = 0;
  EventKind kind;

  bool operator==(const MidiEvent&) const = default;
};

inline constexpr std::uint8_t kMetaEndOfTrack = 0x2F;

bool is_end_of_track(const MidiEvent& ev);
MidiEvent end_of_track(std::uint32_t delta_ticks = 0);

struct MidiFile {
  std::uint16_t format = 0;    // 0, 1 or 2
  std::uint16_t division = 0;  // ticks per quarter note; SMPTE rejected at parse
  std::vector<std::vector<MidiEvent>> tracks;

  bool operator==(const MidiFile&) const = default;
};

// One sounding note, paired from on/off events.
struct NoteSpan {
  std::uint8_t pitch = 0;           // 0-127
  std::int64_t onset_tick = 0;
  std::int64_t duration_ticks = 1;  // >= 1
  std::uint8_t velocity = 1;        // 1-127
  std::uint8_t channel = 0;

  bool operator==(const NoteSpan&) const = default;
};

// Variable-length quantity, 7 bits per byte, high bit = continuation.
struct VlqDecoded {
  std::uint32_t value = 0;
  std::size_t bytes_consumed = 0;
};

VlqDecoded vlq_decode(const std::vector<std::uint8_t>& bytes, std::size_t offset);
std::vector<std::uint8_t> vlq_encode(std::uint32_t value);

inline constexpr std::uint32_t kVlqMax = 0x0FFFFFFF;

MidiFile parse_midi(const std::vector<std::uint8_t>& bytes);
// Every channel event gets an explicit status byte; no running status emitted.
std::vector<std::uint8_t> write_midi(const MidiFile& file);

MidiFile read_midi_file(const std::filesystem::path& path);
void write_midi_file(const MidiFile& file, const std::filesystem::path& path);

struct ExtractResult {
  std::vector<NoteSpan> spans;  // sorted by (onset_tick, pitch)
  std::uint16_t division = 0;
  std::size_t dangling_note_offs = 0;  // offs with no matching open note
};

// Pairs note-ons with the earliest subsequent off of the same pitch+channel
// (FIFO for same-pitch overlaps). Tracks are merged by absolute tick.
// Velocity-0 note-ons count as offs; unterminated notes close at the final
// tick of the merged stream.
ExtractResult extract_notes(const MidiFile& file);

// Replaces each span's note-on velocity, leaving everything else untouched.
// spans must be the extraction result for this file, in extraction order.
MidiFile apply_velocities(const MidiFile& file, const std::vector<NoteSpan>& spans,
                          const std::vector<std::uint8_t>& new_velocities);

}  // namespace stylenet::midi
