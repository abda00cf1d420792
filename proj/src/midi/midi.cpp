#include "midi/midi.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>

#include "common/error.hpp"

namespace stylenet::midi {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw ParseError("malformed MIDI: " + what); }

class ByteReader {
public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= end_; }

  std::uint8_t peek() const {
    if (pos_ >= end_) malformed("truncated chunk");
    return bytes_[pos_];
  }

  std::uint8_t u8() {
    if (pos_ >= end_) malformed("truncated chunk");
    return bytes_[pos_++];
  }

  std::uint16_t u16() {
    const std::uint16_t hi = u8();
    return static_cast<std::uint16_t>(hi << 8 | u8());
  }

  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return hi << 16 | u16();
  }

  std::vector<std::uint8_t> take(std::size_t n) {
    if (end_ - pos_ < n) malformed("truncated chunk");
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::uint32_t vlq() {
    const VlqDecoded d = vlq_decode(bytes_, pos_);
    if (pos_ + d.bytes_consumed > end_) malformed("truncated chunk");
    pos_ += d.bytes_consumed;
    return d.value;
  }

private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

std::size_t channel_data_length(std::uint8_t status) {
  const std::uint8_t type = status & 0xF0;
  return (type == 0xC0 || type == 0xD0) ? 1 : 2;
}

std::uint8_t data_byte(ByteReader& r) {
  const std::uint8_t b = r.u8();
  if (b >= 0x80) malformed("data byte with high bit set");
  return b;
}

MidiEvent make_channel_event(std::uint32_t delta, std::uint8_t status, ByteReader& r) {
  MidiEvent ev;
  ev.delta_ticks = delta;
  const std::uint8_t type = status & 0xF0;
  const auto channel = static_cast<std::uint8_t>(status & 0x0F);
  if (type == 0x90) {
    const std::uint8_t pitch = data_byte(r);
    const std::uint8_t velocity = data_byte(r);
    ev.kind = NoteOn{channel, pitch, velocity};
  } else if (type == 0x80) {
    const std::uint8_t pitch = data_byte(r);
    const std::uint8_t velocity = data_byte(r);
    ev.kind = NoteOff{channel, pitch, velocity};
  } else {
    Other other;
    other.status = status;
    const std::size_t n = channel_data_length(status);
    for (std::size_t i = 0; i < n; ++i) other.payload.push_back(data_byte(r));
    ev.kind = std::move(other);
  }
  return ev;
}

MidiEvent make_meta_event(std::uint32_t delta, ByteReader& r) {
  MidiEvent ev;
  ev.delta_ticks = delta;
  const std::uint8_t type = r.u8();
  const std::uint32_t len = r.vlq();
  std::vector<std::uint8_t> payload = r.take(len);
  if (type == 0x51 && len == 3) {
    ev.kind = Tempo{static_cast<std::uint32_t>(payload[0]) << 16 |
                    static_cast<std::uint32_t>(payload[1]) << 8 | payload[2]};
  } else if (type == 0x58 && len == 4) {
    ev.kind = TimeSignature{payload[0], payload[1], payload[2], payload[3]};
  } else {
    ev.kind = MetaOther{type, std::move(payload)};
  }
  return ev;
}

std::vector<MidiEvent> parse_track(ByteReader& r) {
  std::vector<MidiEvent> events;
  std::uint8_t running_status = 0;
  while (true) {
    if (r.at_end()) malformed("track missing end-of-track");
    const std::uint32_t delta = r.vlq();
    std::uint8_t status = r.peek();
    if (status >= 0x80) {
      r.u8();
    } else {
      if (running_status == 0) malformed("event before any status byte");
      status = running_status;
    }

    if (status == 0xFF) {
      running_status = 0;
      MidiEvent ev = make_meta_event(delta, r);
      const bool end = is_end_of_track(ev);
      events.push_back(std::move(ev));
      if (end) {
        if (!r.at_end()) malformed("data after end-of-track");
        return events;
      }
    } else if (status == 0xF0 || status == 0xF7) {
      running_status = 0;
      const std::uint32_t len = r.vlq();
      events.push_back(MidiEvent{delta, Other{status, r.take(len)}});
    } else if (status >= 0xF1) {
      malformed("system common event in file");
    } else {
      events.push_back(make_channel_event(delta, status, r));
      running_status = status;
    }
  }
}

class ByteWriter {
public:
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void raw(const std::vector<std::uint8_t>& v) { bytes.insert(bytes.end(), v.begin(), v.end()); }
  void vlq(std::uint32_t v) { raw(vlq_encode(v)); }
};

void check_range(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("write_midi: " + what);
}

void write_event(ByteWriter& w, const MidiEvent& ev) {
  check_range(ev.delta_ticks <= kVlqMax, "delta ticks out of range");
  w.vlq(ev.delta_ticks);
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, NoteOn>) {
          check_range(e.channel <= 15 && e.pitch <= 127 && e.velocity <= 127,
                      "note-on field out of range");
          w.u8(static_cast<std::uint8_t>(0x90 | e.channel));
          w.u8(e.pitch);
          w.u8(e.velocity);
        } else if constexpr (std::is_same_v<T, NoteOff>) {
          check_range(e.channel <= 15 && e.pitch <= 127 && e.velocity <= 127,
                      "note-off field out of range");
          w.u8(static_cast<std::uint8_t>(0x80 | e.channel));
          w.u8(e.pitch);
          w.u8(e.velocity);
        } else if constexpr (std::is_same_v<T, Tempo>) {
          check_range(e.microseconds_per_quarter <= 0xFFFFFF, "tempo out of range");
          w.u8(0xFF);
          w.u8(0x51);
          w.u8(3);
          w.u8(static_cast<std::uint8_t>(e.microseconds_per_quarter >> 16));
          w.u8(static_cast<std::uint8_t>(e.microseconds_per_quarter >> 8));
          w.u8(static_cast<std::uint8_t>(e.microseconds_per_quarter));
        } else if constexpr (std::is_same_v<T, TimeSignature>) {
          w.u8(0xFF);
          w.u8(0x58);
          w.u8(4);
          w.u8(e.numerator);
          w.u8(e.denominator_power);
          w.u8(e.clocks_per_click);
          w.u8(e.notated_32nds_per_quarter);
        } else if constexpr (std::is_same_v<T, MetaOther>) {
          check_range(e.payload.size() <= kVlqMax, "meta payload too large");
          w.u8(0xFF);
          w.u8(e.type);
          w.vlq(static_cast<std::uint32_t>(e.payload.size()));
          w.raw(e.payload);
        } else if constexpr (std::is_same_v<T, Other>) {
          check_range(e.status >= 0x80 && (e.status < 0xF0 || e.status == 0xF0 ||
                                           e.status == 0xF7),
                      "bad raw event status");
          w.u8(e.status);
          if (e.status == 0xF0 || e.status == 0xF7) {
            check_range(e.payload.size() <= kVlqMax, "sysex payload too large");
            w.vlq(static_cast<std::uint32_t>(e.payload.size()));
            w.raw(e.payload);
          } else {
            check_range(e.payload.size() == channel_data_length(e.status),
                        "channel event payload length mismatch");
            for (std::uint8_t b : e.payload) {
              check_range(b <= 127, "data byte out of range");
              w.u8(b);
            }
          }
        }
      },
      ev.kind);
}

// One paired note with the location of its note-on event.
struct PairedNote {
  NoteSpan span;
  std::size_t track = 0;
  std::size_t event = 0;
};

std::pair<std::vector<PairedNote>, std::size_t> pair_notes(const MidiFile& file) {
  struct Located {
    std::int64_t tick;
    std::size_t track;
    std::size_t event;
    const MidiEvent* ev;
  };
  std::vector<Located> merged;
  for (std::size_t ti = 0; ti < file.tracks.size(); ++ti) {
    std::int64_t tick = 0;
    for (std::size_t ei = 0; ei < file.tracks[ti].size(); ++ei) {
      tick += file.tracks[ti][ei].delta_ticks;
      merged.push_back({tick, ti, ei, &file.tracks[ti][ei]});
    }
  }
  std::sort(merged.begin(), merged.end(), [](const Located& a, const Located& b) {
    return std::tie(a.tick, a.track, a.event) < std::tie(b.tick, b.track, b.event);
  });
  std::int64_t final_tick = 0;
  for (const Located& l : merged) final_tick = std::max(final_tick, l.tick);

  std::vector<PairedNote> notes;
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::deque<std::size_t>> open;  // (pitch, ch)
  std::size_t dangling = 0;

  auto close_note = [&](std::uint8_t pitch, std::uint8_t channel, std::int64_t tick) {
    auto it = open.find({pitch, channel});
    if (it == open.end() || it->second.empty()) {
      ++dangling;
      return;
    }
    PairedNote& note = notes[it->second.front()];
    it->second.pop_front();
    note.span.duration_ticks = std::max<std::int64_t>(1, tick - note.span.onset_tick);
  };

  for (const Located& l : merged) {
    if (const auto* on = std::get_if<NoteOn>(&l.ev->kind)) {
      if (on->velocity == 0) {
        close_note(on->pitch, on->channel, l.tick);
      } else {
        PairedNote note;
        note.span = NoteSpan{on->pitch, l.tick, 0, on->velocity, on->channel};
        note.track = l.track;
        note.event = l.event;
        open[{on->pitch, on->channel}].push_back(notes.size());
        notes.push_back(note);
      }
    } else if (const auto* off = std::get_if<NoteOff>(&l.ev->kind)) {
      close_note(off->pitch, off->channel, l.tick);
    }
  }
  // Unterminated notes close at the final tick of the merged stream.
  for (PairedNote& note : notes) {
    if (note.span.duration_ticks == 0) {
      note.span.duration_ticks = std::max<std::int64_t>(1, final_tick - note.span.onset_tick);
    }
  }
  std::stable_sort(notes.begin(), notes.end(), [](const PairedNote& a, const PairedNote& b) {
    return std::tie(a.span.onset_tick, a.span.pitch) < std::tie(b.span.onset_tick, b.span.pitch);
  });
  return {std::move(notes), dangling};
}

}  // namespace

bool is_end_of_track(const MidiEvent& ev) {
  const auto* meta = std::get_if<MetaOther>(&ev.kind);
  return meta != nullptr && meta->type == kMetaEndOfTrack;
}

MidiEvent end_of_track(std::uint32_t delta_ticks) {
  return MidiEvent{delta_ticks, MetaOther{kMetaEndOfTrack, {}}};
}

VlqDecoded vlq_decode(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  VlqDecoded out;
  for (std::size_t i = 0;; ++i) {
    if (i >= 4) malformed("variable-length quantity longer than 4 bytes");
    if (offset + i >= bytes.size()) malformed("truncated variable-length quantity");
    const std::uint8_t b = bytes[offset + i];
    out.value = out.value << 7 | (b & 0x7F);
    ++out.bytes_consumed;
    if ((b & 0x80) == 0) break;
  }
  return out;
}

std::vector<std::uint8_t> vlq_encode(std::uint32_t value) {
  if (value > kVlqMax) throw InvalidArgument("vlq_encode: value out of range");
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(value & 0x7F));
  value >>= 7;
  while (value != 0) {
    out.push_back(static_cast<std::uint8_t>((value & 0x7F) | 0x80));
    value >>= 7;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

MidiFile parse_midi(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, 0, bytes.size());
  if (bytes.size() < 8 || bytes[0] != 'M' || bytes[1] != 'T' || bytes[2] != 'h' || bytes[3] != 'd') {
    malformed("missing MThd header");
  }
  r.take(4);
  if (r.u32() != 6) malformed("bad MThd length");
  MidiFile file;
  file.format = r.u16();
  if (file.format > 2) malformed("unknown format");
  const std::uint16_t declared_tracks = r.u16();
  const std::uint16_t division = r.u16();
  if (division & 0x8000) malformed("SMPTE division unsupported");
  if (division == 0) malformed("zero division");
  file.division = division;

  for (std::uint16_t t = 0; t < declared_tracks; ++t) {
    while (true) {
      const std::vector<std::uint8_t> tag = r.take(4);
      const std::uint32_t len = r.u32();
      if (tag[0] == 'M' && tag[1] == 'T' && tag[2] == 'r' && tag[3] == 'k') {
        if (r.pos() + len > bytes.size()) malformed("truncated chunk");
        ByteReader track_reader(bytes, r.pos(), r.pos() + len);
        file.tracks.push_back(parse_track(track_reader));
        r.take(len);
        break;
      }
      r.take(len);  // unknown chunk, skip
    }
  }
  if (file.tracks.empty()) malformed("no tracks");
  return file;
}

std::vector<std::uint8_t> write_midi(const MidiFile& file) {
  check_range(file.format <= 2, "unknown format");
  check_range(file.division >= 1 && file.division <= 0x7FFF, "division out of range");
  check_range(!file.tracks.empty(), "no tracks");
  check_range(file.format != 0 || file.tracks.size() == 1, "format 0 requires a single track");
  check_range(file.tracks.size() <= 0xFFFF, "too many tracks");

  ByteWriter w;
  w.raw({'M', 'T', 'h', 'd'});
  w.u32(6);
  w.u16(file.format);
  w.u16(static_cast<std::uint16_t>(file.tracks.size()));
  w.u16(file.division);
  for (const auto& track : file.tracks) {
    check_range(!track.empty() && is_end_of_track(track.back()),
                "track must end with end-of-track");
    for (std::size_t i = 0; i + 1 < track.size(); ++i) {
      check_range(!is_end_of_track(track[i]), "end-of-track before the final event");
    }
    ByteWriter body;
    for (const MidiEvent& ev : track) write_event(body, ev);
    w.raw({'M', 'T', 'r', 'k'});
    w.u32(static_cast<std::uint32_t>(body.bytes.size()));
    w.raw(body.bytes);
  }
  return w.bytes;
}

MidiFile read_midi_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_midi(bytes);
}

void write_midi_file(const MidiFile& file, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = write_midi(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ExtractResult extract_notes(const MidiFile& file) {
  auto [notes, dangling] = pair_notes(file);
  ExtractResult res;
  res.division = file.division;
  res.dangling_note_offs = dangling;
  res.spans.reserve(notes.size());
  for (const PairedNote& n : notes) res.spans.push_back(n.span);
  return res;
}

MidiFile apply_velocities(const MidiFile& file, const std::vector<NoteSpan>& spans,
                          const std::vector<std::uint8_t>& new_velocities) {
  if (spans.size() != new_velocities.size()) {
    throw InvalidArgument("apply_velocities: one velocity required per span");
  }
  auto [notes, dangling] = pair_notes(file);
  (void)dangling;
  if (notes.size() != spans.size()) {
    throw InvalidArgument("apply_velocities: spans do not match file");
  }
  MidiFile out = file;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const NoteSpan& expect = notes[i].span;
    const NoteSpan& given = spans[i];
    if (expect.pitch != given.pitch || expect.onset_tick != given.onset_tick ||
        expect.channel != given.channel) {
      throw InvalidArgument("apply_velocities: spans do not match file");
    }
    if (new_velocities[i] < 1 || new_velocities[i] > 127) {
      throw InvalidArgument("apply_velocities: velocity out of range");
    }
    auto& kind = out.tracks[notes[i].track][notes[i].event].kind;
    std::get<NoteOn>(kind).velocity = new_velocities[i];
  }
  return out;
}

}  // namespace stylenet::midi
