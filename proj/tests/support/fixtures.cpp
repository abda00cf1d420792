#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>

#include "common/error.hpp"

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace testsupport {

using namespace stylenet;

midi::MidiFile make_file(const std::vector<NoteEvent>& notes, const FileOptions& options) {
  struct Scheduled {
    std::int64_t tick;
    int order;  // offs (0) before ons (1) at equal ticks
    std::size_t seq;
    midi::EventKind kind;
  };
  std::vector<Scheduled> scheduled;
  std::size_t seq = 0;
  for (const NoteEvent& n : notes) {
    scheduled.push_back({n.on_tick, 1, seq++, midi::NoteOn{n.channel, n.pitch, n.velocity}});
    scheduled.push_back({n.off_tick, 0, seq++, midi::NoteOff{n.channel, n.pitch, 0}});
  }
  std::sort(scheduled.begin(), scheduled.end(), [](const Scheduled& a, const Scheduled& b) {
    return std::tie(a.tick, a.order, a.seq) < std::tie(b.tick, b.order, b.seq);
  });

  std::vector<midi::MidiEvent> track;
  if (options.with_time_signature) {
    track.push_back({0, midi::TimeSignature{options.ts_numerator, options.ts_denominator_power,
                                            24, 8}});
  }
  track.push_back({0, midi::Tempo{500000}});
  std::int64_t at = 0;
  for (const Scheduled& s : scheduled) {
    track.push_back({static_cast<std::uint32_t>(s.tick - at), s.kind});
    at = s.tick;
  }
  track.push_back(midi::end_of_track(0));

  midi::MidiFile file;
  file.format = options.format;
  file.division = options.division;
  file.tracks.push_back(std::move(track));
  if (options.format != 0) {
    // a second track keeps multi-track fixtures honest
    file.tracks.push_back({midi::end_of_track(0)});
  }
  return file;
}

midi::MidiFile make_velocity_spread_file(std::size_t n_distinct, std::uint16_t division) {
  std::vector<NoteEvent> notes;
  const std::int64_t step = division / 4;
  for (std::size_t i = 0; i < n_distinct; ++i) {
    NoteEvent n;
    n.on_tick = static_cast<std::int64_t>(i) * step;
    n.off_tick = n.on_tick + step;
    n.pitch = static_cast<std::uint8_t>(60 + i % 12);
    n.velocity = static_cast<std::uint8_t>(1 + i % 127);
    notes.push_back(n);
  }
  return make_file(notes, {division, 0, true, 4, 2});
}

std::vector<midi::NoteSpan> random_spans(Rng& rng, std::size_t count, std::size_t max_steps,
                                         std::uint16_t division) {
  const std::int64_t ticks_per_step = division / 4;
  std::vector<midi::NoteSpan> spans;
  std::set<std::pair<std::uint8_t, std::size_t>> used;      // (pitch, onset step)
  std::vector<std::size_t> next_free(128, 0);               // per-pitch earliest step
  std::size_t attempts = 0;
  while (spans.size() < count && attempts < count * 50) {
    ++attempts;
    const auto pitch = static_cast<std::uint8_t>(21 + rng.bounded(88));
    const std::size_t duration = 1 + rng.bounded(4);
    std::size_t onset = rng.bounded(max_steps);
    onset = std::max(onset, next_free[pitch]);
    if (onset + duration > max_steps + 8) continue;
    if (used.count({pitch, onset})) continue;
    used.insert({pitch, onset});
    next_free[pitch] = onset + duration;
    midi::NoteSpan s;
    s.pitch = pitch;
    s.onset_tick = static_cast<std::int64_t>(onset) * ticks_per_step;
    s.duration_ticks = static_cast<std::int64_t>(duration) * ticks_per_step;
    s.velocity = static_cast<std::uint8_t>(1 + rng.bounded(127));
    s.channel = 0;
    spans.push_back(s);
  }
  std::sort(spans.begin(), spans.end(), [](const midi::NoteSpan& a, const midi::NoteSpan& b) {
    return std::tie(a.onset_tick, a.pitch) < std::tie(b.onset_tick, b.pitch);
  });
  return spans;
}

midi::MidiFile file_from_spans(const std::vector<midi::NoteSpan>& spans,
                               const FileOptions& options) {
  std::vector<NoteEvent> notes;
  for (const midi::NoteSpan& s : spans) {
    NoteEvent n;
    n.on_tick = s.onset_tick;
    n.off_tick = s.onset_tick + s.duration_ticks;
    n.pitch = s.pitch;
    n.velocity = s.velocity;
    n.channel = s.channel;
    notes.push_back(n);
  }
  return make_file(notes, options);
}

TempDir::TempDir(const std::string& label) {
  static std::atomic<unsigned> counter{0};
  const unsigned id = counter.fetch_add(1);
#ifdef _WIN32
  const int pid = _getpid();
#else
  const int pid = getpid();
#endif
  path_ = std::filesystem::current_path() /
          ("sn_test_" + label + "_" + std::to_string(pid) + "_" + std::to_string(id));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

}  // namespace testsupport
