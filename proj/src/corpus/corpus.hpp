#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "midi/midi.hpp"

namespace stylenet::corpus {

// Lowercase, unique within a manifest. "classical" and "jazz" are the
// built-in labels the CLI wires up.
using GenreLabel = std::string;

struct Eligibility {
  bool accepted = false;
  std::string reason;  // first failing rule: "format", "time-signature", "velocity-range"
};

struct CorpusEntry {
  std::string path;
  GenreLabel genre;
  std::size_t distinct_velocity_count = 0;
  bool is_4_4 = false;
  int format = 0;
  int division = 0;
  bool accepted = false;
  std::optional<std::string> rejection_reason;
  std::string split;  // "train" or "validation", set only when accepted
};

struct GenreCount {
  GenreLabel genre;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
};

struct DatasetManifest {
  std::vector<CorpusEntry> entries;  // ordered by (genre, path)
  std::size_t threshold = 20;
  double split_ratio = 0.95;
  std::uint64_t seed = 0;
  std::vector<GenreCount> genre_counts;
};

std::size_t distinct_velocities(const std::vector<midi::NoteSpan>& spans);

// Accepted iff format 0, every time-signature event is 4/4 (default 4/4
// when absent) and the file carries at least `threshold` distinct note-on
// velocities.
Eligibility check_eligibility(const midi::MidiFile& file, std::size_t threshold);

bool all_time_signatures_4_4(const midi::MidiFile& file);

struct GenreRoot {
  GenreLabel genre;
  std::filesystem::path directory;
};

// Scans each genre directory for MIDI files, applies the filters, assigns a
// deterministic train/validation split and returns the manifest. Errors if a
// genre directory is missing or contributes no accepted file.
DatasetManifest curate(const std::vector<GenreRoot>& roots, std::size_t threshold,
                       double split_ratio, std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace stylenet::corpus
