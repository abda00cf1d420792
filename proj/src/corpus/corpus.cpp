#include "corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "json.hpp"

#include "common/crc32.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace stylenet::corpus {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::size_t distinct_velocities(const std::vector<midi::NoteSpan>& spans) {
  std::set<std::uint8_t> values;
  for (const midi::NoteSpan& s : spans) values.insert(s.velocity);
  return values.size();
}

bool all_time_signatures_4_4(const midi::MidiFile& file) {
  for (const auto& track : file.tracks) {
    for (const midi::MidiEvent& ev : track) {
      if (const auto* ts = std::get_if<midi::TimeSignature>(&ev.kind)) {
        if (ts->numerator != 4 || ts->denominator_power != 2) return false;
      }
    }
  }
  return true;  // no time-signature event: SMF default is 4/4
}

Eligibility check_eligibility(const midi::MidiFile& file, std::size_t threshold) {
  if (file.format != 0) return {false, "format"};
  if (!all_time_signatures_4_4(file)) return {false, "time-signature"};
  if (distinct_velocities(midi::extract_notes(file).spans) < threshold) {
    return {false, "velocity-range"};
  }
  return {true, ""};
}

namespace {

bool has_midi_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".mid" || ext == ".midi";
}

CorpusEntry scan_file(const fs::path& path, const GenreLabel& genre, std::size_t threshold) {
  CorpusEntry entry;
  entry.path = path.string();
  entry.genre = genre;
  try {
    const midi::MidiFile file = midi::read_midi_file(path);
    entry.format = file.format;
    entry.division = file.division;
    entry.is_4_4 = all_time_signatures_4_4(file);
    entry.distinct_velocity_count = distinct_velocities(midi::extract_notes(file).spans);
    const Eligibility e = check_eligibility(file, threshold);
    entry.accepted = e.accepted;
    if (!e.accepted) entry.rejection_reason = e.reason;
  } catch (const std::exception&) {
    entry.accepted = false;
    entry.rejection_reason = "unreadable";
  }
  return entry;
}

}  // namespace

DatasetManifest curate(const std::vector<GenreRoot>& roots, std::size_t threshold,
                       double split_ratio, std::uint64_t seed) {
  if (roots.empty()) throw InvalidArgument("curate: no genre directories");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw InvalidArgument("curate: split ratio must be in (0,1)");
  }
  for (const GenreRoot& root : roots) {
    for (const GenreRoot& other : roots) {
      if (&root != &other && root.genre == other.genre) {
        throw InvalidArgument("curate: duplicate genre label " + root.genre);
      }
    }
  }

  DatasetManifest manifest;
  manifest.threshold = threshold;
  manifest.split_ratio = split_ratio;
  manifest.seed = seed;

  for (const GenreRoot& root : roots) {
    if (!fs::is_directory(root.directory)) {
      throw InvalidArgument("curate: not a directory: " + root.directory.string());
    }
    std::vector<fs::path> files;
    for (const auto& de : fs::recursive_directory_iterator(root.directory)) {
      if (de.is_regular_file() && has_midi_extension(de.path())) files.push_back(de.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

    std::vector<std::size_t> accepted_indices;
    GenreCount count{root.genre, 0, 0, 0, 0};
    for (const fs::path& p : files) {
      CorpusEntry entry = scan_file(p, root.genre, threshold);
      if (entry.accepted) {
        ++count.accepted;
        accepted_indices.push_back(manifest.entries.size());
      } else {
        ++count.rejected;
      }
      manifest.entries.push_back(std::move(entry));
    }
    if (count.accepted == 0) {
      throw InvalidArgument("curate: no accepted files for genre " + root.genre);
    }

    // Deterministic shuffle, then round(n * ratio) train files, clamped so
    // training is never empty. Tiny corpora may end with no validation.
    Rng rng(seed ^ crc32(root.genre.data(), root.genre.size()));
    rng.shuffle(accepted_indices);
    const auto n = static_cast<double>(accepted_indices.size());
    auto train_count = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(n * split_ratio), 1,
                              static_cast<long long>(accepted_indices.size())));
    count.train = train_count;
    count.validation = accepted_indices.size() - train_count;
    if (count.validation == 0) {
      std::cerr << "warning: genre " << root.genre << " has no validation files\n";
    }
    for (std::size_t i = 0; i < accepted_indices.size(); ++i) {
      manifest.entries[accepted_indices[i]].split = i < train_count ? "train" : "validation";
    }
    manifest.genre_counts.push_back(count);
  }
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  ordered_json j;
  j["threshold"] = manifest.threshold;
  j["split_ratio"] = manifest.split_ratio;
  j["seed"] = manifest.seed;
  ordered_json counts = ordered_json::object();
  for (const GenreCount& c : manifest.genre_counts) {
    counts[c.genre] = {{"accepted", c.accepted},
                       {"rejected", c.rejected},
                       {"train", c.train},
                       {"validation", c.validation}};
  }
  j["genres"] = std::move(counts);
  ordered_json entries = ordered_json::array();
  for (const CorpusEntry& e : manifest.entries) {
    ordered_json je;
    je["path"] = e.path;
    je["genre"] = e.genre;
    je["distinct_velocity_count"] = e.distinct_velocity_count;
    je["is_4_4"] = e.is_4_4;
    je["format"] = e.format;
    je["division"] = e.division;
    je["accepted"] = e.accepted;
    if (e.rejection_reason) je["rejection_reason"] = *e.rejection_reason;
    if (!e.split.empty()) je["split"] = e.split;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad manifest JSON: ") + e.what());
  }
  try {
    DatasetManifest m;
    m.threshold = j.at("threshold").get<std::size_t>();
    m.split_ratio = j.at("split_ratio").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [genre, jc] : j.at("genres").items()) {
      GenreCount c;
      c.genre = genre;
      c.accepted = jc.at("accepted").get<std::size_t>();
      c.rejected = jc.at("rejected").get<std::size_t>();
      c.train = jc.at("train").get<std::size_t>();
      c.validation = jc.at("validation").get<std::size_t>();
      m.genre_counts.push_back(std::move(c));
    }
    for (const auto& je : j.at("entries")) {
      CorpusEntry e;
      e.path = je.at("path").get<std::string>();
      e.genre = je.at("genre").get<std::string>();
      e.distinct_velocity_count = je.at("distinct_velocity_count").get<std::size_t>();
      e.is_4_4 = je.at("is_4_4").get<bool>();
      e.format = je.at("format").get<int>();
      e.division = je.at("division").get<int>();
      e.accepted = je.at("accepted").get<bool>();
      if (je.contains("rejection_reason")) {
        e.rejection_reason = je.at("rejection_reason").get<std::string>();
      }
      if (je.contains("split")) e.split = je.at("split").get<std::string>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad manifest JSON: ") + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest);
  if (!out) throw IoError("short write to " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

}  // namespace stylenet::corpus
