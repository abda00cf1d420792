#include "stylenet.h"

#include <cstring>
#include <string>

#include "common/error.hpp"
#include "corpus/corpus.hpp"
#include "midi/midi.hpp"
#include "model/checkpoint.hpp"
#include "model/gradcheck_suite.hpp"
#include "model/train.hpp"
#include "roll/roll.hpp"

using namespace stylenet;

namespace {

thread_local std::string g_last_error;

sn_status fail(sn_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the core exception taxonomy onto status codes.
template <typename Fn>
sn_status guarded(Fn&& fn) {
  try {
    fn();
    return SN_OK;
  } catch (const InvalidArgument& e) {
    return fail(SN_INVALID_ARGUMENT, e.what());
  } catch (const ParseError& e) {
    return fail(SN_PARSE_ERROR, e.what());
  } catch (const IoError& e) {
    return fail(SN_IO_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(SN_ERROR, e.what());
  }
}

sn_status require_arg(bool ok, const char* what) {
  return ok ? SN_OK : fail(SN_INVALID_ARGUMENT, what);
}

size_t copy_out(const std::string& text, char* buf, size_t cap) {
  if (buf == nullptr || cap == 0) return 0;
  const size_t n = text.size() < cap - 1 ? text.size() : cap - 1;
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
  return n;
}

}  // namespace

struct sn_midi {
  midi::MidiFile file;
};

struct sn_model {
  model::Checkpoint checkpoint;
  std::vector<std::string> genres;
};

const char* sn_last_error(void) { return g_last_error.c_str(); }

sn_status sn_midi_open(const char* path, sn_midi** out) {
  if (require_arg(path && out, "sn_midi_open: null argument") != SN_OK) return SN_INVALID_ARGUMENT;
  return guarded([&] { *out = new sn_midi{midi::read_midi_file(path)}; });
}

sn_status sn_midi_from_bytes(const uint8_t* data, size_t size, sn_midi** out) {
  if (require_arg((data || size == 0) && out, "sn_midi_from_bytes: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    std::vector<std::uint8_t> bytes(data, data + size);
    *out = new sn_midi{midi::parse_midi(bytes)};
  });
}

void sn_midi_close(sn_midi* midi) { delete midi; }

int sn_midi_format(const sn_midi* midi) { return midi ? midi->file.format : -1; }

int sn_midi_division(const sn_midi* midi) { return midi ? midi->file.division : -1; }

int sn_midi_is_4_4(const sn_midi* midi) {
  return midi && corpus::all_time_signatures_4_4(midi->file) ? 1 : 0;
}

size_t sn_midi_note_count(const sn_midi* midi) {
  return midi ? midi::extract_notes(midi->file).spans.size() : 0;
}

size_t sn_midi_distinct_velocities(const sn_midi* midi) {
  return midi ? corpus::distinct_velocities(midi::extract_notes(midi->file).spans) : 0;
}

size_t sn_midi_time_signatures(const sn_midi* midi, char* buf, size_t cap) {
  if (!midi) return 0;
  std::string text;
  for (const auto& track : midi->file.tracks) {
    for (const midi::MidiEvent& ev : track) {
      if (const auto* ts = std::get_if<midi::TimeSignature>(&ev.kind)) {
        if (!text.empty()) text += ',';
        text += std::to_string(ts->numerator) + "/" + std::to_string(1 << ts->denominator_power);
      }
    }
  }
  return copy_out(text, buf, cap);
}

sn_status sn_midi_write(const sn_midi* midi, const char* path) {
  if (require_arg(midi && path, "sn_midi_write: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] { midi::write_midi_file(midi->file, path); });
}

sn_status sn_midi_dump_csv(const sn_midi* midi, const char* prefix) {
  if (require_arg(midi && prefix, "sn_midi_dump_csv: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const midi::ExtractResult notes = midi::extract_notes(midi->file);
    roll::GridSpec grid;
    grid.division = notes.division;
    const roll::EncodeResult enc = roll::encode(notes.spans, grid);
    const std::string base = prefix;
    roll::dump_roll_csv(enc.roll, base + "_roll.csv");
    roll::dump_velocity_csv(enc.velocities, base + "_velocity.csv");
  });
}

sn_status sn_curate(const char* const* genre_names, const char* const* genre_dirs,
                    size_t genre_count, size_t threshold, double split_ratio, uint64_t seed,
                    const char* manifest_path, sn_genre_summary* summaries, size_t summary_cap,
                    size_t* summary_count) {
  if (require_arg(genre_names && genre_dirs && genre_count > 0 && manifest_path,
                  "sn_curate: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    std::vector<corpus::GenreRoot> roots;
    for (size_t i = 0; i < genre_count; ++i) {
      roots.push_back({genre_names[i], genre_dirs[i]});
    }
    const corpus::DatasetManifest manifest = corpus::curate(roots, threshold, split_ratio, seed);
    corpus::save_manifest(manifest, manifest_path);
    if (summary_count) *summary_count = manifest.genre_counts.size();
    if (summaries) {
      for (size_t i = 0; i < manifest.genre_counts.size() && i < summary_cap; ++i) {
        const corpus::GenreCount& c = manifest.genre_counts[i];
        sn_genre_summary& s = summaries[i];
        std::memset(&s, 0, sizeof s);
        copy_out(c.genre, s.genre, sizeof s.genre);
        s.accepted = c.accepted;
        s.rejected = c.rejected;
        s.train = c.train;
        s.validation = c.validation;
      }
    }
  });
}

void sn_train_config_default(sn_train_config* config) {
  if (!config) return;
  const model::TrainConfig d;
  config->learning_rate = d.learning_rate;
  config->keep_prob = d.keep_prob;
  config->clip_norm = d.clip_norm;
  config->window = d.window;
  config->epochs = d.epochs;
  config->batch_size = d.batch_size;
  config->genre_hidden = d.genre_hidden;
  config->interp_hidden = d.interp_hidden;
  config->seed = d.seed;
  config->checkpoint_interval = d.checkpoint_interval;
  config->stop_train_loss = d.stop_train_loss;
  config->masked_loss = d.masked_loss ? 1 : 0;
}

namespace {

model::TrainConfig to_core_config(const sn_train_config& c) {
  model::TrainConfig out;
  out.learning_rate = c.learning_rate;
  out.keep_prob = c.keep_prob;
  out.clip_norm = c.clip_norm;
  out.window = c.window;
  out.epochs = c.epochs;
  out.batch_size = c.batch_size;
  out.genre_hidden = c.genre_hidden;
  out.interp_hidden = c.interp_hidden;
  out.seed = c.seed;
  out.checkpoint_interval = c.checkpoint_interval;
  out.stop_train_loss = c.stop_train_loss;
  out.masked_loss = c.masked_loss != 0;
  return out;
}

void from_core_config(const model::TrainConfig& c, sn_train_config& out) {
  out.learning_rate = c.learning_rate;
  out.keep_prob = c.keep_prob;
  out.clip_norm = c.clip_norm;
  out.window = c.window;
  out.epochs = c.epochs;
  out.batch_size = c.batch_size;
  out.genre_hidden = c.genre_hidden;
  out.interp_hidden = c.interp_hidden;
  out.seed = c.seed;
  out.checkpoint_interval = c.checkpoint_interval;
  out.stop_train_loss = c.stop_train_loss;
  out.masked_loss = c.masked_loss ? 1 : 0;
}

}  // namespace

sn_status sn_train(const char* manifest_path, const sn_train_config* config,
                   const char* checkpoint_path, const char* loss_csv_path,
                   const char* resume_path, sn_progress_fn progress, void* user) {
  if (require_arg(manifest_path && config && checkpoint_path && loss_csv_path,
                  "sn_train: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const corpus::DatasetManifest manifest = corpus::load_manifest(manifest_path);
    const model::TrainConfig core_config = to_core_config(*config);
    model::Checkpoint resume;
    const model::Checkpoint* resume_ptr = nullptr;
    if (resume_path) {
      resume = model::load_checkpoint(resume_path);
      resume_ptr = &resume;
    }
    model::ProgressFn cb;
    if (progress) {
      cb = [&](const model::LossRow& row) {
        progress(row.epoch, row.genre.c_str(), row.train_loss, row.val_loss, user);
      };
    }
    model::train(manifest, core_config, checkpoint_path, loss_csv_path, resume_ptr, cb);
  });
}

sn_status sn_model_open(const char* checkpoint_path, sn_model** out) {
  if (require_arg(checkpoint_path && out, "sn_model_open: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto* handle = new sn_model{model::load_checkpoint(checkpoint_path), {}};
    handle->genres = handle->checkpoint.params.genres();
    *out = handle;
  });
}

void sn_model_close(sn_model* model) { delete model; }

size_t sn_model_genre_count(const sn_model* model) { return model ? model->genres.size() : 0; }

const char* sn_model_genre_name(const sn_model* model, size_t index) {
  if (!model || index >= model->genres.size()) return nullptr;
  return model->genres[index].c_str();
}

size_t sn_model_epoch(const sn_model* model) {
  return model ? static_cast<size_t>(model->checkpoint.epoch) : 0;
}

sn_status sn_model_config(const sn_model* model, sn_train_config* out) {
  if (require_arg(model && out, "sn_model_config: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  from_core_config(model->checkpoint.config, *out);
  return SN_OK;
}

sn_status sn_render(const sn_model* model, const char* in_midi_path, const char* genre,
                    const char* out_midi_path) {
  if (require_arg(model && in_midi_path && genre && out_midi_path,
                  "sn_render: null argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const midi::MidiFile in = midi::read_midi_file(in_midi_path);
    const midi::MidiFile out = model::predict_performance(
        model->checkpoint.params, model->checkpoint.config.window, in, genre);
    midi::write_midi_file(out, out_midi_path);
  });
}

sn_status sn_gradcheck(uint64_t seed, double tolerance, size_t num_seeds, int* pass,
                       char* report, size_t report_cap) {
  if (require_arg(pass != nullptr && tolerance > 0.0 && num_seeds > 0,
                  "sn_gradcheck: bad argument") != SN_OK) {
    return SN_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const model::GradCheckSuiteResult result =
        model::run_gradcheck_suite(seed, tolerance, num_seeds);
    *pass = result.pass ? 1 : 0;
    if (report) copy_out(result.to_string(), report, report_cap);
  });
}
