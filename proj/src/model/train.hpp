#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "model/checkpoint.hpp"
#include "model/stylenet.hpp"

namespace stylenet::model {

struct LossRow {
  std::size_t epoch = 0;
  corpus::GenreLabel genre;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when the genre has no validation windows
};

struct TrainResult {
  std::size_t epochs_completed = 0;
  std::size_t optimizer_steps = 0;
  std::vector<LossRow> log;
  bool stopped_early = false;
};

using ProgressFn = std::function<void(const LossRow&)>;

// Owns the parameters, optimizer state and rng for a run; one optimizer
// step updates the shared interpretation layer and the active branch only.
class Trainer {
public:
  explicit Trainer(Checkpoint state);

  // Forward/backward over a batch of windows, joint norm clip, Adam update.
  // Returns the batch training loss (computed with dropout active).
  double step(const corpus::GenreLabel& genre, const std::vector<const Window*>& batch);

  Checkpoint& state() { return state_; }
  StyleNetParams& params() { return state_.params; }
  Rng& rng() { return rng_; }

  // Writes the live rng state back into the checkpoint before handing it out.
  Checkpoint snapshot();

private:
  Checkpoint state_;
  Rng rng_;
};

// Window-weighted mean loss over a set of windows, dropout off.
double evaluate(const StyleNetParams& params, const corpus::GenreLabel& genre,
                const std::vector<Window>& windows, bool masked_loss = false);

// Encodes every accepted manifest entry of the given split, grouped by
// genre. Entry order (path order) makes the result deterministic.
std::map<corpus::GenreLabel, std::vector<Window>> load_split_windows(
    const corpus::DatasetManifest& manifest, const std::string& split, std::size_t window);

// Runs (or resumes) training, appending per-epoch rows to the loss CSV and
// writing checkpoints every config.checkpoint_interval epochs and at the
// end. On divergence the last written checkpoint is left in place.
TrainResult train(const corpus::DatasetManifest& manifest, const TrainConfig& config,
                  const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& loss_csv_path,
                  const Checkpoint* resume = nullptr, const ProgressFn& progress = nullptr);

// encode -> window -> forward (inference) -> stitch -> rescale -> inject.
// Note timing, pitches and every non-note event are preserved.
midi::MidiFile predict_performance(const StyleNetParams& params, std::size_t window,
                                   const midi::MidiFile& file, const corpus::GenreLabel& genre);

}  // namespace stylenet::model
