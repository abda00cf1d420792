#include "model/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "common/error.hpp"

namespace stylenet::model {

namespace {

std::vector<nn::Tensor*> step_grad_tensors(StepGrads& grads) {
  std::vector<nn::Tensor*> out = tensors_of(grads.interpretation);
  for (nn::Tensor* t : tensors_of(grads.branch)) out.push_back(t);
  return out;
}

std::string format_loss(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Trainer::Trainer(Checkpoint state) : state_(std::move(state)) {
  rng_.deserialize(state_.rng_state);
}

double Trainer::step(const corpus::GenreLabel& genre, const std::vector<const Window*>& batch) {
  if (batch.empty()) throw InvalidArgument("Trainer::step: empty batch");
  if (!state_.params.has_genre(genre)) throw InvalidArgument("unknown genre: " + genre);

  StepGrads grads;
  grads.interpretation = nn::BiLstmParams::zeros(state_.params.dims.input_width,
                                                 state_.params.dims.interp_hidden);
  GenreNetParams& branch = state_.params.branches.at(genre);
  for (std::size_t l = 0; l < ModelDims::kGenreLayers; ++l) {
    grads.branch.layers[l] = nn::BiLstmParams::zeros(branch.layers[l].input_size(),
                                                     state_.params.dims.genre_hidden);
  }
  grads.branch.head = nn::LinearParams::zeros(2 * state_.params.dims.genre_hidden,
                                              state_.params.dims.output_width);

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss_sum = 0.0;
  for (const Window* w : batch) {
    ForwardCache cache;
    const nn::Tensor pred = forward(state_.params, genre, w->input, /*training=*/true,
                                    state_.config.keep_prob, rng_, &cache);
    nn::MseResult mse = state_.config.masked_loss
                            ? nn::mse_loss_masked(pred, w->target, w->onset_mask)
                            : nn::mse_loss(pred, w->target);
    loss_sum += mse.loss;
    for (double& g : mse.grad.data) g *= inv_batch;
    const StepGrads delta = backward(state_.params, cache, mse.grad);
    accumulate(grads, delta);
  }
  const double batch_loss = loss_sum * inv_batch;
  if (!std::isfinite(batch_loss)) throw NumericError("training diverged: non-finite loss");

  nn::clip_by_global_norm(step_grad_tensors(grads), state_.config.clip_norm);

  {
    std::vector<nn::Tensor*> params = tensors_of(state_.params.interpretation);
    std::vector<nn::Tensor*> gs = tensors_of(grads.interpretation);
    std::vector<const nn::Tensor*> gview(gs.begin(), gs.end());
    nn::adam_step(params, gview, state_.interp_opt, state_.config.learning_rate);
  }
  {
    std::vector<nn::Tensor*> params = tensors_of(branch);
    std::vector<nn::Tensor*> gs = tensors_of(grads.branch);
    std::vector<const nn::Tensor*> gview(gs.begin(), gs.end());
    nn::adam_step(params, gview, state_.branch_opt.at(genre), state_.config.learning_rate);
  }
  return batch_loss;
}

Checkpoint Trainer::snapshot() {
  state_.rng_state = rng_.serialize();
  return state_;
}

double evaluate(const StyleNetParams& params, const corpus::GenreLabel& genre,
                const std::vector<Window>& windows, bool masked_loss) {
  if (windows.empty()) throw InvalidArgument("evaluate: empty split");
  Rng unused(0);
  double sum = 0.0;
  for (const Window& w : windows) {
    const nn::Tensor pred =
        forward(params, genre, w.input, /*training=*/false, 1.0, unused);
    sum += masked_loss ? nn::mse_loss_masked(pred, w.target, w.onset_mask).loss
                       : nn::mse_loss(pred, w.target).loss;
  }
  return sum / static_cast<double>(windows.size());
}

std::map<corpus::GenreLabel, std::vector<Window>> load_split_windows(
    const corpus::DatasetManifest& manifest, const std::string& split, std::size_t window) {
  std::map<corpus::GenreLabel, std::vector<Window>> out;
  for (const corpus::CorpusEntry& entry : manifest.entries) {
    if (!entry.accepted || entry.split != split) continue;
    const midi::MidiFile file = midi::read_midi_file(entry.path);
    const midi::ExtractResult notes = midi::extract_notes(file);
    roll::GridSpec grid;
    grid.division = notes.division;
    const roll::EncodeResult enc = roll::encode(notes.spans, grid);
    for (Window& w : make_windows(enc.roll, enc.velocities, window)) {
      out[entry.genre].push_back(std::move(w));
    }
  }
  return out;
}

TrainResult train(const corpus::DatasetManifest& manifest, const TrainConfig& config,
                  const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& loss_csv_path, const Checkpoint* resume,
                  const ProgressFn& progress) {
  if (config.window == 0 || config.epochs == 0 || config.batch_size == 0 ||
      config.checkpoint_interval == 0) {
    throw InvalidArgument("train: window, epochs, batch size and checkpoint interval "
                          "must be positive");
  }
  if (config.learning_rate < 0.0) throw InvalidArgument("train: negative learning rate");

  auto train_windows = load_split_windows(manifest, "train", config.window);
  auto val_windows = load_split_windows(manifest, "validation", config.window);

  std::vector<corpus::GenreLabel> genres;
  for (const auto& [genre, windows] : train_windows) {
    if (!windows.empty()) genres.push_back(genre);
  }
  if (genres.empty()) throw InvalidArgument("train: manifest has no training files");
  for (const corpus::GenreCount& c : manifest.genre_counts) {
    if (c.train == 0) throw InvalidArgument("train: genre " + c.genre + " has no training files");
  }

  Checkpoint start;
  if (resume) {
    start = *resume;
    if (start.genres != genres) throw InvalidArgument("resume: manifest genres changed");
    if (start.config.window != config.window ||
        start.config.genre_hidden != config.genre_hidden ||
        start.config.interp_hidden != config.interp_hidden) {
      throw InvalidArgument("resume: architecture config changed");
    }
    start.config = config;
  } else {
    start = Checkpoint::fresh(config, genres);
  }

  Trainer trainer(std::move(start));
  TrainResult result;
  result.epochs_completed = trainer.state().epoch;

  std::ofstream csv;
  const bool csv_exists = std::filesystem::exists(loss_csv_path);
  csv.open(loss_csv_path, std::ios::app);
  if (!csv) throw IoError("cannot open " + loss_csv_path.string() + " for writing");
  if (!csv_exists || std::filesystem::file_size(loss_csv_path) == 0) {
    csv << "epoch,genre,train_loss,val_loss\n";
    csv.flush();
  }

  auto save = [&](std::uint64_t epoch) {
    Checkpoint snap = trainer.snapshot();
    snap.epoch = epoch;
    snap.config.epochs = config.epochs;
    save_checkpoint(snap, checkpoint_path);
  };

  for (std::uint64_t epoch = trainer.state().epoch + 1; epoch <= config.epochs; ++epoch) {
    // Shuffle each genre's windows, then strictly alternate genre batches.
    // The epoch ends when the genre with the most batches is exhausted;
    // smaller genres cycle.
    std::map<corpus::GenreLabel, std::vector<std::vector<const Window*>>> batches;
    std::size_t max_batches = 0;
    for (const corpus::GenreLabel& genre : genres) {
      const std::vector<Window>& windows = train_windows.at(genre);
      std::vector<std::size_t> order(windows.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      trainer.rng().shuffle(order);
      std::vector<std::vector<const Window*>> genre_batches;
      for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
        std::vector<const Window*> batch;
        for (std::size_t i = at; i < std::min(order.size(), at + config.batch_size); ++i) {
          batch.push_back(&windows[order[i]]);
        }
        genre_batches.push_back(std::move(batch));
      }
      max_batches = std::max(max_batches, genre_batches.size());
      batches[genre] = std::move(genre_batches);
    }

    for (std::size_t s = 0; s < max_batches; ++s) {
      for (const corpus::GenreLabel& genre : genres) {
        const auto& genre_batches = batches.at(genre);
        trainer.step(genre, genre_batches[s % genre_batches.size()]);
        ++result.optimizer_steps;
      }
    }
    trainer.state().epoch = epoch;

    bool all_below_stop = config.stop_train_loss > 0.0;
    for (const corpus::GenreLabel& genre : genres) {
      LossRow row;
      row.epoch = epoch;
      row.genre = genre;
      row.train_loss =
          evaluate(trainer.params(), genre, train_windows.at(genre), config.masked_loss);
      const auto it = val_windows.find(genre);
      row.val_loss = (it != val_windows.end() && !it->second.empty())
                         ? evaluate(trainer.params(), genre, it->second, config.masked_loss)
                         : std::nan("");
      if (!(row.train_loss < config.stop_train_loss)) all_below_stop = false;
      csv << row.epoch << ',' << row.genre << ',' << format_loss(row.train_loss) << ','
          << format_loss(row.val_loss) << '\n';
      csv.flush();
      result.log.push_back(row);
      if (progress) progress(row);
    }

    const bool last = epoch == config.epochs || all_below_stop;
    if (epoch % config.checkpoint_interval == 0 || last) save(epoch);
    result.epochs_completed = epoch;
    if (all_below_stop) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

midi::MidiFile predict_performance(const StyleNetParams& params, std::size_t window,
                                   const midi::MidiFile& file, const corpus::GenreLabel& genre) {
  if (!params.has_genre(genre)) throw InvalidArgument("unknown genre: " + genre);
  const midi::ExtractResult notes = midi::extract_notes(file);
  roll::GridSpec grid;
  grid.division = notes.division;
  const roll::EncodeResult enc = roll::encode(notes.spans, grid);
  if (enc.roll.steps == 0) return file;

  roll::VelocityRoll predicted;
  predicted.steps = enc.roll.steps;
  predicted.keys = grid.num_keys;
  predicted.data.assign(predicted.steps * predicted.keys, 0.0);

  Rng unused(0);
  std::size_t at = 0;
  for (const Window& w : make_windows(enc.roll, enc.velocities, window)) {
    const nn::Tensor pred = forward(params, genre, w.input, /*training=*/false, 1.0, unused);
    for (std::size_t t = 0; t < pred.rows(); ++t) {
      for (std::size_t k = 0; k < predicted.keys; ++k) {
        predicted.at(at + t, k) = pred.at(t, k);
      }
    }
    at += pred.rows();
  }

  const std::vector<std::uint8_t> velocities =
      roll::decode_velocities(predicted, notes.spans, grid);
  return midi::apply_velocities(file, notes.spans, velocities);
}

}  // namespace stylenet::model
