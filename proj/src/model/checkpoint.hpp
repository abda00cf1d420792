#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "model/stylenet.hpp"

namespace stylenet::model {

struct TrainConfig {
  double learning_rate = 1e-3;
  double keep_prob = 0.8;
  double clip_norm = 10.0;
  std::size_t window = 200;
  std::size_t epochs = 160;
  std::size_t batch_size = 4;
  std::size_t genre_hidden = 128;   // per direction
  std::size_t interp_hidden = 88;   // per direction; 88 gives the 176-wide layer
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 10;  // epochs between checkpoint writes
  double stop_train_loss = 0.0;          // stop once every genre is below; 0 disables
  bool masked_loss = false;              // supervise onset cells only

  ModelDims dims() const { return ModelDims{176, interp_hidden, genre_hidden, 88}; }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Full training state: parameters, optimizer moments, epoch counter and rng
// state. A reload resumes training bit-exactly.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  TrainConfig config;
  std::vector<corpus::GenreLabel> genres;
  StyleNetParams params;
  nn::AdamState interp_opt;
  std::map<corpus::GenreLabel, nn::AdamState> branch_opt;
  std::uint64_t epoch = 0;  // completed epochs
  std::string rng_state;

  static Checkpoint fresh(const TrainConfig& config,
                          const std::vector<corpus::GenreLabel>& genres);
};

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string train_config_to_json(const TrainConfig& config,
                                 const std::vector<corpus::GenreLabel>& genres);

}  // namespace stylenet::model
