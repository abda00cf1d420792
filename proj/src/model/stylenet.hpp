#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "corpus/corpus.hpp"
#include "nn/layers.hpp"
#include "roll/roll.hpp"

namespace stylenet::model {

// Layer widths. The interpretation layer is one BiLSTM whose concatenated
// output is 2 * interp_hidden (176 at the defaults); each genre branch is
// three stacked BiLSTMs plus a linear head onto the 88 keys.
struct ModelDims {
  std::size_t input_width = 176;
  std::size_t interp_hidden = 88;
  std::size_t genre_hidden = 128;
  std::size_t output_width = 88;

  static constexpr std::size_t kGenreLayers = 3;

  bool operator==(const ModelDims&) const = default;
};

struct GenreNetParams {
  std::array<nn::BiLstmParams, ModelDims::kGenreLayers> layers;
  nn::LinearParams head;
};

struct StyleNetParams {
  ModelDims dims;
  nn::BiLstmParams interpretation;  // single copy shared by every branch
  std::map<corpus::GenreLabel, GenreNetParams> branches;

  static StyleNetParams create(const ModelDims& dims,
                               const std::vector<corpus::GenreLabel>& genres, Rng& rng);

  bool has_genre(const corpus::GenreLabel& genre) const { return branches.count(genre) != 0; }
  std::vector<corpus::GenreLabel> genres() const;
};

// Canonical tensor enumeration used by the optimizer, checkpoints and the
// gradient checker. Order: interpretation, then branches by label.
std::vector<std::pair<std::string, nn::Tensor*>> named_tensors(StyleNetParams& params);
std::vector<nn::Tensor*> tensors_of(nn::BiLstmParams& p);
std::vector<nn::Tensor*> tensors_of(GenreNetParams& p);

struct ForwardCache {
  corpus::GenreLabel genre;
  nn::BiLstmCache interp;
  std::array<nn::Tensor, 3> drop_mask;  // after interpretation, layer 1, layer 2
  std::array<nn::BiLstmCache, ModelDims::kGenreLayers> layer;
  nn::Tensor head_in;
};

// Interpretation BiLSTM -> dropout -> 3 branch BiLSTMs with dropout between
// -> linear head. Output is a raw (unclamped) T x output_width matrix.
// The rng is consumed only when training (dropout masks).
nn::Tensor forward(const StyleNetParams& params, const corpus::GenreLabel& genre,
                   const nn::Tensor& input, bool training, double keep_prob, Rng& rng,
                   ForwardCache* cache = nullptr);

// Gradients of one step: the shared interpretation layer and the branch the
// step went through. Other branches receive no gradient.
struct StepGrads {
  nn::BiLstmParams interpretation;
  GenreNetParams branch;
};

StepGrads backward(const StyleNetParams& params, const ForwardCache& cache,
                   const nn::Tensor& grad_pred);

void accumulate(StepGrads& acc, const StepGrads& delta);

struct Window {
  nn::Tensor input;       // T x input_width
  nn::Tensor target;      // T x output_width
  nn::Tensor onset_mask;  // T x output_width, 1 where the target cell is an onset
};

// Non-overlapping consecutive windows; the final short window is kept when
// it has at least one step. Hidden state is not carried across windows.
std::vector<Window> make_windows(const roll::PianoRoll& roll, const roll::VelocityRoll& velocities,
                                 std::size_t window);

}  // namespace stylenet::model
