#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "nn/tensor.hpp"

namespace stylenet::nn {

// Matrix products used by the layers; exposed for tests.
Tensor matmul(const Tensor& a, const Tensor& b);           // (m x k)(k x n)
Tensor matmul_at_b(const Tensor& a, const Tensor& b);      // a' b, a is (k x m)
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);      // a b', b is (n x k)

enum Gate : std::size_t { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };
inline constexpr std::size_t kNumGates = 4;

// One LSTM direction: gates i,f,o use the logistic function, the cell
// candidate uses tanh; c_t = f*c_{t-1} + i*g, h_t = o*tanh(c_t).
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<Tensor, kNumGates> w;  // input weights, input_size x hidden
  std::array<Tensor, kNumGates> u;  // recurrent weights, hidden x hidden
  std::array<Tensor, kNumGates> b;  // bias, hidden

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);
};

struct LstmCache {
  Tensor inputs;                       // T x in
  std::array<Tensor, kNumGates> gate;  // post-activation gate values, T x hidden
  Tensor cell;                         // c_t
  Tensor cell_tanh;                    // tanh(c_t)
  Tensor hidden;                       // h_t
  Tensor h0, c0;                       // initial state, size hidden
};

struct LstmGrads {
  LstmParams params;
  Tensor inputs;  // T x in
};

// h0/c0 default to zeros when null. T may be 0 (empty state sequence).
Tensor lstm_forward(const LstmParams& p, const Tensor& inputs, LstmCache* cache = nullptr,
                    const Tensor* h0 = nullptr, const Tensor* c0 = nullptr);
LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor& grad_hidden);

// Bidirectional composition: forward pass concatenated with a pass over the
// reversed input, re-reversed. Output is T x 2*hidden.
struct BiLstmParams {
  LstmParams fwd, bwd;

  static BiLstmParams zeros(std::size_t input_size, std::size_t hidden_size);
  std::size_t input_size() const { return fwd.input_size; }
  std::size_t output_size() const { return 2 * fwd.hidden_size; }
};

struct BiLstmCache {
  LstmCache fwd;
  LstmCache bwd;  // over the reversed input
};

struct BiLstmGrads {
  BiLstmParams params;
  Tensor inputs;
};

Tensor bilstm_forward(const BiLstmParams& p, const Tensor& inputs, BiLstmCache* cache = nullptr);
BiLstmGrads bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache, const Tensor& grad_out);

// Affine map with identity activation.
struct LinearParams {
  Tensor w;  // in x out
  Tensor b;  // out

  static LinearParams zeros(std::size_t input_size, std::size_t output_size);
};

struct LinearGrads {
  LinearParams params;
  Tensor inputs;
};

Tensor linear_forward(const LinearParams& p, const Tensor& inputs);
LinearGrads linear_backward(const LinearParams& p, const Tensor& inputs, const Tensor& grad_out);

// Inverted dropout: units kept with probability keep_prob and scaled by
// 1/keep_prob while training; the exact identity at inference.
struct DropoutResult {
  Tensor output;
  Tensor mask;  // per-unit factor (0 or 1/keep_prob); all ones at inference
};

DropoutResult dropout_forward(const Tensor& x, double keep_prob, Rng& rng, bool training);
Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask);

struct MseResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d pred
};

// Mean of squared differences over all entries.
MseResult mse_loss(const Tensor& pred, const Tensor& target);
// Variant restricted to cells where mask is nonzero.
MseResult mse_loss_masked(const Tensor& pred, const Tensor& target, const Tensor& mask);

double global_norm(std::span<const Tensor* const> grads);
// Rescales the whole collection so its joint norm does not exceed max_norm.
// Returns the pre-clip norm. Throws NumericError on non-finite gradients.
double clip_by_global_norm(std::span<Tensor* const> grads, double max_norm);

struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(std::span<const Tensor* const> params);
};

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double lr);

// Weight init: uniform in +-1/sqrt(fan_in); forget-gate bias +1, other biases 0.
void init_lstm(LstmParams& p, Rng& rng);
void init_bilstm(BiLstmParams& p, Rng& rng);
void init_linear(LinearParams& p, Rng& rng);

}  // namespace stylenet::nn
