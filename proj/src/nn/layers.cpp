#include "nn/layers.hpp"

#include <cmath>
#include <cstring>

#include "common/error.hpp"

namespace stylenet::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

#ifndef NDEBUG
void debug_check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}
#else
void debug_check_finite(const Tensor&, const char*) {}
#endif

Tensor reverse_rows(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape);
  const std::size_t t_steps = a.rows();
  const std::size_t width = a.cols();
  for (std::size_t t = 0; t < t_steps; ++t) {
    std::memcpy(out.row(t_steps - 1 - t), a.row(t), width * sizeof(double));
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.cols() == b.rows(),
          "matmul: shape mismatch");
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.row(i);
    const double* arow = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double alpha = arow[p];
      if (alpha == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) orow[j] += alpha * brow[j];
    }
  }
  return out;
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.rows() == b.rows(),
          "matmul_at_b: shape mismatch");
  Tensor out = Tensor::zeros({a.cols(), b.cols()});
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.row(p);
    const double* brow = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double alpha = arow[i];
      if (alpha == 0.0) continue;
      double* orow = out.row(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += alpha * brow[j];
    }
  }
  return out;
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.cols() == b.cols(),
          "matmul_a_bt: shape mismatch");
  Tensor out = Tensor::zeros({a.rows(), b.rows()});
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] = acc;
    }
  }
  return out;
}

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    p.w[g] = Tensor::zeros({input_size, hidden_size});
    p.u[g] = Tensor::zeros({hidden_size, hidden_size});
    p.b[g] = Tensor::zeros({hidden_size});
  }
  return p;
}

Tensor lstm_forward(const LstmParams& p, const Tensor& inputs, LstmCache* cache,
                    const Tensor* h0, const Tensor* c0) {
  require(inputs.shape.size() == 2 && inputs.cols() == p.input_size,
          "lstm_forward: input width mismatch");
  const std::size_t t_steps = inputs.rows();
  const std::size_t hidden = p.hidden_size;

  Tensor init_h = h0 ? *h0 : Tensor::zeros({hidden});
  Tensor init_c = c0 ? *c0 : Tensor::zeros({hidden});
  require(init_h.size() == hidden && init_c.size() == hidden,
          "lstm_forward: initial state size mismatch");

  // Input contribution for every step at once, one GEMM per gate.
  std::array<Tensor, kNumGates> pre;
  for (std::size_t g = 0; g < kNumGates; ++g) {
    pre[g] = matmul(inputs, p.w[g]);
    for (std::size_t t = 0; t < t_steps; ++t) {
      double* row = pre[g].row(t);
      for (std::size_t j = 0; j < hidden; ++j) row[j] += p.b[g][j];
    }
  }

  std::array<Tensor, kNumGates> gate;
  for (auto& g : gate) g = Tensor::zeros({t_steps, hidden});
  Tensor cell = Tensor::zeros({t_steps, hidden});
  Tensor cell_tanh = Tensor::zeros({t_steps, hidden});
  Tensor hidden_states = Tensor::zeros({t_steps, hidden});

  const double* h_prev = init_h.data.data();
  const double* c_prev = init_c.data.data();
  std::vector<double> acc(hidden);
  for (std::size_t t = 0; t < t_steps; ++t) {
    for (std::size_t g = 0; g < kNumGates; ++g) {
      double* a = pre[g].row(t);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t h = 0; h < hidden; ++h) {
        const double alpha = h_prev[h];
        if (alpha == 0.0) continue;
        const double* urow = p.u[g].row(h);
        for (std::size_t j = 0; j < hidden; ++j) acc[j] += alpha * urow[j];
      }
      double* out = gate[g].row(t);
      if (g == kCell) {
        for (std::size_t j = 0; j < hidden; ++j) out[j] = std::tanh(a[j] + acc[j]);
      } else {
        for (std::size_t j = 0; j < hidden; ++j) out[j] = sigmoid(a[j] + acc[j]);
      }
    }
    double* c = cell.row(t);
    double* tc = cell_tanh.row(t);
    double* h = hidden_states.row(t);
    const double* gi = gate[kInput].row(t);
    const double* gf = gate[kForget].row(t);
    const double* gg = gate[kCell].row(t);
    const double* go = gate[kOutput].row(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
      tc[j] = std::tanh(c[j]);
      h[j] = go[j] * tc[j];
    }
    h_prev = h;
    c_prev = c;
  }

  debug_check_finite(hidden_states, "lstm_forward output");

  if (cache) {
    cache->inputs = inputs;
    cache->gate = std::move(gate);
    cache->cell = std::move(cell);
    cache->cell_tanh = cell_tanh;
    cache->hidden = hidden_states;
    cache->h0 = std::move(init_h);
    cache->c0 = std::move(init_c);
  }
  return hidden_states;
}

LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor& grad_hidden) {
  const std::size_t t_steps = cache.hidden.shape.empty() ? 0 : cache.hidden.rows();
  const std::size_t hidden = p.hidden_size;
  require(grad_hidden.shape.size() == 2 && grad_hidden.rows() == t_steps &&
              grad_hidden.cols() == hidden,
          "lstm_backward: upstream gradient shape mismatch");

  LstmGrads out;
  out.params = LstmParams::zeros(p.input_size, p.hidden_size);
  out.inputs = Tensor::zeros({t_steps, p.input_size});
  if (t_steps == 0) return out;

  std::array<Tensor, kNumGates> dpre;
  for (auto& g : dpre) g = Tensor::zeros({t_steps, hidden});

  std::vector<double> dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  std::vector<double> dh(hidden), dc(hidden);
  for (std::size_t ti = t_steps; ti-- > 0;) {
    const double* gi = cache.gate[kInput].row(ti);
    const double* gf = cache.gate[kForget].row(ti);
    const double* gg = cache.gate[kCell].row(ti);
    const double* go = cache.gate[kOutput].row(ti);
    const double* tc = cache.cell_tanh.row(ti);
    const double* c_prev = ti > 0 ? cache.cell.row(ti - 1) : cache.c0.data.data();
    const double* up = grad_hidden.row(ti);

    double* dpi = dpre[kInput].row(ti);
    double* dpf = dpre[kForget].row(ti);
    double* dpg = dpre[kCell].row(ti);
    double* dpo = dpre[kOutput].row(ti);
    for (std::size_t j = 0; j < hidden; ++j) {
      dh[j] = up[j] + dh_next[j];
      const double do_ = dh[j] * tc[j];
      dpo[j] = do_ * go[j] * (1.0 - go[j]);
      dc[j] = dh[j] * go[j] * (1.0 - tc[j] * tc[j]) + dc_next[j];
      const double di = dc[j] * gg[j];
      dpi[j] = di * gi[j] * (1.0 - gi[j]);
      const double dg = dc[j] * gi[j];
      dpg[j] = dg * (1.0 - gg[j] * gg[j]);
      const double df = dc[j] * c_prev[j];
      dpf[j] = df * gf[j] * (1.0 - gf[j]);
      dc_next[j] = dc[j] * gf[j];
    }
    // dh_next = sum over gates of dpre_g . u_g'
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      const double* dp = dpre[g].row(ti);
      for (std::size_t h = 0; h < hidden; ++h) {
        const double* urow = p.u[g].row(h);
        double acc = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) acc += dp[j] * urow[j];
        dh_next[h] += acc;
      }
    }
  }

  // Previous-step hidden states: row t holds h_{t-1}, row 0 holds h0.
  Tensor h_shift = Tensor::zeros({t_steps, hidden});
  std::memcpy(h_shift.row(0), cache.h0.data.data(), hidden * sizeof(double));
  for (std::size_t t = 1; t < t_steps; ++t) {
    std::memcpy(h_shift.row(t), cache.hidden.row(t - 1), hidden * sizeof(double));
  }

  for (std::size_t g = 0; g < kNumGates; ++g) {
    out.params.w[g] = matmul_at_b(cache.inputs, dpre[g]);
    out.params.u[g] = matmul_at_b(h_shift, dpre[g]);
    for (std::size_t t = 0; t < t_steps; ++t) {
      const double* dp = dpre[g].row(t);
      for (std::size_t j = 0; j < hidden; ++j) out.params.b[g][j] += dp[j];
    }
    const Tensor dx_part = matmul_a_bt(dpre[g], p.w[g]);
    for (std::size_t i = 0; i < out.inputs.size(); ++i) out.inputs[i] += dx_part[i];
  }
  return out;
}

BiLstmParams BiLstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  BiLstmParams p;
  p.fwd = LstmParams::zeros(input_size, hidden_size);
  p.bwd = LstmParams::zeros(input_size, hidden_size);
  return p;
}

Tensor bilstm_forward(const BiLstmParams& p, const Tensor& inputs, BiLstmCache* cache) {
  require(p.fwd.hidden_size == p.bwd.hidden_size && p.fwd.input_size == p.bwd.input_size,
          "bilstm_forward: direction shape mismatch");
  const std::size_t t_steps = inputs.rows();
  const std::size_t hidden = p.fwd.hidden_size;

  const Tensor h_fwd = lstm_forward(p.fwd, inputs, cache ? &cache->fwd : nullptr);
  const Tensor reversed = reverse_rows(inputs);
  const Tensor h_bwd = lstm_forward(p.bwd, reversed, cache ? &cache->bwd : nullptr);

  Tensor out = Tensor::zeros({t_steps, 2 * hidden});
  for (std::size_t t = 0; t < t_steps; ++t) {
    double* row = out.row(t);
    std::memcpy(row, h_fwd.row(t), hidden * sizeof(double));
    std::memcpy(row + hidden, h_bwd.row(t_steps - 1 - t), hidden * sizeof(double));
  }
  return out;
}

BiLstmGrads bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                            const Tensor& grad_out) {
  const std::size_t t_steps = grad_out.rows();
  const std::size_t hidden = p.fwd.hidden_size;
  require(grad_out.cols() == 2 * hidden, "bilstm_backward: upstream gradient width mismatch");

  Tensor grad_fwd = Tensor::zeros({t_steps, hidden});
  Tensor grad_bwd = Tensor::zeros({t_steps, hidden});
  for (std::size_t t = 0; t < t_steps; ++t) {
    const double* row = grad_out.row(t);
    std::memcpy(grad_fwd.row(t), row, hidden * sizeof(double));
    std::memcpy(grad_bwd.row(t_steps - 1 - t), row + hidden, hidden * sizeof(double));
  }

  LstmGrads g_fwd = lstm_backward(p.fwd, cache.fwd, grad_fwd);
  LstmGrads g_bwd = lstm_backward(p.bwd, cache.bwd, grad_bwd);

  BiLstmGrads out;
  out.params.fwd = std::move(g_fwd.params);
  out.params.bwd = std::move(g_bwd.params);
  out.inputs = g_fwd.inputs;
  const Tensor bwd_inputs = reverse_rows(g_bwd.inputs);
  for (std::size_t i = 0; i < out.inputs.size(); ++i) out.inputs[i] += bwd_inputs[i];
  return out;
}

LinearParams LinearParams::zeros(std::size_t input_size, std::size_t output_size) {
  LinearParams p;
  p.w = Tensor::zeros({input_size, output_size});
  p.b = Tensor::zeros({output_size});
  return p;
}

Tensor linear_forward(const LinearParams& p, const Tensor& inputs) {
  require(inputs.shape.size() == 2 && inputs.cols() == p.w.rows(),
          "linear_forward: input width mismatch");
  Tensor out = matmul(inputs, p.w);
  const std::size_t n = p.b.size();
  for (std::size_t t = 0; t < out.rows(); ++t) {
    double* row = out.row(t);
    for (std::size_t j = 0; j < n; ++j) row[j] += p.b[j];
  }
  debug_check_finite(out, "linear_forward output");
  return out;
}

LinearGrads linear_backward(const LinearParams& p, const Tensor& inputs, const Tensor& grad_out) {
  require(grad_out.shape.size() == 2 && grad_out.rows() == inputs.rows() &&
              grad_out.cols() == p.w.cols(),
          "linear_backward: shape mismatch");
  LinearGrads out;
  out.params.w = matmul_at_b(inputs, grad_out);
  out.params.b = Tensor::zeros({p.b.size()});
  for (std::size_t t = 0; t < grad_out.rows(); ++t) {
    const double* row = grad_out.row(t);
    for (std::size_t j = 0; j < p.b.size(); ++j) out.params.b[j] += row[j];
  }
  out.inputs = matmul_a_bt(grad_out, p.w);
  return out;
}

DropoutResult dropout_forward(const Tensor& x, double keep_prob, Rng& rng, bool training) {
  require(keep_prob > 0.0 && keep_prob <= 1.0, "dropout_forward: keep_prob out of (0,1]");
  DropoutResult res;
  res.mask = Tensor::zeros(x.shape);
  res.output = x;
  if (!training || keep_prob == 1.0) {
    res.mask.fill(1.0);
    return res;
  }
  const double scale = 1.0 / keep_prob;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = rng.uniform() < keep_prob ? scale : 0.0;
    res.mask[i] = keep;
    res.output[i] = x[i] * keep;
  }
  return res;
}

Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask) {
  require(grad_out.same_shape(mask), "dropout_backward: shape mismatch");
  Tensor out = grad_out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
  require(pred.same_shape(target), "mse_loss: shape mismatch");
  require(pred.size() > 0, "mse_loss: empty prediction");
  MseResult res;
  res.grad = Tensor::zeros(pred.shape);
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
    res.grad[i] = 2.0 * d * inv_n;
  }
  res.loss = acc * inv_n;
  return res;
}

MseResult mse_loss_masked(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  require(pred.same_shape(target) && pred.same_shape(mask), "mse_loss_masked: shape mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0) ++count;
  }
  require(count > 0, "mse_loss_masked: empty mask");
  MseResult res;
  res.grad = Tensor::zeros(pred.shape);
  const double inv_n = 1.0 / static_cast<double>(count);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double d = pred[i] - target[i];
    acc += d * d;
    res.grad[i] = 2.0 * d * inv_n;
  }
  res.loss = acc * inv_n;
  return res;
}

double global_norm(std::span<const Tensor* const> grads) {
  double acc = 0.0;
  for (const Tensor* g : grads) {
    for (double x : g->data) acc += x * x;
  }
  return std::sqrt(acc);
}

double clip_by_global_norm(std::span<Tensor* const> grads, double max_norm) {
  require(max_norm > 0.0, "clip_by_global_norm: max_norm must be positive");
  std::vector<const Tensor*> view(grads.begin(), grads.end());
  const double norm = global_norm(view);
  if (!std::isfinite(norm)) throw NumericError("clip_by_global_norm: non-finite gradient");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* g : grads) {
      for (double& x : g->data) x *= scale;
    }
  }
  return norm;
}

AdamState AdamState::for_params(std::span<const Tensor* const> params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const Tensor* p : params) {
    st.m.push_back(Tensor::zeros(p->shape));
    st.v.push_back(Tensor::zeros(p->shape));
  }
  return st;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double lr) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: tensor count mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    require(p.same_shape(g) && p.same_shape(state.m[k]), "adam_step: shape mismatch");
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double update = lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
      if (!std::isfinite(update)) throw NumericError("adam_step: non-finite update");
      p[i] -= update;
    }
  }
}

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& x : t.data) x = rng.uniform(-bound, bound);
}

}  // namespace

void init_lstm(LstmParams& p, Rng& rng) {
  const double wb = 1.0 / std::sqrt(static_cast<double>(p.input_size));
  const double ub = 1.0 / std::sqrt(static_cast<double>(p.hidden_size));
  for (std::size_t g = 0; g < kNumGates; ++g) {
    init_uniform(p.w[g], wb, rng);
    init_uniform(p.u[g], ub, rng);
    p.b[g].fill(g == kForget ? 1.0 : 0.0);
  }
}

void init_bilstm(BiLstmParams& p, Rng& rng) {
  init_lstm(p.fwd, rng);
  init_lstm(p.bwd, rng);
}

void init_linear(LinearParams& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.w.rows()));
  init_uniform(p.w, bound, rng);
  p.b.fill(0.0);
}

}  // namespace stylenet::nn
