#include "model/stylenet.hpp"

#include "common/error.hpp"

namespace stylenet::model {

namespace {

const char* kGateNames[nn::kNumGates] = {"i", "f", "g", "o"};

void check_genre(const StyleNetParams& params, const corpus::GenreLabel& genre) {
  if (!params.has_genre(genre)) throw InvalidArgument("unknown genre: " + genre);
}

void add_into(nn::Tensor& acc, const nn::Tensor& delta) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += delta[i];
}

void add_lstm(nn::LstmParams& acc, const nn::LstmParams& delta) {
  for (std::size_t g = 0; g < nn::kNumGates; ++g) {
    add_into(acc.w[g], delta.w[g]);
    add_into(acc.u[g], delta.u[g]);
    add_into(acc.b[g], delta.b[g]);
  }
}

}  // namespace

StyleNetParams StyleNetParams::create(const ModelDims& dims,
                                      const std::vector<corpus::GenreLabel>& genres, Rng& rng) {
  if (genres.empty()) throw InvalidArgument("StyleNetParams: at least one genre required");
  StyleNetParams p;
  p.dims = dims;
  p.interpretation = nn::BiLstmParams::zeros(dims.input_width, dims.interp_hidden);
  nn::init_bilstm(p.interpretation, rng);
  const std::size_t interp_out = 2 * dims.interp_hidden;
  const std::size_t branch_out = 2 * dims.genre_hidden;
  // map keys are sorted, so branch creation order is label order
  for (const corpus::GenreLabel& genre : genres) {
    if (p.branches.count(genre)) throw InvalidArgument("duplicate genre: " + genre);
    p.branches[genre] = GenreNetParams{};
  }
  for (auto& [genre, branch] : p.branches) {
    for (std::size_t l = 0; l < ModelDims::kGenreLayers; ++l) {
      const std::size_t in = l == 0 ? interp_out : branch_out;
      branch.layers[l] = nn::BiLstmParams::zeros(in, dims.genre_hidden);
      nn::init_bilstm(branch.layers[l], rng);
    }
    branch.head = nn::LinearParams::zeros(branch_out, dims.output_width);
    nn::init_linear(branch.head, rng);
  }
  return p;
}

std::vector<corpus::GenreLabel> StyleNetParams::genres() const {
  std::vector<corpus::GenreLabel> out;
  out.reserve(branches.size());
  for (const auto& [genre, _] : branches) out.push_back(genre);
  return out;
}

std::vector<nn::Tensor*> tensors_of(nn::BiLstmParams& p) {
  std::vector<nn::Tensor*> out;
  for (nn::LstmParams* dir : {&p.fwd, &p.bwd}) {
    for (std::size_t g = 0; g < nn::kNumGates; ++g) {
      out.push_back(&dir->w[g]);
      out.push_back(&dir->u[g]);
      out.push_back(&dir->b[g]);
    }
  }
  return out;
}

std::vector<nn::Tensor*> tensors_of(GenreNetParams& p) {
  std::vector<nn::Tensor*> out;
  for (auto& layer : p.layers) {
    for (nn::Tensor* t : tensors_of(layer)) out.push_back(t);
  }
  out.push_back(&p.head.w);
  out.push_back(&p.head.b);
  return out;
}

namespace {

void append_bilstm_names(std::vector<std::pair<std::string, nn::Tensor*>>& out,
                         nn::BiLstmParams& p, const std::string& prefix) {
  const std::pair<const char*, nn::LstmParams*> dirs[] = {{"fwd", &p.fwd}, {"bwd", &p.bwd}};
  for (const auto& [dname, dir] : dirs) {
    for (std::size_t g = 0; g < nn::kNumGates; ++g) {
      const std::string base = prefix + "." + dname + ".";
      out.emplace_back(base + "w_" + kGateNames[g], &dir->w[g]);
      out.emplace_back(base + "u_" + kGateNames[g], &dir->u[g]);
      out.emplace_back(base + "b_" + kGateNames[g], &dir->b[g]);
    }
  }
}

}  // namespace

std::vector<std::pair<std::string, nn::Tensor*>> named_tensors(StyleNetParams& params) {
  std::vector<std::pair<std::string, nn::Tensor*>> out;
  append_bilstm_names(out, params.interpretation, "interp");
  for (auto& [genre, branch] : params.branches) {
    const std::string prefix = "branch." + genre;
    for (std::size_t l = 0; l < ModelDims::kGenreLayers; ++l) {
      append_bilstm_names(out, branch.layers[l], prefix + ".layer" + std::to_string(l));
    }
    out.emplace_back(prefix + ".head.w", &branch.head.w);
    out.emplace_back(prefix + ".head.b", &branch.head.b);
  }
  return out;
}

nn::Tensor forward(const StyleNetParams& params, const corpus::GenreLabel& genre,
                   const nn::Tensor& input, bool training, double keep_prob, Rng& rng,
                   ForwardCache* cache) {
  check_genre(params, genre);
  if (input.shape.size() != 2 || input.rows() == 0) {
    throw InvalidArgument("forward: empty window");
  }
  if (input.cols() != params.dims.input_width) {
    throw InvalidArgument("forward: input width mismatch");
  }
  const GenreNetParams& branch = params.branches.at(genre);

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.genre = genre;

  nn::Tensor x = nn::bilstm_forward(params.interpretation, input, &c.interp);
  auto d0 = nn::dropout_forward(x, keep_prob, rng, training);
  c.drop_mask[0] = std::move(d0.mask);

  nn::Tensor a1 = nn::bilstm_forward(branch.layers[0], d0.output, &c.layer[0]);
  auto d1 = nn::dropout_forward(a1, keep_prob, rng, training);
  c.drop_mask[1] = std::move(d1.mask);

  nn::Tensor a2 = nn::bilstm_forward(branch.layers[1], d1.output, &c.layer[1]);
  auto d2 = nn::dropout_forward(a2, keep_prob, rng, training);
  c.drop_mask[2] = std::move(d2.mask);

  nn::Tensor a3 = nn::bilstm_forward(branch.layers[2], d2.output, &c.layer[2]);
  c.head_in = a3;
  return nn::linear_forward(branch.head, a3);
}

StepGrads backward(const StyleNetParams& params, const ForwardCache& cache,
                   const nn::Tensor& grad_pred) {
  check_genre(params, cache.genre);
  const GenreNetParams& branch = params.branches.at(cache.genre);

  StepGrads out;
  nn::LinearGrads head_g = nn::linear_backward(branch.head, cache.head_in, grad_pred);
  out.branch.head = std::move(head_g.params);

  nn::BiLstmGrads g3 = nn::bilstm_backward(branch.layers[2], cache.layer[2], head_g.inputs);
  out.branch.layers[2] = std::move(g3.params);

  nn::Tensor d2 = nn::dropout_backward(g3.inputs, cache.drop_mask[2]);
  nn::BiLstmGrads g2 = nn::bilstm_backward(branch.layers[1], cache.layer[1], d2);
  out.branch.layers[1] = std::move(g2.params);

  nn::Tensor d1 = nn::dropout_backward(g2.inputs, cache.drop_mask[1]);
  nn::BiLstmGrads g1 = nn::bilstm_backward(branch.layers[0], cache.layer[0], d1);
  out.branch.layers[0] = std::move(g1.params);

  nn::Tensor d0 = nn::dropout_backward(g1.inputs, cache.drop_mask[0]);
  nn::BiLstmGrads gi = nn::bilstm_backward(params.interpretation, cache.interp, d0);
  out.interpretation = std::move(gi.params);
  return out;
}

void accumulate(StepGrads& acc, const StepGrads& delta) {
  add_lstm(acc.interpretation.fwd, delta.interpretation.fwd);
  add_lstm(acc.interpretation.bwd, delta.interpretation.bwd);
  for (std::size_t l = 0; l < ModelDims::kGenreLayers; ++l) {
    add_lstm(acc.branch.layers[l].fwd, delta.branch.layers[l].fwd);
    add_lstm(acc.branch.layers[l].bwd, delta.branch.layers[l].bwd);
  }
  add_into(acc.branch.head.w, delta.branch.head.w);
  add_into(acc.branch.head.b, delta.branch.head.b);
}

std::vector<Window> make_windows(const roll::PianoRoll& roll, const roll::VelocityRoll& velocities,
                                 std::size_t window) {
  if (window == 0) throw InvalidArgument("make_windows: window must be positive");
  if (roll.steps != velocities.steps) throw InvalidArgument("make_windows: step count mismatch");
  std::vector<Window> out;
  for (std::size_t start = 0; start < roll.steps; start += window) {
    const std::size_t len = std::min(window, roll.steps - start);
    Window w;
    w.input = nn::Tensor::zeros({len, roll.width});
    w.target = nn::Tensor::zeros({len, velocities.keys});
    w.onset_mask = nn::Tensor::zeros({len, velocities.keys});
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t c = 0; c < roll.width; ++c) {
        w.input.at(t, c) = roll.at(start + t, c);
      }
      for (std::size_t k = 0; k < velocities.keys; ++k) {
        w.target.at(t, k) = velocities.at(start + t, k);
        w.onset_mask.at(t, k) = roll.played(start + t, k);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace stylenet::model
