#include "model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

#include "common/crc32.hpp"
#include "common/error.hpp"

namespace stylenet::model {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'S', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};

class Writer {
public:
  std::vector<std::uint8_t> bytes;

  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void tensor(const std::string& name, const nn::Tensor& t) {
    str(name);
    u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) u64(d);
    for (double x : t.data) f64(x);
  }
};

class Reader {
public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void raw(void* out, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | b[i];
    return v;
  }
  std::uint64_t u64() {
    std::uint8_t b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | b[i];
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  nn::Tensor tensor_body() {
    nn::Tensor t;
    const std::uint32_t rank = u32();
    if (rank > 8) throw ParseError("checkpoint tensor rank out of range");
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint64_t d = u64();
      t.shape.push_back(d);
      total *= d;
    }
    if ((bytes_.size() - pos_) / 8 < total) throw ParseError("checkpoint truncated");
    t.data.resize(total);
    for (std::size_t i = 0; i < total; ++i) t.data[i] = f64();
    return t;
  }

private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

using NamedTensors = std::vector<std::pair<std::string, nn::Tensor*>>;

NamedTensors filter_prefix(const NamedTensors& named, const std::string& prefix) {
  NamedTensors out;
  for (const auto& entry : named) {
    if (entry.first.rfind(prefix, 0) == 0) out.push_back(entry);
  }
  return out;
}

TrainConfig config_from_json(const ordered_json& j, std::vector<corpus::GenreLabel>& genres) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.keep_prob = j.at("keep_prob").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.window = j.at("window").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.genre_hidden = j.at("genre_hidden").get<std::size_t>();
  c.interp_hidden = j.at("interp_hidden").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<std::size_t>();
  c.stop_train_loss = j.at("stop_train_loss").get<double>();
  c.masked_loss = j.at("masked_loss").get<bool>();
  genres = j.at("genres").get<std::vector<std::string>>();
  return c;
}

nn::AdamState fresh_adam(const std::vector<nn::Tensor*>& params) {
  std::vector<const nn::Tensor*> view(params.begin(), params.end());
  return nn::AdamState::for_params(view);
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config,
                                 const std::vector<corpus::GenreLabel>& genres) {
  ordered_json j;
  j["learning_rate"] = config.learning_rate;
  j["keep_prob"] = config.keep_prob;
  j["clip_norm"] = config.clip_norm;
  j["window"] = config.window;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["genre_hidden"] = config.genre_hidden;
  j["interp_hidden"] = config.interp_hidden;
  j["seed"] = config.seed;
  j["checkpoint_interval"] = config.checkpoint_interval;
  j["stop_train_loss"] = config.stop_train_loss;
  j["masked_loss"] = config.masked_loss;
  j["genres"] = genres;
  return j.dump();
}

Checkpoint Checkpoint::fresh(const TrainConfig& config,
                             const std::vector<corpus::GenreLabel>& genres) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.genres = genres;
  Rng rng(config.seed);
  ckpt.params = StyleNetParams::create(config.dims(), genres, rng);
  ckpt.interp_opt = fresh_adam(tensors_of(ckpt.params.interpretation));
  for (auto& [genre, branch] : ckpt.params.branches) {
    ckpt.branch_opt[genre] = fresh_adam(tensors_of(branch));
  }
  ckpt.epoch = 0;
  ckpt.rng_state = rng.serialize();
  return ckpt;
}

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(ckpt.version);
  w.str(train_config_to_json(ckpt.config, ckpt.genres));
  w.u64(ckpt.epoch);
  w.str(ckpt.rng_state);

  // Tensor records: parameters, then Adam moments in parameter order, then
  // Adam step counters (stored as single-element tensors).
  auto& params = const_cast<StyleNetParams&>(ckpt.params);
  const NamedTensors named = named_tensors(params);

  std::size_t count = named.size();
  std::vector<std::pair<std::string, const nn::AdamState*>> states;
  states.emplace_back("interp.", &ckpt.interp_opt);
  for (const auto& [genre, st] : ckpt.branch_opt) states.emplace_back("branch." + genre + ".", &st);
  for (const auto& [prefix, st] : states) count += 2 * st->m.size() + 1;

  w.u64(count);
  for (const auto& [name, tensor] : named) w.tensor(name, *tensor);
  for (const auto& [prefix, st] : states) {
    const NamedTensors scoped = filter_prefix(named, prefix);
    if (scoped.size() != st->m.size()) throw NumericError("checkpoint: optimizer state mismatch");
    for (std::size_t i = 0; i < scoped.size(); ++i) {
      w.tensor("adam.m." + scoped[i].first, st->m[i]);
      w.tensor("adam.v." + scoped[i].first, st->v[i]);
    }
    const std::string counter = prefix == "interp."
                                    ? std::string("adam.t.interp")
                                    : "adam.t." + prefix.substr(0, prefix.size() - 1);
    w.tensor(counter, nn::Tensor::row_vector({static_cast<double>(st->t)}));
  }

  const std::uint32_t crc = crc32(w.bytes.data(), w.bytes.size());
  w.u32(crc);
  return w.bytes;
}

Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 8) throw ParseError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a checkpoint file");
  }
  std::uint32_t stored_crc = 0;
  for (int i = 3; i >= 0; --i) stored_crc = stored_crc << 8 | bytes[bytes.size() - 4 + i];
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw ParseError("checkpoint checksum mismatch");
  }

  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version");

  Checkpoint ckpt;
  ckpt.version = version;
  try {
    ckpt.config = config_from_json(ordered_json::parse(r.str()), ckpt.genres);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad checkpoint config: ") + e.what());
  }
  ckpt.epoch = r.u64();
  ckpt.rng_state = r.str();

  Rng scratch;
  ckpt.params = StyleNetParams::create(ckpt.config.dims(), ckpt.genres, scratch);

  const std::uint64_t count = r.u64();
  std::map<std::string, nn::Tensor> loaded;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    loaded[name] = r.tensor_body();
  }
  if (r.pos() != bytes.size() - 4) throw ParseError("checkpoint has trailing bytes");

  auto fill = [&](const std::string& name, nn::Tensor& dst) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw ParseError("checkpoint missing tensor " + name);
    if (it->second.shape != dst.shape) {
      throw ParseError("checkpoint tensor shape mismatch: " + name);
    }
    dst = std::move(it->second);
  };

  const NamedTensors named = named_tensors(ckpt.params);
  for (const auto& [name, tensor] : named) fill(name, *tensor);

  auto load_opt = [&](const std::string& prefix, const std::string& counter_name) {
    const NamedTensors scoped = filter_prefix(named, prefix);
    std::vector<nn::Tensor*> tensors;
    for (const auto& [name, tensor] : scoped) tensors.push_back(tensor);
    nn::AdamState st = fresh_adam(tensors);
    for (std::size_t i = 0; i < scoped.size(); ++i) {
      fill("adam.m." + scoped[i].first, st.m[i]);
      fill("adam.v." + scoped[i].first, st.v[i]);
    }
    auto it = loaded.find(counter_name);
    if (it == loaded.end() || it->second.size() != 1) {
      throw ParseError("checkpoint missing " + counter_name);
    }
    st.t = static_cast<std::uint64_t>(it->second[0]);
    return st;
  };

  ckpt.interp_opt = load_opt("interp.", "adam.t.interp");
  for (auto& [genre, branch] : ckpt.params.branches) {
    (void)branch;
    ckpt.branch_opt[genre] = load_opt("branch." + genre + ".", "adam.t.branch." + genre);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = checkpoint_to_bytes(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

}  // namespace stylenet::model
