#include "pvc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace pvc {

namespace {

constexpr char kMagic[8] = {'P', 'V', 'C', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("checkpoint: truncated file");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const uint32_t n = get<uint32_t>(is);
  if (n > (1u << 24)) throw FormatError("checkpoint: unreasonable string length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw FormatError("checkpoint: truncated string");
  return s;
}

void put_tensor(std::ostream& os, const Tensor& t) {
  put<int32_t>(os, t.c());
  put<int32_t>(os, t.h());
  put<int32_t>(os, t.w());
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(sizeof(float) * t.size()));
}

Tensor get_tensor(std::istream& is) {
  const int32_t c = get<int32_t>(is);
  const int32_t h = get<int32_t>(is);
  const int32_t w = get<int32_t>(is);
  if (c < 0 || h < 0 || w < 0 || static_cast<int64_t>(c) * h * w > (1ll << 28))
    throw FormatError("checkpoint: bad tensor shape");
  Tensor t(c, h, w);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(sizeof(float) * t.size()));
  if (!is) throw FormatError("checkpoint: truncated tensor data");
  return t;
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"latent_channels", c.latent_channels},
          {"feature_channels", c.feature_channels},
          {"trunk_channels", c.trunk_channels},
          {"head_channels", c.head_channels}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.latent_channels = j.at("latent_channels").get<int>();
  c.feature_channels = j.at("feature_channels").get<int>();
  c.trunk_channels = j.at("trunk_channels").get<int>();
  c.head_channels = j.at("head_channels").get<int>();
  c.validate();
  return c;
}

}  // namespace

uint64_t config_digest(const ModelConfig& cfg) {
  const std::string s = config_json(cfg).dump();
  return fnv1a64(s.data(), s.size());
}

void save_checkpoint(const CodecModel& model, const std::filesystem::path& path, int64_t step,
                     const TrainerState* trainer) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put<uint32_t>(os, kCheckpointVersion);

  nlohmann::json header{{"config", config_json(model.config())},
                        {"config_digest", config_digest(model.config())},
                        {"step", step},
                        {"init_seed", model.init_seed()},
                        {"has_trainer_state", trainer != nullptr}};
  put_string(os, header.dump());

  const auto& params = model.named_parameters();
  put<uint32_t>(os, static_cast<uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    put_string(os, name);
    put_tensor(os, p->val);
  }

  put<uint8_t>(os, trainer ? 1 : 0);
  if (trainer) {
    if (trainer->m.size() != params.size() || trainer->v.size() != params.size())
      throw ConfigError("trainer state does not match parameter count");
    put<int64_t>(os, trainer->adam_t);
    put<int64_t>(os, trainer->next_step);
    put<double>(os, trainer->running_loss);
    put_string(os, trainer->rng_state);
    for (const auto& t : trainer->m) put_tensor(os, t);
    for (const auto& t : trainer->v) put_tensor(os, t);
  }
  if (!os) throw IoError("write failed for checkpoint '" + path.string() + "'");
}

CodecModel load_checkpoint(const std::filesystem::path& path, int64_t* step_out,
                           std::optional<TrainerState>* trainer_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("'" + path.string() + "' is not a checkpoint file");
  const uint32_t version = get<uint32_t>(is);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kCheckpointVersion) + ")");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_string(is));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  const ModelConfig cfg = config_from_json(header.at("config"));
  const uint64_t seed = header.value("init_seed", 0ull);

  CodecModel model(cfg, seed);
  const auto& params = model.named_parameters();
  const uint32_t count = get<uint32_t>(is);
  if (count != params.size())
    throw FormatError("checkpoint parameter count " + std::to_string(count) +
                      " does not match model (" + std::to_string(params.size()) + ")");
  for (const auto& [name, p] : params) {
    const std::string stored = get_string(is);
    if (stored != name)
      throw FormatError("checkpoint parameter order mismatch: expected '" + name + "', found '" +
                        stored + "'");
    Tensor t = get_tensor(is);
    if (!t.same_shape(p->val))
      throw FormatError("checkpoint parameter '" + name + "' has shape " + t.shape_str() +
                        ", expected " + p->val.shape_str());
    p->val = std::move(t);
  }

  const uint8_t has_trainer = get<uint8_t>(is);
  if (trainer_out) trainer_out->reset();
  if (has_trainer) {
    TrainerState ts;
    ts.adam_t = get<int64_t>(is);
    ts.next_step = get<int64_t>(is);
    ts.running_loss = get<double>(is);
    ts.rng_state = get_string(is);
    ts.m.reserve(params.size());
    ts.v.reserve(params.size());
    for (size_t i = 0; i < params.size(); i++) ts.m.push_back(get_tensor(is));
    for (size_t i = 0; i < params.size(); i++) ts.v.push_back(get_tensor(is));
    if (trainer_out) *trainer_out = std::move(ts);
  }
  if (step_out) *step_out = header.value("step", 0ll);
  return model;
}

}  // namespace pvc
