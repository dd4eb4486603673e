#pragma once

#include "cdckg/kg.hpp"
#include "cdckg/tensor.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace cdckg {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind : uint8_t { kCdc = 0, kCdcPlus = 1 };
enum class OptimizerKind : uint8_t { kSgd = 0, kAdam = 1 };

// On-disk layout (little endian): magic "CDCKGCKP", u32 version, u8 scalar
// kind (0=f32, 1=f64), u8 model kind, u8 optimizer kind, u8 reserved,
// u64 epoch, then length-prefixed config JSON, rng state, vocabulary, word
// tokens, the adam step counter and the named tensor sections (name, rank,
// dims, row-major scalar data).
template <typename T>
struct CheckpointData {
  uint32_t version = 1;
  ModelKind model = ModelKind::kCdc;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  uint64_t epoch = 0;
  std::string config_json;
  std::string rng_state;
  std::vector<std::string> entity_names, relation_names, word_tokens;
  uint64_t adam_step = 0;
  std::map<std::string, Tensor<T>> tensors;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'C', 'D', 'C', 'K', 'G', 'C', 'K', 'P'};

template <typename V>
void write_pod(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, uint64_t max_len = (1ull << 32)) {
  const uint64_t n = read_pod<uint64_t>(in);
  if (n > max_len) throw CheckpointError("checkpoint: corrupt string length");
  std::string s(static_cast<size_t>(n), '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return s;
}

inline void write_string_list(std::ostream& out, const std::vector<std::string>& v) {
  write_pod<uint64_t>(out, v.size());
  for (const auto& s : v) write_string(out, s);
}

inline std::vector<std::string> read_string_list(std::istream& in) {
  const uint64_t n = read_pod<uint64_t>(in);
  if (n > (1ull << 28)) throw CheckpointError("checkpoint: corrupt list length");
  std::vector<std::string> v;
  v.reserve(static_cast<size_t>(n));
  for (uint64_t i = 0; i < n; ++i) v.push_back(read_string(in));
  return v;
}

template <typename T>
void write_tensor(std::ostream& out, const std::string& name, const Tensor<T>& t) {
  write_string(out, name);
  write_pod<uint32_t>(out, static_cast<uint32_t>(t.rank()));
  for (int64_t e : t.shape) write_pod<uint64_t>(out, static_cast<uint64_t>(e));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(T)));
}

template <typename T>
std::pair<std::string, Tensor<T>> read_tensor(std::istream& in) {
  std::string name = read_string(in, 1 << 16);
  const uint32_t rank = read_pod<uint32_t>(in);
  if (rank > 8) throw CheckpointError("checkpoint: corrupt tensor rank");
  std::vector<int64_t> shape(rank);
  for (auto& e : shape) e = static_cast<int64_t>(read_pod<uint64_t>(in));
  Tensor<T> t(shape);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(T)));
  if (!in) throw CheckpointError("checkpoint: truncated tensor data");
  return {std::move(name), std::move(t)};
}

}  // namespace detail

inline uint8_t scalar_kind_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw CheckpointError("checkpoint: bad magic in " + path);
  detail::read_pod<uint32_t>(in);  // version checked on full load
  return detail::read_pod<uint8_t>(in);
}

template <typename T>
void save_checkpoint(const std::string& path, const CheckpointData<T>& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path);
  out.write(detail::kCheckpointMagic, 8);
  detail::write_pod<uint32_t>(out, ckpt.version);
  detail::write_pod<uint8_t>(out, std::is_same_v<T, float> ? 0 : 1);
  detail::write_pod<uint8_t>(out, static_cast<uint8_t>(ckpt.model));
  detail::write_pod<uint8_t>(out, static_cast<uint8_t>(ckpt.optimizer));
  detail::write_pod<uint8_t>(out, 0);
  detail::write_pod<uint64_t>(out, ckpt.epoch);
  detail::write_string(out, ckpt.config_json);
  detail::write_string(out, ckpt.rng_state);
  detail::write_string_list(out, ckpt.entity_names);
  detail::write_string_list(out, ckpt.relation_names);
  detail::write_string_list(out, ckpt.word_tokens);
  detail::write_pod<uint64_t>(out, ckpt.adam_step);
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) detail::write_tensor(out, name, tensor);
  if (!out) throw CheckpointError("checkpoint: write failure on " + path);
}

template <typename T>
CheckpointData<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw CheckpointError("checkpoint: bad magic in " + path);
  CheckpointData<T> ckpt;
  ckpt.version = detail::read_pod<uint32_t>(in);
  if (ckpt.version != 1)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(ckpt.version));
  const uint8_t scalar = detail::read_pod<uint8_t>(in);
  const uint8_t expected = std::is_same_v<T, float> ? 0 : 1;
  if (scalar != expected)
    throw CheckpointError("checkpoint: scalar kind mismatch (file has " +
                          std::string(scalar == 0 ? "f32" : "f64") + ")");
  ckpt.model = static_cast<ModelKind>(detail::read_pod<uint8_t>(in));
  ckpt.optimizer = static_cast<OptimizerKind>(detail::read_pod<uint8_t>(in));
  detail::read_pod<uint8_t>(in);  // reserved
  ckpt.epoch = detail::read_pod<uint64_t>(in);
  ckpt.config_json = detail::read_string(in);
  ckpt.rng_state = detail::read_string(in);
  ckpt.entity_names = detail::read_string_list(in);
  ckpt.relation_names = detail::read_string_list(in);
  ckpt.word_tokens = detail::read_string_list(in);
  ckpt.adam_step = detail::read_pod<uint64_t>(in);
  const uint32_t count = detail::read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    auto [name, tensor] = detail::read_tensor<T>(in);
    ckpt.tensors.emplace(std::move(name), std::move(tensor));
  }
  return ckpt;
}

}  // namespace cdckg
