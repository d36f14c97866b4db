#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/grad/optim.hpp"
#include "tdanet/grad/params.hpp"
#include "tdanet/util/hash.hpp"

// Binary layout, all integers little-endian:
//   "TDAN" u32 version u64 config_hash i64 episodes u64 adam_step u64 param_version
//   u32 tensor_count { u32 name_len name u32 rows u32 cols f32[rows*cols] x3 (value, m, v) }
//   u32 rng_count { u32 len bytes }  u32 config_len config_json
//   u64 fnv1a(all preceding bytes)
namespace tdanet::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainState {
  grad::ParamSet params;
  grad::AdamState adam;
  std::int64_t episodes = 0;
  std::vector<std::string> rng_states;  // one per worker, textual engine state
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::string config_json;
  TrainState state;
};

namespace detail {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(v); }
  void u64(std::uint64_t v) { raw(v); }
  void i64(std::int64_t v) { raw(static_cast<std::uint64_t>(v)); }
  void f32(float v) { raw(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void tensor(const grad::Tensor& t) {
    for (double v : t.data()) f32(static_cast<float>(v));
  }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  template <class T>
  void raw(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) bytes_.push_back(static_cast<unsigned char>((v >> (8 * k)) & 0xff));
  }
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}
  std::uint32_t u32() { return raw<std::uint32_t>(); }
  std::uint64_t u64() { return raw<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(raw<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(raw<std::uint32_t>()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  grad::Tensor tensor(std::uint32_t rows, std::uint32_t cols) {
    grad::Tensor t(rows, cols);
    for (double& v : t.data()) v = f32();
    return t;
  }
  bool at_end() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw CheckpointError("checkpoint: unexpected end of data");
  }
  template <class T>
  T raw() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<T>(data_[pos_ + k]) << (8 * k);
    pos_ += sizeof(T);
    return v;
  }
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck) {
  detail::Writer w;
  for (char c : std::string("TDAN")) w.bytes().push_back(static_cast<unsigned char>(c));
  w.u32(ck.version);
  w.u64(ck.config_hash);
  w.i64(ck.state.episodes);
  w.u64(ck.state.adam.step);
  w.u64(ck.state.params.version());
  const auto& p = ck.state.params;
  w.u32(static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    w.str(p.name(i));
    w.u32(static_cast<std::uint32_t>(p.tensor(i).rows()));
    w.u32(static_cast<std::uint32_t>(p.tensor(i).cols()));
    w.tensor(p.tensor(i));
    w.tensor(ck.state.adam.m.at(i));
    w.tensor(ck.state.adam.v.at(i));
  }
  w.u32(static_cast<std::uint32_t>(ck.state.rng_states.size()));
  for (const auto& s : ck.state.rng_states) w.str(s);
  w.str(ck.config_json);
  w.u64(util::fnv1a(w.bytes()));
  return std::move(w.bytes());
}

// `expected_hash`, when given, must equal the stored config hash.
inline Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes,
                                         std::optional<std::uint64_t> expected_hash = std::nullopt) {
  if (bytes.size() < 12) throw CheckpointError("checkpoint checksum error: file too short");
  const std::size_t body = bytes.size() - 8;
  detail::Reader tail(bytes.data() + body, 8);
  const std::uint64_t stored = tail.u64();
  const std::uint64_t actual = util::fnv1a(std::span<const unsigned char>(bytes.data(), body));
  if (stored != actual) {
    throw CheckpointError("checkpoint checksum error: stored " + util::hex64(stored) + ", computed " + util::hex64(actual));
  }
  if (std::memcmp(bytes.data(), "TDAN", 4) != 0) throw CheckpointError("checkpoint: bad magic");
  detail::Reader r(bytes.data() + 4, body - 4);
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: format version " + std::to_string(ck.version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  ck.config_hash = r.u64();
  if (expected_hash && *expected_hash != ck.config_hash) {
    throw CheckpointError("checkpoint config hash mismatch: checkpoint " + util::hex64(ck.config_hash) + ", config " +
                          util::hex64(*expected_hash));
  }
  ck.state.episodes = r.i64();
  ck.state.adam.step = r.u64();
  const std::uint64_t version = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    ck.state.params.add(std::move(name), r.tensor(rows, cols));
    ck.state.adam.m.push_back(r.tensor(rows, cols));
    ck.state.adam.v.push_back(r.tensor(rows, cols));
  }
  ck.state.params.set_version(version);
  const std::uint32_t rngs = r.u32();
  for (std::uint32_t i = 0; i < rngs; ++i) ck.state.rng_states.push_back(r.str());
  ck.config_json = r.str();
  if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes before checksum");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ck);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  std::optional<std::uint64_t> expected_hash = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected_hash);
}

}  // namespace tdanet::rl
