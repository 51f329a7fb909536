#include "mif/numerics/checkpoint.hpp"

#include "mif/errors.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mif {
namespace {

constexpr char kMagic[8] = {'M', 'I', 'F', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(std::uint32_t(s.size()));
    out.append(s);
  }
  std::string out;

 private:
  void put_le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
  }
};

class Reader {
 public:
  Reader(std::string_view data, std::string origin) : data_(data), origin_(std::move(origin)) {}

  std::uint32_t u32(const char* what) { return std::uint32_t(get_le(4, what)); }
  std::uint64_t u64(const char* what) { return get_le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(get_le(8, what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError(origin_ + ": " + msg + " (at byte " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) fail(std::string("truncated while reading ") + what);
  }
  std::uint64_t get_le(int bytes, const char* what) {
    need(std::size_t(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += std::size_t(bytes);
    return v;
  }

  std::string_view data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.out.append(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(ckpt.kind);
  w.str(ckpt.config_text);
  w.u32(std::uint32_t(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u64(ckpt.params.size());
  for (ParamId i = 0; i < ckpt.params.size(); ++i) {
    const Tensor& t = ckpt.params.value(i);
    w.str(ckpt.params.name(i));
    w.u32(std::uint32_t(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    for (double v : t.values()) w.f64(v);
  }
  const std::uint64_t hash = fnv1a(w.out);
  w.u64(hash);
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < sizeof kMagic + 4 + 8) {
    throw CheckpointError(origin + ": file too short to be a checkpoint (" +
                          std::to_string(bytes.size()) + " bytes)");
  }
  if (bytes.compare(0, sizeof kMagic, std::string(kMagic, sizeof kMagic)) != 0) {
    throw CheckpointError(origin + ": not a checkpoint (bad magic)");
  }
  const std::string_view all(bytes);
  const std::string_view body = all.substr(0, bytes.size() - 8);

  Reader header(body.substr(sizeof kMagic), origin);
  const std::uint32_t version = header.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(origin + ": unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Reader tail(all.substr(bytes.size() - 8), origin);
  const std::uint64_t stored = tail.u64("checksum");
  if (stored != fnv1a(body)) {
    throw CheckpointError(origin + ": checksum mismatch; file is truncated or corrupted");
  }

  Checkpoint ckpt;
  ckpt.kind = header.str("kind");
  ckpt.config_text = header.str("config");
  const std::uint32_t n_meta = header.u32("metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = header.str("metadata key");
    ckpt.metadata[key] = header.str("metadata value");
  }
  const std::uint64_t n_tensors = header.u64("tensor count");
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = header.str("tensor name");
    const std::uint32_t rank = header.u32("tensor rank");
    if (rank == 0 || rank > 2) header.fail("tensor '" + name + "' has unsupported rank " +
                                           std::to_string(rank));
    std::vector<std::size_t> shape;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(std::size_t(header.u64("tensor dim")));
      count *= shape.back();
    }
    if (count * 8 > header.remaining()) {
      header.fail("tensor '" + name + "' claims " + std::to_string(count) +
                  " values beyond end of file");
    }
    std::vector<double> values(count);
    for (auto& v : values) v = header.f64("tensor value");
    if (ckpt.params.contains(name)) header.fail("duplicate tensor name '" + name + "'");
    ckpt.params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (header.remaining() != 0) header.fail("trailing bytes after tensor table");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), path.string());
}

void assign_parameters(ParameterSet& target, const ParameterSet& source) {
  std::string problems;
  for (ParamId i = 0; i < target.size(); ++i) {
    const std::string& name = target.name(i);
    auto found = source.find(name);
    if (!found) {
      problems += "\n  missing tensor '" + name + "'";
    } else if (!source.value(*found).same_shape(target.value(i))) {
      problems += "\n  tensor '" + name + "': checkpoint " +
                  shape_string(source.value(*found).shape()) + " vs model " +
                  shape_string(target.value(i).shape());
    }
  }
  for (const auto& name : source.names()) {
    if (!target.contains(name)) problems += "\n  unexpected tensor '" + name + "'";
  }
  if (!problems.empty()) throw CheckpointError("checkpoint does not match model:" + problems);
  for (ParamId i = 0; i < target.size(); ++i) target.value(i) = source[target.name(i)];
}

}  // namespace mif
