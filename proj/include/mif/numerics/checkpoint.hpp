#pragma once

#include "mif/numerics/parameters.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace mif {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container:
//   "MIFCKPT\0" | u32 version | str kind | str config | u32 n_meta (str key, str value)* |
//   u64 n_tensors (str name | u32 rank | u64 dims[rank] | f64 values[])* | u64 fnv1a
// Integers and doubles are little-endian; str is u32 length + bytes. The
// trailing hash covers every preceding byte.
struct Checkpoint {
  std::string kind;
  std::string config_text;
  std::map<std::string, std::string> metadata;
  ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Validates the whole file before returning anything.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

// Copies `source` into `target` tensor by tensor. Every missing, extra or
// mis-shaped tensor is listed in the thrown CheckpointError.
void assign_parameters(ParameterSet& target, const ParameterSet& source);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t value);

}  // namespace mif
