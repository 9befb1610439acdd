#include "setre/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace setre {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");
static_assert(sizeof(double) == 8);

constexpr char kMagic[8] = {'s', 'e', 't', 'r', 'e', 'c', 'k', 'p'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated checkpoint file: " + path);
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (int d : tensor.shape()) write_pod(out, static_cast<std::int64_t>(d));
    out.write(reinterpret_cast<const char*>(tensor.values().data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  if (!out) throw IoError("write failure on checkpoint: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a parameter checkpoint (bad magic): " + path);
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  const auto count = read_pod<std::uint64_t>(in, path);
  std::vector<std::pair<std::string, Tensor>> entries;
  entries.reserve(count);
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto name_len = read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint file: " + path);
    const auto rank = read_pod<std::uint32_t>(in, path);
    std::vector<int> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = read_pod<std::int64_t>(in, path);
      if (d <= 0) throw IoError("corrupt shape in checkpoint: " + path);
      shape[i] = static_cast<int>(d);
    }
    std::vector<double> values(shape_numel(shape));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint file: " + path);
    entries.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return entries;
}

}  // namespace setre
