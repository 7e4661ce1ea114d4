#include "hedmod/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hedmod/error.hpp"

namespace hedmod {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'D', 'M', 'O', 'D', 'C', 'K'};

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::kParse, "truncated checkpoint " + path);
  return to_little(value);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write checkpoint " + tmp);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
    for (const Parameter* p : store.all()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
      out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
      for (std::size_t d : p->value.shape()) put<std::uint64_t>(out, d);
      for (double x : p->value.data()) put<double>(out, x);
    }
    if (!out) throw Error(ErrorKind::kIo, "failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorKind::kIo, "cannot move checkpoint into place at " + path);
  }
}

Snapshot load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kParse, path + " is not a hedmod checkpoint");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kVersion, "checkpoint " + path + " has version " +
                                         std::to_string(version) + ", expected " +
                                         std::to_string(kCheckpointVersion));
  }
  const auto count = get<std::uint32_t>(in, path);
  Snapshot out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in, path);
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(get<std::uint64_t>(in, path));
    std::vector<double> data(shape_size(shape));
    for (double& x : data) x = get<double>(in, path);
    out.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace hedmod
