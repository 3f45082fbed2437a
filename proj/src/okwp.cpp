#include "okwugbe/okwp.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace okwugbe::okwp {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("parameter file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T out;
  std::memcpy(&out, &v, sizeof(T));
  return out;
}

}  // namespace

void write(const std::string& path, const std::vector<Entry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create parameter file: " + path);
  out.write("OKWP", 4);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.shape.size()));
    std::size_t n = 1;
    for (std::size_t ext : e.shape) {
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ext));
      n *= ext;
    }
    if (n != e.data.size()) {
      throw std::invalid_argument("parameter " + e.name + " shape does not match data size");
    }
    for (float v : e.data) write_le<float>(out, v);
  }
  if (!out) throw std::runtime_error("failed writing parameter file: " + path);
}

std::vector<Entry> read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open parameter file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "OKWP", 4) != 0) {
    throw std::runtime_error(path + ": bad parameter file magic");
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported parameter file version " +
                             std::to_string(version));
  }
  const auto count = read_le<std::uint32_t>(in);
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    const auto name_len = read_le<std::uint16_t>(in);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (!in) throw std::runtime_error(path + ": truncated parameter name");
    const auto rank = read_le<std::uint8_t>(in);
    e.shape.resize(rank);
    std::size_t n = 1;
    for (auto& ext : e.shape) {
      ext = read_le<std::uint32_t>(in);
      n *= ext;
    }
    e.data.resize(n);
    for (auto& v : e.data) v = read_le<float>(in);
  }
  return entries;
}

}  // namespace okwugbe::okwp
