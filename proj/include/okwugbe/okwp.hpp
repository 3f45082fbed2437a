#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace okwugbe::okwp {

// Flat parameter container: magic "OKWP", version u16, count u32, then per
// parameter: name length u16 + UTF-8 name, rank u8, extents u32 each,
// row-major f32 values. All integers little-endian.
struct Entry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

void write(const std::string& path, const std::vector<Entry>& entries);
std::vector<Entry> read(const std::string& path);

}  // namespace okwugbe::okwp
