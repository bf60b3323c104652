#pragma once

// Self-describing binary tensor container ("PGT1"): used for samples, feature
// caches and checkpoints alike.
//
//   "PGT1" u32:count
//   per entry: u32:name_len name u8:dtype u32:rank u64[rank]:dims payload
//
// All integers and payloads are little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "panograph/tensor.hpp"

namespace panograph::io {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

std::size_t dtype_size(DType dtype);

struct Entry {
  std::string name;
  DType dtype = DType::F64;
  Tensor tensor;
};

class Container {
 public:
  /// Throws FormatError on a duplicate name. F32 entries are rounded to float on insertion.
  void add(std::string name, Tensor tensor, DType dtype = DType::F64);

  bool contains(std::string_view name) const;
  const Entry& entry(std::string_view name) const;
  const Tensor& get(std::string_view name) const { return entry(name).tensor; }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

std::string encode(const Container& container);
/// `source` prefixes error messages.
Container decode(std::string_view bytes, const std::string& source = "container");

Container read_container(const std::filesystem::path& path);
void write_container(const std::filesystem::path& path, const Container& container);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace panograph::io
