#include "panograph/io/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "panograph/errors.hpp"

namespace panograph::io {

namespace {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'G', 'T', '1'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T take(const std::string& what) {
    T value;
    std::memcpy(&value, need(sizeof(T), what), sizeof(T));
    return value;
  }

  const char* need(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(source_ + ": truncated " + what + " at byte " + std::to_string(pos_));
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType dtype) { return dtype == DType::F32 ? 4 : 8; }

void Container::add(std::string name, Tensor tensor, DType dtype) {
  if (contains(name)) throw FormatError("duplicate container entry '" + name + "'");
  if (dtype == DType::F32) {
    for (double& v : tensor.values()) v = static_cast<double>(static_cast<float>(v));
  }
  entries_.push_back({std::move(name), dtype, std::move(tensor)});
}

bool Container::contains(std::string_view name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return true;
  return false;
}

const Entry& Container::entry(std::string_view name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return e;
  throw FormatError("container has no entry '" + std::string(name) + "'");
}

std::string encode(const Container& container) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(container.size()));
  for (const Entry& e : container.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put<std::uint64_t>(out, d);
    for (double v : e.tensor.values()) {
      if (e.dtype == DType::F32) {
        put<float>(out, static_cast<float>(v));
      } else {
        put<double>(out, v);
      }
    }
  }
  return out;
}

Container decode(std::string_view bytes, const std::string& source) {
  Reader in(bytes, source);
  if (std::memcmp(in.need(4, "magic"), kMagic, 4) != 0) throw FormatError(source + ": bad magic, expected PGT1");
  const auto count = in.take<std::uint32_t>("entry count");
  Container container;
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string label = "entry " + std::to_string(i);
    const auto name_len = in.take<std::uint32_t>(label + " name length");
    std::string name(in.need(name_len, label + " name"), name_len);
    const std::string where = "entry '" + name + "'";
    if (!seen.insert(name).second) throw FormatError(source + ": duplicate " + where);
    const auto tag = in.take<std::uint8_t>(where + " dtype");
    if (tag > 1) throw FormatError(source + ": " + where + " has unknown dtype " + std::to_string(tag));
    const auto dtype = static_cast<DType>(tag);
    const auto rank = in.take<std::uint32_t>(where + " rank");
    Shape shape(rank);
    std::size_t count_values = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(in.take<std::uint64_t>(where + " dims"));
      if (d != 0 && count_values > (bytes.size() / d)) throw FormatError(source + ": " + where + " dims too large");
      count_values *= d;
    }
    const char* payload = in.need(count_values * dtype_size(dtype), where + " payload");
    Tensor t(shape);
    for (std::size_t k = 0; k < count_values; ++k) {
      if (dtype == DType::F32) {
        float f;
        std::memcpy(&f, payload + 4 * k, 4);
        t[k] = f;
      } else {
        std::memcpy(&t[k], payload + 8 * k, 8);
      }
    }
    container.add(std::move(name), std::move(t), dtype);
  }
  if (!in.done()) throw FormatError(source + ": trailing bytes after last entry");
  return container;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) { return decode(read_file(path), path.string()); }

void write_container(const std::filesystem::path& path, const Container& container) {
  write_file_atomic(path, encode(container));
}

}  // namespace panograph::io
