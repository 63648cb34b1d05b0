#include "prk/checkpoint.hpp"

#include <cstring>

#include "prk/errors.hpp"
#include "prk/formats.hpp"

namespace prk {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'K', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

class Cursor {
 public:
  Cursor(const std::string& b, const std::string& path) : b_(b), path_(path) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail("truncated checkpoint");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::string& b_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::string& path, const NamedTensors& blobs) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& [name, t] : blobs) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) put<std::int32_t>(out, d);
    put<std::uint64_t>(out, t.size());
    out.append(reinterpret_cast<const char*>(t.ptr()), t.size() * sizeof(double));
  }
  write_file(path, out);
}

NamedTensors read_checkpoint(const std::string& path) {
  const std::string b = read_file(path);
  Cursor c(b, path);
  if (c.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw IoError(path + ": not a checkpoint file");
  const auto version = c.get<std::uint32_t>();
  if (version != kCheckpointVersion) c.fail("unsupported checkpoint version " + std::to_string(version));
  const auto count = c.get<std::uint32_t>();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = c.get<std::uint32_t>();
    std::string name = c.bytes(len);
    const auto ndim = c.get<std::uint32_t>();
    if (ndim > 8) c.fail("implausible rank " + std::to_string(ndim));
    Shape shape(ndim);
    for (auto& d : shape) {
      d = c.get<std::int32_t>();
      if (d < 0) c.fail("negative dimension");
    }
    const auto n = c.get<std::uint64_t>();
    if (n != shape_numel(shape)) c.fail("blob size does not match its shape for " + name);
    c.need(n * sizeof(double));
    std::vector<double> data(n);
    const std::string raw = c.bytes(n * sizeof(double));
    std::memcpy(data.data(), raw.data(), raw.size());
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!c.done()) c.fail("trailing bytes");
  return out;
}

}  // namespace prk
