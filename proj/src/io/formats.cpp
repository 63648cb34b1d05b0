#include "prk/formats.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prk/errors.hpp"

namespace prk {

static_assert(std::endian::native == std::endian::little, "formats assume a little-endian host");

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

namespace {

// Header tokenizer for the netpbm family. Tracks byte offsets for error messages.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, std::string path) : b_(bytes), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  std::string token(bool comments) {
    skip_space(comments);
    const std::size_t start = pos_;
    last_ = start;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
    if (start == pos_) fail("unexpected end of header");
    return b_.substr(start, pos_ - start);
  }

  int integer(bool comments) {
    skip_space(comments);
    const std::size_t at = pos_;
    const std::string t = token(comments);
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        pos_ = at;
        fail("expected a positive integer, got '" + t + "'");
      }
    if (t.size() > 9) {
      pos_ = at;
      fail("dimension too large");
    }
    return std::stoi(t);
  }

  // Exactly one whitespace byte separates the header from the payload.
  void end_header() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) fail("missing header terminator");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  std::size_t last_token() const { return last_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  void skip_space(bool comments) {
    while (pos_ < b_.size()) {
      const char c = b_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (comments && c == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& b_;
  std::string path_;
  std::size_t pos_ = 0;
  std::size_t last_ = 0;
};

void check_payload(const HeaderReader& r, const std::string& bytes, std::size_t need) {
  if (bytes.size() - r.pos() < need)
    r.fail("payload truncated: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size() - r.pos()));
}

struct Pnm {
  int w = 0, h = 0;
  std::size_t offset = 0;
};

Pnm read_pnm_header(const std::string& bytes, const std::string& path, const char* magic, int channels) {
  HeaderReader r(bytes, path);
  const std::string m = r.token(false);
  if (m != magic) {
    r.set_pos(0);
    r.fail(std::string("bad magic '") + m + "', expected " + magic);
  }
  Pnm p;
  p.w = r.integer(true);
  p.h = r.integer(true);
  const int maxval = r.integer(true);
  const std::size_t at = r.last_token();
  if (maxval != 255) {
    r.set_pos(at);
    r.fail("only 8-bit files (maxval 255) are supported, got " + std::to_string(maxval));
  }
  r.end_header();
  if (p.w < 1 || p.h < 1) r.fail("empty image");
  check_payload(r, bytes, static_cast<std::size_t>(p.w) * p.h * channels);
  p.offset = r.pos();
  return p;
}

std::uint8_t to_byte(double v, const std::string& path) {
  if (!(v >= 0.0 && v <= 1.0)) throw IoError(path + ": image value outside [0,1]");
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace

void write_pfm(const std::string& path, const Field& f) {
  std::string out = "Pf\n" + std::to_string(f.cols()) + " " + std::to_string(f.rows()) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + f.size() * 4);
  char* dst = out.data() + header;
  for (int y = f.rows() - 1; y >= 0; --y)
    for (int x = 0; x < f.cols(); ++x) {
      const float v = static_cast<float>(f(y, x));
      std::memcpy(dst, &v, 4);
      dst += 4;
    }
  write_file(path, out);
}

Field read_pfm(const std::string& path) {
  const std::string bytes = read_file(path);
  HeaderReader r(bytes, path);
  const std::string magic = r.token(false);
  if (magic != "Pf") {
    r.set_pos(0);
    r.fail(magic == "PF" ? "three-channel PFM is not supported" : "bad magic '" + magic + "', expected Pf");
  }
  const int w = r.integer(false);
  const int h = r.integer(false);
  const std::string scale_tok = r.token(false);
  const std::size_t at = r.last_token();
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scale_tok, &used);
    if (used != scale_tok.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    r.set_pos(at);
    r.fail("malformed scale '" + scale_tok + "'");
  }
  if (scale > 0.0) {
    r.set_pos(at);
    r.fail("big-endian PFM (positive scale " + scale_tok + ") is not supported; expected -1.0");
  }
  if (scale != -1.0) {
    r.set_pos(at);
    r.fail("unsupported scale " + scale_tok + "; expected -1.0");
  }
  r.end_header();
  if (w < 1 || h < 1) r.fail("empty image");
  check_payload(r, bytes, static_cast<std::size_t>(w) * h * 4);
  Field f(h, w);
  const char* src = bytes.data() + r.pos();
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) {
      float v;
      std::memcpy(&v, src, 4);
      src += 4;
      f(y, x) = static_cast<double>(v);
    }
  return f;
}

void write_depth(const std::string& path, const DepthMap& d) {
  Field f = d.depth;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!d.valid[i]) f[i] = 0.0;
  write_pfm(path, f);
}

DepthMap read_depth(const std::string& path, const std::string& mask_path) {
  Field f = read_pfm(path);
  Mask valid(f.rows(), f.cols());
  if (!mask_path.empty() && std::filesystem::exists(mask_path)) {
    valid = read_mask(mask_path);
    if (!valid.same_shape(f)) throw IoError(mask_path + ": mask size does not match " + path);
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) valid[i] = f[i] > 0.0 ? 1 : 0;
  }
  return DepthMap(std::move(f), std::move(valid));
}

void write_pgm(const std::string& path, const Grid<std::uint8_t>& g) {
  std::string out = "P5\n" + std::to_string(g.cols()) + " " + std::to_string(g.rows()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(g.values().data()), g.size());
  write_file(path, out);
}

Grid<std::uint8_t> read_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  const Pnm p = read_pnm_header(bytes, path, "P5", 1);
  Grid<std::uint8_t> g(p.h, p.w);
  std::memcpy(g.values().data(), bytes.data() + p.offset, g.size());
  return g;
}

void write_mask(const std::string& path, const Mask& m) {
  Grid<std::uint8_t> g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) g[i] = m[i] ? 255 : 0;
  write_pgm(path, g);
}

Mask read_mask(const std::string& path) {
  Mask m = read_pgm(path);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = m[i] ? 1 : 0;
  return m;
}

void write_labels(const std::string& path, const LabelMap& seg) {
  Grid<std::uint8_t> g(seg.rows(), seg.cols());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] < 0 || seg[i] > 255) throw IoError(path + ": label " + std::to_string(seg[i]) + " does not fit 8 bits");
    g[i] = static_cast<std::uint8_t>(seg[i]);
  }
  write_pgm(path, g);
}

LabelMap read_labels(const std::string& path) {
  const Grid<std::uint8_t> g = read_pgm(path);
  LabelMap seg(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) seg[i] = g[i];
  return seg;
}

void write_ppm(const std::string& path, const Tensor& image) {
  require(image.ndim() == 3 && image.dim(0) == 3, "write_ppm: expected [3,H,W], got " + shape_str(image.shape()));
  const int h = image.dim(1), w = image.dim(2);
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(to_byte(image.at(c, y, x), path)));
  write_file(path, out);
}

Tensor read_ppm(const std::string& path) {
  const std::string bytes = read_file(path);
  const Pnm p = read_pnm_header(bytes, path, "P6", 3);
  Tensor t({3, p.h, p.w});
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + p.offset);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<double>(*src++) / 255.0;
  return t;
}

}  // namespace prk
