#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "prk/errors.hpp"
#include "prk/metrics.hpp"

namespace prk {

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();

// Lower envelope of parabolas (q - v)^2 + f(v), in exact integer arithmetic.
// Breakpoints are kept as fractions num/den with den > 0.
void envelope_1d(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v;
  std::vector<std::int64_t> zn, zd;  // z[k] = zn[k] / zd[k], lower bound of parabola k
  v.reserve(n);
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const std::int64_t hq = f[q] + static_cast<std::int64_t>(q) * q;
    while (!v.empty()) {
      const int p = v.back();
      const std::int64_t num = hq - (f[p] + static_cast<std::int64_t>(p) * p);
      const std::int64_t den = 2 * static_cast<std::int64_t>(q - p);
      // Drop p if the new intersection lies at or before p's own breakpoint.
      if (zd.back() != 0 && num * zd.back() <= zn.back() * den) {
        v.pop_back();
        zn.pop_back();
        zd.pop_back();
        continue;
      }
      v.push_back(q);
      zn.push_back(num);
      zd.push_back(den);
      break;
    }
    if (v.empty()) {
      v.push_back(q);
      zn.push_back(0);
      zd.push_back(0);  // -infinity
    }
  }
  out.assign(n, kInf);
  if (v.empty()) return;
  std::size_t k = 0;
  for (int q = 0; q < n; ++q) {
    // advance while the next breakpoint is strictly below q
    while (k + 1 < v.size() && zn[k + 1] < static_cast<std::int64_t>(q) * zd[k + 1]) ++k;
    const std::int64_t dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Field edt(const Mask& mask) {
  require(count_set(mask) > 0, "edt of an empty mask");
  const int h = mask.rows(), w = mask.cols();
  std::vector<std::int64_t> sq(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) sq[i] = mask[i] ? 0 : kInf;

  std::vector<std::int64_t> line, res;
  for (int x = 0; x < w; ++x) {
    line.resize(h);
    for (int y = 0; y < h; ++y) line[y] = sq[static_cast<std::size_t>(y) * w + x];
    envelope_1d(line, res);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = res[y];
  }
  Field out(h, w);
  for (int y = 0; y < h; ++y) {
    line.assign(sq.begin() + static_cast<std::ptrdiff_t>(y) * w, sq.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    envelope_1d(line, res);
    for (int x = 0; x < w; ++x) out(y, x) = std::sqrt(static_cast<double>(res[x]));
  }
  return out;
}

}  // namespace prk
