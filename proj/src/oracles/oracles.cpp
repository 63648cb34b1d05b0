#include "prk/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "prk/errors.hpp"
#include "prk/rng.hpp"

namespace prk {

Field edt_brute_force(const Mask& mask) {
  const int h = mask.rows(), w = mask.cols();
  Field out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      long best = -1;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          if (!mask(yy, xx)) continue;
          const long d = static_cast<long>(yy - y) * (yy - y) + static_cast<long>(xx - x) * (xx - x);
          if (best < 0 || d < best) best = d;
        }
      require(best >= 0, "edt_brute_force: empty mask");
      out(y, x) = std::sqrt(static_cast<double>(best));
    }
  return out;
}

PrfResult edge_prf_brute_force(const EdgeMask& pred, const EdgeMask& gt, int tol) {
  const int h = gt.mask.rows(), w = gt.mask.cols();
  auto matched = [&](const Mask& from, const Mask& to, std::size_t& n) {
    std::size_t hits = 0;
    n = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!from(y, x)) continue;
        ++n;
        bool hit = false;
        for (int yy = 0; yy < h && !hit; ++yy)
          for (int xx = 0; xx < w && !hit; ++xx)
            hit = to(yy, xx) && std::max(std::abs(yy - y), std::abs(xx - x)) <= tol;
        hits += hit;
      }
    return hits;
  };
  std::size_t n_pred = 0, n_gt = 0;
  const std::size_t tp_pred = matched(pred.mask, gt.mask, n_pred);
  const std::size_t tp_gt = matched(gt.mask, pred.mask, n_gt);
  PrfResult r;
  r.precision = n_pred ? static_cast<double>(tp_pred) / static_cast<double>(n_pred) : 0.0;
  r.recall = n_gt ? static_cast<double>(tp_gt) / static_cast<double>(n_gt) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

SsiFit ssi_normal_equations(const Field& pred, const DepthMap& pseudo, const Mask& mask) {
  // [sum d^2  sum d] [s]   [sum d q]
  // [sum d    n    ] [t] = [sum q  ]
  double a = 0.0, b = 0.0, n = 0.0, r1 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    a += pred[i] * pred[i];
    b += pred[i];
    n += 1.0;
    r1 += pred[i] * pseudo.depth[i];
    r2 += pseudo.depth[i];
  }
  const double det = a * n - b * b;
  return {(r1 * n - b * r2) / det, (a * r2 - b * r1) / det, false};
}

SsiFit ssi_grid_search(const Field& pred, const DepthMap& pseudo, const Mask& mask) {
  auto cost = [&](double s, double t) {
    double c = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) {
        const double r = s * pred[i] + t - pseudo.depth[i];
        c += r * r;
      }
    return c;
  };
  double s = 0.0, t = 0.0, span = 16.0;
  // Coarse-to-fine search on a 41x41 grid, shrinking around the best cell.
  for (int round = 0; round < 60; ++round) {
    double bs = s, bt = t, bc = cost(s, t);
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j) {
        const double cs = s + span * i / 20.0, ct = t + span * j / 20.0;
        const double c = cost(cs, ct);
        if (c < bc) bc = c, bs = cs, bt = ct;
      }
    s = bs;
    t = bt;
    span *= 0.25;
  }
  return {s, t, false};
}

std::vector<OracleRow> run_oracle_suite(std::uint64_t seed) {
  std::vector<OracleRow> rows;
  Rng rng(seed);

  OracleRow e{"edt_vs_brute_force", 1000};
  for (int k = 0; k < e.cases; ++k) {
    const int h = rng.uniform_int(1, 32), w = rng.uniform_int(1, 32);
    const double density = rng.uniform(0.0, 0.3);
    Mask m(h, w);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.bernoulli(density);
    if (count_set(m) == 0) m[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(m.size()) - 1))] = 1;
    const Field a = edt(m), b = edt_brute_force(m);
    if (!(a == b)) ++e.failures;
    for (std::size_t i = 0; i < a.size(); ++i) e.max_error = std::max(e.max_error, std::abs(a[i] - b[i]));
  }
  e.pass = e.failures == 0;
  rows.push_back(e);

  OracleRow s{"ssi_align_vs_normal_equations", 200};
  OracleRow g{"ssi_align_vs_grid_search", 20};
  for (int k = 0; k < s.cases; ++k) {
    const int h = rng.uniform_int(2, 8), w = rng.uniform_int(2, 8);
    Field p(h, w);
    DepthMap q(Field(h, w));
    Mask m(h, w, 1);
    const double ts = rng.uniform(0.2, 3.0), tt = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform(0.5, 5.0);
      q.depth[i] = ts * p[i] + tt + rng.uniform(-0.3, 0.3);
      m[i] = i < 2 || rng.bernoulli(0.8);
    }
    const SsiFit fit = ssi_align(p, q, m);
    const SsiFit ne = ssi_normal_equations(p, q, m);
    const double err = std::max(std::abs(fit.s - ne.s), std::abs(fit.t - ne.t));
    s.max_error = std::max(s.max_error, err);
    if (!(err <= 1e-9) || fit.degenerate) ++s.failures;
    if (k < g.cases) {
      const SsiFit gs = ssi_grid_search(p, q, m);
      const double gerr = std::max(std::abs(fit.s - gs.s), std::abs(fit.t - gs.t));
      g.max_error = std::max(g.max_error, gerr);
      if (!(gerr <= 1e-6)) ++g.failures;
    }
  }
  s.pass = s.failures == 0;
  g.pass = g.failures == 0;
  rows.push_back(s);
  rows.push_back(g);

  OracleRow f{"edge_prf_vs_brute_force", 100};
  for (int k = 0; k < f.cases; ++k) {
    const int h = rng.uniform_int(4, 24), w = rng.uniform_int(4, 24);
    EdgeMask a{Mask(h, w)}, b{Mask(h, w)};
    const double da = rng.uniform(0.0, 0.3), db = rng.uniform(0.02, 0.3);
    for (std::size_t i = 0; i < a.mask.size(); ++i) {
      a.mask[i] = rng.bernoulli(da);
      b.mask[i] = rng.bernoulli(db);
    }
    if (b.empty()) b.mask[0] = 1;
    const int tol = rng.uniform_int(0, 2);
    const PrfResult x = edge_prf(a, b, tol), y = edge_prf_brute_force(a, b, tol);
    const double err = std::max({std::abs(x.precision - y.precision), std::abs(x.recall - y.recall), std::abs(x.f1 - y.f1)});
    f.max_error = std::max(f.max_error, err);
    if (err != 0.0) ++f.failures;
  }
  f.pass = f.failures == 0;
  rows.push_back(f);
  return rows;
}

}  // namespace prk
