#include "threec/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "threec/encoding.hpp"

namespace threec {

namespace {

void check_rho(double rho) {
  if (rho == 0.0) throw Error(ErrorCode::RhoZero, "rho = 0 finds no pixels per call");
  if (!(rho > 0.0 && rho <= 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0,1]");
}

}  // namespace

void CostConfig::validate() const {
  if (fov < 1 || fov % 2 == 0) throw Error(ErrorCode::InvalidArgument, "fov must be odd and >= 1");
  if (alphabet_size < 2) throw Error(ErrorCode::InvalidArgument, "alphabet size must be >= 2");
  check_rho(rho);
}

Stack<uint32_t> object_density_map(const LabelStack& labels, uint32_t fov) {
  if (fov < 1 || fov % 2 == 0) throw Error(ErrorCode::InvalidArgument, "fov must be odd and >= 1");
  const Dims dims = labels.dims();
  const int r = static_cast<int>(fov / 2);
  const int h = static_cast<int>(dims.y), w = static_cast<int>(dims.x);
  Stack<uint32_t> out(dims);
  std::unordered_map<uint32_t, uint32_t> counts;

  // Slide a column-window histogram along each row.
  for (uint32_t z = 0; z < dims.z; ++z) {
    auto section = labels.section(z);
    auto dst = out.section_values(z);
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      counts.clear();
      auto add_column = [&](int x, int delta) {
        for (int yy = y0; yy <= y1; ++yy) {
          uint32_t l = section(static_cast<uint32_t>(yy), static_cast<uint32_t>(x));
          if (l == 0) continue;
          if (delta > 0) {
            ++counts[l];
          } else if (--counts[l] == 0) {
            counts.erase(l);
          }
        }
      };
      for (int x = 0; x <= std::min(w - 1, r); ++x) add_column(x, +1);
      for (int x = 0; x < w; ++x) {
        dst[static_cast<std::size_t>(y) * w + x] = static_cast<uint32_t>(counts.size());
        if (x - r >= 0) add_column(x - r, -1);
        if (x + r + 1 < w) add_column(x + r + 1, +1);
      }
    }
  }
  return out;
}

uint32_t revisit_factor(double rho) {
  check_rho(rho);
  // Guard against 1/rho landing a hair above an integer.
  return static_cast<uint32_t>(std::ceil(1.0 / rho - 1e-9));
}

CostMap call_counts(const Stack<uint32_t>& density, const CostConfig& cfg) {
  cfg.validate();
  const uint32_t revisits = revisit_factor(cfg.rho);
  CostMap m;
  m.dims = density.dims();
  m.calls_single.resize(density.size());
  m.calls_3c.resize(density.size());
  std::unordered_map<uint32_t, uint32_t> digits_cache;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const uint32_t n = density[i];
    const uint32_t single = n * revisits;
    auto it = digits_cache.find(n);
    if (it == digits_cache.end())
      it = digits_cache.emplace(n, min_digits(std::max<uint32_t>(n, 1), cfg.alphabet_size)).first;
    m.calls_single[i] = single;
    m.calls_3c[i] = it->second;
    m.total_single += single;
    m.total_3c += it->second;
    m.max_single = std::max(m.max_single, single);
  }
  m.ratio = m.total_3c == 0 ? 0.0
                            : static_cast<double>(m.total_single) / static_cast<double>(m.total_3c);
  return m;
}

std::vector<RatioPoint> ratio_curve(const Stack<uint32_t>& density, uint32_t alphabet_size,
                                    std::span<const double> rhos) {
  for (double rho : rhos) check_rho(rho);
  std::vector<RatioPoint> out;
  out.reserve(rhos.size());
  for (double rho : rhos) {
    CostMap m = call_counts(density, {1, alphabet_size, rho});
    out.push_back({rho, m.total_single, m.total_3c, m.ratio, m.max_single});
  }
  return out;
}

}  // namespace threec
