#include "threec/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <queue>
#include <thread>
#include <utility>

namespace threec {

namespace {

// Calls fn(neighbour_index) for each in-bounds 4-neighbour of i.
template <class Fn>
inline void for_each_neighbor4(std::size_t i, uint32_t h, uint32_t w, Fn&& fn) {
  const uint32_t y = static_cast<uint32_t>(i / w);
  const uint32_t x = static_cast<uint32_t>(i % w);
  if (y > 0) fn(i - w);
  if (x > 0) fn(i - 1);
  if (x + 1 < w) fn(i + 1);
  if (y + 1 < h) fn(i + w);
}

// Relabels each 4-connected piece of equal nonzero label, numbering pieces
// by raster order of their first pixel. Pieces smaller than min_area are
// cleared.
Grid<uint32_t> relabel_pieces(const Grid<uint32_t>& in, uint64_t min_area) {
  const uint32_t h = in.height(), w = in.width();
  Grid<uint32_t> piece(h, w);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> members;
  std::vector<uint64_t> area{0};
  uint32_t next = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == 0 || piece[i] != 0) continue;
    const uint32_t label = in[i];
    uint64_t count = 0;
    stack.assign(1, i);
    piece[i] = next;
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      ++count;
      for_each_neighbor4(p, h, w, [&](std::size_t n) {
        if (piece[n] == 0 && in[n] == label) {
          piece[n] = next;
          stack.push_back(n);
        }
      });
    }
    area.push_back(count);
    ++next;
  }

  Grid<uint32_t> out(h, w);
  std::vector<uint32_t> remap(area.size(), 0);
  uint32_t kept = 0;
  for (std::size_t i = 0; i < piece.size(); ++i) {
    uint32_t p = piece[i];
    if (p == 0 || area[p] < min_area) continue;
    if (remap[p] == 0) remap[p] = ++kept;
    out[i] = remap[p];
  }
  return out;
}

}  // namespace

void SeedConfig::validate() const {
  if (!(minima_depth >= 0.0 && minima_depth <= stop_level && stop_level <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "seed config requires 0 <= h <= stop_level <= 1");
}

std::vector<double> hminima_reconstruction(SectionView<float> section, double h) {
  const std::size_t n = section.size();
  std::vector<double> recon(n);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t i = 0; i < n; ++i) {
    recon[i] = double{section[i]} + h;
    queue.emplace(recon[i], i);
  }
  while (!queue.empty()) {
    auto [value, p] = queue.top();
    queue.pop();
    if (value != recon[p]) continue;
    for_each_neighbor4(p, section.height, section.width, [&](std::size_t q) {
      double candidate = std::max(value, double{section[q]});
      if (candidate < recon[q]) {
        recon[q] = candidate;
        queue.emplace(candidate, q);
      }
    });
  }
  return recon;
}

Grid<uint32_t> regional_minima_2d(SectionView<float> section, double h) {
  if (h < 0.0) throw Error(ErrorCode::InvalidArgument, "minima depth must be >= 0");
  validate_scalars(section.values);
  const uint32_t height = section.height, width = section.width;
  const std::vector<double> recon =
      h == 0.0 ? std::vector<double>(section.values.begin(), section.values.end())
               : hminima_reconstruction(section, h);

  Grid<uint32_t> markers(height, width);
  std::vector<uint8_t> visited(recon.size(), 0);
  std::vector<std::size_t> plateau;
  uint32_t next = 1;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    if (visited[i]) continue;
    const double level = recon[i];
    plateau.assign(1, i);
    visited[i] = 1;
    bool is_minimum = true;
    for (std::size_t head = 0; head < plateau.size(); ++head) {
      for_each_neighbor4(plateau[head], height, width, [&](std::size_t q) {
        if (recon[q] < level) {
          is_minimum = false;
        } else if (recon[q] == level && !visited[q]) {
          visited[q] = 1;
          plateau.push_back(q);
        }
      });
    }
    if (!is_minimum) continue;
    for (std::size_t p : plateau) markers[p] = next;
    ++next;
  }
  return markers;
}

Grid<uint32_t> grow_seeds_2d(const Grid<uint32_t>& markers, SectionView<float> elevation,
                             double stop_level) {
  if (markers.height() != elevation.height || markers.width() != elevation.width)
    throw Error(ErrorCode::ShapeMismatch, "markers and elevation differ in shape");
  const uint32_t h = markers.height(), w = markers.width();
  Grid<uint32_t> grown(h, w);

  using Item = std::pair<float, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (markers[i] != 0 && elevation[i] < stop_level) {
      grown[i] = markers[i];
      queue.emplace(elevation[i], i);
    }
  }
  while (!queue.empty()) {
    std::size_t p = queue.top().second;
    queue.pop();
    for_each_neighbor4(p, h, w, [&](std::size_t q) {
      if (grown[q] == 0 && elevation[q] < stop_level) {
        grown[q] = grown[p];
        queue.emplace(elevation[q], q);
      }
    });
  }
  return relabel_pieces(grown, 1);
}

Grid<uint32_t> seed_section(SectionView<float> elevation, const SeedConfig& cfg) {
  auto markers = regional_minima_2d(elevation, cfg.minima_depth);
  auto grown = grow_seeds_2d(markers, elevation, cfg.stop_level);
  if (cfg.min_seed_area <= 1) return grown;
  return relabel_pieces(grown, cfg.min_seed_area);
}

SeedVolume seed_volume(const ScalarStack& elevation, const SeedConfig& cfg, unsigned workers) {
  cfg.validate();
  const Dims dims = elevation.dims();
  std::vector<Grid<uint32_t>> per_section(dims.z);

  std::atomic<uint32_t> next_z{0};
  auto work = [&] {
    for (uint32_t z = next_z++; z < dims.z; z = next_z++)
      per_section[z] = seed_section(elevation.section(z), cfg);
  };
  workers = std::max(1u, std::min<unsigned>(workers, dims.z));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }

  SeedVolume out;
  out.labels = LabelStack(dims);
  out.section_of.push_back(0);
  out.sizes.push_back(0);
  uint32_t offset = 0;
  for (uint32_t z = 0; z < dims.z; ++z) {
    auto dst = out.labels.section_values(z);
    uint32_t local_max = 0;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      uint32_t local = per_section[z][i];
      if (local == 0) continue;
      local_max = std::max(local_max, local);
      dst[i] = offset + local;
    }
    out.section_of.resize(offset + local_max + 1, z);
    out.sizes.resize(offset + local_max + 1, 0);
    for (uint32_t v : dst)
      if (v != 0) ++out.sizes[v];
    offset += local_max;
  }
  out.global_n = offset;
  return out;
}

}  // namespace threec
