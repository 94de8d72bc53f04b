#include "threec/agglomeration.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <queue>
#include <unordered_map>

namespace threec {

void MergeConfig::validate() const {
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "window W must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "merge threshold must lie in (0,1]");
}

Partition::Partition(std::vector<uint64_t> seed_sizes) : size_(std::move(seed_sizes)) {
  if (size_.empty()) size_.push_back(0);
  size_[0] = 0;
  parent_.resize(size_.size());
  for (uint32_t i = 0; i < parent_.size(); ++i) parent_[i] = i;
  components_ = static_cast<uint32_t>(size_.size() - 1);
}

uint32_t Partition::find(uint32_t label) const {
  if (label == 0 || label >= parent_.size())
    throw Error(ErrorCode::LabelOutOfRange, "seed " + std::to_string(label) + " not in partition");
  uint32_t root = label;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[label] != root) {
    uint32_t next = parent_[label];
    parent_[label] = root;
    label = next;
  }
  return root;
}

bool Partition::unite(uint32_t a, uint32_t b) {
  uint32_t ra = find(a), rb = find(b);
  if (ra == rb) return false;
  if (rb < ra) std::swap(ra, rb);
  parent_[rb] = ra;
  size_[ra] += size_[rb];
  size_[rb] = 0;
  --components_;
  return true;
}

std::vector<uint32_t> Partition::canonical() const {
  std::vector<uint32_t> out(parent_.size(), 0);
  for (uint32_t i = 1; i < parent_.size(); ++i) out[i] = find(i);
  return out;
}

std::vector<OverlapEdge> overlap_edges(SectionView<uint32_t> prediction, uint32_t source_z,
                                       SectionView<uint32_t> seeds_target) {
  if (prediction.height != seeds_target.height || prediction.width != seeds_target.width)
    throw Error(ErrorCode::ShapeMismatch, "prediction and target seeds differ in shape");
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> overlap;
  std::unordered_map<uint32_t, uint64_t> target_size;
  for (std::size_t i = 0; i < seeds_target.size(); ++i) {
    const uint32_t j = seeds_target[i];
    if (j == 0) continue;
    ++target_size[j];
    if (uint32_t src = prediction[i]; src != 0) ++overlap[{src, j}];
  }
  std::vector<OverlapEdge> edges;
  edges.reserve(overlap.size());
  for (const auto& [key, count] : overlap)
    edges.push_back({source_z, key.first, seeds_target.z, key.second, count,
                     static_cast<double>(count) / static_cast<double>(target_size[key.second])});
  return edges;
}

Partition merge_components(std::span<const OverlapEdge> edges, double threshold,
                           std::vector<uint64_t> seed_sizes) {
  Partition p(std::move(seed_sizes));
  for (const auto& e : edges)
    if (e.weight > threshold) p.unite(e.src_seed, e.dst_seed);
  return p;
}

Partition resolve_orphans(Partition p, std::span<const OverlapEdge> edges,
                          uint64_t min_component_size) {
  const uint32_t n = p.n_seeds();
  std::vector<std::vector<uint32_t>> incident(n + 1);
  for (uint32_t e = 0; e < edges.size(); ++e) {
    incident[edges[e].src_seed].push_back(e);
    if (edges[e].dst_seed != edges[e].src_seed) incident[edges[e].dst_seed].push_back(e);
  }
  std::vector<std::vector<uint32_t>> members(n + 1);
  for (uint32_t s = 1; s <= n; ++s) members[p.find(s)].push_back(s);

  using Entry = std::pair<uint64_t, uint32_t>;  // (size, root)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (uint32_t s = 1; s <= n; ++s)
    if (p.find(s) == s && p.component_size(s) < min_component_size)
      queue.emplace(p.component_size(s), s);

  while (!queue.empty()) {
    auto [size, root] = queue.top();
    queue.pop();
    if (p.find(root) != root || p.component_size(root) != size) continue;

    const OverlapEdge* best = nullptr;
    uint32_t best_other = 0;
    for (uint32_t s : members[root]) {
      for (uint32_t e : incident[s]) {
        const auto& edge = edges[e];
        uint32_t other = p.find(edge.src_seed) == root ? edge.dst_seed : edge.src_seed;
        if (p.find(other) == root) continue;
        bool better = best == nullptr || edge.weight > best->weight ||
                      (edge.weight == best->weight &&
                       (edge.overlap_pixels > best->overlap_pixels ||
                        (edge.overlap_pixels == best->overlap_pixels && other < best_other)));
        if (better) {
          best = &edge;
          best_other = other;
        }
      }
    }
    if (best == nullptr) continue;  // isolated: stays as is

    uint32_t other_root = p.find(best_other);
    p.unite(root, other_root);
    uint32_t merged = p.find(root);
    uint32_t absorbed = merged == root ? other_root : root;
    auto& keep = members[merged];
    auto& drop = members[absorbed];
    keep.insert(keep.end(), drop.begin(), drop.end());
    drop.clear();
    drop.shrink_to_fit();
    if (p.component_size(merged) < min_component_size)
      queue.emplace(p.component_size(merged), merged);
  }
  return p;
}

LabelStack finalize(const SeedVolume& seeds, const Partition& partition) {
  if (partition.n_seeds() < seeds.global_n)
    throw Error(ErrorCode::InvalidArgument, "partition does not cover every seed");
  auto roots = partition.canonical();
  LabelCompactor compactor;
  LabelStack out(seeds.labels.dims());
  auto src = seeds.labels.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    if (src[i] != 0) dst[i] = compactor.map(roots[src[i]]);
  return out;
}

void write_edges(std::span<const OverlapEdge> edges, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (const auto& e : edges)
    out << e.src_z << '\t' << e.src_seed << '\t' << e.dst_z << '\t' << e.dst_seed << '\t'
        << e.overlap_pixels << '\t' << e.weight << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace threec
