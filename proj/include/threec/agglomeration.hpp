#ifndef THREEC_AGGLOMERATION_HPP
#define THREEC_AGGLOMERATION_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "threec/seeding.hpp"
#include "threec/volume.hpp"

namespace threec {

/// Directed edge from a source-section seed to a target-section seed:
/// weight = |prediction of src_seed ∩ dst_seed| / |dst_seed in its section|.
struct OverlapEdge {
  uint32_t src_z = 0;
  uint32_t src_seed = 0;
  uint32_t dst_z = 0;
  uint32_t dst_seed = 0;
  uint64_t overlap_pixels = 0;
  double weight = 0.0;

  bool operator==(const OverlapEdge&) const = default;
};

struct MergeConfig {
  uint32_t window = 2;       // W
  double threshold = 0.1;    // merge when weight > threshold
  uint64_t min_component_size = 200;

  void validate() const;
};

/// Union-find over seed labels 1..N with voxel sizes. The root of every
/// component is its smallest label, so the partition's representation does
/// not depend on the order of unions.
class Partition {
 public:
  Partition() = default;
  /// seed_sizes[label] for label 1..N; entry 0 is ignored.
  explicit Partition(std::vector<uint64_t> seed_sizes);

  uint32_t n_seeds() const { return static_cast<uint32_t>(parent_.size() - 1); }
  uint32_t find(uint32_t label) const;
  bool unite(uint32_t a, uint32_t b);
  uint64_t component_size(uint32_t label) const { return size_[find(label)]; }
  uint32_t n_components() const { return components_; }

  /// Root (smallest member) of every label's component; index 0 is 0.
  std::vector<uint32_t> canonical() const;

 private:
  mutable std::vector<uint32_t> parent_{0};
  std::vector<uint64_t> size_{0};
  uint32_t components_ = 0;
};

std::vector<OverlapEdge> overlap_edges(SectionView<uint32_t> prediction, uint32_t source_z,
                                       SectionView<uint32_t> seeds_target);

Partition merge_components(std::span<const OverlapEdge> edges, double threshold,
                           std::vector<uint64_t> seed_sizes);

/// Greedy orphan linking: repeatedly takes the smallest component below
/// min_component_size that has an edge to another component and merges it
/// along its best edge (highest weight, then most overlap pixels, then the
/// lowest seed label on the far side).
Partition resolve_orphans(Partition partition, std::span<const OverlapEdge> edges,
                          uint64_t min_component_size);

/// Each voxel takes its seed's component, components numbered by first
/// appearance in z-major order.
LabelStack finalize(const SeedVolume& seeds, const Partition& partition);

void write_edges(std::span<const OverlapEdge> edges, const std::filesystem::path& path);

}  // namespace threec

#endif
