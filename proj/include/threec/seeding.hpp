#ifndef THREEC_SEEDING_HPP
#define THREEC_SEEDING_HPP

#include <cstdint>
#include <vector>

#include "threec/volume.hpp"

namespace threec {

struct SeedConfig {
  double minima_depth = 0.05;  // h
  double stop_level = 0.5;
  uint64_t min_seed_area = 4;

  void validate() const;
};

/// Per-section 2-D over-segmentation with labels unique across the stack.
struct SeedVolume {
  LabelStack labels;
  std::vector<uint32_t> section_of;  // indexed by label, [0] unused
  std::vector<uint64_t> sizes;       // voxels per label, [0] unused
  uint32_t global_n = 0;
};

/*
 * Markers are the regional minima of the h-minima filtered section: the
 * section is reconstructed by erosion from (elevation + h) above the
 * elevation, and every 4-connected plateau of the reconstruction with no
 * strictly lower neighbour becomes one marker. Minima shallower than h are
 * thereby merged into their surroundings. Each marker C satisfies
 *   elev(p) <= min_C elev + h   for p in C,
 *   elev(q) >  min_C elev       for q 4-adjacent to C.
 * With h = 0 this is the plain regional-minimum labeling. Markers are
 * numbered 1..m in raster order of their first pixel.
 */
Grid<uint32_t> regional_minima_2d(SectionView<float> section, double h);

/// Reconstruction by erosion of (f + h) above f; exposed for testing.
std::vector<double> hminima_reconstruction(SectionView<float> section, double h);

/*
 * Marker-seeded priority flood restricted to pixels with elevation below
 * stop_level. Pixels are claimed in order of (elevation, raster index) by the
 * neighbour that reaches them first; pixels at or above stop_level stay 0.
 * Each resulting 4-connected piece gets its own label, numbered in raster
 * order.
 */
Grid<uint32_t> grow_seeds_2d(const Grid<uint32_t>& markers, SectionView<float> elevation,
                             double stop_level);

/// minima + growth + area filter for one section; labels compact 1..m in
/// raster order of first pixel.
Grid<uint32_t> seed_section(SectionView<float> elevation, const SeedConfig& cfg);

SeedVolume seed_volume(const ScalarStack& elevation, const SeedConfig& cfg,
                       unsigned workers = 1);

}  // namespace threec

#endif
