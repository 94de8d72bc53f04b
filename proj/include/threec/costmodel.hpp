#ifndef THREEC_COSTMODEL_HPP
#define THREEC_COSTMODEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "threec/volume.hpp"

namespace threec {

/*
 * Classifier-call accounting for multi-object transfer versus single-object
 * tracking. For a pixel p that sees n(p) objects inside its field of view:
 *   single-object tracking: n(p) * ceil(1 / rho) calls (every object visits
 *     p, and only a fraction rho of an object's pixels is settled per call);
 *   cross-classification:   max(1, ceil(log_l max(n(p), 1))) calls.
 * These are model outputs, not measurements of any network.
 */

struct CostConfig {
  uint32_t fov = 9;
  uint32_t alphabet_size = 4;
  double rho = 0.5;

  void validate() const;
};

/// Distinct nonzero labels in the fov x fov in-section box around each
/// pixel (box clipped at the section border).
Stack<uint32_t> object_density_map(const LabelStack& labels, uint32_t fov);

struct CostMap {
  Dims dims;
  std::vector<uint32_t> calls_single;
  std::vector<uint32_t> calls_3c;
  uint64_t total_single = 0;
  uint64_t total_3c = 0;
  uint32_t max_single = 0;
  double ratio = 0.0;  // total_single / total_3c
};

/// ceil(1/rho) for rho in (0, 1].
uint32_t revisit_factor(double rho);

CostMap call_counts(const Stack<uint32_t>& density, const CostConfig& cfg);

struct RatioPoint {
  double rho;
  uint64_t total_single;
  uint64_t total_3c;
  double ratio;
  uint32_t max_single;
};

std::vector<RatioPoint> ratio_curve(const Stack<uint32_t>& density, uint32_t alphabet_size,
                                    std::span<const double> rhos);

}  // namespace threec

#endif
