#ifndef THREEC_METRICS_HPP
#define THREEC_METRICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "threec/volume.hpp"

namespace threec {

struct ContingencyTable {
  struct Cell {
    uint32_t pred;
    uint32_t gt;
    uint64_t count;
  };
  std::vector<Cell> cells;  // sorted by (pred, gt), counts > 0
  std::vector<std::pair<uint32_t, uint64_t>> row_sums;  // per pred label
  std::vector<std::pair<uint32_t, uint64_t>> col_sums;  // per gt label
  uint64_t total = 0;
  bool ignore_background = true;
};

/// Co-occurrence counts of (pred, gt) labels. With ignore_background, voxels
/// whose gt label is 0 are left out entirely; pred label 0 is an ordinary row.
ContingencyTable contingency(std::span<const uint32_t> pred, std::span<const uint32_t> gt,
                             bool ignore_background = true);
ContingencyTable contingency(const LabelStack& pred, const LabelStack& gt,
                             bool ignore_background = true);

struct RandScore {
  double error;
  double precision;
  double recall;
};

struct ViScore {
  double vi;
  double split;  // H(pred | gt), bits
  double merge;  // H(gt | pred), bits
};

RandScore adapted_rand_error(const ContingencyTable& table);
ViScore variation_of_information(const ContingencyTable& table);

/// Copy of gt with every voxel that is background in pred set to 0, so that
/// an ignore_background evaluation only scores voxels the prediction labels.
LabelStack restrict_to_labeled(const LabelStack& gt, const LabelStack& pred);

}  // namespace threec

#endif
