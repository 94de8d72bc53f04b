#ifndef THREEC_SYNTHGEN_HPP
#define THREEC_SYNTHGEN_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "threec/volume.hpp"

namespace threec {

struct GenConfig {
  Dims dims{32, 128, 128};
  uint32_t n_objects = 24;
  double mean_radius = 5.0;
  double branch_prob = 0.05;
  double drift_sigma = 0.8;
  double gap_prob = 0.0;
  double elevation_blur_radius = 2.0;
  double noise_sigma = 0.0;
  uint64_t rng_seed = 1;

  void validate() const;
};

// Flat JSON object; every key is optional and unknown keys are rejected.
GenConfig gen_config_from_json(const std::string& text);
std::string gen_config_to_json(const GenConfig& cfg);

struct GeneratedStack {
  LabelStack gt;
  ScalarStack elevation;
};

/*
 * Tube-like objects on random-walk centerlines. The section plane is split
 * into a grid of cells, one object per cell; each object owns up to four
 * branches that drift independently and are painted as discs, so objects
 * branch and rejoin but never touch a neighbour (objects stay at least one
 * background voxel apart under 26-connectivity). An object skips a section
 * with probability gap_prob.
 *
 * The elevation map is 1 on background and on every object voxel whose
 * 8-neighbourhood holds another label, and ramps down from 0.45 to 0 over
 * elevation_blur_radius pixels towards object interiors (0 everywhere inside
 * when the radius is 0). Gaussian noise is added last, after which boundary
 * voxels are held at >= 0.5 and each object's most central interior voxel
 * per section at < 0.5.
 */
GeneratedStack generate_stack(const GenConfig& cfg);

/// clamp(value + N(0, sigma), 0, 1) per voxel.
ScalarStack perturb_elevation(const ScalarStack& elevation, double sigma, uint64_t rng_seed);

}  // namespace threec

#endif
