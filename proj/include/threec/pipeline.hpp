#ifndef THREEC_PIPELINE_HPP
#define THREEC_PIPELINE_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "threec/agglomeration.hpp"
#include "threec/encoding.hpp"
#include "threec/seeding.hpp"
#include "threec/synthgen.hpp"

namespace threec {

struct PipelineConfig {
  std::optional<std::filesystem::path> elevation;
  std::optional<GenConfig> synth;
  std::optional<std::filesystem::path> seeds;  // precomputed (possibly 3-D) seeds
  std::optional<std::filesystem::path> gt;

  SeedConfig seeding;

  uint32_t alphabet_size = 4;
  uint32_t redundancy = 1;
  std::optional<uint32_t> digits;  // overrides min_digits + redundancy
  uint64_t codebook_seed = 1;

  std::string classifier = "oracle";
  double eta = 0.0;
  uint64_t oracle_seed = 7;
  double cutoff = 0.9;  // above the interior ramp path cost, below the boundary band

  DecodePolicy decode;
  MergeConfig merge;

  std::filesystem::path output = "out";
  unsigned workers = 1;

  void validate() const;
};

/*
 * JSON document, e.g.
 *   { "synth": { "z": 32, ... } | "elevation": "elev.vol",
 *     "seeds": "seeds.vol", "gt": "gt.vol",
 *     "seeding":  { "h": 0.05, "stop": 0.5, "min_area": 4 },
 *     "codebook": { "l": 4, "redundancy": 1, "k": 6, "rng_seed": 1 },
 *     "classifier": "oracle" | "geodesic",
 *     "oracle":   { "eta": 0.0, "rng_seed": 7 },
 *     "geodesic": { "cutoff": 0.9 },
 *     "decode":   { "mode": "strict" | "nearest", "max_hamming": 0 },
 *     "merge":    { "W": 2, "threshold": 0.1, "min_component_size": 200 },
 *     "output": "run", "workers": 4 }
 * Unknown keys are errors. Relative paths resolve against base_dir.
 */
PipelineConfig pipeline_config_from_json(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Live/peak bytes of section data held by the pipeline, per kind.
/// digit_images covers everything a transfer holds in flight: the encoded
/// and predicted digit images and the decoded label grid.
class ResidencyMeter {
 public:
  enum Kind { elevation = 0, seeds = 1, ground_truth = 2, digit_images = 3 };
  static constexpr int kKinds = 4;

  void acquire(Kind kind, uint64_t bytes);
  void release(Kind kind, uint64_t bytes);
  uint64_t peak_bytes(Kind kind) const { return peak_[kind].load(); }
  uint64_t live_bytes(Kind kind) const { return live_[kind].load(); }

 private:
  std::array<std::atomic<uint64_t>, kKinds> live_{};
  std::array<std::atomic<uint64_t>, kKinds> peak_{};
};

struct RunReport {
  uint32_t n_seeds = 0;
  uint32_t k = 0;
  uint32_t l = 0;
  uint64_t classifier_calls = 0;
  uint64_t transfer_pairs = 0;
  uint32_t n_components = 0;
  uint64_t n_edges = 0;
  double wall_ms = 0.0;
  // Peak resident bytes per ResidencyMeter::Kind, rounded up to sections of
  // y * x 32-bit values.
  std::array<uint64_t, ResidencyMeter::kKinds> peak_sections{};
};

/// Seeding, encoding, transfer, decoding and agglomeration over a stack,
/// streamed section by section. Writes seeds.vol, segmentation.vol,
/// codebook.txt, edges.tsv and report.json into cfg.output (plus gt.vol and
/// elevation.vol for synthetic input).
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace threec

#endif
