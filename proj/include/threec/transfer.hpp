#ifndef THREEC_TRANSFER_HPP
#define THREEC_TRANSFER_HPP

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "threec/encoding.hpp"
#include "threec/volume.hpp"

namespace threec {

/// Inputs available to a classifier for one source -> target transfer.
/// Mirrors the raw image / seed mask / border probability channels; the
/// reference classifiers only read the subset they need.
struct TransferContext {
  uint32_t source_z = 0;
  uint32_t target_z = 0;
  std::optional<SectionView<float>> raw;
  std::optional<SectionView<float>> elev_target;
  std::optional<SectionView<uint32_t>> gt_source;  // oracle only
  std::optional<SectionView<uint32_t>> gt_target;  // oracle only
};

/// Throws InvalidArgument unless source != target, both lie in
/// [0, n_sections) and they are at most `window` sections apart.
void validate_context(const TransferContext& ctx, uint32_t n_sections, uint32_t window);

/*
 * One l-class classifier f' applied to a single digit image. The same
 * instance is applied to all k digit images of a transfer; its output per
 * pixel is 0 or a symbol in 1..l. Implementations must be deterministic and
 * safe to call concurrently.
 */
class DigitClassifier {
 public:
  virtual ~DigitClassifier() = default;
  virtual ColoredSection classify(const ColoredSection& source, const TransferContext& ctx) const = 0;
  virtual std::string name() const = 0;
};

/// Ground-truth oracle with symbol-flip noise. Each target pixel of a gt
/// object that is colored at the source takes the color of that object's
/// first colored source pixel (raster order); every nonzero output symbol is
/// then replaced by a uniformly drawn different symbol with probability eta.
/// The noise stream is keyed by (seed, source_z, target_z, digit).
ColoredSection oracle_transfer(const ColoredSection& source, const TransferContext& ctx,
                               uint32_t alphabet_size, double eta, uint64_t rng_seed);

/// Multi-source shortest path over the target section. Colored source
/// pixels are projected to the same (y, x); entering a pixel costs its
/// target elevation (the start pixel included). Each pixel takes the color
/// of its cheapest source, ties going to the lower color and then the lower
/// raster index of the source; pixels costing more than cutoff stay 0.
ColoredSection geodesic_transfer(const ColoredSection& source, const TransferContext& ctx,
                                 double cutoff = std::numeric_limits<double>::infinity());

class OracleClassifier final : public DigitClassifier {
 public:
  OracleClassifier(uint32_t alphabet_size, double eta, uint64_t rng_seed);
  ColoredSection classify(const ColoredSection& source, const TransferContext& ctx) const override;
  std::string name() const override { return "oracle"; }

 private:
  uint32_t alphabet_;
  double eta_;
  uint64_t seed_;
};

class GeodesicClassifier final : public DigitClassifier {
 public:
  explicit GeodesicClassifier(double cutoff);
  ColoredSection classify(const ColoredSection& source, const TransferContext& ctx) const override;
  std::string name() const override { return "geodesic"; }

 private:
  double cutoff_;
};

/// Encodes the source seeds into k digit images, runs the classifier once
/// per digit and decodes the k predictions back to seed labels at target_z.
Grid<uint32_t> cross_classify(SectionView<uint32_t> seeds_source, const TransferContext& ctx,
                              const Codebook& cb, const DigitClassifier& clf,
                              const DecodePolicy& policy);

}  // namespace threec

#endif
