#ifndef THREEC_ENCODING_HPP
#define THREEC_ENCODING_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "threec/volume.hpp"

namespace threec {

/*
 * Cross-classification label encoding.
 *
 * A codebook maps each object label 1..N to a distinct string of k symbols
 * drawn from the alphabet {1..l}. Symbol 0 is reserved for background, so a
 * "digit image" (one projection of the encoded labels) holds values in
 * {0..l}. Running one l-class classifier per digit image and reading the k
 * predicted symbols of a pixel back through the inverse map recovers an
 * object label, which is how N-way instance transfer reduces to k = O(log N)
 * independent classifications.
 */

/// Smallest k >= 1 with l^k >= N.
uint32_t min_digits(uint64_t n_labels, uint32_t alphabet_size);

/// l^k, saturating at UINT64_MAX.
uint64_t codeword_capacity(uint32_t alphabet_size, uint32_t digits);

class Codebook {
 public:
  /// N distinct codewords drawn uniformly by rejection sampling.
  static Codebook build(uint32_t n_labels, uint32_t alphabet_size, uint32_t digits,
                        uint64_t rng_seed);

  /// Explicit codebook; words[i] is the codeword of label i+1.
  static Codebook from_codewords(uint32_t alphabet_size, uint32_t digits,
                                 const std::vector<std::vector<uint8_t>>& words,
                                 uint64_t rng_seed = 0);

  uint32_t n_labels() const { return n_labels_; }
  uint32_t alphabet_size() const { return alphabet_; }
  uint32_t digits() const { return digits_; }
  uint64_t rng_seed() const { return seed_; }

  std::span<const uint8_t> code(uint32_t label) const;

  /// Symbol of `label` at 1-based digit position.
  uint8_t symbol(uint32_t label, uint32_t digit) const {
    return words_[std::size_t{label - 1} * digits_ + (digit - 1)];
  }

  /// Label whose codeword equals `tuple`, or 0.
  uint32_t lookup(std::span<const uint8_t> tuple) const;

  /// The single label whose codeword lies within `max_hamming` of `tuple`;
  /// 0 when there is none or more than one.
  uint32_t lookup_nearest(std::span<const uint8_t> tuple, uint32_t max_hamming) const;

  uint32_t min_pairwise_distance() const;

  bool operator==(const Codebook& other) const {
    return n_labels_ == other.n_labels_ && alphabet_ == other.alphabet_ &&
           digits_ == other.digits_ && words_ == other.words_;
  }

 private:
  Codebook(uint32_t n, uint32_t l, uint32_t k, uint64_t seed);
  uint64_t pack(std::span<const uint8_t> tuple) const;
  void insert(uint32_t label, std::span<const uint8_t> word);

  uint32_t n_labels_ = 0;
  uint32_t alphabet_ = 0;
  uint32_t digits_ = 0;
  uint64_t seed_ = 0;
  std::vector<uint8_t> words_;  // N*k symbols
  std::unordered_map<uint64_t, uint32_t> inverse_;
};

// Text form: "3C-CODEBOOK N l k seed" followed by N lines "label d1 .. dk".
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// One digit projection of a labeled section.
struct ColoredSection {
  uint32_t z = 0;
  uint32_t digit = 0;  // 1..k
  Grid<uint8_t> colors;

  bool operator==(const ColoredSection&) const = default;
};

struct DecodePolicy {
  enum class Mode { strict, nearest };
  Mode mode = Mode::strict;
  uint32_t max_hamming = 0;

  void validate(uint32_t digits) const;
};

ColoredSection encode_digit(SectionView<uint32_t> section, const Codebook& cb, uint32_t digit);

/// Per-pixel inverse of the encoding over a full set of k digit images.
Grid<uint32_t> decode_pixels(std::span<const ColoredSection> digits, const Codebook& cb,
                             const DecodePolicy& policy);

}  // namespace threec

#endif
