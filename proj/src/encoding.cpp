#include "threec/encoding.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace threec {

namespace {

constexpr uint64_t kSaturated = std::numeric_limits<uint64_t>::max();

void check_alphabet(uint32_t alphabet_size, uint32_t digits) {
  if (alphabet_size < 2 || alphabet_size > 255)
    throw Error(ErrorCode::InvalidArgument, "alphabet size must be in [2, 255]");
  if (digits < 1) throw Error(ErrorCode::InvalidArgument, "digit count must be >= 1");
  if (codeword_capacity(alphabet_size, digits) == kSaturated)
    throw Error(ErrorCode::InvalidArgument, "l^k must fit in 64 bits");
}

uint64_t ball_size(uint32_t k, uint32_t l, uint32_t radius, uint64_t limit) {
  uint64_t total = 0;
  uint64_t binom = 1;  // C(k, d)
  uint64_t power = 1;  // (l-1)^d
  for (uint32_t d = 0; d <= std::min(radius, k); ++d) {
    if (d > 0) {
      binom = binom * (k - d + 1) / d;
      if (power > limit / (l - 1)) return limit;
      power *= (l - 1);
    }
    if (binom > limit || power > limit / std::max<uint64_t>(binom, 1)) return limit;
    total += binom * power;
    if (total >= limit) return limit;
  }
  return total;
}

}  // namespace

uint32_t min_digits(uint64_t n_labels, uint32_t alphabet_size) {
  if (alphabet_size < 2) throw Error(ErrorCode::InvalidArgument, "alphabet size must be >= 2");
  if (n_labels < 1) throw Error(ErrorCode::InvalidArgument, "label count must be >= 1");
  uint32_t k = 1;
  uint64_t cap = alphabet_size;
  while (cap < n_labels) {
    cap = (cap > kSaturated / alphabet_size) ? kSaturated : cap * alphabet_size;
    ++k;
  }
  return k;
}

uint64_t codeword_capacity(uint32_t alphabet_size, uint32_t digits) {
  uint64_t cap = 1;
  for (uint32_t i = 0; i < digits; ++i) {
    if (cap > (kSaturated - 1) / alphabet_size) return kSaturated;
    cap *= alphabet_size;
  }
  return cap;
}

Codebook::Codebook(uint32_t n, uint32_t l, uint32_t k, uint64_t seed)
    : n_labels_(n), alphabet_(l), digits_(k), seed_(seed) {}

uint64_t Codebook::pack(std::span<const uint8_t> tuple) const {
  uint64_t key = 0;
  for (auto it = tuple.rbegin(); it != tuple.rend(); ++it) key = key * alphabet_ + (*it - 1u);
  return key;
}

void Codebook::insert(uint32_t label, std::span<const uint8_t> word) {
  for (uint8_t s : word)
    if (s < 1 || s > alphabet_)
      throw Error(ErrorCode::InvalidArgument, "codeword symbol outside the alphabet");
  if (!inverse_.emplace(pack(word), label).second)
    throw Error(ErrorCode::InvalidArgument, "codewords must be distinct");
  words_.insert(words_.end(), word.begin(), word.end());
}

Codebook Codebook::build(uint32_t n_labels, uint32_t alphabet_size, uint32_t digits,
                         uint64_t rng_seed) {
  check_alphabet(alphabet_size, digits);
  if (codeword_capacity(alphabet_size, digits) < n_labels)
    throw Error(ErrorCode::CapacityExceeded,
                std::to_string(alphabet_size) + "^" + std::to_string(digits) + " < " +
                    std::to_string(n_labels));

  Codebook cb(n_labels, alphabet_size, digits, rng_seed);
  cb.words_.reserve(std::size_t{n_labels} * digits);
  cb.inverse_.reserve(n_labels);
  std::mt19937_64 gen(rng_seed);
  std::uniform_int_distribution<int> symbol(1, static_cast<int>(alphabet_size));
  std::vector<uint8_t> word(digits);
  uint32_t label = 1;
  while (label <= n_labels) {
    for (auto& s : word) s = static_cast<uint8_t>(symbol(gen));
    uint64_t key = cb.pack(word);
    if (!cb.inverse_.emplace(key, label).second) continue;  // collision: reject
    cb.words_.insert(cb.words_.end(), word.begin(), word.end());
    ++label;
  }
  return cb;
}

Codebook Codebook::from_codewords(uint32_t alphabet_size, uint32_t digits,
                                  const std::vector<std::vector<uint8_t>>& words,
                                  uint64_t rng_seed) {
  check_alphabet(alphabet_size, digits);
  if (words.size() > std::numeric_limits<uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "too many codewords");
  Codebook cb(static_cast<uint32_t>(words.size()), alphabet_size, digits, rng_seed);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() != digits)
      throw Error(ErrorCode::InvalidArgument, "codeword length differs from k");
    cb.insert(static_cast<uint32_t>(i + 1), words[i]);
  }
  return cb;
}

std::span<const uint8_t> Codebook::code(uint32_t label) const {
  if (label < 1 || label > n_labels_)
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
  return std::span<const uint8_t>(words_).subspan(std::size_t{label - 1} * digits_, digits_);
}

uint32_t Codebook::lookup(std::span<const uint8_t> tuple) const {
  for (uint8_t s : tuple)
    if (s < 1 || s > alphabet_) return 0;
  auto it = inverse_.find(pack(tuple));
  return it == inverse_.end() ? 0 : it->second;
}

uint32_t Codebook::lookup_nearest(std::span<const uint8_t> tuple, uint32_t max_hamming) const {
  if (uint32_t exact = lookup(tuple); exact != 0 && max_hamming == 0) return exact;

  // Either enumerate the Hamming ball around the tuple or scan the codebook,
  // whichever touches fewer candidates.
  const uint64_t ball = ball_size(digits_, alphabet_, max_hamming, uint64_t{n_labels_} + 1);
  uint32_t found = 0;
  uint32_t matches = 0;

  if (ball <= n_labels_) {
    std::vector<uint8_t> probe(tuple.begin(), tuple.end());
    // Symbols outside the alphabet (e.g. 0) always count as a mismatch.
    auto recurse = [&](auto&& self, uint32_t pos, uint32_t budget) -> void {
      if (matches > 1) return;
      if (pos == digits_) {
        if (uint32_t label = lookup(probe); label != 0) {
          if (label != found) {
            found = label;
            ++matches;
          }
        }
        return;
      }
      const uint8_t original = tuple[pos];
      const bool valid = original >= 1 && original <= alphabet_;
      if (valid) self(self, pos + 1, budget);
      if (budget == 0) return;
      for (uint32_t s = 1; s <= alphabet_; ++s) {
        if (valid && s == original) continue;
        probe[pos] = static_cast<uint8_t>(s);
        self(self, pos + 1, budget - 1);
        if (matches > 1) break;
      }
      probe[pos] = original;
    };
    recurse(recurse, 0, max_hamming);
  } else {
    for (uint32_t label = 1; label <= n_labels_ && matches <= 1; ++label) {
      auto word = code(label);
      uint32_t dist = 0;
      for (uint32_t i = 0; i < digits_ && dist <= max_hamming; ++i) dist += word[i] != tuple[i];
      if (dist <= max_hamming) {
        found = label;
        ++matches;
      }
    }
  }
  return matches == 1 ? found : 0;
}

uint32_t Codebook::min_pairwise_distance() const {
  uint32_t best = digits_;
  for (uint32_t a = 1; a <= n_labels_; ++a) {
    auto wa = code(a);
    for (uint32_t b = a + 1; b <= n_labels_; ++b) {
      auto wb = code(b);
      uint32_t d = 0;
      for (uint32_t i = 0; i < digits_; ++i) d += wa[i] != wb[i];
      best = std::min(best, d);
    }
  }
  return best;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "3C-CODEBOOK " << cb.n_labels() << ' ' << cb.alphabet_size() << ' ' << cb.digits()
      << ' ' << cb.rng_seed() << '\n';
  for (uint32_t label = 1; label <= cb.n_labels(); ++label) {
    out << label;
    for (uint8_t s : cb.code(label)) out << ' ' << static_cast<unsigned>(s);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string magic;
  uint64_t n = 0, l = 0, k = 0, seed = 0;
  if (!(in >> magic >> n >> l >> k >> seed) || magic != "3C-CODEBOOK")
    throw Error(ErrorCode::BadMagic, path.string() + " is not a codebook file");
  if (l < 2 || l > 255 || k < 1 || k > 64 || n > std::numeric_limits<uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "codebook header out of range");

  std::vector<std::vector<uint8_t>> words(n, std::vector<uint8_t>(k));
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t label = 0;
    if (!(in >> label) || label != i + 1)
      throw Error(ErrorCode::TruncatedFile, "codebook labels must be 1..N in order");
    for (auto& s : words[i]) {
      unsigned v = 0;
      if (!(in >> v)) throw Error(ErrorCode::TruncatedFile, "codebook line too short");
      if (v < 1 || v > l) throw Error(ErrorCode::InvalidArgument, "codebook symbol out of range");
      s = static_cast<uint8_t>(v);
    }
  }
  return Codebook::from_codewords(static_cast<uint32_t>(l), static_cast<uint32_t>(k), words,
                                  seed);
}

void DecodePolicy::validate(uint32_t digits) const {
  if (mode == Mode::nearest && max_hamming >= digits)
    throw Error(ErrorCode::InvalidArgument, "max_hamming must be smaller than k");
}

ColoredSection encode_digit(SectionView<uint32_t> section, const Codebook& cb, uint32_t digit) {
  if (digit < 1 || digit > cb.digits())
    throw Error(ErrorCode::InvalidArgument, "digit index outside 1..k");
  ColoredSection out{section.z, digit, Grid<uint8_t>(section.height, section.width)};
  auto colors = out.colors.values();
  for (std::size_t i = 0; i < section.size(); ++i) {
    uint32_t label = section[i];
    if (label == 0) continue;
    if (label > cb.n_labels())
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(label) + " exceeds codebook size");
    colors[i] = cb.symbol(label, digit);
  }
  return out;
}

Grid<uint32_t> decode_pixels(std::span<const ColoredSection> digits, const Codebook& cb,
                             const DecodePolicy& policy) {
  const uint32_t k = cb.digits();
  policy.validate(k);
  if (digits.size() != k)
    throw Error(ErrorCode::MissingDigit, "expected " + std::to_string(k) + " digit images");

  std::vector<const ColoredSection*> ordered(k, nullptr);
  for (const auto& d : digits) {
    if (d.digit < 1 || d.digit > k || ordered[d.digit - 1] != nullptr)
      throw Error(ErrorCode::MissingDigit, "digit indices must be exactly 1..k");
    ordered[d.digit - 1] = &d;
  }
  const uint32_t h = ordered[0]->colors.height();
  const uint32_t w = ordered[0]->colors.width();
  const uint32_t z = ordered[0]->z;
  for (const auto* d : ordered)
    if (d->colors.height() != h || d->colors.width() != w || d->z != z)
      throw Error(ErrorCode::ShapeMismatch, "digit images differ in shape or section");

  Grid<uint32_t> out(h, w);
  std::vector<uint8_t> tuple(k);
  const bool nearest = policy.mode == DecodePolicy::Mode::nearest;
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool background = false;
    for (uint32_t j = 0; j < k; ++j) {
      tuple[j] = ordered[j]->colors[i];
      background |= tuple[j] == 0;
    }
    if (background) continue;
    uint32_t label = cb.lookup(tuple);
    if (label == 0 && nearest && policy.max_hamming > 0)
      label = cb.lookup_nearest(tuple, policy.max_hamming);
    out[i] = label;
  }
  return out;
}

}  // namespace threec
