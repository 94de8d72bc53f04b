#include "threec/transfer.hpp"

#include <queue>
#include <random>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "threec/rng.hpp"

namespace threec {

void validate_context(const TransferContext& ctx, uint32_t n_sections, uint32_t window) {
  if (ctx.source_z == ctx.target_z)
    throw Error(ErrorCode::InvalidArgument, "source and target sections must differ");
  if (ctx.source_z >= n_sections || ctx.target_z >= n_sections)
    throw Error(ErrorCode::InvalidArgument, "transfer section out of range");
  const uint32_t gap =
      ctx.source_z > ctx.target_z ? ctx.source_z - ctx.target_z : ctx.target_z - ctx.source_z;
  if (gap > window) throw Error(ErrorCode::InvalidArgument, "transfer exceeds the window W");
}

ColoredSection oracle_transfer(const ColoredSection& source, const TransferContext& ctx,
                               uint32_t alphabet_size, double eta, uint64_t rng_seed) {
  if (!ctx.gt_source || !ctx.gt_target)
    throw Error(ErrorCode::MissingGroundTruth, "oracle transfer needs ground truth");
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0,1]");
  if (alphabet_size < 2) throw Error(ErrorCode::InvalidArgument, "alphabet size must be >= 2");
  const auto& gt_src = *ctx.gt_source;
  const auto& gt_tgt = *ctx.gt_target;
  const auto& colors = source.colors;
  if (gt_src.size() != colors.size() || gt_tgt.height != colors.height() ||
      gt_tgt.width != colors.width())
    throw Error(ErrorCode::ShapeMismatch, "ground truth and digit image differ in shape");

  std::unordered_map<uint32_t, uint8_t> object_color;
  for (std::size_t i = 0; i < colors.size(); ++i)
    if (colors[i] != 0 && gt_src[i] != 0) object_color.try_emplace(gt_src[i], colors[i]);

  ColoredSection out{ctx.target_z, source.digit, Grid<uint8_t>(colors.height(), colors.width())};
  for (std::size_t i = 0; i < gt_tgt.size(); ++i) {
    if (gt_tgt[i] == 0) continue;
    if (auto it = object_color.find(gt_tgt[i]); it != object_color.end()) out.colors[i] = it->second;
  }

  if (eta > 0.0) {
    // Every pixel draws (u, shift) whether or not it flips, so the flips at
    // one eta are a subset of those at any larger eta for the same seed.
    std::mt19937_64 gen(derive_seed(rng_seed, {ctx.source_z, ctx.target_z, source.digit}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<uint32_t> shift(1, alphabet_size - 1);
    for (auto& c : out.colors.values()) {
      const double u = unit(gen);
      const uint32_t s = shift(gen);
      if (c != 0 && u < eta) c = static_cast<uint8_t>((c - 1u + s) % alphabet_size + 1u);
    }
  }
  return out;
}

ColoredSection geodesic_transfer(const ColoredSection& source, const TransferContext& ctx,
                                 double cutoff) {
  if (!ctx.elev_target) throw Error(ErrorCode::InvalidArgument, "geodesic transfer needs elevation");
  if (!(cutoff >= 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be >= 0");
  const auto& elev = *ctx.elev_target;
  const auto& colors = source.colors;
  const uint32_t h = colors.height(), w = colors.width();
  if (elev.height != h || elev.width != w)
    throw Error(ErrorCode::ShapeMismatch, "elevation and digit image differ in shape");

  // Lexicographic key: accumulated cost, then source color, then source index.
  using Key = std::tuple<double, uint8_t, std::size_t>;
  using Item = std::pair<Key, std::size_t>;
  const Key unreached{std::numeric_limits<double>::infinity(), 0, 0};
  std::vector<Key> best(colors.size(), unreached);
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (colors[i] == 0) continue;
    Key k{double{elev[i]}, colors[i], i};
    if (k < best[i]) {
      best[i] = k;
      queue.emplace(k, i);
    }
  }
  while (!queue.empty()) {
    auto [key, p] = queue.top();
    queue.pop();
    if (key != best[p]) continue;
    if (std::get<0>(key) > cutoff) break;
    const uint32_t y = static_cast<uint32_t>(p / w), x = static_cast<uint32_t>(p % w);
    auto relax = [&](std::size_t q) {
      Key candidate{std::get<0>(key) + double{elev[q]}, std::get<1>(key), std::get<2>(key)};
      if (candidate < best[q]) {
        best[q] = candidate;
        queue.emplace(candidate, q);
      }
    };
    if (y > 0) relax(p - w);
    if (x > 0) relax(p - 1);
    if (x + 1 < w) relax(p + 1);
    if (y + 1 < h) relax(p + w);
  }

  ColoredSection out{ctx.target_z, source.digit, Grid<uint8_t>(h, w)};
  for (std::size_t i = 0; i < best.size(); ++i)
    if (std::get<0>(best[i]) <= cutoff) out.colors[i] = std::get<1>(best[i]);
  return out;
}

OracleClassifier::OracleClassifier(uint32_t alphabet_size, double eta, uint64_t rng_seed)
    : alphabet_(alphabet_size), eta_(eta), seed_(rng_seed) {
  if (alphabet_ < 2) throw Error(ErrorCode::InvalidArgument, "alphabet size must be >= 2");
  if (!(eta_ >= 0.0 && eta_ <= 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0,1]");
}

ColoredSection OracleClassifier::classify(const ColoredSection& source,
                                          const TransferContext& ctx) const {
  return oracle_transfer(source, ctx, alphabet_, eta_, seed_);
}

GeodesicClassifier::GeodesicClassifier(double cutoff) : cutoff_(cutoff) {
  if (!(cutoff_ >= 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be >= 0");
}

ColoredSection GeodesicClassifier::classify(const ColoredSection& source,
                                            const TransferContext& ctx) const {
  return geodesic_transfer(source, ctx, cutoff_);
}

Grid<uint32_t> cross_classify(SectionView<uint32_t> seeds_source, const TransferContext& ctx,
                              const Codebook& cb, const DigitClassifier& clf,
                              const DecodePolicy& policy) {
  std::vector<ColoredSection> predicted;
  predicted.reserve(cb.digits());
  for (uint32_t digit = 1; digit <= cb.digits(); ++digit) {
    ColoredSection encoded = encode_digit(seeds_source, cb, digit);
    encoded.z = ctx.source_z;
    ColoredSection out = clf.classify(encoded, ctx);
    out.z = ctx.target_z;
    out.digit = digit;
    predicted.push_back(std::move(out));
  }
  Grid<uint32_t> decoded = decode_pixels(predicted, cb, policy);

  // The codebook is global, so a corrupted tuple can decode to a seed that
  // lives in another section. Only labels present at the source survive.
  std::vector<bool> present(std::size_t{cb.n_labels()} + 1, false);
  for (uint32_t v : seeds_source.values)
    if (v) present[v] = true;
  for (auto& v : decoded.values())
    if (v && !present[v]) v = 0;
  return decoded;
}

}  // namespace threec
