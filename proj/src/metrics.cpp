#include "threec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace threec {

namespace {

std::vector<std::pair<uint32_t, uint64_t>> sorted_sums(
    const std::unordered_map<uint32_t, uint64_t>& sums) {
  std::vector<std::pair<uint32_t, uint64_t>> out(sums.begin(), sums.end());
  std::sort(out.begin(), out.end());
  return out;
}

void require_nonempty(const ContingencyTable& t) {
  if (t.total == 0) throw Error(ErrorCode::EmptyTable, "contingency table has no voxels");
}

}  // namespace

ContingencyTable contingency(std::span<const uint32_t> pred, std::span<const uint32_t> gt,
                             bool ignore_background) {
  if (pred.size() != gt.size())
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth differ in size");
  std::unordered_map<uint64_t, uint64_t> counts;
  std::unordered_map<uint32_t, uint64_t> rows, cols;
  ContingencyTable t;
  t.ignore_background = ignore_background;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (ignore_background && gt[i] == 0) continue;
    ++counts[(uint64_t{pred[i]} << 32) | gt[i]];
    ++rows[pred[i]];
    ++cols[gt[i]];
    ++t.total;
  }
  t.cells.reserve(counts.size());
  for (const auto& [key, n] : counts)
    t.cells.push_back({static_cast<uint32_t>(key >> 32), static_cast<uint32_t>(key), n});
  std::sort(t.cells.begin(), t.cells.end(), [](const auto& a, const auto& b) {
    return std::pair(a.pred, a.gt) < std::pair(b.pred, b.gt);
  });
  t.row_sums = sorted_sums(rows);
  t.col_sums = sorted_sums(cols);
  return t;
}

ContingencyTable contingency(const LabelStack& pred, const LabelStack& gt, bool ignore_background) {
  if (pred.dims() != gt.dims())
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth differ in dims");
  return contingency(pred.values(), gt.values(), ignore_background);
}

RandScore adapted_rand_error(const ContingencyTable& t) {
  require_nonempty(t);
  // Counts squared can exceed 64 bits on large volumes.
  long double sum_nij = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& c : t.cells) sum_nij += static_cast<long double>(c.count) * c.count;
  for (const auto& [label, s] : t.row_sums) sum_rows += static_cast<long double>(s) * s;
  for (const auto& [label, s] : t.col_sums) sum_cols += static_cast<long double>(s) * s;
  const long double precision = sum_nij / sum_rows;
  const long double recall = sum_nij / sum_cols;
  const long double f = 2 * precision * recall / (precision + recall);
  return {static_cast<double>(1 - f), static_cast<double>(precision),
          static_cast<double>(recall)};
}

ViScore variation_of_information(const ContingencyTable& t) {
  require_nonempty(t);
  std::unordered_map<uint32_t, uint64_t> rows(t.row_sums.begin(), t.row_sums.end());
  std::unordered_map<uint32_t, uint64_t> cols(t.col_sums.begin(), t.col_sums.end());
  const double total = static_cast<double>(t.total);
  double split = 0.0, merge = 0.0;
  for (const auto& c : t.cells) {
    const double p = c.count / total;
    split -= p * std::log2(static_cast<double>(c.count) / cols[c.gt]);
    merge -= p * std::log2(static_cast<double>(c.count) / rows[c.pred]);
  }
  // log2(1) terms may leave -0.0 behind.
  split = std::max(0.0, split);
  merge = std::max(0.0, merge);
  return {split + merge, split, merge};
}

LabelStack restrict_to_labeled(const LabelStack& gt, const LabelStack& pred) {
  if (pred.dims() != gt.dims())
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth differ in dims");
  LabelStack out = gt;
  auto dst = out.values();
  auto p = pred.values();
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (p[i] == 0) dst[i] = 0;
  return out;
}

}  // namespace threec
