#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"
#include "test_util.hpp"
#include "threec/pipeline.hpp"
#include "threec/seeding.hpp"
#include "threec/synthgen.hpp"
#include "threec/transfer.hpp"

using namespace threec;

namespace {

// Bellman-Ford over (cost, color, source index) keys; no priority queue.
Grid<uint8_t> slow_geodesic(const Grid<uint8_t>& colors, const Grid<float>& elev, double cutoff) {
  using Key = std::tuple<double, uint8_t, std::size_t>;
  const uint32_t h = colors.height(), w = colors.width();
  std::vector<Key> best(colors.size(), Key{INFINITY, 0, 0});
  for (std::size_t i = 0; i < colors.size(); ++i)
    if (colors[i]) best[i] = Key{elev[i], colors[i], i};
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t p = 0; p < best.size(); ++p) {
      if (std::isinf(std::get<0>(best[p]))) continue;
      uint32_t y = static_cast<uint32_t>(p / w), x = static_cast<uint32_t>(p % w);
      std::vector<std::size_t> nb;
      if (y > 0) nb.push_back(p - w);
      if (y + 1 < h) nb.push_back(p + w);
      if (x > 0) nb.push_back(p - 1);
      if (x + 1 < w) nb.push_back(p + 1);
      for (auto q : nb) {
        Key c{std::get<0>(best[p]) + elev[q], std::get<1>(best[p]), std::get<2>(best[p])};
        if (c < best[q]) {
          best[q] = c;
          changed = true;
        }
      }
    }
  }
  Grid<uint8_t> out(h, w);
  for (std::size_t i = 0; i < best.size(); ++i)
    if (std::get<0>(best[i]) <= cutoff) out[i] = std::get<1>(best[i]);
  return out;
}

class CountingClassifier final : public DigitClassifier {
 public:
  explicit CountingClassifier(const DigitClassifier& inner) : inner_(inner) {}
  ColoredSection classify(const ColoredSection& s, const TransferContext& ctx) const override {
    ++calls;
    return inner_.classify(s, ctx);
  }
  std::string name() const override { return "counting"; }
  mutable std::atomic<int> calls{0};

 private:
  const DigitClassifier& inner_;
};

struct Pair {
  Grid<uint32_t> gt_src, gt_tgt, seeds;
  Grid<float> elev;
};

// Random blocky ground truth on two sections; seeds are sub-blocks of the
// source objects, so several seeds may share one object.
Pair random_pair(std::mt19937_64& gen, uint32_t h, uint32_t w, uint32_t n_objects) {
  Pair p{Grid<uint32_t>(h, w), Grid<uint32_t>(h, w), Grid<uint32_t>(h, w), Grid<float>(h, w)};
  std::uniform_int_distribution<uint32_t> obj(0, n_objects);
  const uint32_t block = 4;
  for (uint32_t by = 0; by < h; by += block)
    for (uint32_t bx = 0; bx < w; bx += block) {
      uint32_t a = obj(gen), b = gen() % 3 == 0 ? obj(gen) : a;
      for (uint32_t y = by; y < std::min(h, by + block); ++y)
        for (uint32_t x = bx; x < std::min(w, bx + block); ++x) {
          p.gt_src(y, x) = a;
          p.gt_tgt(y, x) = b;
        }
    }
  uint32_t next = 0;
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> seed_of;
  for (uint32_t y = 0; y < h; ++y)
    for (uint32_t x = 0; x < w; ++x) {
      uint32_t g = p.gt_src(y, x);
      if (!g) continue;
      auto key = std::make_pair(g, (y / 8) * 1000 + x / 8);
      auto [it, inserted] = seed_of.emplace(key, next + 1);
      if (inserted) ++next;
      p.seeds(y, x) = it->second;
    }
  return p;
}

TransferContext oracle_ctx(const Pair& p, uint32_t sz = 0, uint32_t tz = 1) {
  TransferContext ctx;
  ctx.source_z = sz;
  ctx.target_z = tz;
  ctx.gt_source = SectionView<uint32_t>(sz, p.gt_src);
  ctx.gt_target = SectionView<uint32_t>(tz, p.gt_tgt);
  ctx.elev_target = SectionView<float>(tz, p.elev);
  return ctx;
}

uint32_t max_label(const Grid<uint32_t>& g) {
  uint32_t m = 0;
  for (uint32_t v : g.values()) m = std::max(m, v);
  return m;
}

}  // namespace

TEST_CASE("validate_context") {
  TransferContext ctx;
  ctx.source_z = 3;
  ctx.target_z = 3;
  CHECK_THROWS_WITH_CODE(validate_context(ctx, 10, 2), ErrorCode::InvalidArgument);
  ctx.target_z = 6;
  CHECK_THROWS_WITH_CODE(validate_context(ctx, 10, 2), ErrorCode::InvalidArgument);
  ctx.target_z = 10;
  CHECK_THROWS_WITH_CODE(validate_context(ctx, 10, 9), ErrorCode::InvalidArgument);
  ctx.target_z = 1;
  CHECK_NOTHROW(validate_context(ctx, 10, 2));
}

TEST_CASE("oracle transfer") {
  Grid<uint32_t> gs(3, 4, std::vector<uint32_t>{1, 1, 0, 2, 1, 1, 0, 2, 0, 0, 0, 3});
  Grid<uint32_t> gt(3, 4, std::vector<uint32_t>{0, 1, 1, 0, 0, 1, 1, 4, 2, 2, 0, 4});
  ColoredSection src{0, 1, Grid<uint8_t>(3, 4, std::vector<uint8_t>{3, 3, 0, 2, 3, 3, 0, 2, 0, 0, 0, 0})};
  TransferContext ctx;
  ctx.source_z = 0;
  ctx.target_z = 1;
  ctx.gt_source = SectionView<uint32_t>(0, gs);
  ctx.gt_target = SectionView<uint32_t>(1, gt);

  SUBCASE("eta 0 copies each object's colour onto its full target support") {
    auto out = oracle_transfer(src, ctx, 4, 0.0, 1);
    CHECK(out.z == 1);
    CHECK(out.digit == 1);
    CHECK(out.colors == Grid<uint8_t>(3, 4, std::vector<uint8_t>{0, 3, 3, 0, 0, 3, 3, 0, 2, 2, 0, 0}));
  }
  SUBCASE("eta 1 with two symbols flips every coloured pixel") {
    ColoredSection two = src;
    for (auto& c : two.colors.values())
      if (c) c = c == 3 ? 1 : 2;
    auto out = oracle_transfer(two, ctx, 2, 1.0, 1);
    CHECK(out.colors == Grid<uint8_t>(3, 4, std::vector<uint8_t>{0, 2, 2, 0, 0, 2, 2, 0, 1, 1, 0, 0}));
  }
  SUBCASE("needs ground truth") {
    TransferContext bare;
    bare.target_z = 1;
    CHECK_THROWS_WITH_CODE(oracle_transfer(src, bare, 4, 0.0, 1), ErrorCode::MissingGroundTruth);
  }
}

TEST_CASE("oracle flip rate is binomial") {
  const uint32_t h = 400, w = 400, l = 4;
  Grid<uint32_t> g(h, w, 1);
  ColoredSection src{0, 2, Grid<uint8_t>(h, w, 3)};
  TransferContext ctx;
  ctx.target_z = 1;
  ctx.gt_source = SectionView<uint32_t>(0, g);
  ctx.gt_target = SectionView<uint32_t>(1, g);
  for (double eta : {0.1, 0.3}) {
    auto out = oracle_transfer(src, ctx, l, eta, 42);
    uint64_t flipped = 0;
    for (uint8_t c : out.colors.values()) {
      CHECK((c >= 1 && c <= l));
      flipped += c != 3;
    }
    double n = static_cast<double>(h) * w;
    double sigma = std::sqrt(eta * (1 - eta) / n);
    CHECK(std::abs(flipped / n - eta) <= 3 * sigma);
  }
  // distinct digits draw independent noise
  ColoredSection other = src;
  other.digit = 3;
  CHECK_FALSE(oracle_transfer(src, ctx, l, 0.3, 42) == oracle_transfer(other, ctx, l, 0.3, 42));
  CHECK(oracle_transfer(src, ctx, l, 0.3, 42) == oracle_transfer(src, ctx, l, 0.3, 42));
}

TEST_CASE("geodesic transfer matches a Bellman-Ford oracle") {
  std::mt19937_64 gen(55);
  for (int trial = 0; trial < 40; ++trial) {
    uint32_t h = 5 + gen() % 20, w = 5 + gen() % 20;
    Grid<uint8_t> colors(h, w);
    Grid<float> elev(h, w);
    for (auto& c : colors.values()) c = gen() % 9 == 0 ? static_cast<uint8_t>(1 + gen() % 4) : 0;
    // multiples of 1/8 keep every path sum exact, so ties are real ties
    for (auto& e : elev.values()) e = static_cast<float>(gen() % 9) / 8.0f;
    TransferContext ctx;
    ctx.target_z = 1;
    ctx.elev_target = SectionView<float>(1, elev);
    ColoredSection src{0, 1, colors};
    for (double cutoff : {0.0, 0.5, 1.25, static_cast<double>(INFINITY)}) {
      auto out = geodesic_transfer(src, ctx, cutoff);
      CHECK(out.colors == slow_geodesic(colors, elev, cutoff));
    }
  }
}

TEST_CASE("geodesic examples") {
  SUBCASE("zero elevation gives a path-length Voronoi map") {
    Grid<uint8_t> colors(1, 7, std::vector<uint8_t>{2, 0, 0, 0, 0, 0, 1});
    Grid<float> elev(1, 7, 0.0f);
    TransferContext ctx;
    ctx.target_z = 1;
    ctx.elev_target = SectionView<float>(1, elev);
    auto out = geodesic_transfer({0, 1, colors}, ctx);
    // all costs are 0, so the lower colour wins every tie
    for (uint8_t c : out.colors.values()) CHECK(c == 1);
    Grid<float> unit(1, 7, 0.125f);
    ctx.elev_target = SectionView<float>(1, unit);
    out = geodesic_transfer({0, 1, colors}, ctx);
    CHECK(out.colors == Grid<uint8_t>(1, 7, std::vector<uint8_t>{2, 2, 2, 1, 1, 1, 1}));
  }
  SUBCASE("cutoff 0 keeps only zero-elevation sources") {
    Grid<uint8_t> colors(3, 3, std::vector<uint8_t>{1, 0, 0, 0, 4, 0, 0, 0, 3});
    Grid<float> elev(3, 3, std::vector<float>{0, 0.25f, 0.25f, 0.25f, 0, 0.25f, 0.25f, 0.25f, 0.5f});
    TransferContext ctx;
    ctx.target_z = 1;
    ctx.elev_target = SectionView<float>(1, elev);
    auto out = geodesic_transfer({0, 1, colors}, ctx, 0.0);
    CHECK(out.colors == Grid<uint8_t>(3, 3, std::vector<uint8_t>{1, 0, 0, 0, 4, 0, 0, 0, 0}));
  }
  SUBCASE("needs elevation") {
    TransferContext ctx;
    ctx.target_z = 1;
    CHECK_THROWS_WITH_CODE(geodesic_transfer({0, 1, Grid<uint8_t>(2, 2)}, ctx),
                           ErrorCode::InvalidArgument);
  }
}

TEST_CASE("geodesic transfer follows a single synthetic object") {
  GenConfig cfg;
  cfg.dims = {8, 64, 64};
  cfg.n_objects = 1;
  cfg.mean_radius = 9;
  auto gs = generate_stack(cfg);
  auto seeds = seed_volume(gs.elevation, SeedConfig{});
  // Path costs accumulate, so reaching the rim of an interior ramp from a
  // neighbouring projected source costs 0.225 + 0.45; band pixels cost 1.
  const double cutoff = PipelineConfig{}.cutoff;
  REQUIRE(cutoff > 0.675);
  REQUIRE(cutoff < 1.0);
  for (uint32_t z = 0; z + 1 < 8; ++z) {
    Grid<uint8_t> colors(64, 64);
    auto sv = seeds.labels.section(z);
    for (std::size_t i = 0; i < sv.size(); ++i) colors[i] = sv[i] ? 1 : 0;
    TransferContext ctx;
    ctx.source_z = z;
    ctx.target_z = z + 1;
    ctx.elev_target = gs.elevation.section(z + 1);
    auto out = geodesic_transfer({z, 1, colors}, ctx, cutoff);
    auto gt = gs.gt.section(z + 1);
    auto el = gs.elevation.section(z + 1);
    uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      bool a = out.colors[i] != 0;
      bool b = gt[i] != 0 && el[i] < cutoff;
      inter += a && b;
      uni += a || b;
    }
    REQUIRE(uni > 0);
    CHECK(static_cast<double>(inter) / static_cast<double>(uni) >= 0.9);
  }
}

TEST_CASE("cross_classify") {
  std::mt19937_64 gen(101);
  SUBCASE("oracle with eta 0 labels each object's target support by its first seed") {
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_pair(gen, 24, 32, 6);
      uint32_t n = max_label(p.seeds);
      if (!n) continue;
      auto cb = Codebook::build(n, 4, min_digits(n, 4) + 1, gen());
      OracleClassifier clf(4, 0.0, 1);
      auto out = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, clf, {});
      std::map<uint32_t, uint32_t> first_seed;
      for (std::size_t i = 0; i < p.seeds.size(); ++i)
        if (p.seeds[i]) first_seed.try_emplace(p.gt_src[i], p.seeds[i]);
      for (std::size_t i = 0; i < out.size(); ++i) {
        auto it = first_seed.find(p.gt_tgt[i]);
        uint32_t expect = p.gt_tgt[i] && it != first_seed.end() ? it->second : 0;
        CHECK(out[i] == expect);
      }
    }
  }
  SUBCASE("output labels are a subset of the source seeds") {
    for (int trial = 0; trial < 30; ++trial) {
      auto p = random_pair(gen, 20, 20, 8);
      for (auto& e : p.elev.values()) e = static_cast<float>(gen() % 1000) / 1000.0f;
      uint32_t n = max_label(p.seeds);
      if (!n) continue;
      auto cb = Codebook::build(n, 3, min_digits(n, 3), gen());
      std::set<uint32_t> allowed{0};
      for (uint32_t v : p.seeds.values()) allowed.insert(v);
      OracleClassifier noisy(3, 0.3, gen());
      GeodesicClassifier geo(0.8);
      for (const DigitClassifier* clf : {static_cast<const DigitClassifier*>(&noisy),
                                         static_cast<const DigitClassifier*>(&geo)}) {
        auto out = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, *clf, {});
        for (uint32_t v : out.values()) CHECK(allowed.count(v) == 1);
      }
    }
  }
  SUBCASE("labels of other sections never leak through a global codebook") {
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_pair(gen, 32, 32, 8);
      uint32_t n = max_label(p.seeds);
      if (!n) continue;
      // the section owns labels 1..n out of 8n; noise hits the rest often
      auto cb = Codebook::build(8 * n, 2, min_digits(8 * n, 2), gen());
      OracleClassifier noisy(2, 0.3, gen());
      auto out = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, noisy, {});
      for (uint32_t v : out.values()) CHECK(v <= n);
    }
  }
  SUBCASE("exactly k classifier calls, independent of N") {
    for (uint32_t k : {1u, 3u, 7u}) {
      auto p = random_pair(gen, 16, 16, 3);
      uint32_t n = std::max(1u, max_label(p.seeds));
      auto cb = Codebook::build(n, 8, std::max(k, min_digits(n, 8)), 1);
      OracleClassifier inner(8, 0.0, 1);
      CountingClassifier clf(inner);
      cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, clf, {});
      CHECK(clf.calls.load() == static_cast<int>(cb.digits()));
    }
  }
  SUBCASE("partition is invariant under a permuted codebook") {
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_pair(gen, 24, 24, 6);
      for (auto& e : p.elev.values()) e = std::uniform_real_distribution<float>(0, 1)(gen);
      uint32_t n = max_label(p.seeds);
      if (!n) continue;
      auto cb = Codebook::build(n, 4, min_digits(n, 4) + 1, gen());
      std::vector<std::vector<uint8_t>> words;
      for (uint32_t m = 1; m <= n; ++m) words.emplace_back(cb.code(m).begin(), cb.code(m).end());
      std::shuffle(words.begin(), words.end(), gen);
      auto permuted = Codebook::from_codewords(4, cb.digits(), words);
      OracleClassifier oracle(4, 0.0, 1);
      GeodesicClassifier geo(1.5);
      for (const DigitClassifier* clf : {static_cast<const DigitClassifier*>(&oracle),
                                         static_cast<const DigitClassifier*>(&geo)}) {
        auto a = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, *clf, {});
        auto b = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), permuted, *clf, {});
        CHECK(a == b);  // decode returns seed labels, so equal partitions means equal grids
      }
    }
  }
  SUBCASE("objects sharing a first-digit colour stay distinct") {
    std::vector<std::vector<uint8_t>> words(10);
    for (uint32_t i = 0; i < 10; ++i)
      words[i] = {static_cast<uint8_t>(1 + i % 4), static_cast<uint8_t>(1 + (i / 4) % 4), 4};
    words[4] = {1, 2, 3};
    words[0] = {1, 1, 2};
    auto cb = Codebook::from_codewords(4, 3, words);
    Grid<uint32_t> seeds(2, 4, std::vector<uint32_t>{5, 5, 1, 1, 5, 5, 1, 1});
    Pair p{seeds, Grid<uint32_t>(2, 4, std::vector<uint32_t>{5, 1, 1, 1, 5, 5, 1, 0}), seeds,
           Grid<float>(2, 4)};
    OracleClassifier clf(4, 0.0, 1);
    auto out = cross_classify(SectionView<uint32_t>(0, p.seeds), oracle_ctx(p), cb, clf, {});
    CHECK(out == Grid<uint32_t>(2, 4, std::vector<uint32_t>{5, 1, 1, 1, 5, 5, 1, 0}));
  }
}
