#include "threec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "threec/transfer.hpp"

namespace threec {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

fs::path resolve(const json& j, const char* key, const fs::path& base) {
  std::string s;
  read(j, key, s);
  fs::path p(s);
  return p.is_absolute() || base.empty() ? p : base / p;
}

// A section buffer whose lifetime is recorded in a ResidencyMeter.
template <class T>
class TrackedGrid {
 public:
  TrackedGrid(Grid<T> grid, ResidencyMeter& meter, ResidencyMeter::Kind kind)
      : grid_(std::move(grid)), meter_(&meter), kind_(kind) {
    meter_->acquire(kind_, bytes());
  }
  TrackedGrid(TrackedGrid&& other) noexcept
      : grid_(std::move(other.grid_)), meter_(std::exchange(other.meter_, nullptr)),
        kind_(other.kind_) {}
  TrackedGrid& operator=(TrackedGrid&&) = delete;
  TrackedGrid(const TrackedGrid&) = delete;
  ~TrackedGrid() {
    if (meter_) meter_->release(kind_, bytes());
  }

  const Grid<T>& grid() const { return grid_; }

 private:
  uint64_t bytes() const { return grid_.size() * sizeof(T); }

  Grid<T> grid_;
  ResidencyMeter* meter_;
  ResidencyMeter::Kind kind_;
};

// Scoped reservation of bytes that are not held in a TrackedGrid.
class Reservation {
 public:
  Reservation(ResidencyMeter& meter, ResidencyMeter::Kind kind, uint64_t bytes)
      : meter_(meter), kind_(kind), bytes_(bytes) {
    meter_.acquire(kind_, bytes_);
  }
  Reservation(const Reservation&) = delete;
  Reservation& operator=(const Reservation&) = delete;
  ~Reservation() { meter_.release(kind_, bytes_); }

 private:
  ResidencyMeter& meter_;
  ResidencyMeter::Kind kind_;
  uint64_t bytes_;
};

struct WindowEntry {
  uint32_t z;
  TrackedGrid<uint32_t> seeds;
  std::optional<TrackedGrid<float>> elevation;
  std::optional<TrackedGrid<uint32_t>> gt;
};

template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("[") + name + "] " + e.what());
  }
}

// Counts invocations so the report states calls made, not calls predicted.
class CountedClassifier final : public DigitClassifier {
 public:
  explicit CountedClassifier(std::unique_ptr<DigitClassifier> inner) : inner_(std::move(inner)) {}
  ColoredSection classify(const ColoredSection& source, const TransferContext& ctx) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->classify(source, ctx);
  }
  std::string name() const override { return inner_->name(); }
  uint64_t calls() const { return calls_.load(); }

 private:
  std::unique_ptr<DigitClassifier> inner_;
  mutable std::atomic<uint64_t> calls_{0};
};

std::unique_ptr<DigitClassifier> make_classifier(const PipelineConfig& cfg) {
  if (cfg.classifier == "oracle")
    return std::make_unique<OracleClassifier>(cfg.alphabet_size, cfg.eta, cfg.oracle_seed);
  return std::make_unique<GeodesicClassifier>(cfg.cutoff);
}

}  // namespace

void PipelineConfig::validate() const {
  if (elevation.has_value() == synth.has_value())
    throw Error(ErrorCode::ConfigError, "exactly one of 'elevation' and 'synth' is required");
  if (synth) synth->validate();
  seeding.validate();
  if (alphabet_size < 2 || alphabet_size > 255)
    throw Error(ErrorCode::ConfigError, "codebook alphabet size must be in [2, 255]");
  if (digits && *digits < 1) throw Error(ErrorCode::ConfigError, "codebook k must be >= 1");
  if (classifier != "oracle" && classifier != "geodesic")
    throw Error(ErrorCode::ConfigError, "classifier must be 'oracle' or 'geodesic'");
  if (classifier == "oracle" && !synth && !gt)
    throw Error(ErrorCode::ConfigError, "the oracle classifier needs 'gt' or 'synth'");
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::ConfigError, "oracle eta must lie in [0,1]");
  if (!(cutoff >= 0.0)) throw Error(ErrorCode::ConfigError, "geodesic cutoff must be >= 0");
  merge.validate();
  if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  if (output.empty()) throw Error(ErrorCode::ConfigError, "output directory is required");
}

PipelineConfig pipeline_config_from_json(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  check_keys(j,
             {"elevation", "synth", "seeds", "gt", "seeding", "codebook", "classifier", "oracle",
              "geodesic", "decode", "merge", "output", "workers"},
             "pipeline config");

  PipelineConfig cfg;
  if (j.contains("elevation")) cfg.elevation = resolve(j, "elevation", base_dir);
  if (j.contains("synth")) cfg.synth = gen_config_from_json(j.at("synth").dump());
  if (j.contains("seeds")) cfg.seeds = resolve(j, "seeds", base_dir);
  if (j.contains("gt")) cfg.gt = resolve(j, "gt", base_dir);
  if (j.contains("output")) cfg.output = resolve(j, "output", base_dir);
  read(j, "workers", cfg.workers);
  read(j, "classifier", cfg.classifier);

  if (j.contains("seeding")) {
    const auto& s = j.at("seeding");
    check_keys(s, {"h", "stop", "min_area"}, "seeding");
    read(s, "h", cfg.seeding.minima_depth);
    read(s, "stop", cfg.seeding.stop_level);
    read(s, "min_area", cfg.seeding.min_seed_area);
  }
  if (j.contains("codebook")) {
    const auto& c = j.at("codebook");
    check_keys(c, {"l", "redundancy", "k", "rng_seed"}, "codebook");
    read(c, "l", cfg.alphabet_size);
    read(c, "redundancy", cfg.redundancy);
    read(c, "rng_seed", cfg.codebook_seed);
    if (c.contains("k")) {
      uint32_t k = 0;
      read(c, "k", k);
      cfg.digits = k;
    }
  }
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    check_keys(o, {"eta", "rng_seed"}, "oracle");
    read(o, "eta", cfg.eta);
    read(o, "rng_seed", cfg.oracle_seed);
  }
  if (j.contains("geodesic")) {
    const auto& g = j.at("geodesic");
    check_keys(g, {"cutoff"}, "geodesic");
    read(g, "cutoff", cfg.cutoff);
  }
  if (j.contains("decode")) {
    const auto& d = j.at("decode");
    check_keys(d, {"mode", "max_hamming"}, "decode");
    std::string mode = "strict";
    read(d, "mode", mode);
    if (mode == "strict") {
      cfg.decode.mode = DecodePolicy::Mode::strict;
    } else if (mode == "nearest") {
      cfg.decode.mode = DecodePolicy::Mode::nearest;
    } else {
      throw Error(ErrorCode::ConfigError, "decode mode must be 'strict' or 'nearest'");
    }
    read(d, "max_hamming", cfg.decode.max_hamming);
  }
  if (j.contains("merge")) {
    const auto& m = j.at("merge");
    check_keys(m, {"W", "threshold", "min_component_size"}, "merge");
    read(m, "W", cfg.merge.window);
    read(m, "threshold", cfg.merge.threshold);
    read(m, "min_component_size", cfg.merge.min_component_size);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return pipeline_config_from_json(buffer.str(), path.parent_path());
}

void ResidencyMeter::acquire(Kind kind, uint64_t bytes) {
  uint64_t now = live_[kind].fetch_add(bytes) + bytes;
  uint64_t peak = peak_[kind].load();
  while (now > peak && !peak_[kind].compare_exchange_weak(peak, now)) {
  }
}

void ResidencyMeter::release(Kind kind, uint64_t bytes) { live_[kind].fetch_sub(bytes); }

RunReport run_pipeline(const PipelineConfig& cfg_in) {
  const auto start = std::chrono::steady_clock::now();
  PipelineConfig cfg = cfg_in;
  cfg.validate();

  // Open every input before touching the output directory.
  std::optional<VolumeReader> elev_reader, gt_reader, seed_input;
  stage("inputs", [&] {
    if (cfg.elevation) elev_reader.emplace(*cfg.elevation);
    if (cfg.gt) gt_reader.emplace(*cfg.gt);
    if (cfg.seeds) seed_input.emplace(*cfg.seeds);
    if (elev_reader && !elev_reader->is_scalar())
      throw Error(ErrorCode::UnsupportedDtype, "elevation input must be a scalar stack");
    for (auto* r : {&gt_reader, &seed_input})
      if (*r && (*r)->is_scalar())
        throw Error(ErrorCode::UnsupportedDtype, "gt/seeds input must be a label stack");
  });

  stage("output", [&] {
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg.output.string());
  });

  if (cfg.synth) {
    stage("synthgen", [&] {
      GeneratedStack generated = generate_stack(*cfg.synth);
      save_stack(generated.gt, cfg.output / "gt.vol");
      save_stack(generated.elevation, cfg.output / "elevation.vol");
    });
    elev_reader.emplace(cfg.output / "elevation.vol");
    if (!gt_reader) gt_reader.emplace(cfg.output / "gt.vol");
  }

  const Dims dims = elev_reader ? elev_reader->dims() : seed_input->dims();
  for (auto* r : {&elev_reader, &gt_reader, &seed_input})
    if (*r && (*r)->dims() != dims)
      throw Error(ErrorCode::ShapeMismatch, "input stacks differ in dims");

  ResidencyMeter meter;
  const fs::path seeds_path = cfg.output / "seeds.vol";

  // Pass 1: seeds, one section at a time, labels unique across sections.
  std::vector<uint64_t> seed_sizes{0};
  stage("seeding", [&] {
    VolumeWriter writer(seeds_path, dims, Dtype::u32);
    LabelCompactor compactor;  // precomputed seeds: global first-occurrence order
    uint32_t offset = 0;
    for (uint32_t z = 0; z < dims.z; ++z) {
      Grid<uint32_t> section;
      if (seed_input) {
        TrackedGrid<uint32_t> raw(seed_input->read_labels(z), meter, ResidencyMeter::seeds);
        section = raw.grid();
        for (auto& v : section.values()) v = compactor.map(v);
      } else {
        TrackedGrid<float> elev(elev_reader->read_scalars(z), meter, ResidencyMeter::elevation);
        section = seed_section(SectionView<float>(z, elev.grid()), cfg.seeding);
        uint32_t local_max = 0;
        for (auto& v : section.values())
          if (v != 0) {
            local_max = std::max(local_max, v);
            v += offset;
          }
        offset += local_max;
      }
      TrackedGrid<uint32_t> tracked(std::move(section), meter, ResidencyMeter::seeds);
      for (uint32_t v : tracked.grid().values()) {
        if (v == 0) continue;
        if (v >= seed_sizes.size()) seed_sizes.resize(v + 1, 0);
        ++seed_sizes[v];
      }
      writer.write_section(tracked.grid().values());
    }
    writer.finish();
  });
  const uint32_t n_seeds = static_cast<uint32_t>(seed_sizes.size() - 1);

  const uint32_t k = cfg.digits.value_or(min_digits(std::max<uint32_t>(n_seeds, 1),
                                                    cfg.alphabet_size) + cfg.redundancy);
  const Codebook codebook = stage("codebook", [&] {
    auto cb = Codebook::build(n_seeds, cfg.alphabet_size, k, cfg.codebook_seed);
    save_codebook(cb, cfg.output / "codebook.txt");
    return cb;
  });
  cfg.decode.validate(k);

  // Pass 2: sliding window of W+1 sections; every section transfers to and
  // from each of its W predecessors.
  const CountedClassifier classifier(make_classifier(cfg));
  const bool wants_elev = cfg.classifier == "geodesic";
  const bool wants_gt = cfg.classifier == "oracle";
  const uint32_t window = cfg.merge.window;
  std::vector<OverlapEdge> edges;
  uint64_t pairs = 0;
  stage("transfer", [&] {
    VolumeReader seeds_reader(seeds_path);
    std::deque<WindowEntry> live;
    for (uint32_t z = 0; z < dims.z; ++z) {
      while (!live.empty() && live.front().z + window < z) live.pop_front();
      WindowEntry entry{z, TrackedGrid<uint32_t>(seeds_reader.read_labels(z), meter,
                                                 ResidencyMeter::seeds),
                        std::nullopt, std::nullopt};
      if (wants_elev)
        entry.elevation.emplace(elev_reader->read_scalars(z), meter, ResidencyMeter::elevation);
      if (wants_gt)
        entry.gt.emplace(gt_reader->read_labels(z), meter, ResidencyMeter::ground_truth);
      live.push_back(std::move(entry));

      struct Task {
        const WindowEntry* src;
        const WindowEntry* dst;
      };
      std::vector<Task> tasks;
      const WindowEntry& current = live.back();
      for (uint32_t w = 1; w <= window && w <= z; ++w) {
        const WindowEntry& other = live[live.size() - 1 - w];
        tasks.push_back({&other, &current});
        tasks.push_back({&current, &other});
      }
      std::vector<std::vector<OverlapEdge>> results(tasks.size());
      // Upper bound of one transfer's in-flight data: k predicted digit
      // images, the encoded image being classified and the decoded grid.
      const uint64_t in_flight = dims.section_size() * (uint64_t{k} + 1) * sizeof(uint8_t) +
                                 dims.section_size() * sizeof(uint32_t);
      parallel_for(tasks.size(), cfg.workers, [&](std::size_t t) {
        const auto& [src, dst] = tasks[t];
        Reservation reserve(meter, ResidencyMeter::digit_images, in_flight);
        TransferContext ctx;
        ctx.source_z = src->z;
        ctx.target_z = dst->z;
        if (dst->elevation) ctx.elev_target = SectionView<float>(dst->z, dst->elevation->grid());
        if (src->gt) ctx.gt_source = SectionView<uint32_t>(src->z, src->gt->grid());
        if (dst->gt) ctx.gt_target = SectionView<uint32_t>(dst->z, dst->gt->grid());
        validate_context(ctx, dims.z, window);
        Grid<uint32_t> pred = cross_classify(SectionView<uint32_t>(src->z, src->seeds.grid()), ctx,
                                             codebook, classifier, cfg.decode);
        results[t] = overlap_edges(SectionView<uint32_t>(dst->z, pred), src->z,
                                   SectionView<uint32_t>(dst->z, dst->seeds.grid()));
      });
      for (auto& r : results) edges.insert(edges.end(), r.begin(), r.end());
      pairs += tasks.size();
    }
  });

  Partition partition = stage("agglomeration", [&] {
    Partition merged = merge_components(edges, cfg.merge.threshold, seed_sizes);
    return resolve_orphans(std::move(merged), edges, cfg.merge.min_component_size);
  });

  // Pass 3: map seeds to their components.
  uint32_t n_components = 0;
  stage("finalize", [&] {
    const auto roots = partition.canonical();
    VolumeReader seeds_reader(seeds_path);
    VolumeWriter writer(cfg.output / "segmentation.vol", dims, Dtype::u32);
    LabelCompactor compactor;
    for (uint32_t z = 0; z < dims.z; ++z) {
      TrackedGrid<uint32_t> seeds(seeds_reader.read_labels(z), meter, ResidencyMeter::seeds);
      Grid<uint32_t> out(dims.y, dims.x);
      auto src = seeds.grid().values();
      for (std::size_t i = 0; i < src.size(); ++i)
        if (src[i] != 0) out[i] = compactor.map(roots[src[i]]);
      writer.write_section(out.values());
    }
    writer.finish();
    n_components = compactor.count();
    write_edges(edges, cfg.output / "edges.tsv");
  });

  RunReport report;
  report.n_seeds = n_seeds;
  report.k = k;
  report.l = cfg.alphabet_size;
  report.transfer_pairs = pairs;
  report.classifier_calls = classifier.calls();
  report.n_components = n_components;
  report.n_edges = edges.size();
  const uint64_t section_bytes = dims.section_size() * 4;
  for (int kind = 0; kind < ResidencyMeter::kKinds; ++kind)
    report.peak_sections[kind] =
        (meter.peak_bytes(static_cast<ResidencyMeter::Kind>(kind)) + section_bytes - 1) /
        section_bytes;
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();

  stage("report", [&] {
    json j = {{"n_seeds", report.n_seeds},
              {"k", report.k},
              {"l", report.l},
              {"classifier_calls", report.classifier_calls},
              {"transfer_pairs", report.transfer_pairs},
              {"n_edges", report.n_edges},
              {"n_components", report.n_components},
              {"wall_ms", report.wall_ms},
              {"peak_sections",
               {{"elevation", report.peak_sections[ResidencyMeter::elevation]},
                {"seeds", report.peak_sections[ResidencyMeter::seeds]},
                {"ground_truth", report.peak_sections[ResidencyMeter::ground_truth]},
                {"digit_images", report.peak_sections[ResidencyMeter::digit_images]}}}};
    std::ofstream out(cfg.output / "report.json", std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write report.json");
  });
  return report;
}

}  // namespace threec
