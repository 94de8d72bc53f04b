#include "threec/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "json.hpp"

namespace threec {

namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxBranches = 4;
constexpr float kRampTop = 0.45f;
constexpr float kCenterCap = 0.49f;

struct Cell {
  double y0, y1, x0, x1;  // inclusive paint bounds
};

struct Branch {
  double cy, cx, radius;
};

struct Object {
  Cell cell;
  double radius;
  std::vector<Branch> branches;
};

double clamp_center(double c, double lo, double hi, double r) {
  double a = lo + r, b = hi - r;
  if (a > b) return 0.5 * (lo + hi);
  return std::clamp(c, a, b);
}

void paint_disc(Grid<uint32_t>& section, const Cell& cell, const Branch& b, uint32_t label) {
  const int y_lo = static_cast<int>(std::max(cell.y0, std::ceil(b.cy - b.radius)));
  const int y_hi = static_cast<int>(std::min(cell.y1, std::floor(b.cy + b.radius)));
  const int x_lo = static_cast<int>(std::max(cell.x0, std::ceil(b.cx - b.radius)));
  const int x_hi = static_cast<int>(std::min(cell.x1, std::floor(b.cx + b.radius)));
  const double r2 = b.radius * b.radius;
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      double dy = y - b.cy, dx = x - b.cx;
      if (dy * dy + dx * dx <= r2) section(static_cast<uint32_t>(y), static_cast<uint32_t>(x)) = label;
    }
}

std::vector<Object> layout_objects(const GenConfig& cfg, std::mt19937_64& gen) {
  const Dims& d = cfg.dims;
  const double aspect = static_cast<double>(d.x) / d.y;
  uint32_t cols = std::max<uint32_t>(
      1, static_cast<uint32_t>(std::lround(std::sqrt(cfg.n_objects * aspect))));
  cols = std::min(cols, cfg.n_objects);
  const uint32_t rows = (cfg.n_objects + cols - 1) / cols;
  const uint32_t cell_h = d.y / rows;
  const uint32_t cell_w = d.x / cols;
  // A cell leaves one background pixel on each side of its paint area, so
  // neighbouring objects end up at least two pixels apart.
  const double max_radius = (std::min(cell_h, cell_w) - 3.0) / 2.0;
  if (cell_h < 4 || cell_w < 4 || max_radius < 1.0 || cfg.mean_radius > max_radius)
    throw Error(ErrorCode::ConfigInfeasible,
                std::to_string(cfg.n_objects) + " objects of radius " +
                    std::to_string(cfg.mean_radius) + " do not fit the section");

  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  std::uniform_real_distribution<double> scale(0.75, 1.25);
  std::vector<Object> objects;
  objects.reserve(cfg.n_objects);
  for (uint32_t i = 0; i < cfg.n_objects; ++i) {
    const uint32_t r = i / cols, c = i % cols;
    Cell cell{r * cell_h + 1.0, (r + 1) * cell_h - 2.0, c * cell_w + 1.0, (c + 1) * cell_w - 2.0};
    double radius = std::clamp(cfg.mean_radius * scale(gen), 1.0, max_radius);
    double cy = 0.5 * (cell.y0 + cell.y1) + jitter(gen) * (cell.y1 - cell.y0 - 2 * radius);
    double cx = 0.5 * (cell.x0 + cell.x1) + jitter(gen) * (cell.x1 - cell.x0 - 2 * radius);
    cy = clamp_center(cy, cell.y0, cell.y1, radius);
    cx = clamp_center(cx, cell.x0, cell.x1, radius);
    objects.push_back({cell, radius, {{cy, cx, radius}}});
  }
  return objects;
}

void step_branches(Object& obj, const GenConfig& cfg, std::mt19937_64& gen) {
  std::bernoulli_distribution event(cfg.branch_prob);
  if (obj.branches.size() < kMaxBranches && event(gen)) {
    std::uniform_int_distribution<std::size_t> pick(0, obj.branches.size() - 1);
    Branch parent = obj.branches[pick(gen)];
    parent.radius = std::max(1.0, 0.7 * obj.radius);
    obj.branches.push_back(parent);
  }
  if (obj.branches.size() > 1 && event(gen)) {
    std::uniform_int_distribution<std::size_t> pick(1, obj.branches.size() - 1);
    obj.branches.erase(obj.branches.begin() + static_cast<std::ptrdiff_t>(pick(gen)));
  }
  std::normal_distribution<double> drift(0.0, std::max(cfg.drift_sigma, 1e-12));
  for (auto& b : obj.branches) {
    double dy = cfg.drift_sigma > 0 ? drift(gen) : 0.0;
    double dx = cfg.drift_sigma > 0 ? drift(gen) : 0.0;
    b.cy = clamp_center(b.cy + dy, obj.cell.y0, obj.cell.y1, b.radius);
    b.cx = clamp_center(b.cx + dx, obj.cell.x0, obj.cell.x1, b.radius);
  }
}

// Elevation for one labeled section, before noise.
void section_elevation(SectionView<uint32_t> labels, double blur, std::span<float> out,
                       std::vector<uint8_t>& band) {
  const uint32_t h = labels.height, w = labels.width;
  band.assign(labels.size(), 0);
  std::vector<uint32_t> dist(labels.size(), std::numeric_limits<uint32_t>::max());
  std::vector<std::size_t> frontier;
  for (uint32_t y = 0; y < h; ++y)
    for (uint32_t x = 0; x < w; ++x) {
      const std::size_t i = std::size_t{y} * w + x;
      const uint32_t l = labels[i];
      if (l == 0) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int ny = static_cast<int>(y) + dy, nx = static_cast<int>(x) + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<int>(h) || nx >= static_cast<int>(w)) continue;
          if (labels(static_cast<uint32_t>(ny), static_cast<uint32_t>(nx)) != l) {
            edge = true;
            break;
          }
        }
      if (edge) {
        band[i] = 1;
        dist[i] = 0;
        frontier.push_back(i);
      }
    }
  // 4-connected BFS distance from the boundary band into interiors.
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const std::size_t p = frontier[head];
    const uint32_t y = static_cast<uint32_t>(p / w), x = static_cast<uint32_t>(p % w);
    auto visit = [&](std::size_t q) {
      if (labels[q] != 0 && dist[q] == std::numeric_limits<uint32_t>::max()) {
        dist[q] = dist[p] + 1;
        frontier.push_back(q);
      }
    };
    if (y > 0) visit(p - w);
    if (x > 0) visit(p - 1);
    if (x + 1 < w) visit(p + 1);
    if (y + 1 < h) visit(p + w);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0 || band[i]) {
      out[i] = 1.0f;
    } else if (blur <= 0.0 || dist[i] == std::numeric_limits<uint32_t>::max()) {
      out[i] = 0.0f;
    } else {
      double t = 1.0 - (dist[i] - 1.0) / blur;
      out[i] = static_cast<float>(kRampTop * std::max(0.0, t));
    }
  }
}

// Interior pixel of each label nearest to that label's in-section centroid.
std::vector<std::size_t> central_pixels(SectionView<uint32_t> labels,
                                        const std::vector<uint8_t>& band, uint32_t n_labels) {
  std::vector<double> sy(n_labels + 1, 0), sx(n_labels + 1, 0), cnt(n_labels + 1, 0);
  const uint32_t w = labels.width;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (uint32_t l = labels[i]; l != 0) {
      sy[l] += static_cast<double>(i / w);
      sx[l] += static_cast<double>(i % w);
      cnt[l] += 1;
    }
  }
  std::vector<double> best(n_labels + 1, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> arg(n_labels + 1, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    uint32_t l = labels[i];
    if (l == 0 || band[i]) continue;
    double dy = static_cast<double>(i / w) - sy[l] / cnt[l];
    double dx = static_cast<double>(i % w) - sx[l] / cnt[l];
    double d2 = dy * dy + dx * dx;
    if (d2 < best[l]) {
      best[l] = d2;
      arg[l] = i;
    }
  }
  std::vector<std::size_t> out;
  for (uint32_t l = 1; l <= n_labels; ++l)
    if (arg[l] != std::numeric_limits<std::size_t>::max()) out.push_back(arg[l]);
  return out;
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void GenConfig::validate() const {
  validate_dims(dims);
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (n_objects < 1) throw Error(ErrorCode::InvalidArgument, "n_objects must be >= 1");
  if (!(mean_radius >= 1.0)) throw Error(ErrorCode::InvalidArgument, "mean_radius must be >= 1");
  if (!prob(branch_prob) || !prob(gap_prob))
    throw Error(ErrorCode::InvalidArgument, "probabilities must lie in [0,1]");
  if (!(drift_sigma >= 0.0) || !(elevation_blur_radius >= 0.0) || !(noise_sigma >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "sigma and blur values must be >= 0");
}

GenConfig gen_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "generator config must be an object");
  static const char* known[] = {"z", "y", "x", "n_objects", "mean_radius", "branch_prob",
                                "drift_sigma", "gap_prob", "elevation_blur_radius",
                                "noise_sigma", "rng_seed"};
  for (const auto& [key, value] : j.items())
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known))
      throw Error(ErrorCode::ConfigError, "unknown generator key '" + key + "'");
  GenConfig cfg;
  read_key(j, "z", cfg.dims.z);
  read_key(j, "y", cfg.dims.y);
  read_key(j, "x", cfg.dims.x);
  read_key(j, "n_objects", cfg.n_objects);
  read_key(j, "mean_radius", cfg.mean_radius);
  read_key(j, "branch_prob", cfg.branch_prob);
  read_key(j, "drift_sigma", cfg.drift_sigma);
  read_key(j, "gap_prob", cfg.gap_prob);
  read_key(j, "elevation_blur_radius", cfg.elevation_blur_radius);
  read_key(j, "noise_sigma", cfg.noise_sigma);
  read_key(j, "rng_seed", cfg.rng_seed);
  cfg.validate();
  return cfg;
}

std::string gen_config_to_json(const GenConfig& cfg) {
  json j = {{"z", cfg.dims.z},
            {"y", cfg.dims.y},
            {"x", cfg.dims.x},
            {"n_objects", cfg.n_objects},
            {"mean_radius", cfg.mean_radius},
            {"branch_prob", cfg.branch_prob},
            {"drift_sigma", cfg.drift_sigma},
            {"gap_prob", cfg.gap_prob},
            {"elevation_blur_radius", cfg.elevation_blur_radius},
            {"noise_sigma", cfg.noise_sigma},
            {"rng_seed", cfg.rng_seed}};
  return j.dump(2);
}

GeneratedStack generate_stack(const GenConfig& cfg) {
  cfg.validate();
  const Dims dims = cfg.dims;
  std::mt19937_64 gen(cfg.rng_seed);
  auto objects = layout_objects(cfg, gen);

  LabelStack raw(dims);
  std::bernoulli_distribution skip(cfg.gap_prob);
  for (uint32_t z = 0; z < dims.z; ++z) {
    Grid<uint32_t> section(dims.y, dims.x);
    for (uint32_t i = 0; i < objects.size(); ++i) {
      auto& obj = objects[i];
      if (z > 0) step_branches(obj, cfg, gen);
      if (cfg.gap_prob > 0.0 && skip(gen)) continue;
      for (const auto& b : obj.branches) paint_disc(section, obj.cell, b, i + 1);
    }
    std::copy(section.values().begin(), section.values().end(),
              raw.section_values(z).begin());
  }

  auto compact = compact_labels(raw);
  GeneratedStack out{std::move(compact.labels), ScalarStack(dims)};

  std::normal_distribution<double> noise(0.0, std::max(cfg.noise_sigma, 1e-12));
  std::vector<uint8_t> band;
  for (uint32_t z = 0; z < dims.z; ++z) {
    auto labels = out.gt.section(z);
    auto elev = out.elevation.section_values(z);
    section_elevation(labels, cfg.elevation_blur_radius, elev, band);
    if (cfg.noise_sigma > 0.0)
      for (auto& v : elev) v = static_cast<float>(std::clamp(v + noise(gen), 0.0, 1.0));
    for (std::size_t i = 0; i < elev.size(); ++i)
      if (band[i]) elev[i] = std::max(elev[i], 0.5f);
    for (std::size_t i : central_pixels(labels, band, compact.n_labels))
      elev[i] = std::min(elev[i], kCenterCap);
  }
  return out;
}

ScalarStack perturb_elevation(const ScalarStack& elevation, double sigma, uint64_t rng_seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  ScalarStack out = elevation;
  if (sigma == 0.0) return out;
  std::mt19937_64 gen(rng_seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.values()) v = static_cast<float>(std::clamp(v + noise(gen), 0.0, 1.0));
  return out;
}

}  // namespace threec
