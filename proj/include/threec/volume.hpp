#ifndef THREEC_VOLUME_HPP
#define THREEC_VOLUME_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "threec/error.hpp"

namespace threec {

inline constexpr uint64_t kDefaultMaxVoxels = 0xFFFFFFFFull;

struct Dims {
  uint32_t z = 0;
  uint32_t y = 0;
  uint32_t x = 0;

  uint64_t voxels() const { return uint64_t{z} * y * x; }
  uint64_t section_size() const { return uint64_t{y} * x; }
  bool operator==(const Dims&) const = default;
};

// Throws DimsOverflow when the voxel count exceeds max_voxels and
// InvalidArgument when any extent is zero.
void validate_dims(const Dims& dims, uint64_t max_voxels = kDefaultMaxVoxels);

enum class Dtype : uint8_t { u8 = 0, u16 = 1, u32 = 2, f32 = 3 };

std::size_t dtype_width(Dtype dtype);
uint32_t dtype_max_label(Dtype dtype);

inline constexpr std::size_t kVolHeaderSize = 20;

/// Owned y-by-x grid, row-major.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(uint32_t height, uint32_t width, T fill = T{})
      : height_(height), width_(width), values_(std::size_t{height} * width, fill) {}
  Grid(uint32_t height, uint32_t width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (values_.size() != std::size_t{height} * width)
      throw Error(ErrorCode::ShapeMismatch, "grid value count does not match shape");
  }

  uint32_t height() const { return height_; }
  uint32_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  T& operator()(uint32_t y, uint32_t x) { return values_[std::size_t{y} * width_ + x]; }
  T operator()(uint32_t y, uint32_t x) const { return values_[std::size_t{y} * width_ + x]; }
  T& operator[](std::size_t i) { return values_[i]; }
  T operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  bool operator==(const Grid&) const = default;

 private:
  uint32_t height_ = 0;
  uint32_t width_ = 0;
  std::vector<T> values_;
};

/// Non-owning view of one section (z-slice) of a stack.
template <class T>
struct SectionView {
  uint32_t z = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  std::span<const T> values;

  SectionView() = default;
  SectionView(uint32_t z_, uint32_t h, uint32_t w, std::span<const T> v)
      : z(z_), height(h), width(w), values(v) {}
  SectionView(uint32_t z_, const Grid<T>& grid)
      : z(z_), height(grid.height()), width(grid.width()), values(grid.values()) {}

  std::size_t size() const { return values.size(); }
  T operator()(uint32_t y, uint32_t x) const { return values[std::size_t{y} * width + x]; }
  T operator[](std::size_t i) const { return values[i]; }
};

/// z-major stack of sections.
template <class T>
class Stack {
 public:
  Stack() = default;
  explicit Stack(Dims dims, T fill = T{}) : dims_(dims), values_(dims.voxels(), fill) {}
  Stack(Dims dims, std::vector<T> values) : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims_.voxels())
      throw Error(ErrorCode::ShapeMismatch, "stack value count does not match dims");
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  T& at(uint32_t z, uint32_t y, uint32_t x) { return values_[index(z, y, x)]; }
  T at(uint32_t z, uint32_t y, uint32_t x) const { return values_[index(z, y, x)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  T operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  SectionView<T> section(uint32_t z) const {
    if (z >= dims_.z) throw Error(ErrorCode::InvalidArgument, "section index out of range");
    auto n = dims_.section_size();
    return {z, dims_.y, dims_.x, std::span<const T>(values_).subspan(z * n, n)};
  }
  std::span<T> section_values(uint32_t z) {
    if (z >= dims_.z) throw Error(ErrorCode::InvalidArgument, "section index out of range");
    auto n = dims_.section_size();
    return std::span<T>(values_).subspan(z * n, n);
  }

  bool operator==(const Stack&) const = default;

 private:
  std::size_t index(uint32_t z, uint32_t y, uint32_t x) const {
    return (std::size_t{z} * dims_.y + y) * dims_.x + x;
  }

  Dims dims_;
  std::vector<T> values_;
};

/// Border/elevation probabilities, one per voxel, in [0,1].
using ScalarStack = Stack<float>;

/// Integer labels, 0 is background. The dtype is the on-disk width and is
/// preserved by load/save.
class LabelStack : public Stack<uint32_t> {
 public:
  LabelStack() = default;
  explicit LabelStack(Dims dims, uint32_t fill = 0, Dtype dtype = Dtype::u32)
      : Stack<uint32_t>(dims, fill), dtype_(dtype) {}
  LabelStack(Dims dims, std::vector<uint32_t> values, Dtype dtype = Dtype::u32)
      : Stack<uint32_t>(dims, std::move(values)), dtype_(dtype) {}

  Dtype dtype() const { return dtype_; }
  void set_dtype(Dtype dtype) { dtype_ = dtype; }

  bool operator==(const LabelStack&) const = default;

 private:
  Dtype dtype_ = Dtype::u32;
};

using AnyStack = std::variant<ScalarStack, LabelStack>;

// Throws InvariantViolation unless every value is finite and in [0,1].
void validate_scalars(std::span<const float> values);

AnyStack load_stack(const std::filesystem::path& path,
                    uint64_t max_voxels = kDefaultMaxVoxels);
LabelStack load_labels(const std::filesystem::path& path,
                       uint64_t max_voxels = kDefaultMaxVoxels);
ScalarStack load_scalars(const std::filesystem::path& path,
                         uint64_t max_voxels = kDefaultMaxVoxels);

void save_stack(const ScalarStack& stack, const std::filesystem::path& path);
void save_stack(const LabelStack& stack, const std::filesystem::path& path);

/// Random access to the sections of a VOL1 file without loading the whole
/// stack.
class VolumeReader {
 public:
  explicit VolumeReader(const std::filesystem::path& path,
                        uint64_t max_voxels = kDefaultMaxVoxels);

  const Dims& dims() const { return dims_; }
  Dtype dtype() const { return dtype_; }
  bool is_scalar() const { return dtype_ == Dtype::f32; }

  Grid<uint32_t> read_labels(uint32_t z);
  Grid<float> read_scalars(uint32_t z);

 private:
  std::vector<char> read_raw(uint32_t z);

  std::filesystem::path path_;
  std::ifstream in_;
  Dims dims_;
  Dtype dtype_ = Dtype::u8;
};

/// Sequential section writer. finish() must be called once every section
/// has been written; an unfinished file is removed on destruction.
class VolumeWriter {
 public:
  VolumeWriter(const std::filesystem::path& path, Dims dims, Dtype dtype);
  ~VolumeWriter();
  VolumeWriter(const VolumeWriter&) = delete;
  VolumeWriter& operator=(const VolumeWriter&) = delete;

  void write_section(std::span<const uint32_t> labels);
  void write_section(std::span<const float> values);
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  Dims dims_;
  Dtype dtype_;
  uint32_t written_ = 0;
  bool finished_ = false;
};

/// Assigns compact labels 1..N in order of first appearance; 0 maps to 0.
class LabelCompactor {
 public:
  uint32_t map(uint32_t label) {
    if (label == 0) return 0;
    auto [it, inserted] = mapping_.try_emplace(label, next_);
    if (inserted) ++next_;
    return it->second;
  }
  uint32_t count() const { return next_ - 1; }
  const std::unordered_map<uint32_t, uint32_t>& mapping() const { return mapping_; }

 private:
  std::unordered_map<uint32_t, uint32_t> mapping_;
  uint32_t next_ = 1;
};

struct CompactResult {
  LabelStack labels;
  std::unordered_map<uint32_t, uint32_t> mapping;  // old -> new, nonzero only
  uint32_t n_labels = 0;
};

CompactResult compact_labels(const LabelStack& stack);

}  // namespace threec

#endif
