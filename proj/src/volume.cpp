#include "threec/volume.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <system_error>

namespace threec {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'O', 'L', '1'};

void put_u32(char* out, uint32_t v) {
  out[0] = static_cast<char>(v & 0xFF);
  out[1] = static_cast<char>((v >> 8) & 0xFF);
  out[2] = static_cast<char>((v >> 16) & 0xFF);
  out[3] = static_cast<char>((v >> 24) & 0xFF);
}

uint32_t get_u32(const char* in) {
  auto b = [&](int i) { return uint32_t{static_cast<unsigned char>(in[i])}; };
  return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

std::array<char, kVolHeaderSize> make_header(const Dims& dims, Dtype dtype) {
  std::array<char, kVolHeaderSize> h{};
  std::memcpy(h.data(), kMagic.data(), 4);
  h[4] = static_cast<char>(dtype);
  put_u32(h.data() + 8, dims.z);
  put_u32(h.data() + 12, dims.y);
  put_u32(h.data() + 16, dims.x);
  return h;
}

void encode_labels(std::span<const uint32_t> labels, Dtype dtype, std::vector<char>& out) {
  const auto width = dtype_width(dtype);
  const uint32_t max = dtype_max_label(dtype);
  out.resize(labels.size() * width);
  char* p = out.data();
  for (uint32_t v : labels) {
    if (v > max)
      throw Error(ErrorCode::InvariantViolation,
                  "label " + std::to_string(v) + " does not fit the stack dtype");
    for (std::size_t b = 0; b < width; ++b) *p++ = static_cast<char>((v >> (8 * b)) & 0xFF);
  }
}

void encode_scalars(std::span<const float> values, std::vector<char>& out) {
  validate_scalars(values);
  out.resize(values.size() * 4);
  char* p = out.data();
  for (float f : values) {
    put_u32(p, std::bit_cast<uint32_t>(f));
    p += 4;
  }
}

void decode_labels(const std::vector<char>& raw, Dtype dtype, std::span<uint32_t> out) {
  const auto width = dtype_width(dtype);
  const char* p = raw.data();
  for (auto& v : out) {
    uint32_t value = 0;
    for (std::size_t b = 0; b < width; ++b)
      value |= uint32_t{static_cast<unsigned char>(p[b])} << (8 * b);
    v = value;
    p += width;
  }
}

void decode_scalars(const std::vector<char>& raw, std::span<float> out) {
  const char* p = raw.data();
  for (auto& v : out) {
    v = std::bit_cast<float>(get_u32(p));
    p += 4;
  }
  validate_scalars(out);
}

template <class Fn>
void write_file(const std::filesystem::path& path, const Dims& dims, Dtype dtype, Fn&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  auto header = make_header(dims, dtype);
  out.write(header.data(), header.size());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

void validate_dims(const Dims& dims, uint64_t max_voxels) {
  if (dims.z == 0 || dims.y == 0 || dims.x == 0)
    throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  // z*y*x cannot overflow 96 bits, but it can overflow 64; check stepwise.
  uint64_t zy = uint64_t{dims.z} * dims.y;
  if (zy > max_voxels || (dims.x != 0 && zy > max_voxels / dims.x))
    throw Error(ErrorCode::DimsOverflow, "voxel count exceeds the configured maximum");
}

std::size_t dtype_width(Dtype dtype) {
  switch (dtype) {
    case Dtype::u8: return 1;
    case Dtype::u16: return 2;
    case Dtype::u32: return 4;
    case Dtype::f32: return 4;
  }
  throw Error(ErrorCode::UnsupportedDtype, "unknown dtype");
}

uint32_t dtype_max_label(Dtype dtype) {
  switch (dtype) {
    case Dtype::u8: return 0xFF;
    case Dtype::u16: return 0xFFFF;
    case Dtype::u32: return 0xFFFFFFFF;
    case Dtype::f32: break;
  }
  throw Error(ErrorCode::UnsupportedDtype, "f32 is not a label dtype");
}

void validate_scalars(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw Error(ErrorCode::InvariantViolation,
                  "scalar value outside [0,1]: " + std::to_string(v));
  }
}

// ---------------------------------------------------------------------------

VolumeReader::VolumeReader(const std::filesystem::path& path, uint64_t max_voxels)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, kVolHeaderSize> header{};
  in_.read(header.data(), header.size());
  if (in_.gcount() < 4 || std::memcmp(header.data(), kMagic.data(), 4) != 0)
    throw Error(ErrorCode::BadMagic, path.string() + " is not a VOL1 file");
  if (in_.gcount() != static_cast<std::streamsize>(header.size()))
    throw Error(ErrorCode::TruncatedFile, "header of " + path.string() + " is incomplete");
  auto code = static_cast<unsigned char>(header[4]);
  if (code > 3) throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(code));
  dtype_ = static_cast<Dtype>(code);
  dims_ = {get_u32(header.data() + 8), get_u32(header.data() + 12), get_u32(header.data() + 16)};
  validate_dims(dims_, max_voxels);

  std::error_code ec;
  auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot stat " + path.string());
  uint64_t expected = kVolHeaderSize + dims_.voxels() * dtype_width(dtype_);
  if (file_size < expected)
    throw Error(ErrorCode::TruncatedFile, path.string() + " holds fewer voxels than its header");
}

std::vector<char> VolumeReader::read_raw(uint32_t z) {
  if (z >= dims_.z) throw Error(ErrorCode::InvalidArgument, "section index out of range");
  const auto bytes = dims_.section_size() * dtype_width(dtype_);
  std::vector<char> raw(bytes);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kVolHeaderSize + uint64_t{z} * bytes));
  in_.read(raw.data(), static_cast<std::streamsize>(bytes));
  if (in_.gcount() != static_cast<std::streamsize>(bytes))
    throw Error(ErrorCode::TruncatedFile, "short read in " + path_.string());
  return raw;
}

Grid<uint32_t> VolumeReader::read_labels(uint32_t z) {
  if (is_scalar()) throw Error(ErrorCode::UnsupportedDtype, path_.string() + " is a scalar stack");
  Grid<uint32_t> grid(dims_.y, dims_.x);
  decode_labels(read_raw(z), dtype_, grid.values());
  return grid;
}

Grid<float> VolumeReader::read_scalars(uint32_t z) {
  if (!is_scalar()) throw Error(ErrorCode::UnsupportedDtype, path_.string() + " is a label stack");
  Grid<float> grid(dims_.y, dims_.x);
  decode_scalars(read_raw(z), grid.values());
  return grid;
}

// ---------------------------------------------------------------------------

VolumeWriter::VolumeWriter(const std::filesystem::path& path, Dims dims, Dtype dtype)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dims_(dims), dtype_(dtype) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  validate_dims(dims_);
  auto header = make_header(dims_, dtype_);
  out_.write(header.data(), header.size());
}

VolumeWriter::~VolumeWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

void VolumeWriter::write_section(std::span<const uint32_t> labels) {
  if (dtype_ == Dtype::f32) throw Error(ErrorCode::UnsupportedDtype, "writer expects scalars");
  if (labels.size() != dims_.section_size() || written_ >= dims_.z)
    throw Error(ErrorCode::ShapeMismatch, "section does not fit the declared dims");
  std::vector<char> raw;
  encode_labels(labels, dtype_, raw);
  out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  ++written_;
}

void VolumeWriter::write_section(std::span<const float> values) {
  if (dtype_ != Dtype::f32) throw Error(ErrorCode::UnsupportedDtype, "writer expects labels");
  if (values.size() != dims_.section_size() || written_ >= dims_.z)
    throw Error(ErrorCode::ShapeMismatch, "section does not fit the declared dims");
  std::vector<char> raw;
  encode_scalars(values, raw);
  out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  ++written_;
}

void VolumeWriter::finish() {
  if (written_ != dims_.z)
    throw Error(ErrorCode::InvariantViolation, "not every section was written");
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "write failed for " + path_.string());
  out_.close();
  finished_ = true;
}

// ---------------------------------------------------------------------------

AnyStack load_stack(const std::filesystem::path& path, uint64_t max_voxels) {
  VolumeReader reader(path, max_voxels);
  const auto& dims = reader.dims();
  std::ifstream in(path, std::ios::binary);
  in.seekg(kVolHeaderSize);
  std::vector<char> raw(dims.voxels() * dtype_width(reader.dtype()));
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw Error(ErrorCode::TruncatedFile, "short read in " + path.string());

  if (reader.is_scalar()) {
    ScalarStack stack(dims);
    decode_scalars(raw, stack.values());
    return stack;
  }
  LabelStack stack(dims, 0, reader.dtype());
  decode_labels(raw, reader.dtype(), stack.values());
  return stack;
}

LabelStack load_labels(const std::filesystem::path& path, uint64_t max_voxels) {
  auto any = load_stack(path, max_voxels);
  if (auto* labels = std::get_if<LabelStack>(&any)) return std::move(*labels);
  throw Error(ErrorCode::UnsupportedDtype, path.string() + " is a scalar stack, expected labels");
}

ScalarStack load_scalars(const std::filesystem::path& path, uint64_t max_voxels) {
  auto any = load_stack(path, max_voxels);
  if (auto* scalars = std::get_if<ScalarStack>(&any)) return std::move(*scalars);
  throw Error(ErrorCode::UnsupportedDtype, path.string() + " is a label stack, expected scalars");
}

void save_stack(const ScalarStack& stack, const std::filesystem::path& path) {
  std::vector<char> raw;
  encode_scalars(stack.values(), raw);  // validates before the file is touched
  write_file(path, stack.dims(), Dtype::f32, [&](std::ofstream& out) {
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  });
}

void save_stack(const LabelStack& stack, const std::filesystem::path& path) {
  if (stack.dtype() == Dtype::f32)
    throw Error(ErrorCode::UnsupportedDtype, "label stack cannot use dtype f32");
  std::vector<char> raw;
  encode_labels(stack.values(), stack.dtype(), raw);
  write_file(path, stack.dims(), stack.dtype(), [&](std::ofstream& out) {
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  });
}

CompactResult compact_labels(const LabelStack& stack) {
  LabelCompactor compactor;
  LabelStack out(stack.dims(), 0, stack.dtype());
  auto src = stack.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = compactor.map(src[i]);
  return {std::move(out), compactor.mapping(), compactor.count()};
}

}  // namespace threec
