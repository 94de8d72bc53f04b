#ifndef THREEC_TEST_UTIL_HPP
#define THREEC_TEST_UTIL_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "threec/error.hpp"

#define CHECK_THROWS_WITH_CODE(expr, expected_code)          \
  do {                                                       \
    bool threw_ = false;                                     \
    try {                                                    \
      (void)(expr);                                          \
    } catch (const ::threec::Error& e_) {                    \
      threw_ = true;                                         \
      CHECK_MESSAGE(e_.code() == (expected_code), e_.what()); \
    }                                                        \
    CHECK_MESSAGE(threw_, "expected an exception: " #expr);  \
  } while (0)

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("threec_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

#endif
