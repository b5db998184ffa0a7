#pragma once

#include "ndnreuse/workload.hpp"

#include <filesystem>
#include <unistd.h>
#include <string>

namespace testing_support {

inline std::string
data_path(const std::string& file)
{
  return std::string(NDNREUSE_DATA_DIR) + "/" + file;
}

/// MNIST subset shared by every test in the binary.
inline const ndnreuse::Dataset&
mnist()
{
  static const ndnreuse::Dataset ds = ndnreuse::load_mnist(data_path("mnist-images-idx3-ubyte.gz"),
                                                           data_path("mnist-labels-idx1-ubyte.gz"), 800);
  return ds;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir()
  {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      m_path = base / ("ndnreuse-test-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      if (std::filesystem::create_directory(m_path))
        break;
    }
  }
  ~TempDir() { std::filesystem::remove_all(m_path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return m_path; }
  std::string file(const std::string& name) const { return (m_path / name).string(); }

private:
  std::filesystem::path m_path;
};

} // namespace testing_support
