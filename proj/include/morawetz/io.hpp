#pragma once

// Dense binary matrix dumps: a 32-byte header (magic "MWZD", format version,
// rows, cols, grid hash) followed by rows*cols row-major little-endian doubles.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace morawetz {

inline constexpr char kDenseMagic[4] = {'M', 'W', 'Z', 'D'};
inline constexpr std::uint32_t kDenseVersion = 1;

struct DenseHeader {
  std::uint64_t rows = 0, cols = 0, grid_hash = 0;
};

inline void write_dense(const std::string& path, const Eigen::MatrixXd& A, std::uint64_t grid_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::uint64_t rows = static_cast<std::uint64_t>(A.rows()), cols = static_cast<std::uint64_t>(A.cols());
  out.write(kDenseMagic, 4);
  out.write(reinterpret_cast<const char*>(&kDenseVersion), sizeof kDenseVersion);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(&grid_hash), sizeof grid_hash);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = A;
  out.write(reinterpret_cast<const char*>(R.data()), static_cast<std::streamsize>(R.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

template <typename Sparse>
void write_dense(const std::string& path, const Eigen::SparseMatrixBase<Sparse>& A, std::uint64_t grid_hash) {
  write_dense(path, Eigen::MatrixXd(A), grid_hash);
}

inline Eigen::MatrixXd read_dense(const std::string& path, DenseHeader* header = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0;
  DenseHeader h;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&h.rows), sizeof h.rows);
  in.read(reinterpret_cast<char*>(&h.cols), sizeof h.cols);
  in.read(reinterpret_cast<char*>(&h.grid_hash), sizeof h.grid_hash);
  if (!in || std::string(magic, 4) != std::string(kDenseMagic, 4) || version != kDenseVersion)
    throw std::runtime_error(path + ": not a dense matrix dump");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(h.rows, h.cols);
  in.read(reinterpret_cast<char*>(R.data()), static_cast<std::streamsize>(R.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated matrix data");
  if (header) *header = h;
  return R;
}

}  // namespace morawetz
