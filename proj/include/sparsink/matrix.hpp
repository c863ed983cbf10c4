#ifndef SPARSINK_MATRIX_HPP_
#define SPARSINK_MATRIX_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace sparsink {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Binary format: magic "SPKM", u64 rows, u64 cols, little-endian doubles.
  void save_binary(const std::string& path) const;
  static Matrix load_binary(const std::string& path);
  void save_csv(const std::string& path) const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

}  // namespace sparsink

#endif  // SPARSINK_MATRIX_HPP_
