#include "sparsink/matrix.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "sparsink/errors.hpp"

namespace sparsink {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'K', 'M'};
}

void Matrix::save_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  std::uint64_t r = rows_, c = cols_;
  out.write(reinterpret_cast<const char*>(&r), 8);
  out.write(reinterpret_cast<const char*>(&c), 8);
  out.write(reinterpret_cast<const char*>(data_.data()),
            static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

Matrix Matrix::load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad magic in " + path);
  std::uint64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), 8);
  in.read(reinterpret_cast<char*>(&c), 8);
  Matrix m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  in.read(reinterpret_cast<char*>(m.data_.data()),
          static_cast<std::streamsize>(m.data_.size() * sizeof(double)));
  if (!in) throw IoError("truncated matrix file: " + path);
  return m;
}

void Matrix::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j) out << ',';
      out << (*this)(i, j);
    }
    out << '\n';
  }
}

}  // namespace sparsink
