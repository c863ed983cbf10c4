#ifndef SPARSINK_MEASURES_HPP_
#define SPARSINK_MEASURES_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace sparsink {

// Support points in R^d, stored flat (point i occupies coords[i*dim .. +dim)).
struct PointList {
  std::vector<double> coords;
  std::size_t dim = 0;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  const double* point(std::size_t i) const { return coords.data() + i * dim; }
};

struct DiscreteMeasure {
  std::vector<double> weights;
  PointList support;
  double total_mass = 0.0;

  std::size_t size() const { return weights.size(); }
};

struct FrameImage {
  std::vector<double> pixels;  // row-major gray levels in [0,1]
  std::size_t height = 0;
  std::size_t width = 0;
};

// Validating constructor. With require_simplex the weights must sum to 1
// within 1e-8 absolute.
DiscreteMeasure new_measure(std::vector<double> weights, PointList support,
                            bool require_simplex = false);

// One atom per pixel at (row, col); weights proportional to gray level and
// normalized to sum 1.
DiscreteMeasure measure_from_image(const FrameImage& img);

FrameImage mean_pool(const FrameImage& img, std::size_t filter,
                     std::size_t stride);

// CSV format: header "weight,x1,...,xd", one row per atom.
DiscreteMeasure read_measure_csv(const std::string& path,
                                 bool require_simplex = false);
void write_measure_csv(const DiscreteMeasure& m, const std::string& path);

// PGM (P2 ascii / P5 binary), gray levels rescaled by max level to [0,1].
FrameImage read_pgm(const std::string& path);

}  // namespace sparsink

#endif  // SPARSINK_MEASURES_HPP_
