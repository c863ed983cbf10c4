#include "sparsink/measures.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sparsink/errors.hpp"

namespace sparsink {

DiscreteMeasure new_measure(std::vector<double> weights, PointList support,
                            bool require_simplex) {
  if (weights.empty()) throw LengthMismatch("measure must have atoms");
  if (support.dim == 0 || support.coords.size() != weights.size() * support.dim)
    throw LengthMismatch("support length must equal weights length");
  double total = 0.0;
  bool any_positive = false;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      throw NegativeWeight("weight " + std::to_string(w));
    any_positive = any_positive || w > 0.0;
    total += w;
  }
  if (!any_positive) throw NegativeWeight("all weights are zero");
  if (require_simplex && std::abs(total - 1.0) > 1e-8)
    throw NotNormalized("weights sum to " + std::to_string(total));

  DiscreteMeasure m;
  m.weights = std::move(weights);
  m.support = std::move(support);
  m.total_mass = total;
  return m;
}

DiscreteMeasure measure_from_image(const FrameImage& img) {
  if (img.pixels.size() != img.height * img.width || img.pixels.empty())
    throw LengthMismatch("image dimensions do not match pixel count");
  double total = 0.0;
  for (double p : img.pixels) {
    if (p < 0.0 || p > 1.0) throw NegativeWeight("gray level out of [0,1]");
    total += p;
  }
  if (total <= 0.0) throw AllBlack("image has no mass");

  const std::size_t n = img.pixels.size();
  PointList support;
  support.dim = 2;
  support.coords.resize(2 * n);
  std::vector<double> weights(n);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::size_t k = r * img.width + c;
      support.coords[2 * k] = static_cast<double>(r);
      support.coords[2 * k + 1] = static_cast<double>(c);
      weights[k] = img.pixels[k] / total;
    }
  }
  return new_measure(std::move(weights), std::move(support), false);
}

FrameImage mean_pool(const FrameImage& img, std::size_t filter,
                     std::size_t stride) {
  if (filter < 1 || stride < 1)
    throw LengthMismatch("filter and stride must be positive");
  if (img.height < filter || img.width < filter)
    throw EmptyOutput("pooling window larger than image");
  FrameImage out;
  out.height = (img.height - filter) / stride + 1;
  out.width = (img.width - filter) / stride + 1;
  if (out.height == 0 || out.width == 0)
    throw EmptyOutput("pooling reduced a dimension to zero");
  out.pixels.resize(out.height * out.width);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      double sum = 0.0;
      for (std::size_t dr = 0; dr < filter; ++dr)
        for (std::size_t dc = 0; dc < filter; ++dc)
          sum += img.pixels[(r * stride + dr) * img.width + (c * stride + dc)];
      out.pixels[r * out.width + c] =
          sum / static_cast<double>(filter * filter);
    }
  }
  return out;
}

DiscreteMeasure read_measure_csv(const std::string& path,
                                 bool require_simplex) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  // header: weight,x1,...,xd
  std::size_t dim = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    bool first = true;
    while (std::getline(ss, tok, ',')) {
      if (first) {
        if (tok != "weight") throw IoError("expected 'weight' header column");
        first = false;
      } else {
        ++dim;
      }
    }
  }
  if (dim == 0) throw IoError("measure CSV needs at least one coordinate");

  std::vector<double> weights;
  PointList support;
  support.dim = dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    if (!std::getline(ss, tok, ',')) continue;
    weights.push_back(std::stod(tok));
    for (std::size_t k = 0; k < dim; ++k) {
      if (!std::getline(ss, tok, ','))
        throw IoError("short row in " + path);
      support.coords.push_back(std::stod(tok));
    }
  }
  return new_measure(std::move(weights), std::move(support), require_simplex);
}

void write_measure_csv(const DiscreteMeasure& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "weight";
  for (std::size_t k = 1; k <= m.support.dim; ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.weights[i];
    const double* p = m.support.point(i);
    for (std::size_t k = 0; k < m.support.dim; ++k) out << ',' << p[k];
    out << '\n';
  }
}

namespace {

int next_pgm_token(std::istream& in, std::string& tok) {
  tok.clear();
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return 1;
      continue;
    }
    tok.push_back(c);
  }
  return tok.empty() ? 0 : 1;
}

}  // namespace

FrameImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string tok;
  if (!next_pgm_token(in, tok) || (tok != "P2" && tok != "P5"))
    throw IoError("not a P2/P5 PGM: " + path);
  const bool binary = tok == "P5";
  auto read_int = [&]() {
    if (!next_pgm_token(in, tok)) throw IoError("truncated PGM: " + path);
    return std::stoul(tok);
  };
  const std::size_t width = read_int();
  const std::size_t height = read_int();
  const unsigned long maxval = read_int();
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    throw IoError("bad PGM header: " + path);

  FrameImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(width * height);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (binary) {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(width * height * bytes);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!in) throw IoError("truncated PGM data: " + path);
    for (std::size_t k = 0; k < width * height; ++k) {
      unsigned long v = bytes == 1
                            ? buf[k]
                            : (static_cast<unsigned long>(buf[2 * k]) << 8) +
                                  buf[2 * k + 1];
      img.pixels[k] = static_cast<double>(v) * scale;
    }
  } else {
    for (std::size_t k = 0; k < width * height; ++k)
      img.pixels[k] = static_cast<double>(read_int()) * scale;
  }
  return img;
}

}  // namespace sparsink
