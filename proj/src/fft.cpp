#include "qregion/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace qregion {

namespace {

// Applies a 1-D transform along every column, then along every row.
ComplexPlane transform(ComplexPlane data, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;

  in.resize(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) in[r] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index r = 0; r < data.rows(); ++r) data(r, c) = out[r];
  }
  in.resize(data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) in[c] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = out[c];
  }
  return data;
}

}  // namespace

ComplexPlane fft2(const Plane& input) { return transform(input.cast<std::complex<double>>(), false); }

ComplexPlane fft2(const ComplexPlane& input) { return transform(input, false); }

// Eigen's inverse already scales by 1/n per axis.
ComplexPlane ifft2(const ComplexPlane& spectrum) { return transform(spectrum, true); }

}  // namespace qregion
