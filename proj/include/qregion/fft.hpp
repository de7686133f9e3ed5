#pragma once

#include <Eigen/Core>

#include <complex>

namespace qregion {

using ComplexPlane = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
using Plane = Eigen::ArrayXXd;

/// Unnormalized forward 2-D DFT.
ComplexPlane fft2(const Plane& input);
ComplexPlane fft2(const ComplexPlane& input);
/// Inverse 2-D DFT including the 1/(rows*cols) factor.
ComplexPlane ifft2(const ComplexPlane& spectrum);

/// Signed frequency in cycles per sample of DFT bin k out of n.
inline double signed_frequency(Eigen::Index k, Eigen::Index n) {
  return static_cast<double>(k <= n / 2 ? k : k - n) / static_cast<double>(n);
}

}  // namespace qregion
