#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace drillabc {

// All eigenvalues of a general real square matrix.
//
// Balancing, Householder reduction to upper Hessenberg form, then Francis
// double-shift QR with deflation. Complex eigenvalues come out as exact
// conjugate pairs. Result is sorted by descending real part, and within a
// conjugate pair the positive imaginary part comes first.
//
// Throws DomainError for empty or non-finite input and NumericError when the
// QR iteration exceeds 100·n sweeps.
std::vector<std::complex<double>> eigenvalues_general(const Eigen::MatrixXd& a);

// Largest real part of the spectrum.
double spectral_abscissa(const Eigen::MatrixXd& a);

}  // namespace drillabc
