#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace ncvx {

using Vec  = Eigen::VectorXd;
using Mat  = Eigen::MatrixXd;
// Row-major layout for factor matrices: the matrix-completion kernels walk rows.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Thrown when an iterative routine leaves the realm of finite numbers or
/// fails to converge. Carries the iteration count at which it gave up.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, long iteration = -1)
        : std::runtime_error(what), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

inline double sqr(double x) { return x * x; }

}  // namespace ncvx
