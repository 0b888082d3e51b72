#pragma once

#include <Eigen/Dense>

namespace setinf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Result of projecting a symmetric matrix onto the PSD cone.
struct PsdClip {
    Mat matrix;
    Mat sqrt;          ///< symmetric square root, sqrt * sqrt == matrix
    Mat inv_sqrt;      ///< pseudo-inverse square root (zero on the null space)
    double clipped_mass = 0.0;  ///< sum of |negative eigenvalues| removed
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

/// Symmetrizes `m`, zeroes eigenvalues below -tol*trace (and any negative
/// ones), and returns the clipped matrix with its square roots.
PsdClip clip_psd(const Mat& m);

/// Symmetric square root of a PSD matrix via eigendecomposition.
Mat symmetric_sqrt(const Mat& m);

/// 2-norm condition number (ratio of extreme singular values); +inf when singular.
double condition_number(const Mat& m);

/// Sample mean of the rows of `x`.
Vec column_means(const Mat& x);

/// Sample covariance of the rows of `x` with divisor T-1.
Mat sample_covariance(const Mat& x);

}  // namespace setinf
