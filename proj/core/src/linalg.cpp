#include "setinf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace setinf {

PsdClip clip_psd(const Mat& m) {
    const Mat sym = 0.5 * (m + m.transpose());
    PsdClip out;
    if (sym.size() == 0) {
        out.matrix = sym;
        out.sqrt = sym;
        out.inv_sqrt = sym;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    Vec values = eig.eigenvalues();
    const Mat& vectors = eig.eigenvectors();
    out.min_eigenvalue = values.minCoeff();
    out.max_eigenvalue = values.maxCoeff();

    const double scale = std::max(values.cwiseAbs().maxCoeff(), 0.0);
    const double null_tol = scale * 1e-12;
    Vec root(values.size());
    Vec inv_root(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] < 0.0) {
            out.clipped_mass += -values[i];
            values[i] = 0.0;
        }
        root[i] = std::sqrt(values[i]);
        inv_root[i] = values[i] > null_tol ? 1.0 / root[i] : 0.0;
    }
    auto rebuild = [&](const Vec& d) {
        const Mat r = vectors * d.asDiagonal() * vectors.transpose();
        return Mat(0.5 * (r + r.transpose()));
    };
    out.matrix = out.clipped_mass > 0.0 ? rebuild(values) : sym;
    out.sqrt = rebuild(root);
    out.inv_sqrt = rebuild(inv_root);
    return out;
}

Mat symmetric_sqrt(const Mat& m) { return clip_psd(m).sqrt; }

double condition_number(const Mat& m) {
    if (m.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Mat> svd(m);
    const Vec& s = svd.singularValues();
    const double smallest = s[s.size() - 1];
    if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
    return s[0] / smallest;
}

Vec column_means(const Mat& x) { return x.colwise().mean().transpose(); }

Mat sample_covariance(const Mat& x) {
    const Eigen::Index t = x.rows();
    const Mat centered = x.rowwise() - x.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(t - 1);
}

}  // namespace setinf
