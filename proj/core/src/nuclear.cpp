#include "commdrop/nuclear.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace commdrop {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(m.data.data(), m.rows, m.cols);
}

} // namespace

double nuclear_norm(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
    return svd.singularValues().sum();
}

Matrix nuclear_subgradient(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) return m;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd g = svd.matrixU() * svd.matrixV().transpose();
    Matrix out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) = g(i, j);
    return out;
}

} // namespace commdrop
