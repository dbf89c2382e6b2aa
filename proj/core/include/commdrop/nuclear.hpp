#pragma once

#include "commdrop/matrix.hpp"

namespace commdrop {

// Sum of singular values.
double nuclear_norm(const Matrix& m);

// Subgradient of the nuclear norm at m: U * V^T from the thin SVD. For
// matrices with distinct positive singular values this is the unique
// gradient; at rank deficiency it is one valid subgradient.
Matrix nuclear_subgradient(const Matrix& m);

} // namespace commdrop
