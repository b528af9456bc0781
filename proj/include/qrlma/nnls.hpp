#pragma once

#include "qrlma/types.hpp"

namespace qrlma {

/// min ||A x - b||_2 subject to x >= 0 (Lawson-Hanson active set).
/// Columns are scaled to unit norm internally; all-zero columns get x_j = 0.
Vector nnls(const Matrix& a, const Vector& b, int max_iterations = 0);

}  // namespace qrlma
