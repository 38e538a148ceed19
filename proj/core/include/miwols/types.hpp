#pragma once

#include <Eigen/Dense>

namespace miwols {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

}  // namespace miwols
