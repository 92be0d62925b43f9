#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <string>

namespace geoequiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::string format_point(const Vector& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ')';
  return os.str();
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace geoequiv
