#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rt {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

/// Coordinates of a complex co-form in the dual basis (one entry per generator).
using CoForm = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** \brief Commuting tuple X_1..X_kappa of square complex matrices.
 *
 * commDefect is the largest Frobenius norm of a pairwise commutator.
 */
struct CommutingTuple {
  int kappa = 0;
  int dim = 0;
  std::vector<Mat> mats;
  double commDefect = 0.0;

  /// Largest Frobenius norm among the matrices (1 if all vanish).
  double scale() const;
};

/// Build a tuple, computing commDefect; throws if shapes disagree or the
/// defect exceeds tolComm.
CommutingTuple makeTuple(std::vector<Mat> mats, double tolComm = 1e-8);

/// Worst commutator over all pairs taken from the concatenation of the given
/// matrix lists; returns {defect, i, j} with indices into the concatenation.
struct CommutatorReport {
  double defect = 0.0;
  int first = -1;
  int second = -1;
};
CommutatorReport worstCommutator(const std::vector<Mat>& mats);

CoForm zeroCoForm(int kappa);

}  // namespace rt
