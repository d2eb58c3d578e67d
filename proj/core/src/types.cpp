#include "rt/types.hpp"

#include <fmt/format.h>

namespace rt {

double CommutingTuple::scale() const {
  double s = 0.0;
  for (const auto& m : mats) s = std::max(s, m.norm());
  return s > 0.0 ? s : 1.0;
}

CommutatorReport worstCommutator(const std::vector<Mat>& mats) {
  CommutatorReport r;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j) {
      double d = (mats[i] * mats[j] - mats[j] * mats[i]).norm();
      if (r.first < 0 || d > r.defect) {
        r.defect = d;
        r.first = static_cast<int>(i);
        r.second = static_cast<int>(j);
      }
    }
  return r;
}

CommutingTuple makeTuple(std::vector<Mat> mats, double tolComm) {
  if (mats.empty()) throw Error("tuple must contain at least one matrix");
  const auto n = mats.front().rows();
  if (n < 1) throw Error("tuple matrices must be non-empty");
  for (std::size_t j = 0; j < mats.size(); ++j)
    if (mats[j].rows() != n || mats[j].cols() != n)
      throw Error(fmt::format("dimension mismatch: matrix {} is {}x{}, expected {}x{}", j + 1,
                              mats[j].rows(), mats[j].cols(), n, n));
  CommutingTuple t;
  t.kappa = static_cast<int>(mats.size());
  t.dim = static_cast<int>(n);
  t.mats = std::move(mats);
  auto w = worstCommutator(t.mats);
  t.commDefect = t.kappa > 1 ? w.defect : 0.0;
  if (t.commDefect > tolComm)
    throw Error(fmt::format("tuple does not commute: ||[X_{},X_{}]|| = {:.3e} > {:.3e}", w.first + 1,
                            w.second + 1, t.commDefect, tolComm));
  return t;
}

CoForm zeroCoForm(int kappa) { return CoForm::Zero(kappa); }

}  // namespace rt
