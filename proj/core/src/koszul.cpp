#include "rt/koszul.hpp"

#include <bit>
#include <sstream>

#include <Eigen/SVD>
#include <fmt/format.h>

namespace rt {

namespace {

void checkKappa(int kappa) {
  if (kappa < 1 || kappa > kMaxKappa)
    throw Error(fmt::format("kappa = {} outside the supported range 1..{}", kappa, kMaxKappa));
}

std::vector<int> membersOf(std::uint32_t mask) {
  std::vector<int> m;
  for (int b = 0; b < 32; ++b)
    if (mask & (1u << b)) m.push_back(b + 1);
  return m;
}

// posOfMask[mask] = position of the subset inside its grade.
std::vector<int> positionTable(int kappa) {
  const auto basis = exteriorBasis(kappa);
  std::vector<int> pos(std::size_t{1} << kappa, -1);
  for (const auto& grade : basis)
    for (std::size_t p = 0; p < grade.size(); ++p) pos[grade[p].mask()] = static_cast<int>(p);
  return pos;
}

// Sign of e_k ^ e_I after sorting into increasing order.
int wedgeSign(std::uint32_t maskI, int k) {
  std::uint32_t below = maskI & ((1u << (k - 1)) - 1u);
  return (std::popcount(below) % 2 == 0) ? 1 : -1;
}

void checkLambda(const CommutingTuple& t, const CoForm& lambda) {
  if (lambda.size() != t.kappa)
    throw Error(fmt::format("dimension mismatch: co-form has {} entries, tuple has kappa = {}",
                            lambda.size(), t.kappa));
  if (!lambda.allFinite()) throw Error("co-form has non-finite entries");
}

Mat shifted(const Mat& X, cd l) {
  Mat s = X;
  s.diagonal().array() += l;
  return s;
}

}  // namespace

std::uint32_t ExteriorIndex::mask() const {
  std::uint32_t m = 0;
  for (int i : members) m |= 1u << (i - 1);
  return m;
}

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

ExteriorBasis exteriorBasis(int kappa) {
  checkKappa(kappa);
  ExteriorBasis basis(kappa + 1);
  // Lexicographic order within a grade: enumerate combinations in order.
  for (int j = 0; j <= kappa; ++j) {
    std::vector<int> c(j);
    for (int i = 0; i < j; ++i) c[i] = i + 1;
    while (true) {
      basis[j].push_back(ExteriorIndex{c});
      int i = j - 1;
      while (i >= 0 && c[i] == kappa - j + i + 1) --i;
      if (i < 0) break;
      ++c[i];
      for (int q = i + 1; q < j; ++q) c[q] = c[q - 1] + 1;
    }
  }
  return basis;
}

int exteriorPosition(std::uint32_t mask, int kappa) {
  // Rank among subsets of the same size in lexicographic order of sorted members.
  auto m = membersOf(mask);
  const int j = static_cast<int>(m.size());
  long long rank = 0;
  int prev = 0;
  for (int i = 0; i < j; ++i) {
    for (int v = prev + 1; v < m[i]; ++v) rank += binom(kappa - v, j - i - 1);
    prev = m[i];
  }
  return static_cast<int>(rank);
}

KoszulOperator buildD(const CommutingTuple& tuple, const CoForm& lambda) {
  checkKappa(tuple.kappa);
  checkLambda(tuple, lambda);
  const int kappa = tuple.kappa, n = tuple.dim;
  const auto basis = exteriorBasis(kappa);
  const auto pos = positionTable(kappa);
  std::vector<Mat> shiftedX;
  for (int k = 0; k < kappa; ++k) shiftedX.push_back(shifted(tuple.mats[k], lambda[k]));

  KoszulOperator d{kappa, n, 1, {}};
  for (int j = 0; j < kappa; ++j) {
    Mat B = Mat::Zero(n * binom(kappa, j + 1), n * binom(kappa, j));
    for (std::size_t p = 0; p < basis[j].size(); ++p) {
      const auto mI = basis[j][p].mask();
      for (int k = 1; k <= kappa; ++k) {
        if (mI & (1u << (k - 1))) continue;
        const int q = pos[mI | (1u << (k - 1))];
        B.block(q * n, p * n, n, n) += double(wedgeSign(mI, k)) * shiftedX[k - 1];
      }
    }
    d.blocks.push_back(std::move(B));
  }
  return d;
}

GradedOperator buildDelta(const CommutingTuple& tuple, const CoForm& lambda) {
  checkKappa(tuple.kappa);
  checkLambda(tuple, lambda);
  const int kappa = tuple.kappa, n = tuple.dim;
  const auto basis = exteriorBasis(kappa);
  const auto pos = positionTable(kappa);

  GradedOperator delta{kappa, n, -1, {}};
  for (int j = 0; j < kappa; ++j) {
    Mat B = Mat::Zero(n * binom(kappa, j), n * binom(kappa, j + 1));
    for (std::size_t p = 0; p < basis[j + 1].size(); ++p) {
      const auto& J = basis[j + 1][p];
      const auto mJ = J.mask();
      for (int q = 1; q <= J.grade(); ++q) {
        const int i = J.members[q - 1];
        const int target = pos[mJ & ~(1u << (i - 1))];
        const double sign = (q % 2 == 0) ? 1.0 : -1.0;
        B.block(target * n, p * n, n, n) += sign * shifted(tuple.mats[i - 1], lambda[i - 1]);
      }
    }
    delta.blocks.push_back(std::move(B));
  }
  return delta;
}

GradedOperator contraction(const RVec& A, int kappa) {
  checkKappa(kappa);
  if (A.size() != kappa) throw Error("dimension mismatch: contraction vector length differs from kappa");
  const auto basis = exteriorBasis(kappa);
  const auto pos = positionTable(kappa);
  GradedOperator iota{kappa, 1, -1, {}};
  for (int j = 0; j < kappa; ++j) {
    Mat B = Mat::Zero(binom(kappa, j), binom(kappa, j + 1));
    for (std::size_t p = 0; p < basis[j + 1].size(); ++p) {
      const auto& J = basis[j + 1][p];
      for (int q = 1; q <= J.grade(); ++q) {
        const int i = J.members[q - 1];
        const double sign = (q % 2 == 1) ? 1.0 : -1.0;
        B(pos[J.mask() & ~(1u << (i - 1))], p) += sign * A[i - 1];
      }
    }
    iota.blocks.push_back(std::move(B));
  }
  return iota;
}

GradedOperator liftScalar(const GradedOperator& op, int n) {
  GradedOperator out{op.kappa, n, op.degree, {}};
  for (const auto& B : op.blocks) {
    Mat L = Mat::Zero(B.rows() * n, B.cols() * n);
    for (Eigen::Index r = 0; r < B.rows(); ++r)
      for (Eigen::Index c = 0; c < B.cols(); ++c)
        if (B(r, c) != cd(0)) L.block(r * n, c * n, n, n).diagonal().setConstant(B(r, c));
    out.blocks.push_back(std::move(L));
  }
  return out;
}

double squareDefect(const GradedOperator& op) {
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < op.blocks.size(); ++j) {
    const Mat P = op.degree > 0 ? Mat(op.blocks[j + 1] * op.blocks[j]) : Mat(op.blocks[j] * op.blocks[j + 1]);
    worst = std::max(worst, P.norm());
  }
  return worst;
}

namespace {

Mat kronId(long long copies, const Mat& X) {
  const auto n = X.rows();
  Mat K = Mat::Zero(copies * n, copies * n);
  for (long long p = 0; p < copies; ++p) K.block(p * n, p * n, n, n) = X;
  return K;
}

}  // namespace

double anticommutatorDefect(const GradedOperator& raise, const GradedOperator& lower,
                                  const Mat& target) {
  const int kappa = raise.kappa;
  const int n = raise.dim;
  double worst = 0.0;
  for (int j = 0; j <= kappa; ++j) {
    const long long sz = n * binom(kappa, j);
    Mat H = Mat::Zero(sz, sz);
    if (j < kappa) H += lower.blocks[j] * raise.blocks[j];
    if (j > 0) H += raise.blocks[j - 1] * lower.blocks[j - 1];
    H -= kronId(binom(kappa, j), target);
    worst = std::max(worst, H.norm());
  }
  return worst;
}

double iotaHomotopyDefect(const CommutingTuple& tuple, const RVec& A) {
  const auto d = buildD(tuple, zeroCoForm(tuple.kappa));
  const auto iota = liftScalar(contraction(A, tuple.kappa), tuple.dim);
  Mat XA = Mat::Zero(tuple.dim, tuple.dim);
  for (int k = 0; k < tuple.kappa; ++k) XA += A[k] * tuple.mats[k];
  return anticommutatorDefect(d, iota, XA);
}

double homotopyDefect(const CommutingTuple& tupleX, const CommutingTuple& tupleY, const CoForm& lambda,
                      double tolComm) {
  if (tupleX.kappa != tupleY.kappa || tupleX.dim != tupleY.dim)
    throw Error("dimension mismatch between the X and Y tuples");
  double worst = 0.0;
  int wi = -1, wj = -1;
  for (int i = 0; i < tupleX.kappa; ++i)
    for (int j = 0; j < tupleY.kappa; ++j) {
      double c = (tupleX.mats[i] * tupleY.mats[j] - tupleY.mats[j] * tupleX.mats[i]).norm();
      if (c > worst) {
        worst = c;
        wi = i;
        wj = j;
      }
    }
  if (worst > tolComm)
    throw Error(fmt::format("commutation hypothesis violated: worst pair (X_{}, Y_{}) with ||[X,Y]|| = {:.3e} > {:.3e}",
                            wi + 1, wj + 1, worst, tolComm));
  const auto d = buildD(tupleX, lambda);
  const auto delta = buildDelta(tupleY, zeroCoForm(tupleY.kappa));
  Mat S = Mat::Zero(tupleX.dim, tupleX.dim);
  for (int k = 0; k < tupleX.kappa; ++k) S += shifted(tupleX.mats[k], lambda[k]) * tupleY.mats[k];
  return anticommutatorDefect(d, delta, -S);
}

CohomologyResult cohomologyDims(const KoszulOperator& d, double rankTol, double absFloor) {
  if (d.degree != 1) throw Error("cohomologyDims expects a differential of degree +1");
  const int kappa = d.kappa, n = d.dim;
  std::vector<Eigen::VectorXd> sv;
  double smax = 0.0;
  for (const auto& B : d.blocks) {
    Eigen::BDCSVD<Mat> svd(B);
    sv.push_back(svd.singularValues());
    if (sv.back().size() > 0) smax = std::max(smax, sv.back().maxCoeff());
  }
  const double thr = std::max(rankTol * smax, absFloor);
  CohomologyResult res;
  for (int j = 0; j < kappa; ++j) {
    int r = 0;
    for (Eigen::Index i = 0; i < sv[j].size(); ++i) {
      const double s = sv[j][i];
      if (thr > 0.0 && s > thr) ++r;
      if (thr > 0.0 && s > thr / 10.0 && s <= thr * 10.0) res.illConditioned = true;
    }
    res.ranks.push_back(r);
  }
  for (int j = 0; j <= kappa; ++j) {
    const long long dimj = n * binom(kappa, j);
    const long long rj = j < kappa ? res.ranks[j] : 0;
    const long long rprev = j > 0 ? res.ranks[j - 1] : 0;
    res.dims.push_back(static_cast<int>(dimj - rj - rprev));
  }
  if (res.illConditioned)
    res.warnings.push_back(fmt::format(
        "ill-conditioned rank: singular values within a factor 10 of the cutoff {:.3e}", thr));
  return res;
}

int fredholmIndex(const std::vector<int>& dims) {
  int idx = 0;
  for (std::size_t j = 0; j < dims.size(); ++j) idx += (j % 2 == 0 ? 1 : -1) * dims[j];
  return idx;
}

std::string signsTable(int kappa) {
  const auto basis = exteriorBasis(kappa);
  const auto pos = positionTable(kappa);
  auto name = [](const ExteriorIndex& I) {
    if (I.members.empty()) return std::string("1");
    std::string s;
    for (std::size_t q = 0; q < I.members.size(); ++q) s += (q ? "^e" : "e") + std::to_string(I.members[q]);
    return s;
  };
  std::ostringstream os;
  os << "# kappa = " << kappa << "\n# wedge: e_k ^ e_I = sign * e_J\n";
  for (int j = 0; j < kappa; ++j)
    for (const auto& I : basis[j])
      for (int k = 1; k <= kappa; ++k) {
        if (I.mask() & (1u << (k - 1))) continue;
        const auto J = basis[j + 1][pos[I.mask() | (1u << (k - 1))]];
        os << "e" << k << " ^ " << name(I) << " = " << (wedgeSign(I.mask(), k) > 0 ? "+" : "-") << name(J)
           << "\n";
      }
  os << "# contraction: iota_{e_k} e_J = sign * e_I\n";
  for (int j = 1; j <= kappa; ++j)
    for (const auto& J : basis[j])
      for (int q = 1; q <= J.grade(); ++q) {
        const int k = J.members[q - 1];
        const auto I = basis[j - 1][pos[J.mask() & ~(1u << (k - 1))]];
        os << "iota_e" << k << " " << name(J) << " = " << (q % 2 == 1 ? "+" : "-") << name(I) << "\n";
      }
  return os.str();
}

}  // namespace rt
