#include "rt/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

namespace rt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser on a combined key
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RVec roofValues(const SuspensionModel& model, const RVec& x) {
  RVec r(model.kappa);
  for (int j = 0; j < model.kappa; ++j) {
    const auto [f, loc] = model.generatorSlot(j);
    (void)loc;
    r[j] = model.roof(j)(x.segment(model.baseOffset(f), model.factors[f].baseDim));
  }
  return r;
}

double modelVolume(const SuspensionModel& model) {
  double v = 1.0;
  for (int j = 0; j < model.kappa; ++j) v *= model.roof(j).mean();
  return v;
}

// Base point in stratum i of an m^d grid, fiber uniform under the roof; weight = prod r_j(x).
struct WeightedPoint {
  ModelPoint p;
  double w;
};

WeightedPoint stratifiedPoint(const SuspensionModel& model, std::size_t i, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WeightedPoint out{{RVec(model.baseDim), RVec(model.kappa)}, 1.0};
  std::size_t cell = i;
  for (int a = 0; a < model.baseDim; ++a) {
    out.p.x[a] = (double(cell % m) + u(rng)) / m;
    cell /= m;
  }
  const RVec r = roofValues(model, out.p.x);
  for (int j = 0; j < model.kappa; ++j) {
    out.p.s[j] = u(rng) * r[j];
    out.w *= r[j];
  }
  return out;
}

int strataPerAxis(int dim, std::size_t batch) {
  int m = 1;
  while (std::pow(double(m + 1), dim) <= double(batch)) ++m;
  return m;
}

struct Accumulator {
  cd sum = 0.0;
  double sumRe2 = 0.0, sumIm2 = 0.0;
  std::size_t n = 0;
  void add(cd x) {
    sum += x;
    sumRe2 += x.real() * x.real();
    sumIm2 += x.imag() * x.imag();
    ++n;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sumRe2 += o.sumRe2;
    sumIm2 += o.sumIm2;
    n += o.n;
  }
  Estimate estimate(double scale = 1.0) const {
    Estimate e;
    e.samples = n;
    if (n == 0) return e;
    const double dn = double(n);
    const cd mean = sum / dn;
    const double vr = std::max(0.0, sumRe2 / dn - mean.real() * mean.real());
    const double vi = std::max(0.0, sumIm2 / dn - mean.imag() * mean.imag());
    e.value = scale * mean;
    e.stderr_ = std::abs(scale) * std::sqrt((vr + vi) / std::max(1.0, dn - 1.0));
    return e;
  }
};

// Batches run in parallel; partial sums are merged in batch order.
template <class Body>
Accumulator runBatches(const SamplingOptions& opts, Body body) {
  const std::size_t nb = (opts.nSamples + opts.batch - 1) / opts.batch;
  std::vector<Accumulator> parts(nb);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, nb), [&](const tbb::blocked_range<std::size_t>& range) {
    for (std::size_t b = range.begin(); b != range.end(); ++b) {
      const std::size_t lo = b * opts.batch, hi = std::min(opts.nSamples, lo + opts.batch);
      body(b, lo, hi, parts[b]);
    }
  });
  Accumulator total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

// Angular sector of a kappa = 2 cone, measured from generator 0 counter-clockwise.
struct Sector {
  double start = 0.0, span = 0.0;
};

Sector sectorOf(const ConeSpec& cone) {
  const RVec& a = cone.generators[0];
  const RVec& b = cone.generators[1];
  Sector s;
  s.start = std::atan2(a[1], a[0]);
  double end = std::atan2(b[1], b[0]);
  double span = end - s.start;
  while (span <= -std::numbers::pi) span += kTwoPi;
  while (span > std::numbers::pi) span -= kTwoPi;
  if (span < 0) {
    s.start = end;
    span = -span;
  }
  s.span = span;
  return s;
}

// Maps two uniforms to a direction on the cone section (unit vector).
RVec coneDirection(const SuspensionModel& model, const ConeSpec& cone, double u) {
  if (model.kappa == 1) return cone.generators[0];
  if (model.kappa == 2) {
    const Sector s = sectorOf(cone);
    const double th = s.start + u * s.span;
    RVec d(2);
    d << std::cos(th), std::sin(th);
    return d;
  }
  throw Error("cone sampling is implemented for kappa <= 2");
}

// Uniform by volume on C_T from a point of [0,1)^kappa.
RVec coneVolumePoint(const SuspensionModel& model, const ConeSpec& cone, double T, const double* q) {
  const double r = T * std::pow(q[0], 1.0 / model.kappa);
  return r * coneDirection(model, cone, model.kappa > 1 ? q[1] : 0.0);
}

double sampleProfile(const CutoffProfile& p, double peak, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const double t = p.lo() + (p.hi() - p.lo()) * u(rng);
    if (u(rng) * peak <= p(t)) return t;
  }
}

}  // namespace

cd TestFunction::operator()(const SuspensionModel& model, const ModelPoint& p) const {
  const RVec r = roofValues(model, p.x);
  cd v = 0.0;
  for (const auto& t : terms) {
    double phase = 0.0;
    for (Eigen::Index a = 0; a < t.k.size(); ++a) phase += double(t.k[a]) * p.x[a];
    for (Eigen::Index j = 0; j < t.n.size(); ++j) phase += double(t.n[j]) * p.s[j] / r[j];
    v += t.c * std::polar(1.0, kTwoPi * phase);
  }
  return v;
}

cd TestFunction::constantRoofIntegral(const SuspensionModel& model) const {
  if (!model.constantRoofs()) throw Error("exact integral needs constant roofs");
  cd v = 0.0;
  for (const auto& t : terms)
    if (t.k.isZero() && t.n.isZero()) v += t.c;
  return v * modelVolume(model);
}

TestFunction constantFunction(const SuspensionModel& model, cd value) {
  return {model.baseDim, model.kappa, {{IVec::Zero(model.baseDim), IVec::Zero(model.kappa), value}}};
}

TestFunction fiberCharacter(const SuspensionModel& model, const IVec& n) {
  if (n.size() != model.kappa) throw Error("fiber mode has the wrong size");
  return {model.baseDim, model.kappa, {{IVec::Zero(model.baseDim), n, 1.0}}};
}

TestFunction baseCharacter(const SuspensionModel& model, const IVec& k) {
  if (k.size() != model.baseDim) throw Error("base mode has the wrong size");
  return {model.baseDim, model.kappa, {{k, IVec::Zero(model.kappa), 1.0}}};
}

std::pair<TestFunction, TestFunction> randomTestPair(const SuspensionModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto d = static_cast<unsigned>(model.baseDim), kappa = static_cast<unsigned>(model.kappa);
  TestFunction U{model.baseDim, model.kappa, {}}, V{model.baseDim, model.kappa, {}};
  const IVec k0 = IVec::Zero(model.baseDim), n0 = IVec::Zero(model.kappa);
  const double re = u(rng), im = u(rng);
  U.terms.push_back({k0, n0, cd(re, im)});
  V.terms.push_back({k0, n0, 1.0});
  auto mode = [&](IVec k, IVec n) {
    k[rng() % d] = static_cast<long long>(rng() % 3) - 1;
    n[rng() % kappa] = static_cast<long long>(rng() % 3) - 1;
    return std::pair{k, n};
  };
  for (int t = 0; t < 3; ++t) {
    auto [k, n] = mode(k0, n0);
    const double a = u(rng), b = u(rng);
    U.terms.push_back({k, n, 0.3 * cd(a, b)});
    auto [k2, n2] = mode(k0, n0);
    const double c = u(rng), e = u(rng);
    V.terms.push_back({k2, n2, 0.15 * cd(c, e)});
  }
  return {U, V};
}

ConeSpec coneAround(const SuspensionModel& model, double halfAngle) {
  ConeSpec c;
  const RVec a0 = model.chamber.A0.normalized();
  if (model.kappa == 1) {
    c.generators.push_back(a0);
  } else if (model.kappa == 2) {
    for (double s : {-1.0, 1.0}) {
      const double th = std::atan2(a0[1], a0[0]) + s * halfAngle;
      RVec d(2);
      d << std::cos(th), std::sin(th);
      c.generators.push_back(d);
    }
  } else {
    throw Error("cones are implemented for kappa <= 2");
  }
  conePropernessMargin(model, c);
  return c;
}

double conePropernessMargin(const SuspensionModel& model, const ConeSpec& cone) {
  if (static_cast<int>(cone.generators.size()) != model.kappa) throw Error("cone needs kappa generators");
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& g : cone.generators) {
    if (g.size() != model.kappa) throw Error("cone generator has the wrong size");
    if (!weylChamberTest(model, g)) throw Error("cone is not proper: a generator leaves the Weyl chamber");
    for (std::size_t i = 0; i < model.chamber.functionals.size(); ++i)
      margin = std::min(margin, model.chamber.signs[i] * model.chamber.functionals[i].dot(g) / g.norm());
  }
  if (model.kappa == 2 && sectorOf(cone).span <= 1e-9) throw Error("cone is degenerate");
  if (!(margin > 0.0)) throw Error("cone is not proper");
  return margin;
}

Estimate birkhoffConeAverage(const SuspensionModel& model, const TestFunction& u, const TestFunction& v,
                             const ConeSpec& cone, double T, const SamplingOptions& opts) {
  conePropernessMargin(model, cone);
  if (!(T > 0.0)) throw Error("cone radius must be positive");
  const int kappa = model.kappa;
  const int m = strataPerAxis(model.baseDim, opts.batch);
  // Cranley-Patterson shift of the Sobol points.
  std::mt19937_64 shiftRng(mix(opts.seed, 0x5eed));
  std::vector<double> shift(kappa);
  for (auto& s : shift) s = std::uniform_real_distribution<double>(0.0, 1.0)(shiftRng);
  auto acc = runBatches(opts, [&](std::size_t b, std::size_t lo, std::size_t hi, Accumulator& out) {
    std::mt19937_64 rng(mix(opts.seed, b));
    boost::random::sobol qrng(kappa);
    qrng.discard(static_cast<std::uintmax_t>(lo + 1) * kappa);
    boost::random::uniform_01<double> unit;
    std::vector<double> q(kappa);
    for (std::size_t i = lo; i < hi; ++i) {
      for (int j = 0; j < kappa; ++j) {
        q[j] = unit(qrng) + shift[j];
        q[j] -= std::floor(q[j]);
      }
      const RVec A = coneVolumePoint(model, cone, T, q.data());
      const auto wp = stratifiedPoint(model, i - lo, m, rng);
      const auto back = flow(model, A, -1.0, wp.p);
      out.add(wp.w * u(model, back) * v(model, wp.p));
    }
  });
  return acc.estimate();
}

Estimate cesaroRApprox(const SuspensionModel& model, const TestFunction& u, const TestFunction& v, const ConeSpec& cone,
                       const CutoffProfile& profile, int nSteps, const SamplingOptions& opts) {
  conePropernessMargin(model, cone);
  if (nSteps < 1) throw Error("nSteps must be positive");
  const int kappa = model.kappa;
  const int m = strataPerAxis(model.baseDim, opts.batch);
  const double peak = profile.peak();
  // k on 1..N with weight (k/N)^{kappa-1}: cumulative table.
  std::vector<double> cdf(nSteps);
  double total = 0.0;
  for (int k = 1; k <= nSteps; ++k) {
    total += std::pow(double(k) / nSteps, kappa - 1);
    cdf[k - 1] = total;
  }
  for (auto& c : cdf) c /= total;
  auto acc = runBatches(opts, [&](std::size_t b, std::size_t lo, std::size_t hi, Accumulator& out) {
    std::mt19937_64 rng(mix(opts.seed ^ 0xce5a, b));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = lo; i < hi; ++i) {
      const RVec sigma = coneDirection(model, cone, unit(rng));
      const int k = 1 + static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), unit(rng)) - cdf.begin());
      double S = 0.0;
      for (int j = 0; j < k; ++j) S += sampleProfile(profile, peak, rng);
      const auto wp = stratifiedPoint(model, i - lo, m, rng);
      const auto back = flow(model, sigma, -S, wp.p);
      out.add(wp.w * u(model, back) * v(model, wp.p));
    }
  });
  return acc.estimate();
}

CorrelationSeries correlation(const SuspensionModel& model, const RVec& A, const TestFunction& f,
                              const TestFunction& g, const std::vector<double>& tGrid,
                              const SamplingOptions& opts) {
  if (A.size() != model.kappa) throw Error("direction has the wrong size");
  if (!std::is_sorted(tGrid.begin(), tGrid.end())) throw Error("time grid must be sorted");
  CorrelationSeries out;
  out.A = A;
  out.t = tGrid;
  const std::size_t nt = tGrid.size();
  const double vol = modelVolume(model);
  const int m = strataPerAxis(model.baseDim, opts.batch);
  const std::size_t nb = (opts.nSamples + opts.batch - 1) / opts.batch;
  // Per batch: sums of w f(phi x) conj g(x) per time, plus w f, w g and w.
  // Normalising by the sampled weight mass instead of the exact volume makes
  // C vanish identically for constant f.
  struct Part {
    std::vector<Accumulator> pair;
    Accumulator f, g, w;
  };
  std::vector<Part> parts(nb);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, nb), [&](const tbb::blocked_range<std::size_t>& range) {
    for (std::size_t b = range.begin(); b != range.end(); ++b) {
      auto& part = parts[b];
      part.pair.assign(nt, Accumulator{});
      std::mt19937_64 rng(mix(opts.seed ^ 0xc0e, b));
      const std::size_t lo = b * opts.batch, hi = std::min(opts.nSamples, lo + opts.batch);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto wp = stratifiedPoint(model, i - lo, m, rng);
        const double w = wp.w / vol;
        const cd gx = std::conj(g(model, wp.p));
        part.w.add(w);
        part.f.add(w * f(model, wp.p));
        part.g.add(w * std::conj(gx));
        ModelPoint y = wp.p;
        double tPrev = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
          y = flow(model, A, -(tGrid[k] - tPrev), y);
          tPrev = tGrid[k];
          part.pair[k].add(w * f(model, y) * gx);
        }
      }
    }
  });
  std::vector<Accumulator> pair(nt);
  Accumulator fa, ga, wa;
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < nt; ++k) pair[k].merge(p.pair[k]);
    fa.merge(p.f);
    ga.merge(p.g);
    wa.merge(p.w);
  }
  const double mass = wa.estimate().value.real();
  out.samples = fa.n;
  out.meanF = fa.estimate().value / mass;
  out.meanG = ga.estimate().value / mass;
  for (std::size_t k = 0; k < nt; ++k) {
    const auto e = pair[k].estimate();
    out.values.push_back(e.value / mass - out.meanF * std::conj(out.meanG));
    out.stderr_.push_back(e.stderr_ / mass);
  }
  return out;
}

double decayTime(const CorrelationSeries& c, double fraction) {
  if (c.values.empty()) return -1.0;
  const double c0 = std::abs(c.values.front());
  for (std::size_t k = 0; k < c.values.size(); ++k)
    if (std::abs(c.values[k]) < fraction * c0) return c.t[k];
  return -1.0;
}

MixingVerdict mixingClassify(const std::vector<Resonance>& resonances, const std::vector<CorrelationSeries>& correlations,
                             double axisTol) {
  MixingVerdict v;
  bool zeroSeen = false;
  for (const auto& r : resonances) {
    if (r.lambda.real().cwiseAbs().maxCoeff() > axisTol) continue;
    const bool isZero = r.lambda.cwiseAbs().maxCoeff() <= axisTol;
    const int h0 = r.cohomology.empty() ? r.multiplicity : r.cohomology[0];
    if (isZero) {
      zeroSeen = true;
      v.uniqueMeasure = h0 == 1;
      if (h0 != 1) v.witnesses.push_back(r);
    } else {
      v.witnesses.push_back(r);
    }
  }
  if (!zeroSeen) v.diagnostics.push_back("lambda = 0 missing from the resonance list");
  const bool spectralMixing = zeroSeen && v.witnesses.empty();
  int decaying = 0, flat = 0, undecided = 0;
  for (const auto& c : correlations) {
    const double c0 = c.values.empty() ? 0.0 : std::abs(c.values.front());
    const double td = decayTime(c, 0.1);
    v.decayTimes.push_back(td);
    double minAbs = std::numeric_limits<double>::infinity();
    for (const auto& x : c.values) minAbs = std::min(minAbs, std::abs(x));
    if (c0 == 0.0) {
      v.diagnostics.push_back("correlation vanishes at t = 0; no information");
      ++undecided;
    } else if (td >= 0.0) {
      ++decaying;
    } else if (minAbs >= 0.5 * c0) {
      ++flat;
    } else {
      ++undecided;
      v.diagnostics.push_back(
          fmt::format("correlation along A = ({}) neither decays below 0.1 nor stays above 0.5 of |C(0)|",
                      fmt::join(c.A.data(), c.A.data() + c.A.size(), ", ")));
    }
  }
  if (spectralMixing) {
    if (flat > 0) {
      v.verdict = "inconsistent";
      v.diagnostics.push_back(fmt::format("only lambda = 0 on the axis, yet {} correlation(s) stay flat", flat));
    } else if (undecided > 0 || decaying == 0) {
      v.verdict = "inconsistent";
      v.diagnostics.push_back("only lambda = 0 on the axis, but correlations do not confirm decay");
    } else {
      v.verdict = "mixing";
    }
  } else {
    if (flat > 0) {
      v.verdict = "non-mixing";
    } else {
      v.verdict = "inconsistent";
      v.diagnostics.push_back(fmt::format("{} axis witness(es) but no flat correlation", v.witnesses.size()));
    }
  }
  return v;
}

EquivarianceReport equivarianceCheck(const SuspensionModel& model, const CoForm& lambda,
                                     const EquivarianceOptions& opts) {
  if (!model.constantRoofs()) throw Error("explicit equivariant densities need constant roofs");
  if (lambda.size() != model.kappa) throw Error("lambda has the wrong size");
  if (lambda.real().cwiseAbs().maxCoeff() > 1e-12) throw Error("lambda must be imaginary");
  std::vector<RVec> dirs = opts.directions;
  if (dirs.empty()) {
    dirs.push_back(model.chamber.A0);
    std::mt19937_64 rng(mix(opts.sampling.seed, 0xd1));
    for (int i = 0; i < 2; ++i) dirs.push_back(sampleChamberDirection(model, rng));
  }
  std::vector<TestFunction> tests = opts.tests;
  if (tests.empty()) {
    tests.push_back(constantFunction(model));
    TestFunction mixed{model.baseDim, model.kappa, {}};
    mixed.terms.push_back({IVec::Zero(model.baseDim), IVec::Zero(model.kappa), 0.5});
    IVec n = IVec::Zero(model.kappa);
    n[0] = -1;
    mixed.terms.push_back({IVec::Zero(model.baseDim), n, 0.7});
    IVec k = IVec::Zero(model.baseDim);
    k[0] = 1;
    mixed.terms.push_back({k, IVec::Zero(model.kappa), cd(0.2, 0.1)});
    tests.push_back(mixed);
  }
  EquivarianceReport rep;
  for (const auto& A : dirs)
    for (double t : opts.times)
      for (const auto& f : tests) {
        cd phase = 0.0;
        for (Eigen::Index j = 0; j < A.size(); ++j) phase += lambda[j] * A[j];
        const cd factor = std::exp(-phase * t);
        const int m = strataPerAxis(model.baseDim, opts.sampling.batch);
        auto acc = runBatches(opts.sampling, [&](std::size_t b, std::size_t lo, std::size_t hi, Accumulator& out) {
          std::mt19937_64 rng(mix(opts.sampling.seed ^ 0xe9, b));
          for (std::size_t i = lo; i < hi; ++i) {
            const auto wp = stratifiedPoint(model, i - lo, m, rng);
            const cd dens = std::exp((lambda.transpose() * wp.p.s.cast<cd>())(0));
            const auto y = flow(model, A, t, wp.p);
            out.add(wp.w * (f(model, y) - factor * f(model, wp.p)) * dens);
          }
        });
        const auto e = acc.estimate();
        ++rep.cases;
        const double d = std::abs(e.value);
        if (d > rep.defect) {
          rep.defect = d;
          rep.stderr_ = e.stderr_;
        }
        rep.worstRatio = std::max(rep.worstRatio, d / std::max(e.stderr_, 1e-300));
      }
  return rep;
}

}  // namespace rt
