#include "rt/pipelines.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/core.h>

#include "rt/io.hpp"
#include "rt/jointspec.hpp"
#include "rt/koszul.hpp"
#include "rt/tuples.hpp"

namespace rt {

namespace {

std::string lambdaText(const CoForm& l) {
  std::string s = "(";
  for (Eigen::Index j = 0; j < l.size(); ++j)
    s += fmt::format("{}{:.6f}{:+.6f}i", j ? ", " : "", l[j].real(), l[j].imag());
  return s + ")";
}

std::string dimsText(const std::vector<int>& h) {
  std::string s = "(";
  for (std::size_t j = 0; j < h.size(); ++j) s += fmt::format("{}{}", j ? "," : "", h[j]);
  return s + ")";
}

std::vector<Mat> generatedTuple(const JointSpecConfig& j, std::mt19937_64& rng) {
  if (j.generate == "polynomial") return tuples::polynomialTuple(j.dim, j.kappa, rng);
  if (j.generate == "hermitian") return tuples::symmetricTuple(j.dim, 1, j.kappa, rng);
  std::vector<int> blocks;
  for (int left = j.dim; left > 0;) {
    const int b = std::min(left, 1 + static_cast<int>(rng() % 3));
    blocks.push_back(b);
    left -= b;
  }
  return tuples::jordanTuple(blocks, j.kappa, rng);
}

}  // namespace

int effectiveN(const GalerkinConfig& g, const EscapeProfile& escape) {
  return g.N > 0 ? g.N : calibrateN(escape, g.depth);
}

RunResult runKoszulCheck(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  SuiteOptions o;
  o.seed = *cfg.seed;
  o.maxKappa = cfg.check.maxKappa;
  o.cases = cfg.check.identityCases;
  o.injectNonCommuting = cfg.check.injectNonCommuting;
  out.suites.push_back(koszulIdentitySuite(o));
  o.injectNonCommuting = false;
  o.cases = cfg.check.spectrumCases;
  out.suites.push_back(jointSpectrumSuite(o));
  o.cases = cfg.check.rigidityCases;
  out.suites.push_back(rigiditySuite(o));
  bool all = true;
  for (const auto& s : out.suites) {
    all = all && s.passed();
    out.summary.push_back(fmt::format("{:<22} {} cases={} failures={} worst={:.3e} ({})", s.name,
                                      s.passed() ? "PASS" : "FAIL", s.cases, s.failures, s.worst, s.worstCase));
    for (std::size_t i = 0; i < std::min<std::size_t>(s.diagnostics.size(), 5); ++i)
      out.summary.push_back("  " + s.diagnostics[i]);
  }
  out.files.emplace_back("check.json", suitesJson(out.suites, hash));
  out.exitCode = all ? kExitOk : kExitFailed;
  return out;
}

RunResult runJointSpec(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  std::vector<Mat> mats = cfg.jointspec.matrices;
  if (mats.empty()) {
    std::mt19937_64 rng(*cfg.seed);
    mats = generatedTuple(cfg.jointspec, rng);
  }
  const auto t = makeTuple(mats, std::numeric_limits<double>::infinity());
  const double allowed = cfg.tolerances.comm * std::max(1.0, t.scale() * t.scale());
  if (t.commDefect > allowed) {
    const auto w = worstCommutator(mats);
    out.summary.push_back(fmt::format("generators do not commute: worst pair (X_{}, X_{}) with ||[X, Y]|| = {:.3e} > {:.1e}",
                                      w.first + 1, w.second + 1, w.defect, allowed));
    out.exitCode = kExitFailed;
    return out;
  }
  JointSpecOptions o;
  o.tol = cfg.tolerances.jointspec;
  o.clusterTol = cfg.tolerances.cluster;
  if (cfg.seed) o.seed = *cfg.seed;
  const auto s = jointEigenvalues(t, o);
  for (const auto& e : s.eigenvalues)
    out.summary.push_back(fmt::format("lambda = {} alg = {} geom = {} jordan = {} residual = {:.2e}", lambdaText(e.lambda),
                                      e.algMult, e.geomMult, e.jordanOrder, e.residual));
  for (const auto& w : s.warnings) out.summary.push_back("warning: " + w);
  out.files.emplace_back("jointspec.json", jointSpectrumJson(s, t.commDefect, hash));
  return out;
}

RunResult runResonances(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  const auto model = buildModel(cfg.model);
  out.escape = buildEscape(model, cfg.galerkin.cones);
  const int N = effectiveN(cfg.galerkin, out.escape);
  auto wr = resonancesInWindow(model, out.escape, cfg.galerkin.K, N, cfg.galerkin.search);
  out.window = wr.window;
  out.resonances = wr.resonances;
  Provenance p;
  p.model = model.name;
  p.K = cfg.galerkin.K;
  p.N = N;
  p.cones = out.escape.used;
  p.seed = cfg.seed.value_or(0);
  p.window = wr.window;
  out.summary.push_back(fmt::format("{}: K = {} N = {} cX = {:.6f} beta = {:.6f} shrinks = {}", model.name, p.K, N,
                                    out.escape.cX, wr.window.beta, out.escape.shrinkCount));
  for (const auto& r : wr.resonances)
    out.summary.push_back(fmt::format("lambda = {} h = {} {}", lambdaText(r.lambda), dimsText(r.cohomology), r.status));
  out.summary.push_back(fmt::format("{} resonance(s) in the window", wr.resonances.size()));
  out.files.emplace_back("resonances.csv", resonanceCsv(wr.resonances, model.kappa, hash));
  out.files.emplace_back("provenance.json", provenanceJson(p, wr.resonances, wr.notes, hash));
  return out;
}

RunResult runMeasures(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  const auto model = buildModel(cfg.model);
  const auto cone = coneAround(model, cfg.measures.coneHalfAngle);
  const auto profile = buildProfile(cfg.measures.profile);
  std::mt19937_64 rng(*cfg.seed);
  for (int i = 0; i < cfg.measures.pairs; ++i) {
    const auto [u, v] = randomTestPair(model, rng);
    SamplingOptions o;
    o.nSamples = cfg.measures.nSamples;
    o.seed = *cfg.seed + static_cast<std::uint64_t>(i);
    EstimateRow b{fmt::format("pair{}", i), "birkhoff", birkhoffConeAverage(model, u, v, cone, cfg.measures.T, o)};
    EstimateRow c{fmt::format("pair{}", i), "cesaro",
                  cesaroRApprox(model, u, v, cone, profile, cfg.measures.cesaroSteps, o)};
    std::string line = fmt::format("pair {}: birkhoff {:.6f}{:+.6f}i +- {:.2e}, cesaro {:.6f}{:+.6f}i +- {:.2e}", i,
                                   b.estimate.value.real(), b.estimate.value.imag(), b.estimate.stderr_,
                                   c.estimate.value.real(), c.estimate.value.imag(), c.estimate.stderr_);
    if (model.constantRoofs()) {
      const cd ref = u.constantRoofIntegral(model) * v.constantRoofIntegral(model);
      b.reference = c.reference = ref;
      b.hasReference = c.hasReference = true;
      line += fmt::format(", exact {:.6f}{:+.6f}i", ref.real(), ref.imag());
    }
    out.summary.push_back(line);
    out.estimates.push_back(b);
    out.estimates.push_back(c);
  }
  out.files.emplace_back("measures.csv", estimateCsv(out.estimates, hash));
  return out;
}

RunResult runMixing(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  const auto model = buildModel(cfg.model);
  out.escape = buildEscape(model, cfg.galerkin.cones);
  const int N = effectiveN(cfg.galerkin, out.escape);
  auto wr = resonancesInWindow(model, out.escape, cfg.galerkin.K, N, cfg.galerkin.search);
  out.window = wr.window;
  out.resonances = wr.resonances;

  std::vector<double> tGrid;
  for (int k = 0; k * cfg.mixing.tStep <= cfg.mixing.tMax + 1e-12; ++k) tGrid.push_back(k * cfg.mixing.tStep);
  SamplingOptions o;
  o.nSamples = cfg.measures.nSamples;
  o.seed = *cfg.seed;
  for (int j = 0; j < model.kappa; ++j) {
    IVec n = IVec::Zero(model.kappa);
    n[j] = 1;
    const auto f = fiberCharacter(model, n);
    out.correlations.push_back(correlation(model, model.chamber.A0, f, f, tGrid, o));
  }
  out.verdict = mixingClassify(wr.resonances, out.correlations, cfg.mixing.axisTol);

  out.summary.push_back(fmt::format("{}: verdict {} (unique measure: {})", model.name, out.verdict.verdict,
                                    out.verdict.uniqueMeasure ? "yes" : "no"));
  for (const auto& w : out.verdict.witnesses)
    out.summary.push_back(fmt::format("witness lambda = {} h = {}", lambdaText(w.lambda), dimsText(w.cohomology)));
  for (std::size_t i = 0; i < out.correlations.size(); ++i)
    out.summary.push_back(fmt::format("fiber character {}: decay time {}", i + 1,
                                      out.verdict.decayTimes[i] >= 0 ? fmt::format("{:g}", out.verdict.decayTimes[i])
                                                                     : std::string("none")));
  for (const auto& d : out.verdict.diagnostics) out.summary.push_back("diagnostic: " + d);
  out.files.emplace_back("mixing.json", mixingJson(out.verdict, wr.resonances, hash));
  out.files.emplace_back("correlations.csv", correlationCsv(out.correlations, hash));
  out.files.emplace_back("resonances.csv", resonanceCsv(wr.resonances, model.kappa, hash));
  if (out.verdict.verdict == "inconsistent") out.exitCode = kExitInconsistent;
  return out;
}

RunResult emitPlotData(const ExperimentConfig& cfg) {
  RunResult out;
  const std::string hash = configHash(cfg);
  const auto model = buildModel(cfg.model);
  const auto table = parseResonanceCsv(readFile(cfg.input));
  out.files.emplace_back("plotdata.csv", plotData(table, model.chamber.A0, hash));
  out.summary.push_back(fmt::format("{} point(s)", table.rows.size()));
  return out;
}

RunResult runCommand(const ExperimentConfig& cfg) {
  validateConfig(cfg);
  if (cfg.command == "check") return runKoszulCheck(cfg);
  if (cfg.command == "jointspec") return runJointSpec(cfg);
  if (cfg.command == "resonances") return runResonances(cfg);
  if (cfg.command == "measures") return runMeasures(cfg);
  if (cfg.command == "mixing") return runMixing(cfg);
  return emitPlotData(cfg);
}

}  // namespace rt
