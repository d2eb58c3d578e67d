#pragma once

#include <string>
#include <vector>

#include "rt/galerkin.hpp"
#include "rt/jointspec.hpp"
#include "rt/measures.hpp"
#include "rt/parametrix.hpp"
#include "rt/suites.hpp"

namespace rt {

/// 17 significant digits: round-trips every double.
std::string formatDouble(double x);

/// First line of every CSV output.
std::string hashLine(const std::string& hash);

/// re_lambda_1,im_lambda_1,...,residual_kernel,residual_F,status
std::string resonanceCsvHeader(int kappa);
std::string resonanceCsv(const std::vector<Resonance>& rs, int kappa, const std::string& hash);

struct ResonanceRow {
  CoForm lambda;
  double residualKernel = 0.0;
  double residualF = 0.0;
  std::string status;
};

struct ResonanceTable {
  int kappa = 0;  // 0 when the input had no header
  std::vector<ResonanceRow> rows;
  std::string hash;  // from a "# config_hash=" line, if any
};

/// Parses resonanceCsv output; '#' lines are comments. Errors name the line number.
ResonanceTable parseResonanceCsv(const std::string& text);

/**
 * Scatter data for plotting: Re lambda(A0) against the imaginary coordinates.
 * Empty input yields the header only (kappa taken from A0).
 */
std::string plotData(const ResonanceTable& table, const RVec& A0, const std::string& hash);

/// {config_hash, records: [{lambda: [[re, im], ...], algMult, geomMult, jordanOrder, residual}], warnings}
std::string jointSpectrumJson(const JointSpectrum& s, double commDefect, const std::string& hash);

/// Provenance of a resonance run with the cohomology of every accepted resonance.
std::string provenanceJson(const Provenance& p, const std::vector<Resonance>& rs, const std::vector<std::string>& notes,
                           const std::string& hash);

/// series,t,re,im,abs,stderr (one block per series).
std::string correlationCsv(const std::vector<CorrelationSeries>& cs, const std::string& hash);

struct EstimateRow {
  std::string label;
  std::string estimator;
  Estimate estimate;
  cd reference = 0.0;
  bool hasReference = false;
};

/// label,estimator,re,im,stderr,samples,ref_re,ref_im
std::string estimateCsv(const std::vector<EstimateRow>& rows, const std::string& hash);

std::string mixingJson(const MixingVerdict& v, const std::vector<Resonance>& axisScan, const std::string& hash);

/// Timings are left out so that identical configs give identical files.
std::string suitesJson(const std::vector<SuiteReport>& reports, const std::string& hash);

/// Writes text to dir/name, creating dir; throws on I/O failure.
void writeFile(const std::string& dir, const std::string& name, const std::string& text);

std::string readFile(const std::string& path);

}  // namespace rt
