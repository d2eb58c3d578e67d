#include "rt/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

namespace rt {

namespace {

using json = nlohmann::json;

constexpr const char* kHashPrefix = "# config_hash=";

std::vector<std::string> splitFields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> splitLines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

double parseNumber(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(fmt::format("line {}: cannot parse '{}' as a number in column '{}'", line, s, column));
  return v;
}

json lambdaJson(const CoForm& l) {
  json a = json::array();
  for (Eigen::Index j = 0; j < l.size(); ++j) a.push_back({l[j].real(), l[j].imag()});
  return a;
}

json windowJson(const Window& w) {
  return json{{"beta", w.beta},     {"betaTheory", w.betaTheory},
              {"betaEmpirical", std::isfinite(w.betaEmpirical) ? json(w.betaEmpirical) : json(nullptr)},
              {"cX", w.cX},         {"cL2", w.cL2},
              {"K", w.K},           {"N", w.N},
              {"A0", std::vector<double>(w.A0.data(), w.A0.data() + w.A0.size())}};
}

json resonanceJson(const Resonance& r) {
  return json{{"lambda", lambdaJson(r.lambda)},          {"multiplicity", r.multiplicity},
              {"cohomology", r.cohomology},              {"residualKernel", r.residualKernel},
              {"residualF", r.residualF},                {"status", r.status}};
}

}  // namespace

std::string formatDouble(double x) { return fmt::format("{:.17g}", x); }

std::string hashLine(const std::string& hash) { return std::string(kHashPrefix) + hash + "\n"; }

std::string resonanceCsvHeader(int kappa) {
  std::string h;
  for (int j = 1; j <= kappa; ++j) h += fmt::format("re_lambda_{0},im_lambda_{0},", j);
  return h + "residual_kernel,residual_F,status";
}

std::string resonanceCsv(const std::vector<Resonance>& rs, int kappa, const std::string& hash) {
  std::string out = hashLine(hash) + resonanceCsvHeader(kappa) + "\n";
  for (const auto& r : rs) {
    if (r.lambda.size() != kappa) throw Error("resonance has the wrong number of coordinates");
    for (int j = 0; j < kappa; ++j) out += formatDouble(r.lambda[j].real()) + "," + formatDouble(r.lambda[j].imag()) + ",";
    out += formatDouble(r.residualKernel) + "," + formatDouble(r.residualF) + "," + r.status + "\n";
  }
  return out;
}

ResonanceTable parseResonanceCsv(const std::string& text) {
  ResonanceTable t;
  std::vector<std::string> columns;
  const auto lines = splitLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineNo = i + 1;
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind(kHashPrefix, 0) == 0) t.hash = line.substr(std::string(kHashPrefix).size());
      continue;
    }
    const auto fields = splitFields(line);
    if (columns.empty()) {
      if (fields.size() < 5 || (fields.size() - 3) % 2 != 0)
        throw Error(fmt::format("line {}: malformed header '{}'", lineNo, line));
      const int kappa = static_cast<int>((fields.size() - 3) / 2);
      if (line != resonanceCsvHeader(kappa))
        throw Error(fmt::format("line {}: expected header '{}'", lineNo, resonanceCsvHeader(kappa)));
      t.kappa = kappa;
      columns = fields;
      continue;
    }
    if (fields.size() != columns.size())
      throw Error(fmt::format("line {}: expected {} fields, got {}", lineNo, columns.size(), fields.size()));
    ResonanceRow row;
    row.lambda.resize(t.kappa);
    for (int j = 0; j < t.kappa; ++j)
      row.lambda[j] = cd(parseNumber(fields[2 * j], lineNo, columns[2 * j]),
                         parseNumber(fields[2 * j + 1], lineNo, columns[2 * j + 1]));
    row.residualKernel = parseNumber(fields[2 * t.kappa], lineNo, columns[2 * t.kappa]);
    row.residualF = parseNumber(fields[2 * t.kappa + 1], lineNo, columns[2 * t.kappa + 1]);
    row.status = fields.back();
    if (row.status.empty()) throw Error(fmt::format("line {}: empty status", lineNo));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string plotData(const ResonanceTable& table, const RVec& A0, const std::string& hash) {
  const int kappa = static_cast<int>(A0.size());
  if (table.kappa != 0 && table.kappa != kappa)
    throw Error(fmt::format("resonance table has kappa = {} but A0 has {} entries", table.kappa, kappa));
  std::string out = hashLine(hash) + "re_lambda_A0";
  for (int j = 1; j <= kappa; ++j) out += fmt::format(",im_lambda_{}", j);
  out += ",status\n";
  for (const auto& r : table.rows) {
    double re = 0.0;
    for (int j = 0; j < kappa; ++j) re += A0[j] * r.lambda[j].real();
    out += formatDouble(re);
    for (int j = 0; j < kappa; ++j) out += "," + formatDouble(r.lambda[j].imag());
    out += "," + r.status + "\n";
  }
  return out;
}

std::string jointSpectrumJson(const JointSpectrum& s, double commDefect, const std::string& hash) {
  json records = json::array();
  for (const auto& e : s.eigenvalues)
    records.push_back({{"lambda", lambdaJson(e.lambda)},
                       {"algMult", e.algMult},
                       {"geomMult", e.geomMult},
                       {"jordanOrder", e.jordanOrder},
                       {"residual", e.residual}});
  return json{{"config_hash", hash}, {"commDefect", commDefect}, {"records", records}, {"warnings", s.warnings}}
             .dump(2) +
         "\n";
}

std::string provenanceJson(const Provenance& p, const std::vector<Resonance>& rs, const std::vector<std::string>& notes,
                           const std::string& hash) {
  json res = json::array();
  for (const auto& r : rs) res.push_back(resonanceJson(r));
  return json{{"config_hash", hash},
              {"model", p.model},
              {"K", p.K},
              {"N", p.N},
              {"coneAngles", {p.cones.stable, p.cones.unstable}},
              {"seed", p.seed},
              {"window", windowJson(p.window)},
              {"resonances", res},
              {"notes", notes}}
             .dump(2) +
         "\n";
}

std::string correlationCsv(const std::vector<CorrelationSeries>& cs, const std::string& hash) {
  std::string out = hashLine(hash) + "series,t,re,im,abs,stderr\n";
  for (std::size_t s = 0; s < cs.size(); ++s)
    for (std::size_t k = 0; k < cs[s].t.size(); ++k) {
      const cd v = cs[s].values[k];
      out += fmt::format("{},{},{},{},{},{}\n", s, formatDouble(cs[s].t[k]), formatDouble(v.real()),
                         formatDouble(v.imag()), formatDouble(std::abs(v)), formatDouble(cs[s].stderr_[k]));
    }
  return out;
}

std::string estimateCsv(const std::vector<EstimateRow>& rows, const std::string& hash) {
  std::string out = hashLine(hash) + "label,estimator,re,im,stderr,samples,ref_re,ref_im\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},", r.label, r.estimator, formatDouble(r.estimate.value.real()),
                       formatDouble(r.estimate.value.imag()), formatDouble(r.estimate.stderr_), r.estimate.samples);
    out += r.hasReference ? formatDouble(r.reference.real()) + "," + formatDouble(r.reference.imag()) : std::string(",");
    out += "\n";
  }
  return out;
}

std::string mixingJson(const MixingVerdict& v, const std::vector<Resonance>& axisScan, const std::string& hash) {
  json w = json::array(), scan = json::array();
  for (const auto& r : v.witnesses) w.push_back(resonanceJson(r));
  for (const auto& r : axisScan) scan.push_back(resonanceJson(r));
  json decay = json::array();
  for (double t : v.decayTimes) decay.push_back(t >= 0 ? json(t) : json(nullptr));
  return json{{"config_hash", hash},      {"verdict", v.verdict},     {"uniqueMeasure", v.uniqueMeasure},
              {"witnesses", w},           {"decayTimes", decay},      {"diagnostics", v.diagnostics},
              {"resonances", scan}}
             .dump(2) +
         "\n";
}

std::string suitesJson(const std::vector<SuiteReport>& reports, const std::string& hash) {
  json arr = json::array();
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.passed();
    arr.push_back({{"name", r.name},
                   {"passed", r.passed()},
                   {"cases", r.cases},
                   {"failures", r.failures},
                   {"worst", r.worst},
                   {"threshold", r.threshold},
                   {"worstCase", r.worstCase},
                   {"diagnostics", r.diagnostics}});
  }
  return json{{"config_hash", hash}, {"passed", all}, {"suites", arr}}.dump(2) + "\n";
}

void writeFile(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(fmt::format("cannot create '{}': {}", dir, ec.message()));
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rt
