#include "rt/config.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "rt/koszul.hpp"

namespace rt {

namespace {

using json = nlohmann::json;

const std::set<std::string> kCommands{"check", "jointspec", "resonances", "measures", "mixing", "plotdata"};
const std::set<std::string> kModels{"arnold", "arnold-product", "cartan-t3"};

[[noreturn]] void configError(const std::string& path, const std::string& what) {
  throw Error(fmt::format("config error at '{}': {}", path, what));
}

// Reads the keys of one JSON object, remembering which ones were used.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) configError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void get(const char* key, double& out) {
    if (auto* v = find(key)) {
      if (!v->is_number()) configError(at(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) configError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::size_t& out) {
    if (auto* v = find(key)) {
      if (v->is_number_unsigned()) {
        out = v->get<std::size_t>();
      } else if (v->is_number_float() && v->get<double>() >= 0 && v->get<double>() == std::floor(v->get<double>())) {
        out = static_cast<std::size_t>(v->get<double>());  // 1e5 style literals
      } else {
        configError(at(key), "expected a non-negative integer");
      }
    }
  }
  void get(const char* key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) configError(at(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) configError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void get(const char* key, std::vector<T>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) configError(at(key), "expected an array");
      out.clear();
      for (const auto& e : *v) {
        if constexpr (std::is_integral_v<T>) {
          if (!e.is_number_integer()) configError(at(key), "expected integers");
        } else {
          if (!e.is_number()) configError(at(key), "expected numbers");
        }
        out.push_back(e.get<T>());
      }
    }
  }

  template <class F>
  void object(const char* key, F&& f) {
    if (auto* v = find(key)) {
      Reader r(*v, at(key));
      f(r);
      r.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) configError(at(it.key().c_str()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Mat readMatrix(const json& j, const std::string& path) {
  Reader r(j, path);
  int rows = -1, cols = -1;
  std::vector<double> re, im;
  r.get("rows", rows);
  r.get("cols", cols);
  r.get("re", re);
  r.get("im", im);
  r.finish();
  if (rows <= 0 || cols <= 0) configError(path, "rows and cols must be positive");
  const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (re.size() != n) configError(path + ".re", fmt::format("expected {} entries, got {}", n, re.size()));
  if (!im.empty() && im.size() != n) configError(path + ".im", fmt::format("expected {} entries, got {}", n, im.size()));
  Mat M(rows, cols);
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b) {
      const std::size_t k = static_cast<std::size_t>(a) * cols + b;
      M(a, b) = cd(re[k], im.empty() ? 0.0 : im[k]);
    }
  return M;
}

json matrixJson(const Mat& M) {
  std::vector<double> re, im;
  for (Eigen::Index a = 0; a < M.rows(); ++a)
    for (Eigen::Index b = 0; b < M.cols(); ++b) {
      re.push_back(M(a, b).real());
      im.push_back(M(a, b).imag());
    }
  return json{{"rows", M.rows()}, {"cols", M.cols()}, {"re", re}, {"im", im}};
}

json toJson(const ExperimentConfig& c) {
  const auto& s = c.galerkin.search;
  json matrices = json::array();
  for (const auto& M : c.jointspec.matrices) matrices.push_back(matrixJson(M));
  return json{
      {"command", c.command},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"model",
       {{"name", c.model.name},
        {"epsilon", c.model.epsilon},
        {"mode", c.model.mode},
        {"variableFactor", c.model.variableFactor},
        {"A0", c.model.A0}}},
      {"galerkin",
       {{"K", c.galerkin.K},
        {"N", c.galerkin.N},
        {"depth", c.galerkin.depth},
        {"cones", {{"stable", c.galerkin.cones.stable}, {"unstable", c.galerkin.cones.unstable}}},
        {"search",
         {{"imMax", s.imMax},
          {"reMax", s.reMax},
          {"gridStep", s.gridStep},
          {"stabilityTol", s.stabilityTol},
          {"refineK", s.refineK},
          {"denseK", s.denseK},
          {"detectTol", s.detect.tol},
          {"maxSteps", s.detect.maxSteps},
          {"mergeTol", s.detect.mergeTol}}}}},
      {"measures",
       {{"nSamples", c.measures.nSamples},
        {"T", c.measures.T},
        {"coneHalfAngle", c.measures.coneHalfAngle},
        {"pairs", c.measures.pairs},
        {"cesaroSteps", c.measures.cesaroSteps},
        {"profile",
         {{"family", c.measures.profile.family},
          {"center", c.measures.profile.center},
          {"width", c.measures.profile.width}}}}},
      {"mixing",
       {{"tMax", c.mixing.tMax},
        {"tStep", c.mixing.tStep},
        {"axisTol", c.mixing.axisTol}}},
      {"check",
       {{"identityCases", c.check.identityCases},
        {"spectrumCases", c.check.spectrumCases},
        {"rigidityCases", c.check.rigidityCases},
        {"maxKappa", c.check.maxKappa},
        {"injectNonCommuting", c.check.injectNonCommuting}}},
      {"jointspec",
       {{"matrices", matrices},
        {"generate", c.jointspec.generate},
        {"dim", c.jointspec.dim},
        {"kappa", c.jointspec.kappa}}},
      {"tolerances",
       {{"rank", c.tolerances.rank},
        {"comm", c.tolerances.comm},
        {"jointspec", c.tolerances.jointspec},
        {"cluster", c.tolerances.cluster}}},
      {"input", c.input},
      {"outDir", c.outDir},
      {"threads", c.threads},
  };
}

}  // namespace

bool isStochastic(const ExperimentConfig& cfg) {
  return cfg.command == "check" || cfg.command == "measures" || cfg.command == "mixing" ||
         (cfg.command == "jointspec" && cfg.jointspec.matrices.empty());
}

ExperimentConfig parseConfig(const std::string& jsonText) {
  json root;
  try {
    root = json::parse(jsonText);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("config error: invalid JSON ({})", e.what()));
  }
  ExperimentConfig c;
  Reader r(root, "");
  r.get("command", c.command);
  if (auto* v = r.find("seed")) {
    if (!v->is_null()) {
      if (!v->is_number_unsigned()) configError("seed", "expected a non-negative integer");
      c.seed = v->get<std::uint64_t>();
    }
  }
  r.object("model", [&](Reader& m) {
    m.get("name", c.model.name);
    m.get("epsilon", c.model.epsilon);
    m.get("mode", c.model.mode);
    m.get("variableFactor", c.model.variableFactor);
    m.get("A0", c.model.A0);
  });
  r.object("galerkin", [&](Reader& g) {
    g.get("K", c.galerkin.K);
    g.get("N", c.galerkin.N);
    g.get("depth", c.galerkin.depth);
    g.object("cones", [&](Reader& k) {
      k.get("stable", c.galerkin.cones.stable);
      k.get("unstable", c.galerkin.cones.unstable);
    });
    g.object("search", [&](Reader& s) {
      auto& q = c.galerkin.search;
      s.get("imMax", q.imMax);
      s.get("reMax", q.reMax);
      s.get("gridStep", q.gridStep);
      s.get("stabilityTol", q.stabilityTol);
      s.get("refineK", q.refineK);
      s.get("denseK", q.denseK);
      s.get("detectTol", q.detect.tol);
      s.get("maxSteps", q.detect.maxSteps);
      s.get("mergeTol", q.detect.mergeTol);
    });
  });
  r.object("measures", [&](Reader& m) {
    m.get("nSamples", c.measures.nSamples);
    m.get("T", c.measures.T);
    m.get("coneHalfAngle", c.measures.coneHalfAngle);
    m.get("pairs", c.measures.pairs);
    m.get("cesaroSteps", c.measures.cesaroSteps);
    m.object("profile", [&](Reader& p) {
      p.get("family", c.measures.profile.family);
      p.get("center", c.measures.profile.center);
      p.get("width", c.measures.profile.width);
    });
  });
  r.object("mixing", [&](Reader& m) {
    m.get("tMax", c.mixing.tMax);
    m.get("tStep", c.mixing.tStep);
    m.get("axisTol", c.mixing.axisTol);
  });
  r.object("check", [&](Reader& k) {
    k.get("identityCases", c.check.identityCases);
    k.get("spectrumCases", c.check.spectrumCases);
    k.get("rigidityCases", c.check.rigidityCases);
    k.get("maxKappa", c.check.maxKappa);
    k.get("injectNonCommuting", c.check.injectNonCommuting);
  });
  r.object("jointspec", [&](Reader& j) {
    if (auto* v = j.find("matrices")) {
      if (!v->is_array()) configError(j.at("matrices"), "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i)
        c.jointspec.matrices.push_back(readMatrix((*v)[i], fmt::format("{}[{}]", j.at("matrices"), i)));
    }
    j.get("generate", c.jointspec.generate);
    j.get("dim", c.jointspec.dim);
    j.get("kappa", c.jointspec.kappa);
  });
  r.object("tolerances", [&](Reader& t) {
    t.get("rank", c.tolerances.rank);
    t.get("comm", c.tolerances.comm);
    t.get("jointspec", c.tolerances.jointspec);
    t.get("cluster", c.tolerances.cluster);
  });
  r.get("input", c.input);
  r.get("outDir", c.outDir);
  r.get("threads", c.threads);
  r.finish();
  return c;
}

ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("config error: cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str());
}

void validateConfig(const ExperimentConfig& c) {
  if (!kCommands.count(c.command)) configError("command", fmt::format("unknown command '{}'", c.command));
  if (isStochastic(c) && !c.seed) configError("seed", "a seed is required for this command");
  if (c.threads < 0) configError("threads", "must be non-negative");
  for (const auto& [key, v] :
       {std::pair{"tolerances.rank", c.tolerances.rank}, std::pair{"tolerances.comm", c.tolerances.comm},
        std::pair{"tolerances.jointspec", c.tolerances.jointspec}, std::pair{"tolerances.cluster", c.tolerances.cluster}})
    if (!(v > 0)) configError(key, "must be positive");

  if (c.command == "plotdata") {
    if (c.input.empty()) configError("input", "plotdata needs a resonance CSV");
  }
  if (c.command == "jointspec") {
    const auto& j = c.jointspec;
    if (j.matrices.empty()) {
      if (j.generate != "jordan" && j.generate != "polynomial" && j.generate != "hermitian")
        configError("jointspec.generate", fmt::format("unknown family '{}'", j.generate));
      if (j.dim < 1 || j.dim > 64) configError("jointspec.dim", "must lie in [1, 64]");
      if (j.kappa < 1 || j.kappa > kMaxKappa) configError("jointspec.kappa", fmt::format("must lie in [1, {}]", kMaxKappa));
    } else {
      if (static_cast<int>(j.matrices.size()) > kMaxKappa)
        configError("jointspec.matrices", fmt::format("at most {} generators", kMaxKappa));
      const auto n = j.matrices.front().rows();
      for (const auto& M : j.matrices)
        if (M.rows() != n || M.cols() != n) configError("jointspec.matrices", "matrices must be square of equal size");
    }
  }
  if (c.command == "resonances" || c.command == "measures" || c.command == "mixing") {
    if (!kModels.count(c.model.name)) configError("model.name", fmt::format("unknown model '{}'", c.model.name));
    if (c.model.epsilon < 0 || c.model.epsilon >= 1) configError("model.epsilon", "must lie in [0, 1)");
  }
  if (c.command == "resonances" || c.command == "mixing") {
    const auto& g = c.galerkin;
    const int dim = c.model.name == "cartan-t3" ? 3 : 2;
    if (g.K < 1) configError("galerkin.K", "must be positive");
    if (g.K > truncationCeiling(dim))
      configError("galerkin.K", fmt::format("K = {} exceeds the ceiling {} for a factor of dimension {}", g.K,
                                            truncationCeiling(dim), dim));
    if (g.N < 0) configError("galerkin.N", "must be non-negative");
    if (!(g.depth > 0)) configError("galerkin.depth", "must be positive");
    if (!(g.cones.stable > 0 && g.cones.unstable > 0 && g.cones.stable + g.cones.unstable < std::numbers::pi / 2))
      configError("galerkin.cones", "angles must be positive with sum below pi/2");
    if (!(g.search.gridStep > 0) || !(g.search.imMax >= 0)) configError("galerkin.search", "invalid grid");
  }
  if (c.command == "measures") {
    const auto& m = c.measures;
    if (m.nSamples == 0) configError("measures.nSamples", "must be positive");
    if (!(m.T > 0)) configError("measures.T", "must be positive");
    if (!(m.coneHalfAngle > 0 && m.coneHalfAngle < std::numbers::pi / 2))
      configError("measures.coneHalfAngle", "must lie in (0, pi/2)");
    if (m.pairs < 1) configError("measures.pairs", "must be positive");
    if (m.cesaroSteps < 1) configError("measures.cesaroSteps", "must be positive");
  }
  if (c.command == "mixing") {
    if (!(c.mixing.tStep > 0) || !(c.mixing.tMax > 0)) configError("mixing", "time grid must be positive");
  }
}

std::string canonicalConfig(const ExperimentConfig& cfg) { return toJson(cfg).dump(); }

std::string configHash(const ExperimentConfig& cfg) {
  // Where the files go and how many threads run does not change their content.
  json j = toJson(cfg);
  j.erase("outDir");
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

SuspensionModel buildModel(const ModelConfig& mc) {
  ModelParams p;
  p.epsilon = mc.epsilon;
  p.variableFactor = mc.variableFactor;
  if (!mc.mode.empty()) p.mode = Eigen::Map<const IVec>(mc.mode.data(), static_cast<Eigen::Index>(mc.mode.size()));
  auto m = modelByName(mc.name, p);
  if (!mc.A0.empty()) {
    if (static_cast<int>(mc.A0.size()) != m.kappa)
      throw Error(fmt::format("config error at 'model.A0': expected {} entries", m.kappa));
    m = recalibrate(m, Eigen::Map<const RVec>(mc.A0.data(), static_cast<Eigen::Index>(mc.A0.size())));
  }
  return m;
}

CutoffProfile buildProfile(const ProfileConfig& pc) {
  return makeProfile(parseProfileFamily(pc.family), pc.center, pc.width);
}

}  // namespace rt
