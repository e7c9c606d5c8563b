#include "entlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "entlab/error.hpp"
#include "entlab/rng.hpp"

namespace entlab {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  fail(ErrorCode::ValidationError, (path.empty() ? std::string("/") : path) + ": " + what);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
  }
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) invalid(path + "/" + key, "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) invalid(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(path, "expected a finite number");
  return x;
}

std::int64_t integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) invalid(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto x = integer(v, path);
  if (x < 0) invalid(path, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(x);
}

std::string text_of(const json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

Complex complex_of(const json& v, const std::string& path) {
  if (v.is_number()) return {number(v, path), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], path + "/0"), number(v[1], path + "/1")};
  invalid(path, "expected a number or a [re, im] pair");
}

ComplexMatrix matrix_of(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) invalid(path, "expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array() || v[0].empty()) invalid(path + "/0", "expected a nonempty row");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string row_path = path + "/" + std::to_string(i);
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) invalid(row_path, "rows differ in length");
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = complex_of(row[static_cast<std::size_t>(j)], row_path + "/" + std::to_string(j));
    }
  }
  if (rows != cols) invalid(path, "matrix must be square");
  return m;
}

std::vector<Rational> fractions(const json& v, const std::string& path, std::vector<std::string>& warnings) {
  if (!v.is_array()) invalid(path, "expected an array of \"p/q\" strings");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    const std::string s = text_of(v[i], p);
    ParsedFraction f;
    try {
      f = parse_fraction(s);
    } catch (const Error& e) {
      invalid(p, e.what());
    }
    if (f.was_reduced) warnings.push_back(p + ": \"" + s + "\" normalized to \"" + f.value.str() + "\"");
    out.push_back(f.value);
  }
  return out;
}

std::vector<Complex> complex_list(const json& v, const std::string& path) {
  if (!v.is_array()) invalid(path, "expected an array");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(complex_of(v[i], path + "/" + std::to_string(i)));
  return out;
}

BasisSpec basis_of(const json& obj, const std::string& path, std::uint64_t default_seed) {
  BasisSpec b = BasisSpec::orthonormal(default_seed);
  if (obj.contains("basis")) {
    const std::string kind = text_of(obj["basis"], path + "/basis");
    if (kind == "orthonormal") {
      b.kind = BasisSpec::Kind::Orthonormal;
    } else if (kind == "random-similarity") {
      b.kind = BasisSpec::Kind::RandomSimilarity;
    } else {
      invalid(path + "/basis", "expected \"orthonormal\" or \"random-similarity\"");
    }
  }
  if (obj.contains("seed")) b.seed = unsigned_integer(obj["seed"], path + "/seed");
  if (obj.contains("condition_cap")) {
    b.condition_cap = number(obj["condition_cap"], path + "/condition_cap");
    if (b.condition_cap < 1.0) invalid(path + "/condition_cap", "must be at least 1");
  }
  return b;
}

OperatorConfig operator_of(const json& v, const std::string& path, bool continuous, std::uint64_t default_seed,
                           std::vector<std::string>& warnings) {
  if (!v.is_object()) invalid(path, "expected an object");
  OperatorConfig op;
  const char* spectrum_key = continuous ? "frequencies" : "angles";
  const char* matrix_key = continuous ? "generator" : "matrix";
  if (continuous) {
    allow_keys(v, path, {"dim", "frequencies", "stable", "basis", "seed", "condition_cap", "generator"});
  } else {
    allow_keys(v, path, {"dim", "angles", "stable", "basis", "seed", "condition_cap", "matrix", "haar"});
  }
  if (v.contains(matrix_key)) {
    if (v.contains(spectrum_key) || v.contains("stable")) {
      invalid(path, std::string("give either \"") + matrix_key + "\" or a spectrum, not both");
    }
    op.source = OperatorConfig::Source::Matrix;
    op.matrix = matrix_of(v[matrix_key], path + "/" + matrix_key);
    op.dim = static_cast<int>(op.matrix.rows());
    return op;
  }
  op.basis = basis_of(v, path, default_seed);
  if (v.contains("haar")) {
    if (!v["haar"].is_boolean()) invalid(path + "/haar", "expected true or false");
    if (v["haar"].get<bool>()) {
      op.source = OperatorConfig::Source::Haar;
      if (!v.contains("dim")) invalid(path + "/dim", "a Haar unitary needs a dimension");
      op.dim = static_cast<int>(integer(v["dim"], path + "/dim"));
      if (op.dim < 1 || op.dim > kMaxEigDim) invalid(path + "/dim", "dimension out of range");
      return op;
    }
  }
  if (v.contains(spectrum_key)) op.angles = fractions(v[spectrum_key], path + "/" + spectrum_key, warnings);
  if (v.contains("stable")) op.stable = complex_list(v["stable"], path + "/stable");
  const auto count = static_cast<int>(op.angles.size() + op.stable.size());
  if (count == 0) invalid(path, std::string("needs \"") + spectrum_key + "\", \"stable\" or \"" + matrix_key + "\"");
  op.dim = count;
  if (v.contains("dim") && integer(v["dim"], path + "/dim") != count) {
    invalid(path + "/dim", "does not match the number of eigenvalues given");
  }
  if (count > kMaxEigDim) invalid(path + "/dim", "dimension out of range");
  for (std::size_t i = 0; i < op.stable.size(); ++i) {
    const std::string p = path + "/stable/" + std::to_string(i);
    if (continuous && !(op.stable[i].real() < 0.0)) invalid(p, "stable generator eigenvalues need Re < 0");
    if (!continuous && !(std::abs(op.stable[i]) < 1.0)) invalid(p, "stable eigenvalues need |lambda| < 1");
  }
  return op;
}

ConnectingConfig connecting_of(const json& v, const std::string& path, std::uint64_t default_seed) {
  ConnectingConfig c;
  c.seed = default_seed;
  if (v.is_string()) {
    if (v.get<std::string>() != "identity") invalid(path, "expected \"identity\", {\"random\": ...} or {\"matrix\": ...}");
    return c;
  }
  if (!v.is_object()) invalid(path, "expected \"identity\", {\"random\": ...} or {\"matrix\": ...}");
  allow_keys(v, path, {"random", "matrix"});
  if (v.contains("matrix") == v.contains("random")) invalid(path, "give exactly one of \"random\" and \"matrix\"");
  if (v.contains("matrix")) {
    c.kind = ConnectingConfig::Kind::Matrix;
    c.matrix = matrix_of(v["matrix"], path + "/matrix");
    return c;
  }
  c.kind = ConnectingConfig::Kind::Random;
  const json& r = v["random"];
  const std::string rp = path + "/random";
  if (!r.is_object()) invalid(rp, "expected an object");
  allow_keys(r, rp, {"seed", "scale"});
  if (r.contains("seed")) c.seed = unsigned_integer(r["seed"], rp + "/seed");
  if (r.contains("scale")) {
    c.scale = number(r["scale"], rp + "/scale");
    if (!(c.scale > 0.0)) invalid(rp + "/scale", "must be positive");
  }
  return c;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_of(json doc) {
  doc.erase("output");
  doc.erase("format");
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::Limit: return "limit";
    case ExperimentKind::Resonances: return "resonances";
    case ExperimentKind::Counterexample: return "counterexample";
    case ExperimentKind::Continuous: return "continuous";
    case ExperimentKind::StackingTest: return "stacking-test";
  }
  return "converge";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) noexcept {
  for (auto k : {ExperimentKind::Converge, ExperimentKind::Limit, ExperimentKind::Resonances,
                 ExperimentKind::Counterexample, ExperimentKind::Continuous, ExperimentKind::StackingTest}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string config_hash(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) fail(ErrorCode::ValidationError, "/: the document must be an object");
  return hash_of(doc);
}

ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind) {
  const json doc = parse_json(text);
  if (!doc.is_object()) invalid("", "the document must be an object");
  allow_keys(doc, "", {"kind", "seed", "partition", "operators", "connecting", "schedule", "strategy", "tolerances",
                       "budget", "threads", "quadrature", "window", "output", "format"});

  ExperimentConfig c;
  c.config_hash = hash_of(doc);

  if (doc.contains("kind")) {
    const auto k = parse_kind(text_of(doc["kind"], "/kind"));
    if (!k) invalid("/kind", "unknown experiment kind");
    c.kind = *k;
    if (kind && *kind != *k) {
      c.warnings.push_back("/kind: '" + std::string(to_string(*k)) + "' overridden by '" +
                           std::string(to_string(*kind)) + "'");
      c.kind = *kind;
    }
  } else if (kind) {
    c.kind = *kind;
  } else {
    invalid("/kind", "missing");
  }
  const bool continuous = c.kind == ExperimentKind::Continuous;

  if (doc.contains("seed")) c.seed = unsigned_integer(doc["seed"], "/seed");
  if (doc.contains("threads")) {
    c.threads = static_cast<int>(integer(doc["threads"], "/threads"));
    if (c.threads < 1) invalid("/threads", "must be at least 1");
  }
  if (doc.contains("budget")) {
    c.budget = number(doc["budget"], "/budget");
    if (!(c.budget > 0.0)) invalid("/budget", "must be positive");
  }
  if (doc.contains("strategy")) {
    try {
      c.strategy = parse_strategy(text_of(doc["strategy"], "/strategy"));
    } catch (const Error& e) {
      invalid("/strategy", e.what());
    }
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) invalid("/tolerances", "expected an object");
    allow_keys(t, "/tolerances", {"resonance"});
    if (t.contains("resonance")) {
      c.resonance_tol = number(t["resonance"], "/tolerances/resonance");
      if (!(c.resonance_tol > 0.0)) invalid("/tolerances/resonance", "must be positive");
    }
  }
  if (doc.contains("window")) {
    c.window = static_cast<int>(integer(doc["window"], "/window"));
    if (c.window < 8 || c.window > 2000) invalid("/window", "must lie in [8, 2000]");
  }
  if (doc.contains("output")) c.output = text_of(doc["output"], "/output");
  if (doc.contains("format")) {
    const std::string f = text_of(doc["format"], "/format");
    if (f == "csv") {
      c.format = OutputFormat::Csv;
    } else if (f == "json") {
      c.format = OutputFormat::Json;
    } else {
      invalid("/format", "expected \"csv\" or \"json\"");
    }
  }
  if (doc.contains("quadrature")) {
    const json& q = doc["quadrature"];
    if (!q.is_object()) invalid("/quadrature", "expected an object");
    allow_keys(q, "/quadrature", {"scheme", "points", "nodes_per_period", "min_points"});
    if (q.contains("scheme")) {
      const std::string s = text_of(q["scheme"], "/quadrature/scheme");
      if (s == "midpoint") {
        c.quadrature.scheme = QuadratureSpec::Scheme::Midpoint;
      } else if (s == "gauss-legendre") {
        c.quadrature.scheme = QuadratureSpec::Scheme::GaussLegendre;
      } else {
        invalid("/quadrature/scheme", "expected \"midpoint\" or \"gauss-legendre\"");
      }
    }
    if (q.contains("points")) {
      c.quadrature.points = static_cast<int>(integer(q["points"], "/quadrature/points"));
      if (*c.quadrature.points < 2) invalid("/quadrature/points", "must be at least 2");
    }
    if (q.contains("nodes_per_period")) {
      c.quadrature.nodes_per_period = number(q["nodes_per_period"], "/quadrature/nodes_per_period");
      if (!(c.quadrature.nodes_per_period > 0.0)) invalid("/quadrature/nodes_per_period", "must be positive");
    }
    if (q.contains("min_points")) {
      c.quadrature.min_points = static_cast<int>(integer(q["min_points"], "/quadrature/min_points"));
      if (c.quadrature.min_points < 2) invalid("/quadrature/min_points", "must be at least 2");
    }
  }

  if (c.kind == ExperimentKind::Counterexample) {
    if (doc.contains("operators") || doc.contains("partition") || doc.contains("connecting")) {
      c.warnings.push_back("/: operators, partition and connecting are ignored by counterexample runs");
    }
  } else {
    if (doc.contains("partition")) {
      const json& a = doc["partition"];
      if (!a.is_array()) invalid("/partition", "expected an array of block numbers");
      c.alpha.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        c.alpha.push_back(static_cast<int>(integer(a[i], "/partition/" + std::to_string(i))));
      }
    }
    try {
      (void)c.partition();
    } catch (const Error& e) {
      invalid("/partition", e.what());
    }
    const auto m = c.alpha.size();

    if (!doc.contains("operators")) invalid("/operators", "missing");
    const json& ops = doc["operators"];
    if (!ops.is_array() || ops.empty()) invalid("/operators", "expected a nonempty array");
    if (ops.size() != 1 && ops.size() != m) {
      invalid("/operators", "expected 1 or " + std::to_string(m) + " entries, got " + std::to_string(ops.size()));
    }
    std::vector<OperatorConfig> parsed;
    for (std::size_t j = 0; j < ops.size(); ++j) {
      parsed.push_back(operator_of(ops[j], "/operators/" + std::to_string(j), continuous, CounterRng::mix(c.seed, j),
                                   c.warnings));
    }
    for (std::size_t j = 0; j < m; ++j) c.operators.push_back(parsed[ops.size() == 1 ? 0 : j]);
    const int d = c.operators.front().dim;
    for (std::size_t j = 0; j < m; ++j) {
      if (c.operators[j].dim != d) {
        invalid("/operators/" + std::to_string(ops.size() == 1 ? 0 : j), "dimensions differ between positions");
      }
    }

    const json conn = doc.contains("connecting") ? doc["connecting"] : json("identity");
    if (conn.is_array()) {
      if (conn.size() != m - 1) {
        invalid("/connecting", "expected " + std::to_string(m - 1) + " entries, got " + std::to_string(conn.size()));
      }
      for (std::size_t j = 0; j + 1 < m; ++j) {
        c.connecting.push_back(connecting_of(conn[j], "/connecting/" + std::to_string(j), c.seed));
      }
    } else {
      const ConnectingConfig one = connecting_of(conn, "/connecting", c.seed);
      c.connecting.assign(m - 1, one);
    }
    for (std::size_t j = 0; j < c.connecting.size(); ++j) {
      if (c.connecting[j].kind == ConnectingConfig::Kind::Matrix && c.connecting[j].matrix.rows() != d) {
        invalid("/connecting", "connecting operator " + std::to_string(j + 1) + " has the wrong dimension");
      }
    }
  }

  const bool needs_schedule = c.kind == ExperimentKind::Converge || c.kind == ExperimentKind::Counterexample ||
                              c.kind == ExperimentKind::Continuous || c.kind == ExperimentKind::StackingTest;
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    if (!s.is_array() || s.empty()) invalid("/schedule", "expected a nonempty array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string p = "/schedule/" + std::to_string(i);
      const double x = continuous ? number(s[i], p) : static_cast<double>(integer(s[i], p));
      if (!(x > 0.0)) invalid(p, "checkpoints must be positive");
      if (!c.schedule.empty() && !(x > c.schedule.back())) invalid(p, "schedule must be strictly increasing");
      if (!continuous && x > 4.0e18) invalid(p, "checkpoint too large");
      if (!continuous && c.kind != ExperimentKind::Counterexample && x > 2.0e9) invalid(p, "checkpoint too large");
      c.schedule.push_back(x);
    }
  } else if (needs_schedule) {
    invalid("/schedule", "missing");
  }

  // Building the system validates every operator certificate.
  if (c.kind != ExperimentKind::Counterexample) {
    try {
      if (continuous) {
        (void)build_continuous_system(c);
      } else {
        (void)build_system(c);
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::BudgetExceeded:
        case ErrorCode::NonConvergence:
        case ErrorCode::Overflow:
        case ErrorCode::IllConditioned:
        case ErrorCode::SpectralFailure:
          throw;
        default:
          break;
      }
      invalid("/operators", e.what());
    }
  }
  return c;
}

namespace {

std::vector<ComplexMatrix> connecting_matrices(const ExperimentConfig& c, int d) {
  std::vector<ComplexMatrix> out;
  for (std::size_t j = 0; j < c.connecting.size(); ++j) {
    const auto& cc = c.connecting[j];
    switch (cc.kind) {
      case ConnectingConfig::Kind::Identity:
        out.push_back(ComplexMatrix::Identity(d, d));
        break;
      case ConnectingConfig::Kind::Matrix:
        out.push_back(cc.matrix);
        break;
      case ConnectingConfig::Kind::Random: {
        const double scale = cc.scale > 0.0 ? cc.scale : 1.0 / std::sqrt(static_cast<double>(d));
        out.push_back(gaussian_matrix(d, d, CounterRng::mix(cc.seed, j), scale));
        break;
      }
    }
  }
  return out;
}

}  // namespace

EntangledSystem build_system(const ExperimentConfig& c) {
  std::vector<SpectralOperator> ops;
  for (const auto& o : c.operators) {
    switch (o.source) {
      case OperatorConfig::Source::Matrix:
        ops.push_back(SpectralOperator::from_matrix(o.matrix));
        break;
      case OperatorConfig::Source::Haar:
        ops.push_back(SpectralOperator::from_matrix(haar_unitary(o.dim, o.basis.seed)));
        break;
      case OperatorConfig::Source::Synth:
        ops.push_back(synth_operator(o.angles, o.stable, o.basis));
        break;
    }
  }
  const int d = ops.front().dim();
  return EntangledSystem(c.partition(), std::move(ops), connecting_matrices(c, d));
}

ContinuousSystem build_continuous_system(const ExperimentConfig& c) {
  std::vector<Semigroup> gs;
  for (const auto& o : c.operators) {
    if (o.source == OperatorConfig::Source::Matrix) {
      gs.push_back(Semigroup::from_generator(o.matrix));
    } else {
      gs.push_back(synth_semigroup(o.angles, o.stable, o.basis));
    }
  }
  const int d = gs.front().dim();
  return ContinuousSystem(c.partition(), std::move(gs), connecting_matrices(c, d));
}

}  // namespace entlab
