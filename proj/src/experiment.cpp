#include "entlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "entlab/error.hpp"
#include "entlab/shiftlab.hpp"
#include "entlab/spectral_limit.hpp"

namespace entlab {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ContractionOptions contraction_of(const ExperimentConfig& c) {
  ContractionOptions o;
  o.budget = c.budget;
  o.threads = c.threads;
  return o;
}

ResultRecord record(const ExperimentConfig& c, double checkpoint, double fro, double op, double ms,
                    std::string strategy) {
  return {checkpoint, fro, op, ms, std::move(strategy), c.seed, c.config_hash};
}

json matrix_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

json base_summary(const ExperimentConfig& c, std::initializer_list<const char*> theorems) {
  json s;
  s["kind"] = std::string(to_string(c.kind));
  s["theorems"] = json::array();
  for (const char* t : theorems) s["theorems"].push_back(t);
  s["seed"] = c.seed;
  s["config_hash"] = c.config_hash;
  s["warnings"] = c.warnings;
  if (!c.alpha.empty() && c.kind != ExperimentKind::Counterexample) s["partition"] = c.alpha;
  return s;
}

ExperimentResult run_converge(const ExperimentConfig& c) {
  const EntangledSystem sys = build_system(c);
  ResonanceOptions ro;
  ro.tol = c.resonance_tol;
  const LimitResult lim = limit_operator_detailed(sys, ro);
  AverageOptions ao{c.strategy, contraction_of(c)};

  ExperimentResult r;
  for (double n : c.schedule) {
    const auto start = Clock::now();
    const ComplexMatrix avg = entangled_average(sys, static_cast<int>(n), ao);
    const ComplexMatrix diff = avg - lim.limit;
    const double ms = elapsed_ms(start);
    r.records.push_back(record(c, n, diff.norm(), spectral_norm(diff), ms, std::string(to_string(c.strategy))));
  }
  json s = base_summary(c, {"entangled-mean-convergence", "resonant-limit-formula"});
  s["resonant_tuples"] = lim.tuples.size();
  r.summary = s.dump(2);
  return r;
}

ExperimentResult run_limit(const ExperimentConfig& c) {
  const EntangledSystem sys = build_system(c);
  ResonanceOptions ro;
  ro.tol = c.resonance_tol;
  const auto start = Clock::now();
  const LimitResult lim = limit_operator_detailed(sys, ro);
  const double ms = elapsed_ms(start);

  ExperimentResult r;
  r.records.push_back(record(c, 1.0, lim.limit.norm(), spectral_norm(lim.limit), ms, "spectral"));
  json s = base_summary(c, {"resonant-limit-formula"});
  s["resonant_tuples"] = lim.tuples.size();
  s["limit"] = matrix_json(lim.limit);
  s["note"] = "error_fro and error_op hold the norms of the limit operator itself";
  r.summary = s.dump(2);
  return r;
}

ExperimentResult run_resonances(const ExperimentConfig& c) {
  const EntangledSystem sys = build_system(c);
  ResonanceOptions ro;
  ro.tol = c.resonance_tol;
  const auto start = Clock::now();
  std::vector<std::vector<UnimodularEigenvalue>> spectra;
  for (const auto& t : sys.operators()) spectra.push_back(unimodular_spectrum(t));
  const auto tuples = resonant_tuples(spectra, sys.partition(), ro);
  const double ms = elapsed_ms(start);

  ExperimentResult r;
  json listing = json::array();
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& tu = tuples[i];
    double worst = 0.0, sq = 0.0;
    for (double b : tu.block_residuals) {
      worst = std::max(worst, b);
      sq += b * b;
    }
    r.records.push_back(record(c, static_cast<double>(i + 1), std::sqrt(sq), worst, i == 0 ? ms : 0.0, "spectral"));
    json entry;
    entry["row"] = i + 1;
    entry["indices"] = tu.indices;
    json angles = json::array();
    for (const auto& a : tu.angles) angles.push_back(a ? json(a->str()) : json(nullptr));
    entry["angles"] = angles;
    json lambdas = json::array();
    for (const auto& l : tu.lambdas) lambdas.push_back({l.real(), l.imag()});
    entry["lambdas"] = lambdas;
    entry["block_residuals"] = tu.block_residuals;
    entry["fragile"] = tu.fragile;
    listing.push_back(entry);
  }
  json s = base_summary(c, {"resonant-limit-formula"});
  s["tuples"] = listing;
  s["note"] = "one row per resonant tuple; error_fro is the l2 norm and error_op the maximum of the block residuals";
  r.summary = s.dump(2);
  return r;
}

ExperimentResult run_counterexample(const ExperimentConfig& c) {
  std::vector<std::int64_t> ns;
  for (double n : c.schedule) ns.push_back(static_cast<std::int64_t>(n));
  const auto start = Clock::now();
  const auto table = divergence_experiment(ns);
  const double ms = elapsed_ms(start);

  ExperimentResult r;
  json rows = json::array();
  double prev = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double v = table[i].value.to_double();
    const double gap = i == 0 ? 0.0 : std::abs(v - prev);
    r.records.push_back(record(c, static_cast<double>(table[i].n), v, gap, i == 0 ? ms : 0.0, "exact"));
    rows.push_back({{"n", table[i].n}, {"value", table[i].value.str()}, {"gap", gap}});
    prev = v;
  }
  const double norm = spectral_norm(finite_section(c.window));
  json s = base_summary(c, {"divergence-counterexample"});
  s["table"] = rows;
  s["window"] = c.window;
  s["finite_section_norm"] = norm;
  s["note"] = "error_fro holds the exact Cesaro value at N, error_op its distance to the previous checkpoint";
  r.summary = s.dump(2);
  return r;
}

int quadrature_points(const ExperimentConfig& c, const ContinuousSystem& sys, double t) {
  if (c.quadrature.points) return *c.quadrature.points;
  double fmax = 0.0;
  for (const auto& g : sys.semigroups()) {
    for (const auto& f : g.frequencies()) fmax = std::max(fmax, std::abs(f.phi));
  }
  const double need = std::ceil(c.quadrature.nodes_per_period * t * fmax);
  if (need > 1e9) fail(ErrorCode::BudgetExceeded, "quadrature needs " + std::to_string(need) + " points per axis");
  return std::max(c.quadrature.min_points, static_cast<int>(need));
}

ExperimentResult run_continuous(const ExperimentConfig& c) {
  const ContinuousSystem sys = build_continuous_system(c);
  const LimitResult lim = continuous_limit_detailed(sys, c.resonance_tol);
  ContinuousOptions co;
  co.contraction = contraction_of(c);
  const std::string scheme =
      c.quadrature.scheme == QuadratureSpec::Scheme::Midpoint ? "midpoint" : "gauss-legendre";

  ExperimentResult r;
  json points = json::array();
  for (double t : c.schedule) {
    const auto start = Clock::now();
    QuadratureSpec q{c.quadrature.scheme, quadrature_points(c, sys, t)};
    const ContinuousAverage avg = continuous_entangled_average(sys, t, q, co);
    const ComplexMatrix diff = avg.value - lim.limit;
    const double ms = elapsed_ms(start);
    r.records.push_back(record(c, t, diff.norm(), spectral_norm(diff), ms, scheme));
    points.push_back({{"t", t}, {"points", q.points}, {"quadrature_error_estimate", avg.error_estimate}});
  }
  json s = base_summary(c, {"continuous-entangled-convergence", "continuous-resonant-limit-formula"});
  s["resonant_tuples"] = lim.tuples.size();
  s["quadrature"] = points;
  r.summary = s.dump(2);
  return r;
}

ExperimentResult run_stacking(const ExperimentConfig& c) {
  const EntangledSystem sys = build_system(c);
  const StackedSystem st = stacked_system(sys);
  AverageOptions ao{c.strategy, contraction_of(c)};
  const int d = sys.dim();

  ExperimentResult r;
  double worst = 0.0, scale = 0.0;
  for (double n : c.schedule) {
    const auto start = Clock::now();
    const ComplexMatrix direct = entangled_average(sys, static_cast<int>(n), ao);
    const ComplexMatrix stacked =
        stacked_average(st, sys.partition(), static_cast<int>(n), ComplexMatrix::Identity(d, d), ao);
    const ComplexMatrix diff = stacked - direct;
    const double ms = elapsed_ms(start);
    const double op = spectral_norm(diff);
    worst = std::max(worst, op);
    scale = std::max(scale, spectral_norm(direct));
    r.records.push_back(record(c, n, diff.norm(), op, ms, std::string(to_string(c.strategy))));
  }
  json s = base_summary(c, {"diagonal-stacking"});
  s["max_residual"] = worst;
  s["output_scale"] = scale;
  r.summary = s.dump(2);
  return r;
}

std::string number_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::Converge: return run_converge(config);
    case ExperimentKind::Limit: return run_limit(config);
    case ExperimentKind::Resonances: return run_resonances(config);
    case ExperimentKind::Counterexample: return run_counterexample(config);
    case ExperimentKind::Continuous: return run_continuous(config);
    case ExperimentKind::StackingTest: return run_stacking(config);
  }
  fail(ErrorCode::ValidationError, "unknown experiment kind");
}

std::string format_csv(const std::vector<ResultRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\r\n";
  for (const auto& r : records) {
    out += number_text(r.checkpoint) + "," + number_text(r.error_fro) + "," + number_text(r.error_op) + "," +
           number_text(r.runtime_ms) + "," + csv_field(r.strategy) + "," + std::to_string(r.seed) + "," +
           csv_field(r.config_hash) + "\r\n";
  }
  return out;
}

std::string format_json(const std::vector<ResultRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    arr.push_back({{"checkpoint", r.checkpoint},
                   {"error_fro", r.error_fro},
                   {"error_op", r.error_op},
                   {"runtime_ms", r.runtime_ms},
                   {"strategy", r.strategy},
                   {"seed", r.seed},
                   {"config_hash", r.config_hash}});
  }
  return arr.dump(2) + "\n";
}

std::vector<ResultRecord> parse_records_json(const std::string& text) {
  try {
    const json arr = json::parse(text);
    std::vector<ResultRecord> out;
    for (const auto& e : arr) {
      out.push_back({e.at("checkpoint").get<double>(), e.at("error_fro").get<double>(),
                     e.at("error_op").get<double>(), e.at("runtime_ms").get<double>(),
                     e.at("strategy").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                     e.at("config_hash").get<std::string>()});
    }
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

void emit_results(const std::vector<ResultRecord>& records, OutputFormat format, const std::string& path,
                  std::ostream& out) {
  const std::string text = format == OutputFormat::Csv ? format_csv(records) : format_json(records);
  if (path.empty()) {
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write to standard output failed");
    return;
  }
  write_text_file(path, text);
}

}  // namespace entlab
