#include "mixstat/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>

#include "mixstat/ustat.hpp"

namespace mixstat::harness {
namespace {

void check_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown field '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const nlohmann::json& obj, std::string_view key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing field '" + std::string(key) + "' in " + std::string(where));
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + std::string(where) + ": " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, std::string_view key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, key, where);
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, std::string_view where) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(where) + " must be a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(std::string(where) + " rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

GaussianCopulaProcess copula_from_json(const nlohmann::json& j, std::optional<std::size_t> p) {
  const double temporal = get<double>(j, "temporal", "process");
  if (j.contains("correlation")) {
    if (j.contains("structure")) throw ConfigError("give either correlation or structure, not both");
    Eigen::MatrixXd r = matrix_from_json(j.at("correlation"), "process.correlation");
    if (p && static_cast<std::size_t>(r.rows()) != *p) throw ConfigError("correlation matrix does not match p");
    return GaussianCopulaProcess(std::move(r), temporal);
  }
  const auto structure = get<std::string>(j, "structure", "process");
  const std::size_t dim = p ? *p : get<std::size_t>(j, "dimension", "process");
  const double rho = get_or<double>(j, "rho", 0.0, "process");
  if (structure == "identity") return GaussianCopulaProcess::equicorrelated(dim, 0.0, temporal);
  if (structure == "equicorrelated") return GaussianCopulaProcess::equicorrelated(dim, rho, temporal);
  if (structure == "toeplitz") return GaussianCopulaProcess::toeplitz(dim, rho, temporal);
  throw ConfigError("unknown copula structure: " + structure);
}

ProcessSpec process_impl(const nlohmann::json& j, std::optional<std::size_t> p) {
  if (!j.is_object()) throw ConfigError("process must be an object");
  const auto kind = get<std::string>(j, "kind", "process");
  ProcessSpec spec;
  if (kind == "iid") {
    check_keys(j, {"kind", "dimension"}, "process");
    spec.kind = IidProcess{p ? *p : get_or<std::size_t>(j, "dimension", 1, "process")};
  } else if (kind == "ar1") {
    check_keys(j, {"kind", "coefficient", "dimension"}, "process");
    spec.kind = Ar1Process{get<double>(j, "coefficient", "process"),
                           p ? *p : get_or<std::size_t>(j, "dimension", 1, "process")};
  } else if (kind == "m_dependent") {
    check_keys(j, {"kind", "window", "dimension"}, "process");
    spec.kind = MDependentProcess{get<int>(j, "window", "process"),
                                  p ? *p : get_or<std::size_t>(j, "dimension", 1, "process")};
  } else if (kind == "markov_chain") {
    check_keys(j, {"kind", "transition", "start_state", "state_values"}, "process");
    FiniteMarkovChain chain(matrix_from_json(j.at("transition"), "process.transition"));
    if (j.contains("state_values")) chain.set_state_values(get<std::vector<std::vector<double>>>(j, "state_values", "process"));
    std::optional<int> start;
    if (j.contains("start_state")) start = get<int>(j, "start_state", "process");
    spec.kind = MarkovChainProcess{std::move(chain), start};
  } else if (kind == "gaussian_copula") {
    check_keys(j, {"kind", "temporal", "correlation", "structure", "rho", "dimension"}, "process");
    spec.kind = copula_from_json(j, p);
  } else {
    throw ConfigError("unknown process kind: " + kind);
  }
  validate(spec);
  return spec;
}

std::vector<std::size_t> size_list(const nlohmann::json& obj, std::string_view key, std::string_view where) {
  auto v = get<std::vector<std::size_t>>(obj, key, where);
  if (v.empty()) throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " must be non-empty");
  return v;
}

KernelSpec kernel_from_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) return kernel_from_name(j.get<std::string>());
  check_keys(j, {"name", "bound", "table", "table_file"}, "kernel");
  if (j.contains("table")) return kernel_table_from_json(j.at("table"));
  if (j.contains("table_file")) {
    std::filesystem::path path = get<std::string>(j, "table_file", "kernel");
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return load_kernel_table(path);
  }
  return kernel_from_name(get<std::string>(j, "name", "kernel"), get_or<double>(j, "bound", 1.0, "kernel"));
}

bool contains_all(const std::vector<std::size_t>& grid, const std::vector<std::size_t>& subset) {
  return std::all_of(subset.begin(), subset.end(),
                     [&](std::size_t v) { return std::find(grid.begin(), grid.end(), v) != grid.end(); });
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Tail: return "tail";
    case ExperimentKind::Scaling: return "scaling";
    case ExperimentKind::BiasCurve: return "bias";
    case ExperimentKind::DecomposeCheck: return "decompose-check";
    case ExperimentKind::MixingProfile: return "mixing-profile";
    case ExperimentKind::MgfCheck: return "mgf-check";
    case ExperimentKind::Calibrate: return "calibrate";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Simulate, ExperimentKind::Tail, ExperimentKind::Scaling, ExperimentKind::BiasCurve,
                 ExperimentKind::DecomposeCheck, ExperimentKind::MixingProfile, ExperimentKind::MgfCheck,
                 ExperimentKind::Calibrate}) {
    if (to_string(k) == name) return k;
  }
  if (name == "bias-curve") return ExperimentKind::BiasCurve;
  throw ConfigError("unknown experiment kind: " + std::string(name));
}

ProcessSpec process_from_json(const nlohmann::json& j) { return process_impl(j, std::nullopt); }

ProcessSpec process_at_dimension(const nlohmann::json& j, std::size_t p) { return process_impl(j, p); }

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  try {
    check_keys(doc,
               {"schema_version", "experiment", "description", "seed", "threads", "budget", "output_dir", "process",
                "kernel", "T", "replications", "constants", "tail", "scaling", "mixing", "mgf", "calibrate"},
               "config");
    const int version = get<int>(doc, "schema_version", "config");
    if (version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(version));

    ExperimentConfig c;
    c.raw = doc;
    c.kind = experiment_kind_from_string(get<std::string>(doc, "experiment", "config"));
    if (!doc.contains("seed")) throw ConfigError("missing field 'seed' in config");
    c.seed = get<std::uint64_t>(doc, "seed", "config");
    c.threads = get_or<std::size_t>(doc, "threads", 1, "config");
    c.budget = get_or<double>(doc, "budget", kDefaultBudget, "config");
    if (!(c.budget > 0.0)) throw ConfigError("budget must be positive");
    c.output_dir = get_or<std::string>(doc, "output_dir", "out", "config");
    c.replications = get_or<std::size_t>(doc, "replications", 0, "config");
    if (doc.contains("constants")) c.constants = bound_constants_from_json(doc.at("constants"));
    if (doc.contains("process")) {
      c.process_json = doc.at("process");
      // Scaling families take their dimension from the p grid.
      if (c.kind != ExperimentKind::Scaling) c.process = process_from_json(c.process_json);
    }
    if (doc.contains("kernel")) c.kernel = kernel_from_config(doc.at("kernel"), base_dir);
    if (doc.contains("T")) c.lengths = size_list(doc, "T", "config");

    auto need = [&](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string(to_string(c.kind)) + " experiment needs " + what);
    };
    auto require_chain = [&] {
      need(c.process && std::holds_alternative<MarkovChainProcess>(c.process->kind), "a markov_chain process");
    };

    switch (c.kind) {
      case ExperimentKind::Simulate:
        need(c.process.has_value(), "a process");
        need(!c.lengths.empty(), "a T grid");
        break;
      case ExperimentKind::Tail: {
        need(c.process.has_value(), "a process");
        need(c.kernel.has_value(), "a kernel");
        need(!c.lengths.empty(), "a T grid");
        need(doc.contains("tail"), "a tail section");
        const auto& t = doc.at("tail");
        check_keys(t, {"x_grid", "calibrate_T", "holdout_T", "theta", "oracle_draws", "small_T"}, "tail");
        c.tail.x_grid = get<std::vector<double>>(t, "x_grid", "tail");
        if (c.tail.x_grid.empty()) throw ConfigError("tail.x_grid must be non-empty");
        if (!std::is_sorted(c.tail.x_grid.begin(), c.tail.x_grid.end()) || c.tail.x_grid.front() < 0.0)
          throw ConfigError("tail.x_grid must be non-negative and increasing");
        c.tail.calibrate_lengths = get_or<std::vector<std::size_t>>(t, "calibrate_T", {}, "tail");
        c.tail.holdout_lengths = get_or<std::vector<std::size_t>>(t, "holdout_T", {}, "tail");
        if (!contains_all(c.lengths, c.tail.calibrate_lengths) || !contains_all(c.lengths, c.tail.holdout_lengths))
          throw ConfigError("calibrate_T and holdout_T must be drawn from T");
        const std::set<std::size_t> calibrate_set(c.tail.calibrate_lengths.begin(), c.tail.calibrate_lengths.end());
        if (!c.tail.holdout_lengths.empty() && calibrate_set.size() < 2)
          throw ConfigError("holdout_T needs at least two calibrate_T values");
        if (t.contains("theta")) c.tail.theta = get<double>(t, "theta", "tail");
        c.tail.oracle_draws = get_or<std::size_t>(t, "oracle_draws", c.tail.oracle_draws, "tail");
        c.tail.small_length = get_or<std::size_t>(t, "small_T", c.tail.small_length, "tail");
        for (std::size_t T : c.lengths)
          if (T < static_cast<std::size_t>(c.kernel->order()) || T < 2) throw ConfigError("T must be >= max(r, 2)");
        break;
      }
      case ExperimentKind::Scaling: {
        need(!c.process_json.is_null(), "a process");
        need(!c.lengths.empty(), "a T grid");
        need(doc.contains("scaling"), "a scaling section");
        const auto& s = doc.at("scaling");
        check_keys(s, {"p", "estimator", "oracle_samples"}, "scaling");
        c.scaling.dimensions = size_list(s, "p", "scaling");
        c.scaling.estimator = correlation_kind_from_string(get_or<std::string>(s, "estimator", "kendall", "scaling"));
        c.scaling.oracle_samples = get_or<std::size_t>(s, "oracle_samples", c.scaling.oracle_samples, "scaling");
        if (c.scaling.oracle_samples < kMinOracleSamples) throw ConfigError("scaling.oracle_samples must be >= 10000");
        for (std::size_t p : c.scaling.dimensions) c.process = process_at_dimension(c.process_json, p);
        for (std::size_t T : c.lengths)
          if (T < 3) throw ConfigError("T must be >= 3");
        break;
      }
      case ExperimentKind::BiasCurve:
      case ExperimentKind::DecomposeCheck:
        require_chain();
        need(c.kernel.has_value(), "a kernel");
        need(!c.lengths.empty(), "a T grid");
        for (std::size_t T : c.lengths)
          if (T < static_cast<std::size_t>(c.kernel->order())) throw ConfigError("T must be >= kernel order");
        break;
      case ExperimentKind::MixingProfile: {
        require_chain();
        need(doc.contains("mixing"), "a mixing section");
        const auto& m = doc.at("mixing");
        check_keys(m, {"kind", "lags", "conditioning", "gap_grid"}, "mixing");
        c.mixing.kind = mixing_kind_from_string(get<std::string>(m, "kind", "mixing"));
        c.mixing.lags = get<std::vector<int>>(m, "lags", "mixing");
        if (c.mixing.lags.empty()) throw ConfigError("mixing.lags must be non-empty");
        if (m.contains("conditioning")) {
          for (const auto& e : m.at("conditioning")) {
            check_keys(e, {"time", "state"}, "mixing.conditioning");
            c.mixing.conditioning.push_back({get<int>(e, "time", "mixing.conditioning"), get<int>(e, "state", "mixing.conditioning")});
          }
        }
        c.mixing.gap_grid = get_or<std::vector<int>>(m, "gap_grid", {}, "mixing");
        const bool conditional =
            c.mixing.kind == MixingKind::ConditionalPhi || c.mixing.kind == MixingKind::ConditionalAlpha;
        if (conditional && (c.mixing.conditioning.empty() || c.mixing.gap_grid.empty()))
          throw ConfigError("conditional coefficients need conditioning and gap_grid");
        break;
      }
      case ExperimentKind::MgfCheck: {
        need(doc.contains("mgf"), "an mgf section");
        const auto& m = doc.at("mgf");
        check_keys(m, {"summands", "draws", "eta_points"}, "mgf");
        c.mgf.summands = get<std::vector<int>>(m, "summands", "mgf");
        if (c.mgf.summands.empty() || *std::min_element(c.mgf.summands.begin(), c.mgf.summands.end()) < 1)
          throw ConfigError("mgf.summands must be non-empty positive counts");
        c.mgf.draws = get_or<std::size_t>(m, "draws", c.mgf.draws, "mgf");
        c.mgf.eta_points = get_or<int>(m, "eta_points", c.mgf.eta_points, "mgf");
        if (c.mgf.draws < 2 || c.mgf.eta_points < 1) throw ConfigError("mgf.draws >= 2 and eta_points >= 1 required");
        break;
      }
      case ExperimentKind::Calibrate: {
        need(doc.contains("calibrate"), "a calibrate section");
        const auto& m = doc.at("calibrate");
        check_keys(m, {"points", "tail_result"}, "calibrate");
        if (m.contains("points")) {
          for (const auto& e : m.at("points")) {
            check_keys(e, {"x", "T", "M", "tail"}, "calibrate.points");
            c.calibrate.points.push_back({get<double>(e, "x", "calibrate.points"), get<double>(e, "T", "calibrate.points"),
                                          get_or<double>(e, "M", 1.0, "calibrate.points"),
                                          get<double>(e, "tail", "calibrate.points")});
          }
        }
        if (m.contains("tail_result")) {
          std::filesystem::path path = get<std::string>(m, "tail_result", "calibrate");
          if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
          c.calibrate.tail_result = path;
        }
        if (c.calibrate.points.empty() == !c.calibrate.tail_result.has_value())
          throw ConfigError("calibrate needs exactly one of points or tail_result");
        break;
      }
    }
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

double estimated_evaluations(const ExperimentConfig& c) {
  const double n = static_cast<double>(c.replications);
  const int r = c.kernel ? c.kernel->order() : 2;
  double total = 0.0;
  switch (c.kind) {
    case ExperimentKind::Simulate:
      for (std::size_t T : c.lengths) total += std::max(n, 1.0) * static_cast<double>(T);
      break;
    case ExperimentKind::Tail:
      for (std::size_t T : c.lengths) total += n * binomial(static_cast<std::int64_t>(T), r);
      if (!c.tail.theta && !(c.process && std::holds_alternative<MarkovChainProcess>(c.process->kind)))
        total += static_cast<double>(c.tail.oracle_draws);
      break;
    case ExperimentKind::Scaling: {
      const int rs = c.scaling.estimator == CorrelationKind::Kendall ? 2 : 3;
      for (std::size_t T : c.lengths) total += n * binomial(static_cast<std::int64_t>(T), rs);
      break;
    }
    case ExperimentKind::DecomposeCheck:
      for (std::size_t T : c.lengths) total += n * binomial(static_cast<std::int64_t>(T), r);
      break;
    case ExperimentKind::BiasCurve:
      for (std::size_t T : c.lengths) total += binomial(static_cast<std::int64_t>(T), r);
      break;
    case ExperimentKind::MgfCheck:
      for (int k : c.mgf.summands) total += static_cast<double>(c.mgf.draws) * k;
      break;
    case ExperimentKind::MixingProfile:
    case ExperimentKind::Calibrate:
      break;
  }
  return total;
}

void check_budget(const ExperimentConfig& config) {
  const double need = estimated_evaluations(config);
  if (need > config.budget) {
    throw BudgetExceeded("estimated " + std::to_string(need) + " kernel evaluations exceed the budget of " +
                         std::to_string(config.budget));
  }
}

}  // namespace mixstat::harness
