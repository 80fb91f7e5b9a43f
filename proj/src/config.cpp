#include "chfield/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "chfield/errors.hpp"

namespace chfield {

namespace fs = std::filesystem;

namespace {

YAML::Node load_yaml_text(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.what());
  }
}

YAML::Node load_yaml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_yaml_text(ss.str());
}

void allow_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> keys) {
  if (!n.IsMap()) throw ConfigError(where + " must be a mapping");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& key, const std::string& where) {
  if (!n[key]) throw ConfigError("missing '" + key + "' in " + where);
  try {
    return n[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const YAML::Node& n, const std::string& key, T fallback, const std::string& where) {
  if (!n[key]) return fallback;
  return get<T>(n, key, where);
}

double get_number(const YAML::Node& n, const std::string& where) {
  try {
    const auto s = n.as<std::string>();
    if (s == "inf" || s == ".inf" || s == "infinity") return INFINITY;
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("expected a number in " + where);
  }
}

Matrix read_matrix(const YAML::Node& n, int p, const std::string& what) {
  if (n.IsScalar()) return Matrix::Constant(p, p, get_number(n, what));
  if (!n.IsSequence() || static_cast<int>(n.size()) != p) throw ConfigError(what + " must be a scalar or a " + std::to_string(p) + "x" + std::to_string(p) + " matrix");
  Matrix m(p, p);
  for (int j = 0; j < p; ++j) {
    if (!n[j].IsSequence() || static_cast<int>(n[j].size()) != p) throw ConfigError(what + " row " + std::to_string(j + 1) + " has the wrong length");
    for (int k = 0; k < p; ++k) m(j, k) = get_number(n[j][k], what);
  }
  return m;
}

Vector read_vector(const YAML::Node& n, int p, const std::string& what) {
  if (n.IsScalar()) return Vector::Constant(p, get_number(n, what));
  if (!n.IsSequence() || static_cast<int>(n.size()) != p) throw ConfigError(what + " must have " + std::to_string(p) + " entries");
  Vector v(p);
  for (int j = 0; j < p; ++j) v(j) = get_number(n[j], what);
  return v;
}

std::vector<double> read_list(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw ConfigError(what + " must be a list");
  std::vector<double> v;
  for (const auto& e : n) v.push_back(get_number(e, what));
  return v;
}

int sigma_size(const YAML::Node& n) {
  if (n["sigma"] && n["sigma"].IsScalar()) return 1;
  if (!n["sigma"] || !n["sigma"].IsSequence()) throw ConfigError("spec needs a sigma matrix");
  return static_cast<int>(n["sigma"].size());
}

CovarianceSpec parse_spec_node(const YAML::Node& n) {
  allow_keys(n, "covariance spec",
             {"family", "dim", "nu", "alpha", "beta", "phi", "sigma", "sigma_imag", "tau", "marginals"});
  const SpecKind kind = parse_kind(get<std::string>(n, "family", "covariance spec"));
  const int dim = get_or<int>(n, "dim", 2, "covariance spec");
  const int p = sigma_size(n);
  const Matrix sigma = read_matrix(n["sigma"], p, "sigma");
  const Vector tau = n["tau"] ? read_vector(n["tau"], p, "tau") : Vector::Zero(p);
  const auto& m = n["marginals"];
  if (m && (!m.IsSequence() || static_cast<int>(m.size()) != p)) throw ConfigError("marginals must list one entry per variable");

  CovarianceSpec spec;
  if (kind == SpecKind::SpectralCH || kind == SpecKind::AsymSpectralCH1D || kind == SpecKind::MaternCHHybrid) {
    if (!m) throw ConfigError("spectral families need marginals");
    SpectralCrossSpec sp;
    sp.dim = dim;
    for (int j = 0; j < p; ++j) {
      const auto& e = m[j];
      allow_keys(e, "marginal", {"kind", "nu", "alpha", "beta", "phi"});
      const std::string mk = get_or<std::string>(e, "kind", "ch", "marginal");
      if (mk == "ch")
        sp.marginals.push_back(SpectralMarginal::ch(get<double>(e, "nu", "marginal"), get<double>(e, "alpha", "marginal"),
                                                    get<double>(e, "beta", "marginal")));
      else if (mk == "matern")
        sp.marginals.push_back(SpectralMarginal::matern(get<double>(e, "nu", "marginal"), get<double>(e, "phi", "marginal")));
      else
        throw ConfigError("marginal kind must be ch or matern");
    }
    const Matrix im = n["sigma_imag"] ? read_matrix(n["sigma_imag"], p, "sigma_imag") : Matrix::Zero(p, p);
    sp.sigma.resize(p, p);
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < p; ++k) sp.sigma(j, k) = {sigma(j, k), im(j, k)};
    spec = CovarianceSpec::from_spectral(sp, tau);
    if (kind == SpecKind::AsymSpectralCH1D) spec.kind = kind;
    if (spec.kind != kind) throw ConfigError(std::string("marginals/sigma do not describe a ") + kind_name(kind) + " spec");
  } else {
    ParamMatrixSet ps;
    if (m) {
      if (kind == SpecKind::CH) {
        std::vector<CHMarginal> cm;
        for (int j = 0; j < p; ++j) {
          allow_keys(m[j], "marginal", {"nu", "alpha", "beta"});
          cm.push_back({get<double>(m[j], "nu", "marginal"), get<double>(m[j], "alpha", "marginal"),
                        get<double>(m[j], "beta", "marginal")});
        }
        ps = build_pars_like(cm, sigma);
      } else if (kind == SpecKind::Matern) {
        std::vector<double> nu, phi;
        for (int j = 0; j < p; ++j) {
          allow_keys(m[j], "marginal", {"nu", "phi"});
          nu.push_back(get<double>(m[j], "nu", "marginal"));
          phi.push_back(get<double>(m[j], "phi", "marginal"));
        }
        ps = build_matern_like(nu, phi, sigma);
      } else {
        throw ConfigError("gc specs take alpha/beta/phi directly, not marginals");
      }
    } else {
      ps.family = kind == SpecKind::CH ? Family::CH : (kind == SpecKind::Matern ? Family::Matern : Family::GeneralizedCauchy);
      ps.sigma = sigma;
      auto need = [&](const char* key) {
        if (!n[key]) throw ConfigError(std::string("spec needs '") + key + "'");
        return read_matrix(n[key], p, key);
      };
      if (kind == SpecKind::CH) {
        ps.nu = need("nu");
        ps.alpha = need("alpha");
        ps.beta = need("beta");
      } else if (kind == SpecKind::Matern) {
        ps.nu = need("nu");
        ps.phi = need("phi");
      } else {
        ps.alpha = need("alpha");
        ps.beta = need("beta");
        ps.phi = need("phi");
      }
    }
    ps.tau = tau;
    spec = CovarianceSpec::from_params(ps, dim);
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid covariance spec: ") + e.what());
  }
  return spec;
}

void emit_matrix(YAML::Emitter& out, const Matrix& m) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index k = 0; k < m.cols(); ++k) out << m(j, k);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

void emit_vector(YAML::Emitter& out, const Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index j = 0; j < v.size(); ++j) out << v(j);
  out << YAML::EndSeq;
}

void emit_spec(YAML::Emitter& out, const CovarianceSpec& spec) {
  out << YAML::BeginMap;
  out << YAML::Key << "family" << YAML::Value << kind_name(spec.kind);
  out << YAML::Key << "dim" << YAML::Value << spec.dim;
  if (spec.is_spectral()) {
    out << YAML::Key << "marginals" << YAML::Value << YAML::BeginSeq;
    for (const auto& m : spec.spectral.marginals) {
      out << YAML::Flow << YAML::BeginMap;
      if (m.kind == SpectralMarginal::Kind::CH)
        out << YAML::Key << "kind" << YAML::Value << "ch" << YAML::Key << "nu" << YAML::Value << m.nu << YAML::Key
            << "alpha" << YAML::Value << m.alpha << YAML::Key << "beta" << YAML::Value << m.beta;
      else
        out << YAML::Key << "kind" << YAML::Value << "matern" << YAML::Key << "nu" << YAML::Value << m.nu << YAML::Key
            << "phi" << YAML::Value << m.phi;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "sigma" << YAML::Value;
    emit_matrix(out, spec.spectral.sigma.real());
    if (spec.kind == SpecKind::AsymSpectralCH1D) {
      out << YAML::Key << "sigma_imag" << YAML::Value;
      emit_matrix(out, spec.spectral.sigma.imag());
    }
  } else {
    const auto& ps = spec.params;
    auto field = [&](const char* key, const Matrix& m) {
      out << YAML::Key << key << YAML::Value;
      emit_matrix(out, m);
    };
    if (spec.kind == SpecKind::CH) {
      field("nu", ps.nu);
      field("alpha", ps.alpha);
      field("beta", ps.beta);
    } else if (spec.kind == SpecKind::Matern) {
      field("nu", ps.nu);
      field("phi", ps.phi);
    } else {
      field("alpha", ps.alpha);
      field("beta", ps.beta);
      field("phi", ps.phi);
    }
    field("sigma", ps.sigma);
  }
  out << YAML::Key << "tau" << YAML::Value;
  emit_vector(out, spec.nugget());
  out << YAML::EndMap;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / path).string();
}

std::string dir_of(const std::string& path) { return fs::path(path).parent_path().string(); }

DataSource parse_data(const YAML::Node& n, const std::string& base_dir, const std::string& where) {
  allow_keys(n, where, {"path", "coords", "variable", "value", "values", "block", "unit", "projection", "origin"});
  DataSource d;
  d.path = resolve(base_dir, get<std::string>(n, "path", where));
  CsvSchema& s = d.schema;
  if (n["coords"]) s.coord_columns = get<std::vector<std::string>>(n, "coords", where);
  s.variable_column = get_or<std::string>(n, "variable", s.variable_column, where);
  s.value_column = get_or<std::string>(n, "value", s.value_column, where);
  if (n["values"]) s.value_columns = get<std::vector<std::string>>(n, "values", where);
  s.block_column = get_or<std::string>(n, "block", "", where);
  s.unit_column = get_or<std::string>(n, "unit", "", where);
  s.projection = parse_projection(get_or<std::string>(n, "projection", "planar", where));
  if (n["origin"]) {
    const auto o = read_list(n["origin"], "origin");
    if (o.size() != 2) throw ConfigError("origin must be [lon, lat]");
    s.origin_lon = o[0];
    s.origin_lat = o[1];
  }
  return d;
}

ModelShape parse_shape(const YAML::Node& n, int p, int dim, const std::string& where, std::string* name) {
  allow_keys(n, where, {"name", "family", "shared_scale", "nugget", "rule", "parameters"});
  ModelShape s;
  s.kind = parse_kind(get<std::string>(n, "family", where));
  s.p = p;
  s.dim = dim;
  s.shared_scale = get_or<bool>(n, "shared_scale", true, where);
  s.nugget = get_or<bool>(n, "nugget", false, where);
  s.rule = parse_rule(get_or<std::string>(n, "rule", "theorem1", where));
  if (name) *name = get_or<std::string>(n, "name", kind_name(s.kind), where);
  return s;
}

FitOptions parse_fit_options(const YAML::Node& n, std::uint64_t seed) {
  FitOptions o;
  o.seed = seed;
  if (!n) return o;
  allow_keys(n, "fit options", {"max_evaluations", "tolerance", "restarts", "simplex_scale", "tabulate", "table_points"});
  o.max_evaluations = get_or<int>(n, "max_evaluations", o.max_evaluations, "fit options");
  o.tolerance = get_or<double>(n, "tolerance", o.tolerance, "fit options");
  o.restarts = get_or<int>(n, "restarts", o.restarts, "fit options");
  o.simplex_scale = get_or<double>(n, "simplex_scale", o.simplex_scale, "fit options");
  o.tabulate = get_or<bool>(n, "tabulate", o.tabulate, "fit options");
  o.table_points = get_or<int>(n, "table_points", o.table_points, "fit options");
  o.validate();
  return o;
}

int coord_dim(const DataSource& d) { return static_cast<int>(d.schema.coord_columns.size()); }

// Wraps yaml-cpp conversion failures that escape the helpers.
template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

CovarianceSpec parse_spec_text(const std::string& yaml) {
  return guarded([&] { return parse_spec_node(load_yaml_text(yaml)); });
}

CovarianceSpec load_spec_file(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    if (n.IsMap() && n["spec"]) return parse_spec_node(n["spec"]);
    return parse_spec_node(n);
  });
}

std::string spec_to_yaml(const CovarianceSpec& spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit_spec(out, spec);
  return std::string(out.c_str()) + "\n";
}

std::string fit_result_to_yaml(const FittedModel& fm, const Parameterization& par) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "loglik" << YAML::Value << fm.loglik;
  out << YAML::Key << "converged" << YAML::Value << fm.converged;
  out << YAML::Key << "evaluations" << YAML::Value << fm.evaluations;
  out << YAML::Key << "best_restart" << YAML::Value << fm.best_restart + 1;
  out << YAML::Key << "restart_loglik" << YAML::Value << YAML::Flow << fm.restart_loglik;
  out << YAML::Key << "validity_rule" << YAML::Value << rule_name(par.shape().rule);
  out << YAML::Key << "transformed" << YAML::Value << YAML::BeginMap;
  const Vector theta = par.transform(fm.spec);
  for (int i = 0; i < par.size(); ++i) out << YAML::Key << par.names()[i] << YAML::Value << theta(i);
  out << YAML::EndMap;
  out << YAML::Key << "notes" << YAML::Value << fm.notes;
  out << YAML::Key << "spec" << YAML::Value;
  emit_spec(out, fm.spec);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

FitConfig load_fit_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "fit config", {"data", "p", "model", "fit", "init", "seed"});
    FitConfig c;
    c.data = parse_data(n["data"], dir_of(path), "data");
    c.p = get_or<int>(n, "p", 0, "fit config");
    const std::uint64_t seed = get_or<std::uint64_t>(n, "seed", 1, "fit config");
    if (!n["model"]) throw ConfigError("fit config needs a model");
    c.shape = parse_shape(n["model"], c.p, coord_dim(c.data), "model", nullptr);
    c.options = parse_fit_options(n["fit"], seed);
    if (n["init"]) c.init = parse_spec_node(n["init"]);
    return c;
  });
}

PredictConfig load_predict_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "predict config", {"spec", "spec_file", "train", "targets", "level", "include_nugget"});
    PredictConfig c;
    if (n["spec"]) c.spec = parse_spec_node(n["spec"]);
    else if (n["spec_file"]) c.spec = load_spec_file(resolve(dir_of(path), get<std::string>(n, "spec_file", "predict config")));
    else throw ConfigError("predict config needs spec or spec_file");
    c.train = parse_data(n["train"], dir_of(path), "train");
    c.targets = parse_data(n["targets"], dir_of(path), "targets");
    c.targets.schema.require_values = false;
    c.options.level = get_or<double>(n, "level", 0.95, "predict config");
    c.options.include_nugget = get_or<bool>(n, "include_nugget", false, "predict config");
    return c;
  });
}

SimulateConfig load_simulate_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "simulate config", {"spec", "spec_file", "design", "seed"});
    SimulateConfig c;
    if (n["spec"]) c.spec = parse_spec_node(n["spec"]);
    else if (n["spec_file"]) c.spec = load_spec_file(resolve(dir_of(path), get<std::string>(n, "spec_file", "simulate config")));
    else throw ConfigError("simulate config needs spec or spec_file");
    c.seed = get_or<std::uint64_t>(n, "seed", 1, "simulate config");
    const YAML::Node d = n["design"];
    if (!d) throw ConfigError("simulate config needs a design");
    if (d["path"]) {
      c.design = parse_data(d, dir_of(path), "design");
      c.design->schema.require_values = false;
    } else {
      allow_keys(d, "design", {"counts", "lower", "upper"});
      for (double v : read_list(d["counts"], "counts")) c.counts.push_back(static_cast<int>(v));
      c.lower = read_list(d["lower"], "lower");
      c.upper = read_list(d["upper"], "upper");
      if (static_cast<int>(c.counts.size()) != c.spec.p()) throw ConfigError("design counts must list one count per variable");
      if (static_cast<int>(c.lower.size()) != c.spec.dim || c.upper.size() != c.lower.size())
        throw ConfigError("design bounds must match the covariance dimension");
    }
    return c;
  });
}

DetrendConfig load_detrend_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "detrend config", {"data", "bandwidth", "widen_attempts"});
    DetrendConfig c;
    c.data = parse_data(n["data"], dir_of(path), "data");
    if (n["bandwidth"]) c.options.bandwidth = get_number(n["bandwidth"], "bandwidth");
    c.options.widen_attempts = get_or<int>(n, "widen_attempts", c.options.widen_attempts, "detrend config");
    return c;
  });
}

StudyConfig load_study_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "study config",
               {"replicates", "n1", "n2", "n_out", "colocated", "domain", "truth_name", "truth", "families",
                "predictor_sets", "oracle", "intervals_with_nugget", "seed", "level", "fit"});
    StudyConfig c;
    const std::string w = "study config";
    c.replicates = get_or<int>(n, "replicates", c.replicates, w);
    c.n1 = get_or<int>(n, "n1", c.n1, w);
    c.n2 = get_or<int>(n, "n2", c.n2, w);
    c.n_out = get_or<int>(n, "n_out", c.n_out, w);
    c.colocated = get_or<bool>(n, "colocated", false, w);
    if (n["domain"]) {
      allow_keys(n["domain"], "domain", {"lower", "upper"});
      c.lower = read_list(n["domain"]["lower"], "domain lower");
      c.upper = read_list(n["domain"]["upper"], "domain upper");
    }
    if (!n["truth"]) throw ConfigError("study config needs a truth spec");
    c.truth = parse_spec_node(n["truth"]);
    c.truth_name = get_or<std::string>(n, "truth_name", kind_name(c.truth.kind), w);
    if (n["families"]) {
      if (!n["families"].IsSequence()) throw ConfigError("families must be a list");
      for (const auto& f : n["families"]) {
        FamilyChoice fc;
        fc.shape = parse_shape(f, 2, c.truth.dim, "family", &fc.name);
        c.families.push_back(fc);
      }
    }
    if (n["predictor_sets"]) {
      c.predictor_sets.clear();
      for (const auto& e : n["predictor_sets"]) {
        const auto which = e.as<std::string>();
        std::vector<PredictorSet> add;
        if (which == "main") add = main_predictor_sets();
        else if (which == "other-at-target") add = other_at_target_sets();
        else throw ConfigError("predictor_sets entries are 'main' or 'other-at-target'");
        c.predictor_sets.insert(c.predictor_sets.end(), add.begin(), add.end());
      }
    }
    c.oracle = get_or<bool>(n, "oracle", c.oracle, w);
    c.intervals_with_nugget = get_or<bool>(n, "intervals_with_nugget", c.intervals_with_nugget, w);
    c.seed = get_or<std::uint64_t>(n, "seed", c.seed, w);
    c.level = get_or<double>(n, "level", c.level, w);
    c.fit = parse_fit_options(n["fit"], c.seed);
    c.validate();
    return c;
  });
}

CVRunConfig load_cv_config(const std::string& path) {
  return guarded([&] {
    const YAML::Node n = load_yaml_file(path);
    allow_keys(n, "cv config",
               {"data", "auxiliary", "p", "scheme", "k", "models", "variants", "seed", "level", "intervals_with_nugget", "fit"});
    const std::string w = "cv config";
    CVRunConfig c;
    c.data = parse_data(n["data"], dir_of(path), "data");
    if (n["auxiliary"]) c.auxiliary = parse_data(n["auxiliary"], dir_of(path), "auxiliary");
    c.p = get_or<int>(n, "p", 0, w);
    CVConfig& cv = c.cv;
    cv.scheme = parse_scheme(get_or<std::string>(n, "scheme", "k-fold", w));
    cv.k = get_or<int>(n, "k", cv.k, w);
    cv.seed = get_or<std::uint64_t>(n, "seed", cv.seed, w);
    cv.level = get_or<double>(n, "level", cv.level, w);
    cv.intervals_with_nugget = get_or<bool>(n, "intervals_with_nugget", cv.intervals_with_nugget, w);
    cv.fit = parse_fit_options(n["fit"], cv.seed);
    if (!n["models"] || !n["models"].IsSequence()) throw ConfigError("cv config needs a models list");
    for (const auto& m : n["models"]) {
      CVModel model;
      model.shape = parse_shape(m, c.p, coord_dim(c.data), "model", &model.name);
      if (m["parameters"]) model.fixed = parse_spec_node(m["parameters"]);
      cv.models.push_back(model);
    }
    if (n["variants"]) {
      cv.variants.clear();
      for (const auto& v : n["variants"]) {
        allow_keys(v, "variant", {"name", "auxiliary"});
        cv.variants.push_back({get<std::string>(v, "name", "variant"), get_or<bool>(v, "auxiliary", false, "variant")});
      }
    }
    cv.validate();
    return c;
  });
}

const char* library_version() { return "chfield 0.1.0"; }

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace chfield
