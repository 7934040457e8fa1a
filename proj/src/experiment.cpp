#include "schwarzlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schwarzlab/decomposition.hpp"
#include "schwarzlab/operators.hpp"

namespace schwarzlab::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << body;
}

/// Canonical method order: the declaration order of the enum, epsilon sweep
/// expanded last in the listed order.
std::vector<ops::Method> expand_methods(const ExperimentConfig& cfg) {
  std::vector<ops::Method> out;
  const std::vector<std::string> order = {"AS",      "FE_T",     "EF_T",
                                          "RAS_CUT", "OBDD_CUT", "FEPS_T"};
  for (const auto& name : order) {
    if (std::find(cfg.methods.begin(), cfg.methods.end(), name) ==
        cfg.methods.end())
      continue;
    if (name == "FEPS_T") {
      for (double e : cfg.epsilon) out.push_back(ops::parse_method(name, e));
    } else {
      out.push_back(ops::parse_method(name));
    }
  }
  return out;
}

std::string spectrum_file_name(const ops::Method& m) {
  std::string name = "spectrum_" + ops::method_name(m);
  if (m.kind == ops::MethodKind::kFepsT) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%g", m.epsilon);
    name += buf;
  }
  return name + ".csv";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.dim = j.value("dim", cfg.dim);
    cfg.cells_per_side = j.value("cells_per_side", cfg.cells_per_side);
    cfg.blocks_per_side = j.value("blocks_per_side", cfg.blocks_per_side);
    cfg.overlap_layers = j.value("overlap_layers", cfg.overlap_layers);
    if (j.contains("methods"))
      cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("epsilon"))
      cfg.epsilon = j["epsilon"].get<std::vector<double>>();
    cfg.tol = j.value("tol", cfg.tol);
    cfg.max_iter = j.value("max_iter", cfg.max_iter);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.dense_cap = j.value("dense_cap", cfg.dense_cap);
    cfg.out_dir = j.value("out", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("dim: must be 1 or 2");
  if (cfg.cells_per_side < 4)
    throw ConfigError("cells_per_side: must be at least 4");
  if (cfg.blocks_per_side < 1 ||
      cfg.cells_per_side % cfg.blocks_per_side != 0)
    throw ConfigError("blocks_per_side: must divide cells_per_side");
  if (cfg.overlap_layers < 1)
    throw ConfigError("overlap_layers: must be at least 1");
  if (cfg.tol <= 0 || cfg.tol >= 1) throw ConfigError("tol: must be in (0, 1)");
  if (cfg.max_iter < 1) throw ConfigError("max_iter: must be positive");
  if (cfg.dense_cap < 1) throw ConfigError("dense_cap: must be positive");
  const int free_dofs = cfg.dim == 1
                            ? cfg.cells_per_side - 1
                            : (cfg.cells_per_side - 1) * (cfg.cells_per_side - 1);
  if (free_dofs > cfg.dense_cap)
    throw ConfigError("dense_cap: free dof count exceeds the dense cap");
  for (const auto& name : cfg.methods)
    ops::parse_method(name, name == "FEPS_T" ? 0.5 : 0.0);
  for (double e : cfg.epsilon)
    if (e <= 0 || e >= 1) throw ConfigError("epsilon: entries must be in (0, 1)");
  if (std::find(cfg.methods.begin(), cfg.methods.end(), "FEPS_T") !=
          cfg.methods.end() &&
      cfg.epsilon.empty())
    throw ConfigError("epsilon: FEPS_T requires a nonempty epsilon list");
  // Dry-run the decomposition preconditions (overlap size guard included).
  try {
    const auto grid = fem::build_grid(cfg.dim, cfg.cells_per_side);
    decomp::build_decomposition(grid, cfg.blocks_per_side, cfg.overlap_layers);
  } catch (const Error& e) {
    throw ConfigError(std::string("decomposition: ") + e.what());
  }
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dim"] = cfg.dim;
  j["cells_per_side"] = cfg.cells_per_side;
  j["blocks_per_side"] = cfg.blocks_per_side;
  j["overlap_layers"] = cfg.overlap_layers;
  j["methods"] = cfg.methods;
  j["epsilon"] = cfg.epsilon;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  j["seed"] = cfg.seed;
  j["dense_cap"] = cfg.dense_cap;
  j["out"] = cfg.out_dir;
  return j;
}

std::string bounds_csv(const std::vector<diag::BoundReport>& rows) {
  std::string s = "statement,method,epsilon,measured,theoretical,slack,kind,pass\n";
  for (const auto& r : rows) {
    s += r.statement + "," + r.method + "," + format_double(r.epsilon) + "," +
         format_double(r.measured) + "," + format_double(r.theoretical) + "," +
         format_double(r.slack) + "," + (r.asserted ? "assert" : "report") +
         "," + (r.pass ? "1" : "0") + "\n";
  }
  return s;
}

std::string solver_csv(const std::vector<diag::SolverRow>& rows) {
  std::string s =
      "method,epsilon,solver,iterations,converged,final_relres,a_error\n";
  for (const auto& r : rows) {
    s += r.method + "," + format_double(r.epsilon) + "," + r.solver + "," +
         std::to_string(r.iterations) + "," + (r.converged ? "1" : "0") + "," +
         format_double(r.final_relres) + "," + format_double(r.a_error) + "\n";
  }
  return s;
}

std::string spectrum_csv(const diag::Spectrum& s) {
  std::string out = "index,real,imag\n";
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    out += std::to_string(i) + "," + format_double(s.eigenvalues[i].real()) +
           "," + format_double(s.eigenvalues[i].imag()) + "\n";
  }
  return out;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RunManifest manifest;
  manifest.config = cfg;
  manifest.version = kVersion;

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);

  auto t0 = std::chrono::steady_clock::now();
  const auto grid = fem::build_grid(cfg.dim, cfg.cells_per_side);
  const auto od =
      decomp::build_decomposition(grid, cfg.blocks_per_side, cfg.overlap_layers);
  const auto cuts = decomp::build_cut_functions(od);
  manifest.stage_ms.emplace_back("decomposition", elapsed_ms(t0));

  t0 = std::chrono::steady_clock::now();
  const auto bundle = ops::build_bundle(od, cuts);
  manifest.stage_ms.emplace_back("operators", elapsed_ms(t0));

  t0 = std::chrono::steady_clock::now();
  std::vector<double> eps_sorted = cfg.epsilon;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());  // descending sweep
  const auto constants =
      diag::measure_constants(bundle, eps_sorted, cfg.seed);

  const auto methods = expand_methods(cfg);
  std::vector<diag::Spectrum> spectra;
  for (const auto& m : methods)
    spectra.push_back(diag::method_spectrum(bundle, m, cfg.dense_cap));
  auto bounds = diag::verify_bounds(constants, spectra);

  std::vector<diag::Positivity> positivity;
  if (!eps_sorted.empty()) {
    for (double e : eps_sorted) {
      auto p = diag::positivity_report(bundle, e, cfg.dense_cap);
      diag::BoundReport row;
      row.statement = "positivity-min-fov";
      row.method = "FEPS_T";
      row.epsilon = e;
      row.measured = -p.min_fov;
      row.theoretical = 1e-10;
      row.slack = row.measured != 0
                      ? row.theoretical / row.measured
                      : std::numeric_limits<double>::infinity();
      row.asserted = e == eps_sorted.back();  // smallest swept epsilon
      row.pass = p.pass;
      bounds.push_back(row);
      positivity.push_back(p);
    }
  }
  manifest.stage_ms.emplace_back("diagnostics", elapsed_ms(t0));

  t0 = std::chrono::steady_clock::now();
  const auto table = diag::solver_table(bundle, methods, cfg.tol, cfg.max_iter);
  manifest.stage_ms.emplace_back("solver_table", elapsed_ms(t0));

  manifest.all_asserted_pass = true;
  for (const auto& r : bounds)
    if (r.asserted && !r.pass) manifest.all_asserted_pass = false;

  // constants.json
  t0 = std::chrono::steady_clock::now();
  json jk;
  jk["nu"] = constants.nu;
  jk["rho_mu"] = constants.rho_mu;
  jk["C_E"] = constants.c_e;
  jk["C_F"] = constants.c_f;
  jk["norm_E"] = constants.norm_E;
  jk["norm_F"] = constants.norm_F;
  jk["norm_Fov"] = constants.norm_Fov;
  jk["norm_FovFhat"] = constants.norm_FovFhat;
  jk["cos_alpha_E"] = constants.cos_alpha_E;
  jk["cos_alpha_F"] = constants.cos_alpha_F;
  jk["cos_beta_EF"] = constants.cos_beta_EF;
  jk["beta_E"] = constants.beta_E;
  jk["beta_F"] = constants.beta_F;
  jk["norm_QE"] = constants.norm_QE;
  jk["cut_lipschitz_times_delta"] = constants.max_grad_eta_times_delta;
  jk["mu"] = std::vector<std::vector<double>>();
  for (Eigen::Index i = 0; i < constants.mu.rows(); ++i) {
    std::vector<double> row(constants.mu.cols());
    for (Eigen::Index j = 0; j < constants.mu.cols(); ++j)
      row[j] = constants.mu(i, j);
    jk["mu"].push_back(row);
  }
  for (const auto& ent : constants.eps) {
    json je;
    je["eps"] = ent.eps;
    je["r0"] = ent.r0;
    je["r1"] = ent.r1;
    je["norm_Feps"] = ent.norm_Feps;
    je["norm_Fhat_eps"] = ent.norm_Fhat_eps;
    je["cos_beta_EFeps"] = ent.cos_beta_EFeps;
    je["wielandt"] = {{"m", ent.wielandt_m},
                      {"M", ent.wielandt_M},
                      {"bound", ent.wielandt_bound},
                      {"worst_ratio", ent.wielandt_worst}};
    jk["epsilon"].push_back(je);
  }
  for (const auto& p : positivity) {
    json jp;
    jp["eps"] = p.eps;
    jp["m"] = p.m;
    jp["M"] = p.big_m;
    jp["multiplier"] = p.multiplier;
    jp["tan_theta"] = p.tan_theta;
    jp["alpha_R"] = p.alpha_r;
    jp["min_fov"] = p.min_fov;
    jp["pass"] = p.pass;
    jk["positivity"].push_back(jp);
  }
  for (size_t i = 0; i < methods.size(); ++i) {
    json jm;
    jm["method"] = ops::method_name(methods[i]);
    jm["epsilon"] =
        methods[i].kind == ops::MethodKind::kFepsT ? methods[i].epsilon : 0.0;
    jm["kappa_aa"] = spectra[i].kappa_aa;
    jm["norm_aa"] = spectra[i].norm_aa;
    jm["norm_inv_aa"] = spectra[i].norm_inv_aa;
    jm["spectral_kappa"] = spectra[i].spectral_kappa;
    jm["min_fov"] = spectra[i].min_fov;
    jk["methods"].push_back(jm);
  }

  const std::string constants_body = jk.dump(2) + "\n";
  const std::string bounds_body = bounds_csv(bounds);
  const std::string solver_body = solver_csv(table);

  auto emit = [&](const std::string& name, const std::string& body) {
    write_file(out / name, body);
    char digest[24];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(body)));
    manifest.files.emplace_back(name, digest);
  };
  emit("constants.json", constants_body);
  emit("bounds.csv", bounds_body);
  for (size_t i = 0; i < methods.size(); ++i)
    emit(spectrum_file_name(methods[i]), spectrum_csv(spectra[i]));
  emit("solver_table.csv", solver_body);
  manifest.stage_ms.emplace_back("io", elapsed_ms(t0));

  json jm;
  jm["version"] = manifest.version;
  jm["config"] = config_to_json(cfg);
  jm["all_asserted_pass"] = manifest.all_asserted_pass;
  for (const auto& [stage, ms] : manifest.stage_ms) jm["stages_ms"][stage] = ms;
  for (const auto& [name, digest] : manifest.files)
    jm["files"].push_back({{"name", name}, {"digest", digest}});
  write_file(out / "manifest.json", jm.dump(2) + "\n");
  return manifest;
}

std::string summarize(const std::filesystem::path& manifest_file) {
  const json jm = json::parse(read_file(manifest_file));
  const auto dir = manifest_file.parent_path();
  const json jk = json::parse(read_file(dir / "constants.json"));

  // Bound per method from bounds.csv: the kappa row when present.
  std::map<std::pair<std::string, double>, std::pair<double, double>> bound;
  {
    std::istringstream in(read_file(dir / "bounds.csv"));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::istringstream ls(line);
      std::string tok;
      while (std::getline(ls, tok, ',')) f.push_back(tok);
      if (f.size() < 8) continue;
      const std::string& st = f[0];
      if (st == "as-spectral-kappa" || st == "kappa-eps-limit" ||
          st == "kappa-theorem21")
        bound[{f[1], std::stod(f[2])}] = {std::stod(f[3]), std::stod(f[4])};
    }
  }
  std::map<std::pair<std::string, double>, int> gmres_iters;
  {
    std::istringstream in(read_file(dir / "solver_table.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::istringstream ls(line);
      std::string tok;
      while (std::getline(ls, tok, ',')) f.push_back(tok);
      if (f.size() < 7 || f[2] != "GMRES") continue;
      gmres_iters[{f[0], std::stod(f[1])}] = std::stoi(f[3]);
    }
  }

  char buf[256];
  std::string s;
  std::snprintf(buf, sizeof buf, "%-14s %-8s %12s %12s %8s %8s %12s\n",
                "method", "eps", "kappa", "bound", "slack", "it(GM)",
                "min_fov");
  s += buf;
  if (!jk.contains("methods")) return s;
  for (const auto& jmeth : jk["methods"]) {
    const std::string name = jmeth["method"];
    const double eps = jmeth["epsilon"];
    const double kappa = jmeth["kappa_aa"];
    auto it = bound.find({name, eps});
    std::string bound_s = "-", slack_s = "-";
    if (it != bound.end()) {
      std::snprintf(buf, sizeof buf, "%.4g", it->second.second);
      bound_s = buf;
      std::snprintf(buf, sizeof buf, "%.3g",
                    it->second.second / std::max(1e-300, it->second.first));
      slack_s = buf;
    }
    auto gi = gmres_iters.find({name, eps});
    const std::string iters =
        gi == gmres_iters.end() ? "-" : std::to_string(gi->second);
    std::snprintf(buf, sizeof buf, "%-14s %-8g %12.5g %12s %8s %8s %12.3g\n",
                  name.c_str(), eps, kappa, bound_s.c_str(), slack_s.c_str(),
                  iters.c_str(), double(jmeth["min_fov"]));
    s += buf;
  }
  return s;
}

}  // namespace schwarzlab::cli
