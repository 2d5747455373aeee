#include "msqp/cli.hpp"

#include "msqp/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace msqp {

namespace {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

RetractionKind parse_retraction(const std::string& name) {
  if (name == "projection") return RetractionKind::Projection;
  if (name == "exponential") return RetractionKind::Exponential;
  throw UsageError("unknown retraction '" + name + "' (use projection|exponential)");
}

RunSpec::Mode parse_mode(const std::string& name) {
  if (name == "composite") return RunSpec::Mode::Composite;
  if (name == "local") return RunSpec::Mode::Local;
  throw UsageError("unknown mode '" + name + "' (use composite|local)");
}

Eigen::Vector3d parse_force(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("malformed --force component '" + item + "'");
    }
  }
  if (parts.size() != 3) throw UsageError("--force needs exactly 3 comma-separated components");
  return Eigen::Vector3d(parts[0], parts[1], parts[2]);
}

void apply_config_file(RunSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed config file '" + path + "': " + e.what());
  }
  try {
    if (j.contains("nodes")) spec.nodes = j["nodes"].get<int>();
    if (j.contains("sigma")) spec.sigma = j["sigma"].get<double>();
    if (j.contains("force")) {
      auto f = j["force"].get<std::vector<double>>();
      if (f.size() != 3) throw UsageError("config 'force' needs 3 components");
      spec.force = Eigen::Vector3d(f[0], f[1], f[2]);
    }
    if (j.contains("radius")) spec.radius = j["radius"].get<double>();
    if (j.contains("pitch_a")) spec.pitch_a = j["pitch_a"].get<double>();
    if (j.contains("model_retraction"))
      spec.model_retraction = parse_retraction(j["model_retraction"].get<std::string>());
    if (j.contains("update_retraction"))
      spec.update_retraction = parse_retraction(j["update_retraction"].get<std::string>());
    if (j.contains("mode")) spec.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("max_iter")) spec.solver.max_iter = j["max_iter"].get<int>();
    if (j.contains("tol_dx")) spec.solver.tol_dx = j["tol_dx"].get<double>();
    if (j.contains("tol_feas")) spec.solver.tol_feas = j["tol_feas"].get<double>();
    if (j.contains("theta_aim")) spec.solver.theta_aim = j["theta_aim"].get<double>();
    if (j.contains("theta_acc")) spec.solver.theta_acc = j["theta_acc"].get<double>();
    if (j.contains("rho_ellbow")) spec.solver.rho_ellbow = j["rho_ellbow"].get<double>();
    if (j.contains("eta_lo")) spec.solver.eta_lo = j["eta_lo"].get<double>();
    if (j.contains("eta_hat")) spec.solver.eta_hat = j["eta_hat"].get<double>();
    if (j.contains("omega_c_init")) spec.solver.omega_c_init = j["omega_c_init"].get<double>();
    if (j.contains("omega_f_init")) spec.solver.omega_f_init = j["omega_f_init"].get<double>();
    if (j.contains("hybrid_model")) spec.solver.hybrid_model = j["hybrid_model"].get<int>() != 0;
    if (j.contains("history")) spec.history_path = j["history"].get<std::string>();
    if (j.contains("solution")) spec.solution_path = j["solution"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("bad value in config file '" + path + "': " + e.what());
  }
}

}  // namespace

RunSpec parse_run_spec(const std::vector<std::string>& args) {
  RunSpec spec;

  // The config file provides defaults, flags override; peek at --config first.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      apply_config_file(spec, args[i + 1]);
    }
  }

  CLI::App app{"inextensible elastic rod benchmark"};
  std::string force_text, model_text, update_text, mode_text, config_path;
  int hybrid_flag = -1;

  app.add_option("--nodes", spec.nodes, "number of grid intervals");
  app.add_option("--sigma", spec.sigma, "flexural stiffness");
  app.add_option("--force", force_text, "constant load vector f,f,f");
  app.add_option("--radius", spec.radius, "helix radius");
  app.add_option("--pitch-a", spec.pitch_a, "helix pitch parameter");
  app.add_option("--model-retraction", model_text, "projection|exponential");
  app.add_option("--update-retraction", update_text, "projection|exponential");
  app.add_option("--mode", mode_text, "composite|local");
  app.add_option("--max-iter", spec.solver.max_iter, "iteration limit");
  app.add_option("--tol-dx", spec.solver.tol_dx, "step-norm tolerance");
  app.add_option("--tol-feas", spec.solver.tol_feas, "feasibility tolerance");
  app.add_option("--theta-aim", spec.solver.theta_aim, "desired Newton contraction");
  app.add_option("--theta-acc", spec.solver.theta_acc, "contraction acceptance bound");
  app.add_option("--rho-ellbow", spec.solver.rho_ellbow, "normal-step ellbow factor");
  app.add_option("--eta-lo", spec.solver.eta_lo, "decrease-test threshold");
  app.add_option("--eta-hat", spec.solver.eta_hat, "omega_f freeze threshold");
  app.add_option("--omega-c-init", spec.solver.omega_c_init, "initial [omega_c]");
  app.add_option("--omega-f-init", spec.solver.omega_f_init, "initial [omega_f]");
  app.add_option("--hybrid-model", hybrid_flag, "force the hybrid model (0|1)");
  app.add_option("--history", spec.history_path, "iteration history CSV path");
  app.add_option("--solution", spec.solution_path, "solution CSV path");
  app.add_option("--config", config_path, "JSON config file");

  std::vector<const char*> argv;
  argv.push_back("rodsolve");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (!force_text.empty()) spec.force = parse_force(force_text);
  if (!model_text.empty()) spec.model_retraction = parse_retraction(model_text);
  if (!update_text.empty()) spec.update_retraction = parse_retraction(update_text);
  if (!mode_text.empty()) spec.mode = parse_mode(mode_text);
  if (hybrid_flag != -1) {
    if (hybrid_flag != 0 && hybrid_flag != 1) throw UsageError("--hybrid-model takes 0 or 1");
    spec.solver.hybrid_model = hybrid_flag == 1;
  }
  if (spec.nodes < 2) throw UsageError("--nodes must be at least 2");
  try {
    spec.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

namespace {

void write_history(const std::string& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write history file '" + path + "'");
  out << "iter,nu,tau,norm_dn,norm_dt,norm_dx,norm_ds,omega_c,omega_f,f,feasibility,eta,accepted\n";
  for (const IterationRecord& r : history) {
    out << r.iter << ',' << fmt(r.nu) << ',' << fmt(r.tau) << ',' << fmt(r.norm_dn) << ','
        << fmt(r.norm_dt) << ',' << fmt(r.norm_dx) << ',' << fmt(r.norm_ds) << ','
        << fmt(r.omega_c) << ',' << fmt(r.omega_f) << ',' << fmt(r.f_value) << ','
        << fmt(r.feasibility) << ',' << fmt(r.eta) << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

void write_solution(const std::string& path, const RodConfig& cfg, const ProductPoint& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write solution file '" + path + "'");
  out << "s,y1,y2,y3,v1,v2,v3\n";
  auto row = [&](int i, const Eigen::Vector3d& y, const Eigen::Vector3d& v) {
    out << fmt(static_cast<double>(i) / cfg.n) << ',' << fmt(y[0]) << ',' << fmt(y[1]) << ','
        << fmt(y[2]) << ',' << fmt(v[0]) << ',' << fmt(v[1]) << ',' << fmt(v[2]) << '\n';
  };
  row(0, cfg.y_a, cfg.v_a.v);
  for (int i = 1; i < cfg.n; ++i)
    row(i, x.euclidean[static_cast<std::size_t>(i - 1)], x.sphere[static_cast<std::size_t>(i - 1)].v);
  row(cfg.n, cfg.y_b, cfg.v_b.v);
}

}  // namespace

int run_and_emit(const RunSpec& spec) {
  RodConfig cfg = RodConfig::helix(spec.nodes, spec.sigma, spec.force, spec.radius, spec.pitch_a);
  RodState state = helix_initial(cfg);
  auto oracle =
      assemble_problem_oracle(cfg, state, spec.model_retraction, spec.update_retraction);

  SolveResult result;
  if (spec.mode == RunSpec::Mode::Composite) {
    result = composite_step_solve(std::move(oracle), spec.solver);
  } else {
    result = local_sqp_solve(std::move(oracle), spec.solver.tol_dx, spec.solver.max_iter);
  }

  write_history(spec.history_path, result.history);
  write_solution(spec.solution_path, cfg, *result.oracle->point());

  if (result.status == SolveStatus::Converged) {
    std::printf("converged in %d iterations, f=%s, feas=%s\n", result.accepted_steps,
                fmt(result.f_value).c_str(), fmt(result.feasibility).c_str());
    return 0;
  }
  const char* reason =
      result.status == SolveStatus::StallDetected ? "stall detected" : "max iterations reached";
  std::printf("not converged (%s) after %d iterations, f=%s, feas=%s\n", reason,
              result.accepted_steps, fmt(result.f_value).c_str(), fmt(result.feasibility).c_str());
  return 2;
}

}  // namespace msqp
