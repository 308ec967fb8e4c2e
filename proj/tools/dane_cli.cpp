// Experiment runner: builds a problem, shards it over a simulated
// cluster, runs one of the solvers and emits a CSV trace plus a JSON
// sidecar with the full configuration and reference optimum.
//
// Exit codes: 0 ok, 2 config error, 3 non-convergence, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dane/analysis.hpp"
#include "dane/data.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dane;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string problem = "synthetic-ridge";  // synthetic-ridge | synthetic-hinge | libsvm
  std::string data_path;                    // for problem=libsvm
  std::string algorithm = "dane";  // dane | dane-single | osa | osa-bc | dgd | admm | newton
  int m = 4;
  long n_total = 4096;
  int d = 50;
  double reg = 0.005;
  double eta = 1.0;
  double mu = 0.0;
  double penalty = 1.0;
  double stepsize = 0.1;
  double r = 0.5;
  double margin = 4.0;
  std::uint64_t seed = 1;
  long max_iters = 100;
  double target_subopt = -1.0;
  double target_grad_norm = -1.0;
  std::string out = "trace";
  bool timings = false;

  std::string canonical() const {
    std::ostringstream s;
    s.precision(17);
    s << "problem=" << problem << ";data=" << data_path << ";algorithm=" << algorithm
      << ";m=" << m << ";n_total=" << n_total << ";d=" << d << ";reg=" << reg << ";eta=" << eta
      << ";mu=" << mu << ";penalty=" << penalty << ";stepsize=" << stepsize << ";r=" << r
      << ";margin=" << margin << ";seed=" << seed << ";max_iters=" << max_iters
      << ";target_subopt=" << target_subopt << ";target_grad_norm=" << target_grad_norm;
    return s.str();
  }
};

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

json config_json(const ExperimentConfig& c) {
  return json{{"problem", c.problem},       {"data", c.data_path},
              {"algorithm", c.algorithm},   {"m", c.m},
              {"n_total", c.n_total},       {"d", c.d},
              {"reg", c.reg},               {"eta", c.eta},
              {"mu", c.mu},                 {"penalty", c.penalty},
              {"stepsize", c.stepsize},     {"r", c.r},
              {"margin", c.margin},         {"seed", c.seed},
              {"max_iters", c.max_iters},   {"target_subopt", c.target_subopt},
              {"target_grad_norm", c.target_grad_norm}};
}

fs::path resolve_out(const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("DANE_OUT_DIR")) return fs::path(dir) / p;
  return p;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dane") return Algorithm::dane;
  if (name == "dane-single") return Algorithm::dane_single;
  if (name == "osa") return Algorithm::osa;
  if (name == "osa-bc") return Algorithm::osa_bc;
  if (name == "dgd") return Algorithm::dgd;
  if (name == "admm") return Algorithm::admm;
  if (name == "newton") return Algorithm::newton;
  throw CLI::ValidationError("unknown algorithm: " + name);
}

Cluster build_cluster(const ExperimentConfig& c) {
  Dataset ds;
  Cluster::ObjectiveBuilder builder;
  if (c.problem == "synthetic-ridge") {
    ds = generate_synthetic_regression(static_cast<int>(c.n_total), c.d, c.seed);
    const double reg = c.reg;
    builder = [reg](const Dataset& shard) {
      return quadratic_from_ridge(shard.features, shard.targets, reg);
    };
  } else if (c.problem == "synthetic-hinge") {
    ds = generate_synthetic_classification(static_cast<int>(c.n_total), c.d, c.seed, c.margin);
    const double reg = c.reg;
    builder = [reg](const Dataset& shard) {
      return std::make_shared<SmoothHingeGLM>(shard.features, shard.labels(), reg);
    };
  } else if (c.problem == "libsvm") {
    LibsvmOptions opt;
    opt.map_labels = true;
    try {
      ds = read_libsvm(c.data_path, opt);
    } catch (const std::runtime_error& e) {
      throw std::ios_base::failure(e.what());  // unreadable or malformed input file
    }
    const double reg = c.reg;
    builder = [reg](const Dataset& shard) {
      return std::make_shared<SmoothHingeGLM>(shard.features, shard.labels(), reg);
    };
  } else {
    throw CLI::ValidationError("unknown problem: " + c.problem);
  }
  return Cluster(partition(ds, c.m, c.seed + 1), builder);
}

void write_trace_csv(const fs::path& path, const Trace& trace, const std::string& hash,
                     bool timings) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string());
  out << "# config_hash=" << hash << "\n";
  out << "iter,comm_rounds,objective,subopt,grad_norm,dist_to_opt,wall_ms\n";
  for (const TraceRow& r : trace.rows) {
    // wall_ms stays 0 unless timings were requested, so that reruns of
    // the same config produce byte-identical CSV output
    out << r.iter << ',' << r.comm_rounds << ',' << fmt(r.objective) << ',' << fmt(r.subopt) << ','
        << fmt(r.grad_norm) << ',' << fmt(r.dist_to_opt) << ',' << fmt(timings ? r.wall_ms : 0.0)
        << "\n";
  }
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

int run_experiment(const ExperimentConfig& c, const fs::path& csv_path, const fs::path& json_path,
                   long* iters_to_target = nullptr) {
  Cluster cluster = build_cluster(c);
  RunConfig rc;
  rc.algorithm = parse_algorithm(c.algorithm);
  rc.dane.eta = c.eta;
  rc.dane.mu = c.mu;
  rc.dgd_stepsize = c.stepsize;
  rc.admm_penalty = c.penalty;
  rc.osa_r = c.r;
  rc.seed = c.seed;
  StopRule stop;
  stop.max_iters = c.max_iters;
  stop.target_subopt = c.target_subopt;
  stop.target_grad_norm = c.target_grad_norm;

  const Trace trace = run(cluster, rc, stop);
  const std::string hash = fnv1a_hex(c.canonical());
  write_trace_csv(csv_path, trace, hash, c.timings);

  json sidecar;
  sidecar["config"] = config_json(c);
  sidecar["config_hash"] = hash;
  sidecar["reference_value"] = trace.reference_value;
  sidecar["converged"] = trace.converged;
  sidecar["diverged"] = trace.diverged;
  sidecar["final_subopt"] = trace.rows.back().subopt;
  sidecar["comm_rounds"] = trace.rows.back().comm_rounds;
  sidecar["total_wall_ms"] = trace.rows.back().wall_ms;
  if (cluster.all_quadratic() &&
      (rc.algorithm == Algorithm::dane || rc.algorithm == Algorithm::dane_single)) {
    std::vector<Matrix> H;
    for (int i = 0; i < cluster.machine_count(); ++i) H.push_back(*cluster.machine(i).hessian());
    const ContractionReport rep =
        contraction_report(H, c.eta, c.mu, trace, 0.1, c.n_total / c.m);
    sidecar["contraction"] = {{"predicted", rep.predicted},
                              {"measured_per_iter", rep.measured_per_iter},
                              {"beta", rep.beta},
                              {"lemma3_bound", rep.lemma3_bound_value},
                              {"lambda_min", rep.lambda_min},
                              {"L_max", rep.L_max}};
  }
  {
    std::ofstream out(json_path);
    if (!out) throw std::ios_base::failure("cannot open " + json_path.string());
    out << sidecar.dump(2) << "\n";
    if (!out) throw std::ios_base::failure("write failed: " + json_path.string());
  }
  if (iters_to_target)
    *iters_to_target = c.target_subopt >= 0 ? trace.iters_to_subopt(c.target_subopt) : -1;
  if (trace.diverged) return 3;
  if (c.target_subopt >= 0 && !trace.converged) return 3;
  return 0;
}

void add_config_options(CLI::App* cmd, ExperimentConfig& c) {
  cmd->fallthrough();  // lets --config reach the app-level handler
  cmd->add_option("--problem", c.problem, "synthetic-ridge | synthetic-hinge | libsvm");
  cmd->add_option("--data", c.data_path, "LIBSVM file (problem=libsvm)");
  cmd->add_option("--algorithm", c.algorithm,
                  "dane | dane-single | osa | osa-bc | dgd | admm | newton");
  cmd->add_option("--m", c.m, "number of machines")->check(CLI::PositiveNumber);
  cmd->add_option("--n-total", c.n_total, "total sample size")->check(CLI::PositiveNumber);
  cmd->add_option("--d", c.d, "dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--reg", c.reg, "regularization coefficient")->check(CLI::NonNegativeNumber);
  cmd->add_option("--eta", c.eta, "DANE learning rate");
  cmd->add_option("--mu", c.mu, "DANE regularizer")->check(CLI::NonNegativeNumber);
  cmd->add_option("--penalty", c.penalty, "ADMM penalty")->check(CLI::PositiveNumber);
  cmd->add_option("--stepsize", c.stepsize, "DGD stepsize")->check(CLI::PositiveNumber);
  cmd->add_option("--r", c.r, "bias-correction subsample fraction");
  cmd->add_option("--margin", c.margin, "classification noise margin");
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--max-iters", c.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--target-subopt", c.target_subopt, "stop at this suboptimality");
  cmd->add_option("--target-grad-norm", c.target_grad_norm, "stop at this gradient norm");
  cmd->add_option("--out", c.out, "output path stem");
  cmd->add_flag("--timings", c.timings, "record wall-clock times in the CSV");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DANE distributed-optimization experiment runner"};
  app.require_subcommand(1);
  // INI-style config file; keys live in a section named after the
  // subcommand, e.g. [run] m=4. Command-line flags override the file.
  app.set_config("--config");

  ExperimentConfig cfg;
  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment and write a trace");
  add_config_options(cmd_run, cfg);

  ExperimentConfig sweep_cfg;
  std::string sweep_axis = "n_total";
  std::vector<long> sweep_values;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a sweep over n_total or m");
  add_config_options(cmd_sweep, sweep_cfg);
  cmd_sweep->add_option("--axis", sweep_axis, "n_total | m");
  cmd_sweep->add_option("--values", sweep_values, "axis values");

  long lb_n = 100;
  double lb_lam = 0.0;  // 0 = use 1/(10 sqrt(n))
  std::vector<int> lb_m = {1, 4, 16, 64};
  long lb_trials = 5000;
  std::uint64_t lb_seed = 1;
  bool lb_bias_corrected = false;
  std::string lb_out = "lowbound";
  CLI::App* cmd_lowbound =
      app.add_subcommand("lowbound", "one-shot-averaging lower-bound Monte Carlo study");
  cmd_lowbound->fallthrough();
  cmd_lowbound->add_option("--n", lb_n, "samples per machine")->check(CLI::PositiveNumber);
  cmd_lowbound->add_option("--lam", lb_lam, "strong-convexity parameter (default 1/(10 sqrt(n)))");
  cmd_lowbound->add_option("--m-values", lb_m, "machine counts");
  cmd_lowbound->add_option("--trials", lb_trials, "Monte Carlo trials");
  cmd_lowbound->add_option("--seed", lb_seed, "RNG seed");
  cmd_lowbound->add_flag("--bias-corrected", lb_bias_corrected,
                         "also run the bias-corrected estimate");
  cmd_lowbound->add_option("--out", lb_out, "output path stem");

  CLI::App* cmd_version = app.add_subcommand("version", "print version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_version->parsed()) {
      std::cout << "dane_cli " << kVersion << "\n";
      return 0;
    }

    if (cmd_run->parsed()) {
      const fs::path stem = resolve_out(cfg.out);
      return run_experiment(cfg, stem.string() + ".csv", stem.string() + ".json");
    }

    if (cmd_sweep->parsed()) {
      if (sweep_values.empty()) {
        std::cerr << "sweep: --values must not be empty\n";
        return 2;
      }
      if (sweep_axis != "n_total" && sweep_axis != "m") {
        std::cerr << "sweep: --axis must be n_total or m\n";
        return 2;
      }
      const fs::path stem = resolve_out(sweep_cfg.out);
      std::ostringstream summary;
      summary << "value,iters_to_target,final_subopt,predicted_contraction\n";
      int worst = 0;
      for (long v : sweep_values) {
        ExperimentConfig c = sweep_cfg;
        if (sweep_axis == "n_total")
          c.n_total = v;
        else
          c.m = static_cast<int>(v);
        const std::string tag = stem.string() + "_" + sweep_axis + "_" + std::to_string(v);
        long iters = -1;
        const int code = run_experiment(c, tag + ".csv", tag + ".json", &iters);
        worst = std::max(worst, code);
        std::ifstream sidecar(tag + ".json");
        json j;
        sidecar >> j;
        summary << v << ',' << iters << ',' << fmt(j["final_subopt"].get<double>()) << ','
                << (j.contains("contraction") ? fmt(j["contraction"]["predicted"].get<double>())
                                              : std::string("nan"))
                << "\n";
      }
      std::ofstream out(stem.string() + "_summary.csv");
      if (!out) throw std::ios_base::failure("cannot open summary csv");
      out << "# config_hash=" << fnv1a_hex(sweep_cfg.canonical()) << "\n" << summary.str();
      return worst;
    }

    if (cmd_lowbound->parsed()) {
      if (lb_trials < 100) {
        std::cerr << "lowbound: --trials must be >= 100\n";
        return 2;
      }
      const double lam = lb_lam > 0 ? lb_lam : 1.0 / (10.0 * std::sqrt(static_cast<double>(lb_n)));
      const fs::path stem = resolve_out(lb_out);
      std::ofstream csv(stem.string() + ".csv");
      if (!csv) throw std::ios_base::failure("cannot open lowbound csv");
      std::ostringstream key;
      key.precision(17);
      key << "lowbound;n=" << lb_n << ";lam=" << lam << ";trials=" << lb_trials
          << ";seed=" << lb_seed;
      csv << "# config_hash=" << fnv1a_hex(key.str()) << "\n";
      csv << "m,n,lam,trials,mean_single_machine_erm,se_single_machine_erm,mean_osa,"
             "mean_pooled_erm,mse_osa,mse_pooled,wstar\n";
      json j;
      j["reports"] = json::array();
      for (int m : lb_m) {
        const LowerBoundReport rep = lowbound_experiment(lb_n, m, lam, lb_trials, lb_seed);
        csv << m << ',' << rep.n << ',' << fmt(rep.lam) << ',' << rep.trials << ','
            << fmt(rep.mean_single_machine_erm) << ',' << fmt(rep.se_single_machine_erm) << ','
            << fmt(rep.mean_osa) << ',' << fmt(rep.mean_pooled_erm) << ',' << fmt(rep.mse_osa)
            << ',' << fmt(rep.mse_pooled) << ',' << fmt(rep.wstar) << "\n";
        j["reports"].push_back({{"m", m},
                                {"n", rep.n},
                                {"lam", rep.lam},
                                {"trials", rep.trials},
                                {"mean_single_machine_erm", rep.mean_single_machine_erm},
                                {"se_single_machine_erm", rep.se_single_machine_erm},
                                {"mean_osa", rep.mean_osa},
                                {"mean_pooled_erm", rep.mean_pooled_erm},
                                {"mse_osa", rep.mse_osa},
                                {"mse_pooled", rep.mse_pooled},
                                {"wstar", rep.wstar}});
      }
      if (lb_bias_corrected) {
        const BiasCorrectedReport bc = lowbound_bias_corrected(lb_n, lb_trials, lb_seed);
        j["bias_corrected"] = {{"n", bc.n},
                               {"trials", bc.trials},
                               {"lam", bc.lam},
                               {"mean_combined", bc.mean_combined},
                               {"se_combined", bc.se_combined},
                               {"mean_full", bc.mean_full},
                               {"mean_half", bc.mean_half},
                               {"wstar", bc.wstar}};
      }
      j["config_hash"] = fnv1a_hex(key.str());
      std::ofstream jf(stem.string() + ".json");
      jf << j.dump(2) << "\n";
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
