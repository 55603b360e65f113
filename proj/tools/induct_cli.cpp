// Command-line front door: builds induction-head transformers, runs the
// gradient-flow and SGD experiments, probes representations, fits memory
// kernels, and runs the acceptance suite.
//
// Exit codes: 0 success, 1 validation error, 2 acceptance failure.

#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "induct/acceptance.hpp"
#include "induct/constructor.hpp"
#include "induct/dynamics.hpp"
#include "induct/io.hpp"
#include "induct/targets.hpp"
#include "induct/trainer.hpp"
#include "induct/transformer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace induct;

namespace {

struct CommonOpts {
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::string out_dir = "out";
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--seed", opts->seed, "RNG seed (printed and recorded)");
  cmd->add_option("--jobs", opts->jobs, "parallel workers for sweeps");
  cmd->add_option("--out", opts->out_dir, "output directory");
  cmd->add_option("--config", opts->config_file, "JSON config file overriding flags");
}

json load_config(const CommonOpts& opts) {
  if (opts.config_file.empty()) return json::object();
  return json::parse(read_text_file(opts.config_file));
}

std::vector<Real> parse_list(const std::string& csv) {
  std::vector<Real> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("empty sweep list");
  return out;
}

// Fan a sweep out over worker threads; results land by index.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

int cmd_construct(const CommonOpts& opts, const std::string& target, const std::string& sweep, int n, int H,
                  std::size_t K, std::size_t M, std::size_t n_samples, std::size_t L) {
  const fs::path dir(opts.out_dir);
  json cfg{{"target", target}, {"sweep", sweep}, {"n", n},         {"H", H},
           {"K", K},           {"M", M},         {"L", L},         {"n_samples", n_samples},
           {"seed", opts.seed}};
  write_manifest(dir, "construct", cfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  if (target == "ih2") {
    const std::vector<Real> p1s = parse_list(sweep);
    const Matrix w_star = Matrix::identity(2);
    std::vector<Real> errs(p1s.size());
    std::vector<std::string> jsons(p1s.size());
    parallel_for(p1s.size(), opts.jobs, [&](std::size_t i) {
      const TransformerParams tf = build_ih2(w_star, p1s[i]);
      Rng rng(opts.seed);
      errs[i] = approx_error(IH2Target{w_star}, tf, L, std::numeric_limits<Real>::infinity(), n_samples,
                             Dist::boolean, rng);
      jsons[i] = transformer_to_json(tf);
    });
    CsvWriter csv(dir / "ih2_sweep.csv", {"p1", "sup_error", "bound"});
    for (std::size_t i = 0; i < p1s.size(); ++i) {
      csv.row({p1s[i], errs[i], 2.0 * entry_abs_sum(w_star) * std::exp(-p1s[i])});
      write_text_file(dir / ("ih2_p1_" + std::to_string(i) + ".json"), jsons[i]);
    }
    std::cout << "wrote " << (dir / "ih2_sweep.csv") << "\n";
    return 0;
  }
  if (target == "ihn") {
    const std::vector<Real> hs = sweep.empty() ? std::vector<Real>{static_cast<Real>(H)} : parse_list(sweep);
    const Matrix w_star = Matrix::identity((n - 1));
    CsvWriter csv(dir / "ihn_sweep.csv", {"H", "sup_error", "patch_error", "sum_kernel_l1"});
    for (Real hv : hs) {
      const int Hcur = static_cast<int>(hv);
      if (Hcur < n - 1) {
        std::cerr << "H=" << Hcur << " refused: fewer heads than lags (n-1=" << n - 1
                  << "); trivial error bound 1 applies\n";
        return 1;
      }
      const std::vector<KernelFit> fits = fit_kernels(n, Hcur, static_cast<int>(4 * L));
      Real sum_l1 = 0.0;
      for (const KernelFit& f : fits) sum_l1 += f.ell1_error;
      const TransformerParams tf = build_ihn(n, w_star, fits);
      Rng rng(opts.seed);
      const Real err = approx_error(IHnTarget{n, w_star}, tf, L, std::numeric_limits<Real>::infinity(),
                                    n_samples, Dist::boolean, rng);
      Rng rng2(opts.seed);
      std::vector<Matrix> seqs;
      for (std::size_t i = 0; i < std::min<std::size_t>(n_samples, 1000); ++i)
        seqs.push_back(sample_sequence(Dist::boolean, rng2, 1, L));
      csv.row({static_cast<Real>(Hcur), err, measure_patch_error(tf, n, seqs), sum_l1});
    }
    std::cout << "wrote " << (dir / "ihn_sweep.csv") << "\n";
    return 0;
  }
  if (target == "gihn") {
    const PODSpec pod = synthetic_pod(1.0, 16, static_cast<std::size_t>(n - 1));
    Rng rng(opts.seed);
    const TransformerParams tf = build_gihn_auto(n, 1, pod, K, M, H, static_cast<int>(4 * L), rng);
    Rng mc(opts.seed + 1);
    const GihnErrorTerms terms =
        measure_gihn_decomposition(tf, n, 1, pod, K, L, n_samples, Dist::uniform01, mc);
    CsvWriter csv(dir / "gihn_error.csv", {"H", "M", "K", "l2_error", "term_ffn", "term_patch", "term_trunc"});
    csv.row({static_cast<Real>(H), static_cast<Real>(M), static_cast<Real>(K), terms.total, terms.term_ffn,
             terms.term_patch, terms.term_trunc});
    write_text_file(dir / "gihn_model.json", transformer_to_json(tf));
    std::cout << "wrote " << (dir / "gihn_error.csv") << "\n";
    return 0;
  }
  std::cerr << "unknown --target (want ih2|ihn|gihn)\n";
  return 1;
}

int cmd_gf(const CommonOpts& opts, bool defaults, const std::string& sweep_spec, GFParams prm, Real dt,
           Real t_end_mul) {
  const fs::path dir(opts.out_dir);
  json cfg{{"alpha_star", prm.alpha_star}, {"w_star", prm.w_star},   {"sigma_init", prm.sigma_init},
           {"L", prm.L},                   {"dt", dt},               {"t_end_mul", t_end_mul},
           {"sweep", sweep_spec},          {"defaults", defaults},   {"seed", opts.seed}};
  write_manifest(dir, "gf", cfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  if (!sweep_spec.empty()) {
    const auto eq = sweep_spec.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("sweep must look like L=20,40,80");
    const std::string key = sweep_spec.substr(0, eq);
    const std::vector<Real> vals = parse_list(sweep_spec.substr(eq + 1));
    std::vector<PhaseReport> reps(vals.size());
    parallel_for(vals.size(), opts.jobs, [&](std::size_t i) {
      GFParams p = prm;
      if (key == "L")
        p.L = static_cast<int>(vals[i]);
      else if (key == "sigma_init")
        p.sigma_init = vals[i];
      else if (key == "alpha_star")
        p.alpha_star = vals[i];
      else if (key == "w_star")
        p.w_star = vals[i];
      else
        throw CLI::ValidationError("unknown sweep key " + key);
      reps[i] = detect_phases(integrate_gf_default(p, dt));
    });
    CsvWriter csv(dir / "gf_sweep.csv", {"value", "T_I", "T_o", "T_II", "T_III", "growth_rate"});
    std::vector<Real> xs, ys;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const PhaseReport& r = reps[i];
      csv.row({vals[i], r.t_i.value_or(-1), r.t_o.value_or(-1), r.t_ii.value_or(-1), r.t_iii.value_or(-1),
               r.growth_rate});
      if (r.t_ii) {
        xs.push_back(key == "sigma_init" ? std::log(1.0 / vals[i]) : vals[i]);
        ys.push_back(*r.t_ii);
      }
    }
    if (xs.size() >= 2) {
      const LineFit f = line_fit(xs, ys);
      std::cout << "T_II fit vs " << (key == "sigma_init" ? "ln(1/sigma_init)" : key)
                << ": slope=" << f.slope << " intercept=" << f.intercept << " R2=" << f.r2 << "\n";
    }
    std::cout << "wrote " << (dir / "gf_sweep.csv") << "\n";
    return 0;
  }

  (void)defaults;
  const GFTrajectory traj = integrate_gf_default(prm, dt);
  write_trajectory_csv(dir / "gf_trajectory.csv", traj);
  const PhaseReport rep = detect_phases(traj);
  write_phase_report_json(dir / "phase_report.json", rep);
  std::cout << "T_I=" << (rep.t_i ? *rep.t_i : -1) << " T_o=" << (rep.t_o ? *rep.t_o : -1)
            << " T_II=" << (rep.t_ii ? *rep.t_ii : -1) << " T_III=" << (rep.t_iii ? *rep.t_iii : -1)
            << " growth_rate=" << rep.growth_rate << "\n";
  std::cout << "wrote " << (dir / "gf_trajectory.csv") << " and phase_report.json\n";
  return 0;
}

int cmd_sgd(const CommonOpts& opts, TrainConfig cfg, const std::string& optimizer,
            const std::string& stage, const std::string& dist) {
  cfg.seed = opts.seed;
  if (optimizer == "adam") {
    cfg.optimizer = Optimizer::adam;
    if (cfg.lr == 0.1) cfg.lr = 5e-4;  // Adam default
  }
  if (stage == "I")
    cfg.stage = TrainStage::stage1;
  else if (stage == "II")
    cfg.stage = TrainStage::stage2;
  else if (stage == "joint")
    cfg.stage = TrainStage::joint;
  else
    throw CLI::ValidationError("stage must be I, II or joint");
  if (dist == "boolean")
    cfg.dist = Dist::boolean;
  else if (dist == "gaussian")
    cfg.dist = Dist::gaussian;
  else
    throw CLI::ValidationError("dist must be gaussian or boolean");

  const fs::path dir(opts.out_dir);
  json jcfg{{"optimizer", optimizer}, {"lr", cfg.lr},       {"batch", cfg.batch},
            {"steps", cfg.steps},     {"stage", stage},     {"dist", dist},
            {"L", cfg.L},             {"alpha_star", cfg.alpha_star}, {"w_star", cfg.w_star},
            {"sigma_init", cfg.sigma_init}, {"seed", opts.seed}};
  write_manifest(dir, "sgd", jcfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  const TrainResult res = sgd_train(cfg);
  write_train_csv(dir / "sgd_trajectory.csv", res, cfg.lr, optimizer);
  CsvWriter evals(dir / "sgd_evals.csv", {"step", "L_G4", "L_IH2"});
  for (const EvalRecord& e : res.evals) evals.row({static_cast<Real>(e.step), e.loss_g4, e.loss_ih2});
  if (res.diverged) std::cerr << "warning: divergence guard triggered\n";
  std::cout << "final: p_tilde=" << res.final_model.p_tilde << " w_V1=" << res.final_model.w_v1
            << " w_V2=" << res.final_model.w_v2 << " p=" << res.final_model.p
            << " w_Q=" << res.final_model.w_q << " w_K=" << res.final_model.w_k << "\n";
  std::cout << "wrote " << (dir / "sgd_trajectory.csv") << " and sgd_evals.csv\n";
  return res.diverged ? 1 : 0;
}

int cmd_probe(const CommonOpts& opts, int n, int H, std::size_t L, std::size_t n_seqs) {
  const fs::path dir(opts.out_dir);
  json cfg{{"n", n}, {"H", H}, {"L", L}, {"n_seqs", n_seqs}, {"seed", opts.seed}};
  write_manifest(dir, "probe", cfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  const Matrix w_star = Matrix::identity(n - 1);
  const std::vector<KernelFit> fits = fit_kernels(n, H, static_cast<int>(std::max<std::size_t>(4 * L, 64)));
  const TransformerParams constructed = build_ihn(n, w_star, fits);
  Rng seq_rng(opts.seed);
  std::vector<Matrix> seqs;
  for (std::size_t i = 0; i < n_seqs; ++i) seqs.push_back(sample_sequence(Dist::boolean, seq_rng, 1, L));
  const ProbeResult trained = probe_first_layer(constructed, n, seqs);
  Rng base_rng(opts.seed + 7);
  const ProbeResult baseline = probe_first_layer(random_first_layer_like(constructed, base_rng), n, seqs);

  CsvWriter csv(dir / "probe.csv", {"which", "loss", "ridge"});
  csv.row_mixed({"constructed", format_real(trained.loss), format_real(trained.ridge)});
  csv.row_mixed({"random", format_real(baseline.loss), format_real(baseline.ridge)});
  std::cout << "constructed=" << trained.loss << " random=" << baseline.loss
            << " ratio=" << trained.loss / baseline.loss << "\n";
  std::cout << "wrote " << (dir / "probe.csv") << "\n";
  return 0;
}

int cmd_kernel(const CommonOpts& opts, int lag, const std::string& h_list, int horizon) {
  const fs::path dir(opts.out_dir);
  json cfg{{"i", lag}, {"H", h_list}, {"T_max", horizon}, {"seed", opts.seed}};
  write_manifest(dir, "kernel", cfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  CsvWriter csv(dir / "kernel_fits.csv", {"i", "H_i", "T_max", "ell1_error"});
  for (Real hv : parse_list(h_list)) {
    const KernelFit fit = fit_indicator_kernel(lag, static_cast<int>(hv), horizon);
    csv.row({static_cast<Real>(lag), hv, static_cast<Real>(horizon), fit.ell1_error});
  }
  std::cout << "wrote " << (dir / "kernel_fits.csv") << "\n";
  return 0;
}

int cmd_verify(const CommonOpts& opts, const std::string& only) {
  const fs::path dir(opts.out_dir);
  json cfg{{"only", only}, {"seed", opts.seed}};
  write_manifest(dir, "verify", cfg.dump(), opts.seed);
  std::cout << "seed=" << opts.seed << "\n";

  std::vector<CriterionResult> results;
  if (only.empty()) {
    results = run_all_criteria(opts.seed);
  } else {
    for (Real v : parse_list(only)) results.push_back(run_criterion(static_cast<int>(v), opts.seed));
  }
  bool all_pass = true;
  CsvWriter csv(dir / "acceptance.csv", {"id", "pass", "seconds", "name"});
  for (const CriterionResult& r : results) {
    std::cout << format_result_line(r) << "\n";
    csv.row_mixed({std::to_string(r.id), r.pass ? "1" : "0", format_real(r.seconds), r.name});
    all_pass = all_pass && r.pass;
  }
  std::cout << (all_pass ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED") << "\n";
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"induction-head construction and training-dynamics workbench"};
  app.require_subcommand(1);

  CommonOpts opts;

  // construct
  auto* construct = app.add_subcommand("construct", "build transformers and sweep the error bounds");
  std::string c_target = "ih2", c_sweep;
  int c_n = 4, c_H = 16;
  std::size_t c_K = 2, c_M = 64, c_samples = 10000, c_L = 24;
  construct->add_option("--target", c_target, "ih2|ihn|gihn");
  construct->add_option("--p1", c_sweep, "comma list of first-layer slopes (ih2)");
  construct->add_option("--H-sweep", c_sweep, "comma list of head counts (ihn)");
  construct->add_option("--n", c_n, "patch order n");
  construct->add_option("--H", c_H, "head count");
  construct->add_option("--K", c_K, "POD truncation rank (gihn)");
  construct->add_option("--M", c_M, "FFN width (gihn)");
  construct->add_option("--samples", c_samples, "Monte-Carlo sample count");
  construct->add_option("--L", c_L, "sequence length");
  add_common(construct, &opts);

  // gf
  auto* gf = app.add_subcommand("gf", "integrate the stage-II gradient flow and detect phases");
  bool gf_defaults = false;
  std::string gf_sweep;
  GFParams gf_prm;
  Real gf_dt = 0.05, gf_tmul = 50.0;
  gf->add_flag("--defaults", gf_defaults, "use the reference settings (alpha*=1 w*=0.49 sigma=0.01 L=40)");
  gf->add_option("--sweep", gf_sweep, "e.g. L=20,40,80,160 or sigma_init=1e-2,1e-3");
  gf->add_option("--alpha-star", gf_prm.alpha_star);
  gf->add_option("--w-star", gf_prm.w_star);
  gf->add_option("--sigma-init", gf_prm.sigma_init);
  gf->add_option("--L", gf_prm.L);
  gf->add_option("--dt", gf_dt);
  gf->add_option("--t-end-mul", gf_tmul);
  add_common(gf, &opts);

  // sgd
  auto* sgd = app.add_subcommand("sgd", "online SGD/Adam training of the reparameterized model");
  TrainConfig t_cfg;
  std::string t_opt = "sgd", t_stage = "II", t_dist = "gaussian";
  sgd->add_option("--optimizer", t_opt, "sgd|adam");
  sgd->add_option("--lr", t_cfg.lr);
  sgd->add_option("--batch", t_cfg.batch);
  sgd->add_option("--steps", t_cfg.steps);
  sgd->add_option("--stage", t_stage, "I|II|joint");
  sgd->add_option("--dist", t_dist, "gaussian|boolean");
  sgd->add_option("--L", t_cfg.L);
  sgd->add_option("--alpha-star", t_cfg.alpha_star);
  sgd->add_option("--w-star", t_cfg.w_star);
  sgd->add_option("--sigma-init", t_cfg.sigma_init);
  sgd->add_option("--record-every", t_cfg.record_every);
  sgd->add_option("--eval-every", t_cfg.eval_every);
  add_common(sgd, &opts);

  // probe
  auto* probe = app.add_subcommand("probe", "linear probe of first-layer representations");
  int p_n = 4, p_H = 16;
  std::size_t p_L = 10, p_nseq = 1000;
  probe->add_option("--n", p_n);
  probe->add_option("--H", p_H);
  probe->add_option("--L", p_L);
  probe->add_option("--n-seqs", p_nseq);
  add_common(probe, &opts);

  // kernel
  auto* kernel = app.add_subcommand("kernel", "fit indicator memory kernels by sums of exponentials");
  int k_i = 1, k_T = 256;
  std::string k_H = "1,2,4,8,16";
  kernel->add_option("--i", k_i, "target lag");
  kernel->add_option("--H", k_H, "comma list of term counts");
  kernel->add_option("--T-max", k_T, "fit horizon");
  add_common(kernel, &opts);

  // verify
  auto* verify = app.add_subcommand("verify", "run the acceptance suite (one pass/fail line each)");
  std::string v_only;
  verify->add_option("--only", v_only, "comma list of criterion ids");
  add_common(verify, &opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const json file_cfg = load_config(opts);
    if (file_cfg.contains("seed")) opts.seed = file_cfg["seed"].get<std::uint64_t>();

    if (construct->parsed()) {
      if (file_cfg.contains("target")) c_target = file_cfg["target"];
      if (file_cfg.contains("sweep")) c_sweep = file_cfg["sweep"];
      return cmd_construct(opts, c_target, c_sweep, c_n, c_H, c_K, c_M, c_samples, c_L);
    }
    if (gf->parsed()) return cmd_gf(opts, gf_defaults, gf_sweep, gf_prm, gf_dt, gf_tmul);
    if (sgd->parsed()) return cmd_sgd(opts, t_cfg, t_opt, t_stage, t_dist);
    if (probe->parsed()) return cmd_probe(opts, p_n, p_H, p_L, p_nseq);
    if (kernel->parsed()) return cmd_kernel(opts, k_i, k_H, k_T);
    if (verify->parsed()) return cmd_verify(opts, v_only);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
