#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrrxbar/benchmark.hpp"
#include "mrrxbar/calibration.hpp"
#include "mrrxbar/config_io.hpp"
#include "mrrxbar/crossbar.hpp"
#include "mrrxbar/io.hpp"
#include "mrrxbar/iris.hpp"
#include "mrrxbar/onn.hpp"
#include "mrrxbar/signed_mvm.hpp"

namespace mrrxbar {

namespace cli_detail {

struct CommonOpts {
  std::string config;
  std::string out;
  unsigned seed = 1234;
};

inline void attach_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config, "JSON settings file");
  sub->add_option("--out", c.out, "output directory (default $MRRXBAR_OUT or .)");
  sub->add_option("--seed", c.seed, "simulation RNG seed");
}

inline SimSettings resolve_settings(const CommonOpts& c) {
  return c.config.empty() ? SimSettings{} : load_settings(c.config);
}

inline std::string resolve_out(const CommonOpts& c) {
  std::string dir = c.out;
  if (dir.empty()) {
    const char* env = std::getenv("MRRXBAR_OUT");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir);
  return dir;
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::unique_ptr<Backend> make_backend(const std::string& kind,
                                             const SimSettings& s,
                                             unsigned seed) {
  if (kind == "ideal") return std::make_unique<IdealBackend>(s.size);
  if (kind == "crossbar")
    return std::make_unique<CrossbarBackend>(make_crossbar(s), s.feedback, seed);
  throw ConfigError("unknown backend '" + kind + "' (want crossbar|ideal)");
}

inline json passes_json(const Backend& b) {
  return {{"forward", b.passes_forward()},
          {"backward", b.passes_backward()},
          {"offset", b.passes_offset()},
          {"total", b.total_passes()},
          {"programmings", b.programmings()}};
}

inline void dump_json(const std::string& path, const json& j) {
  std::ofstream f = open_output(path);
  f << j.dump(2) << "\n";
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  using namespace cli_detail;
  CLI::App app{"silicon microring crossbar array simulator"};
  app.require_subcommand(1);

  // --- spectra ------------------------------------------------------------
  auto* sp = app.add_subcommand(
      "spectra", "sweep a laser across one input port and record all PDs");
  CommonOpts sp_c;
  attach_common(sp, sp_c);
  int sp_n = 0, sp_port = 0, sp_steps = 2001;
  double sp_lo_nm = 0, sp_hi_nm = 0;
  std::string sp_weights;
  sp->add_option("-n,--size", sp_n, "override array size");
  sp->add_option("--port", sp_port, "input port to drive");
  sp->add_option("--steps", sp_steps, "sweep points");
  sp->add_option("--lo-nm", sp_lo_nm, "sweep start in nm (0 = auto)");
  sp->add_option("--hi-nm", sp_hi_nm, "sweep end in nm (0 = auto)");
  sp->add_option("--weights", sp_weights,
                 "CSV of drop-transmission targets to program first");
  sp->callback([&]() {
    SimSettings s = resolve_settings(sp_c);
    if (sp_n > 0) s.size = sp_n;
    const std::string dir = resolve_out(sp_c);
    const CrossbarConfig cfg = make_crossbar(s);
    std::mt19937 rng(sp_c.seed);

    PhaseMatrix phases = PhaseMatrix::parked(cfg);
    if (!sp_weights.empty()) {
      const Mat target = load_matrix_csv(sp_weights);
      phases = program_weights(cfg, target, s.feedback, &rng).phases;
    }
    double lo = sp_lo_nm * 1e-9, hi = sp_hi_nm * 1e-9;
    if (lo <= 0 || hi <= 0 || hi <= lo) {
      const double gap = free_spectral_range(cfg.device_template) *
                         cfg.plan.delta_phi / kTwoPi;
      lo = cfg.plan.wavelengths.front() - gap;
      hi = cfg.plan.wavelengths.back() + gap;
    }
    const SpectrumScan scan = spectrum_scan(cfg, phases, sp_port, lo, hi, sp_steps);

    std::vector<std::string> header{"wavelength_nm"};
    for (int j = 0; j < cfg.size_N; ++j) header.push_back("pd_" + std::to_string(j));
    std::vector<std::vector<double>> rows;
    for (size_t r = 0; r < scan.wavelengths.size(); ++r) {
      std::vector<double> row{scan.wavelengths[r] * 1e9};
      for (int j = 0; j < cfg.size_N; ++j)
        row.push_back(scan.currents(static_cast<Eigen::Index>(r), j));
      rows.push_back(std::move(row));
    }
    write_csv(join(dir, "spectra.csv"), header, rows);
    save_settings(join(dir, "settings.json"), s);
    std::cout << "wrote " << join(dir, "spectra.csv") << " (" << rows.size()
              << " rows, N=" << cfg.size_N << ")\n";
  });

  // --- program ------------------------------------------------------------
  auto* pr = app.add_subcommand(
      "program", "closed-loop program a drop-transmission target matrix");
  CommonOpts pr_c;
  attach_common(pr, pr_c);
  std::string pr_target;
  pr->add_option("--target", pr_target, "CSV matrix of targets in [0,1]")
      ->required();
  pr->callback([&]() {
    SimSettings s = resolve_settings(pr_c);
    const Mat target = load_matrix_csv(pr_target);
    if (target.rows() != target.cols())
      throw ConfigError("program: target matrix must be square");
    s.size = static_cast<int>(target.rows());
    const std::string dir = resolve_out(pr_c);
    const CrossbarConfig cfg = make_crossbar(s);
    std::mt19937 rng(pr_c.seed);
    const CalibrationReport rep = program_weights(cfg, target, s.feedback, &rng);

    const auto [w_min, w_max] = weight_bounds(cfg);
    json j{{"converged", rep.converged},
           {"rounds_used", rep.rounds_used},
           {"probes_used", rep.probes_used},
           {"max_abs_error", rep.max_abs_error},
           {"tolerance", s.feedback.tolerance},
           {"weight_bounds", {w_min, w_max}},
           {"target", matrix_to_json(rep.target)},
           {"target_clamped", matrix_to_json(rep.target_clamped)},
           {"achieved", matrix_to_json(rep.achieved)},
           {"phases", matrix_to_json(rep.phases.phases)}};
    dump_json(join(dir, "calibration_report.json"), j);
    write_matrix_csv(join(dir, "programmed_weights.csv"), rep.achieved);
    save_settings(join(dir, "settings.json"), s);
    std::cout << (rep.converged ? "converged" : "NOT converged") << " in "
              << rep.rounds_used << " rounds, max |error| = "
              << format_num(rep.max_abs_error) << "\n";
  });

  // --- transpose ----------------------------------------------------------
  auto* tp = app.add_subcommand(
      "transpose", "fit the backward-gain correction and check duality");
  CommonOpts tp_c;
  attach_common(tp, tp_c);
  tp->callback([&]() {
    SimSettings s = resolve_settings(tp_c);
    const std::string dir = resolve_out(tp_c);
    CrossbarBackend backend(make_crossbar(s), s.feedback, tp_c.seed);
    const CorrectionParams& corr = backend.correction();

    std::mt19937 rng(tp_c.seed + 1);
    std::uniform_real_distribution<double> sgn(-1.0, 1.0), pos(0.0, 1.0);
    const int n = backend.size();
    Mat w(n, n);
    Vec x(n), d(n);
    for (int i = 0; i < n; ++i) {
      x(i) = pos(rng);
      d(i) = sgn(rng);
      for (int j = 0; j < n; ++j) w(i, j) = sgn(rng);
    }
    const Vec y_dev = mvm_signed_weights(backend, w, x, "check");
    const Vec g_dev = mvm_signed_backward(backend, w, d, "check");
    const double fwd_err = (y_dev - w * x).cwiseAbs().maxCoeff();
    const double bwd_err = (g_dev - w.transpose() * d).cwiseAbs().maxCoeff();

    json j{{"row_gain", vector_to_json(corr.row_gain)},
           {"col_gain", vector_to_json(corr.col_gain)},
           {"fit_residual", corr.residual},
           {"fit_sweeps", corr.sweeps_used},
           {"check_forward_max_abs_err", fwd_err},
           {"check_backward_max_abs_err", bwd_err},
           {"passes", passes_json(backend)}};
    dump_json(join(dir, "transpose_report.json"), j);
    save_settings(join(dir, "settings.json"), s);
    std::cout << "backward correction fit: residual " << format_num(corr.residual)
              << ", duality error fwd " << format_num(fwd_err) << " / bwd "
              << format_num(bwd_err) << "\n";
  });

  // --- mvm ----------------------------------------------------------------
  auto* mv = app.add_subcommand("mvm", "one matrix-vector product");
  CommonOpts mv_c;
  attach_common(mv, mv_c);
  std::string mv_weights, mv_input, mv_backend = "crossbar";
  bool mv_signed_input = false;
  mv->add_option("--weights", mv_weights, "CSV matrix in [-1,1]")->required();
  mv->add_option("--input", mv_input, "CSV vector")->required();
  mv->add_option("--backend", mv_backend, "crossbar|ideal");
  mv->add_flag("--signed-input", mv_signed_input,
               "input lies in [-1,1] (4-pass offset decomposition)");
  mv->callback([&]() {
    SimSettings s = resolve_settings(mv_c);
    const Mat w = load_matrix_csv(mv_weights);
    if (w.rows() != w.cols()) throw ConfigError("mvm: weight matrix must be square");
    s.size = static_cast<int>(w.rows());
    const Vec x = load_vector_csv(mv_input);
    const std::string dir = resolve_out(mv_c);
    auto backend = make_backend(mv_backend, s, mv_c.seed);

    const Vec y = mv_signed_input ? mvm_signed_full(*backend, w, x, "mvm")
                                  : mvm_signed_weights(*backend, w, x, "mvm");
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < y.size(); ++i)
      rows.push_back({static_cast<double>(i), y(i)});
    write_csv(join(dir, "mvm_result.csv"), {"index", "value"}, rows);
    json j{{"backend", mv_backend},
           {"result", vector_to_json(y)},
           {"passes", passes_json(*backend)}};
    dump_json(join(dir, "mvm_report.json"), j);
    save_settings(join(dir, "settings.json"), s);
    std::cout << "y =";
    for (int i = 0; i < y.size(); ++i) std::cout << " " << format_num(y(i));
    std::cout << "  (" << backend->total_passes() << " passes)\n";
  });

  // --- train --------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train the 2-layer classifier");
  CommonOpts tr_c;
  attach_common(tr, tr_c);
  std::string tr_data = "data/iris.csv", tr_mode = "insitu",
              tr_backend = "crossbar";
  int tr_rounds = 0, tr_hidden = 4, tr_split = -1;
  unsigned tr_split_seed = 1, tr_train_seed = 0;
  double tr_lr = 0, tr_target = -1, tr_wscale = -1;
  bool tr_phase_mode = false;
  tr->add_option("--data", tr_data, "labeled CSV dataset");
  tr->add_option("--mode", tr_mode, "insitu (device in the loop) | exsitu (digital)");
  tr->add_option("--backend", tr_backend, "crossbar|ideal");
  tr->add_option("--rounds", tr_rounds, "max training rounds");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--train-seed", tr_train_seed, "init/shuffle seed (0 = settings)");
  tr->add_option("--target-rate", tr_target,
                 "stop when the training rate reaches this");
  tr->add_option("--weight-scale", tr_wscale, "weight clip radius");
  tr->add_option("--hidden", tr_hidden, "hidden layer width");
  tr->add_option("--train-count", tr_split,
                 "training samples for a stratified split (-1 = mode default)");
  tr->add_option("--split-seed", tr_split_seed, "split shuffle seed");
  tr->add_flag("--phase-updates", tr_phase_mode,
               "apply updates in the heater-phase domain");
  tr->callback([&]() {
    if (tr_mode != "insitu" && tr_mode != "exsitu")
      throw ConfigError("train: mode must be insitu or exsitu");
    SimSettings s = resolve_settings(tr_c);
    if (tr_rounds > 0) s.train.rounds = tr_rounds;
    if (tr_lr > 0) s.train.learning_rate = tr_lr;
    if (tr_train_seed != 0) s.train.seed = tr_train_seed;
    if (tr_phase_mode) s.train.update_mode = UpdateMode::phase_domain;
    const bool insitu = tr_mode == "insitu";
    s.train.target_rate = tr_target >= 0 ? tr_target : (insitu ? 0.95 : 0.0);
    if (tr_wscale >= 0)
      s.train.weight_scale = tr_wscale;
    else if (!insitu)
      s.train.weight_scale = 10.0;  // unconstrained digital training
    const std::string dir = resolve_out(tr_c);

    const Dataset ds = load_labeled_csv(tr_data);
    const int split = tr_split >= 0 ? tr_split : (insitu ? 0 : 50);
    Dataset train_set = ds, test_set;
    if (split > 0) std::tie(train_set, test_set) = stratified_split(ds, split, tr_split_seed);

    const Vec scale = fit_feature_scale(train_set.x);
    const Mat x_train = apply_feature_scale(train_set.x, scale);

    MlpSpec spec{train_set.features(), tr_hidden, train_set.classes()};
    if (s.size < spec.inputs || s.size < spec.hidden || s.size < spec.outputs)
      throw ConfigError("train: crossbar.size smaller than the widest layer");

    // in-situ trains on the chosen backend; ex-situ trains digitally and
    // only deploys on it
    auto t1 = make_backend(insitu ? tr_backend : "ideal", s, tr_c.seed);
    auto t2 = make_backend(insitu ? tr_backend : "ideal", s, tr_c.seed + 1);
    const TrainResult res = train(spec, x_train, train_set.y, s.train, *t1, *t2);

    std::unique_ptr<Backend> e1, e2;
    if (insitu) {
      e1 = std::move(t1);
      e2 = std::move(t2);
    } else {
      e1 = make_backend(tr_backend, s, tr_c.seed + 2);
      e2 = make_backend(tr_backend, s, tr_c.seed + 3);
    }
    const EvalResult train_eval =
        evaluate(spec, res.weights, x_train, train_set.y, e1.get(), e2.get());
    json test_j;
    if (test_set.size() > 0) {
      const Mat x_test = apply_feature_scale(test_set.x, scale);
      const EvalResult ev =
          evaluate(spec, res.weights, x_test, test_set.y, e1.get(), e2.get());
      test_j = {{"correct", ev.correct},
                {"total", test_set.size()},
                {"accuracy", static_cast<double>(ev.correct) / test_set.size()}};
    }

    std::vector<std::vector<double>> curve;
    for (const RoundStat& st : res.curve)
      curve.push_back({static_cast<double>(st.round), st.mean_loss, st.correct_rate});
    write_csv(join(dir, "learning_curve.csv"),
              {"round", "mean_loss", "correct_rate"}, curve);

    json names = json::array();
    for (const auto& n : ds.class_names) names.push_back(n);
    dump_json(join(dir, "trained_weights.json"),
              {{"inputs", spec.inputs},
               {"hidden", spec.hidden},
               {"outputs", spec.outputs},
               {"w1", matrix_to_json(res.weights.w1)},
               {"w2", matrix_to_json(res.weights.w2)},
               {"feature_scale", vector_to_json(scale)},
               {"class_names", names},
               {"mode", tr_mode},
               {"seed", s.train.seed}});

    json rep{{"mode", tr_mode},
             {"backend", tr_backend},
             {"rounds_run", res.rounds_run},
             {"reached_target", res.reached_target},
             {"final_correct_rate",
              res.curve.empty() ? 0.0 : res.curve.back().correct_rate},
             {"train", {{"correct", train_eval.correct},
                        {"total", train_set.size()},
                        {"accuracy", static_cast<double>(train_eval.correct) /
                                         train_set.size()}}},
             {"passes_layer1", passes_json(*e1)},
             {"passes_layer2", passes_json(*e2)}};
    if (!test_j.is_null()) rep["test"] = test_j;
    dump_json(join(dir, "train_report.json"), rep);
    save_settings(join(dir, "settings.json"), s);

    std::cout << tr_mode << " training: " << res.rounds_run << " rounds, final "
              << "rate " << format_num(res.curve.empty() ? 0.0
                                                         : res.curve.back().correct_rate);
    if (!test_j.is_null())
      std::cout << ", test " << test_j["correct"].get<int>() << "/"
                << test_j["total"].get<int>();
    std::cout << "\n";
  });

  // --- infer --------------------------------------------------------------
  auto* in = app.add_subcommand("infer", "classify a dataset with saved weights");
  CommonOpts in_c;
  attach_common(in, in_c);
  std::string in_weights, in_data = "data/iris.csv", in_backend = "crossbar";
  in->add_option("--weights", in_weights, "trained_weights.json from `train`")
      ->required();
  in->add_option("--data", in_data, "labeled CSV dataset");
  in->add_option("--backend", in_backend, "crossbar|ideal|digital");
  in->callback([&]() {
    SimSettings s = resolve_settings(in_c);
    const std::string dir = resolve_out(in_c);
    std::ifstream f(in_weights);
    if (!f) throw ConfigError("cannot open weights: " + in_weights);
    json wj;
    try {
      f >> wj;
    } catch (const json::exception& e) {
      throw ConfigError("weights: " + in_weights + ": " + e.what());
    }
    MlpSpec spec{wj.at("inputs").get<int>(), wj.at("hidden").get<int>(),
                 wj.at("outputs").get<int>()};
    MlpWeights w;
    w.w1 = matrix_from_json(wj.at("w1"), "w1");
    w.w2 = matrix_from_json(wj.at("w2"), "w2");
    Vec scale(spec.inputs);
    {
      const json& sc = wj.at("feature_scale");
      if (static_cast<int>(sc.size()) != spec.inputs)
        throw ConfigError("weights: feature_scale length mismatch");
      for (int i = 0; i < spec.inputs; ++i) scale(i) = sc[static_cast<size_t>(i)];
    }

    const Dataset ds = load_labeled_csv(in_data);
    if (ds.features() != spec.inputs)
      throw DimensionMismatch("infer: dataset feature width != trained inputs");
    const Mat x = apply_feature_scale(ds.x, scale);

    std::unique_ptr<Backend> b1, b2;
    if (in_backend != "digital") {
      if (s.size < spec.inputs || s.size < spec.hidden || s.size < spec.outputs)
        throw ConfigError("infer: crossbar.size smaller than the widest layer");
      b1 = make_backend(in_backend, s, in_c.seed);
      b2 = make_backend(in_backend, s, in_c.seed + 1);
    }
    const EvalResult ev = evaluate(spec, w, x, ds.y, b1.get(), b2.get());

    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < ev.predicted.size(); ++i)
      rows.push_back({static_cast<double>(i), static_cast<double>(ds.y[i]),
                      static_cast<double>(ev.predicted[i])});
    write_csv(join(dir, "predictions.csv"), {"index", "truth", "predicted"}, rows);

    json conf = json::array();
    for (int r = 0; r < ev.confusion.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < ev.confusion.cols(); ++c) row.push_back(ev.confusion(r, c));
      conf.push_back(row);
    }
    json names = json::array();
    for (const auto& n : ds.class_names) names.push_back(n);
    json j{{"backend", in_backend},
           {"correct", ev.correct},
           {"total", ds.size()},
           {"accuracy", static_cast<double>(ev.correct) / ds.size()},
           {"confusion", conf},
           {"class_names", names}};
    if (b1 && b2) {
      j["passes_layer1"] = passes_json(*b1);
      j["passes_layer2"] = passes_json(*b2);
    }
    dump_json(join(dir, "accuracy.json"), j);
    std::cout << "accuracy " << ev.correct << "/" << ds.size() << " ("
              << in_backend << ")\n";
  });

  // --- bench --------------------------------------------------------------
  auto* be = app.add_subcommand(
      "bench", "scaling tables: design rule, throughput, power, training time");
  CommonOpts be_c;
  attach_common(be, be_c);
  std::vector<int> be_sizes{10, 20, 50, 100, 200, 500};
  int be_bits = 8;
  double be_clock = 3e9, be_q = 0;
  be->add_option("--sizes", be_sizes, "array sizes to tabulate")->delimiter(',');
  be->add_option("--bits", be_bits, "weight precision in bits");
  be->add_option("--clock", be_clock, "symbol rate in Hz");
  be->add_option("--q", be_q, "also report the largest array this Q supports");
  be->callback([&]() {
    resolve_settings(be_c);  // tables need no settings, but reject bad configs
    const std::string dir = resolve_out(be_c);
    const std::vector<BenchPoint> table = scaling_table(be_sizes, be_bits, be_clock);

    std::vector<std::vector<double>> rule, tput, ttime;
    for (const BenchPoint& p : table) {
      rule.push_back({static_cast<double>(p.n), p.required_q});
      tput.push_back({static_cast<double>(p.n), p.tops, p.power_to_w,
                      p.power_mos_w, p.eff_to, p.eff_mos});
      const TrainingTime t = training_time(p.n, be_clock);
      ttime.push_back({static_cast<double>(p.n), t.backprop_s, t.brute_force_s,
                       t.ratio});
    }
    write_csv(join(dir, "design_rule.csv"), {"n", "required_q"}, rule);
    write_csv(join(dir, "throughput_power.csv"),
              {"n", "tops", "power_to_w", "power_mos_w", "eff_to", "eff_mos"},
              tput);
    write_csv(join(dir, "training_time.csv"),
              {"n", "backprop_s", "brute_force_s", "ratio"}, ttime);

    json j{{"bits", be_bits}, {"clock_hz", be_clock}};
    if (be_q > 0) {
      const int nmax = max_circuit_size(be_q, be_bits);
      j["max_circuit_size"] = {{"q", be_q}, {"n", nmax}};
      std::cout << "Q=" << format_num(be_q) << " supports up to N=" << nmax
                << " at " << be_bits << " bits\n";
    }
    dump_json(join(dir, "bench_report.json"), j);
    std::cout << "wrote design_rule.csv, throughput_power.csv, training_time.csv ("
              << table.size() << " sizes)\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"mrrxbar"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& a : full) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace mrrxbar
