#include "detlab/commands.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

namespace detlab::cmd {

namespace {

using io::json;
using io::SchemaError;

struct Context {
  json config;  // whole config file (or empty object)
  uint64_t seed = 1;
  std::filesystem::path out = "out";
  int jobs = 0;
  std::optional<std::string> regime;
};

Context make_context(const Options& opts) {
  Context ctx;
  if (opts.config_path) {
    ctx.config = io::parse_json_file(*opts.config_path);
    if (!ctx.config.is_object()) {
      throw SchemaError(opts.config_path->string() + ": config must be a JSON object");
    }
    const int version = ctx.config.value("schema_version", 1);
    if (version != 1) {
      throw SchemaError(opts.config_path->string() + ": unsupported schema_version " +
                        std::to_string(version));
    }
    ctx.seed = ctx.config.value("seed", ctx.seed);
    ctx.out = ctx.config.value("out", ctx.out.string());
    ctx.jobs = ctx.config.value("jobs", ctx.jobs);
  } else {
    ctx.config = json::object();
  }
  if (opts.seed) ctx.seed = *opts.seed;
  if (opts.out) ctx.out = *opts.out;
  if (opts.jobs) ctx.jobs = *opts.jobs;
  if (opts.regime) ctx.regime = *opts.regime;
  return ctx;
}

json section(const Context& ctx, const std::string& name) {
  if (ctx.config.contains(name)) {
    if (!ctx.config[name].is_object()) {
      throw SchemaError("config section '" + name + "' must be an object");
    }
    return ctx.config[name];
  }
  return json::object();
}

CostWeights parse_weights(const json& j) {
  CostWeights w;
  w.lambda_cls = j.value("lambda_cls", w.lambda_cls);
  w.lambda_l1 = j.value("lambda_l1", w.lambda_l1);
  w.lambda_iou = j.value("lambda_iou", w.lambda_iou);
  const std::string mode = j.value("location_mode", "predefined");
  if (mode == "predefined") {
    w.location_mode = LocationMode::predefined;
  } else if (mode == "predicted") {
    w.location_mode = LocationMode::predicted;
  } else {
    throw SchemaError("location_mode must be 'predefined' or 'predicted'");
  }
  const std::string form = j.value("cls_cost_form", "bce");
  if (form == "bce") {
    w.cls_cost_form = ClsCostForm::bce;
  } else if (form == "focal") {
    w.cls_cost_form = ClsCostForm::focal;
  } else {
    throw SchemaError("cls_cost_form must be 'bce' or 'focal'");
  }
  const std::string iou_kind = j.value("iou_cost_kind", "iou");
  if (iou_kind == "iou") {
    w.iou_cost_kind = IouCostKind::iou;
  } else if (iou_kind == "giou") {
    w.iou_cost_kind = IouCostKind::giou;
  } else {
    throw SchemaError("iou_cost_kind must be 'iou' or 'giou'");
  }
  w.focal_alpha = j.value("focal_alpha", w.focal_alpha);
  w.focal_gamma = j.value("focal_gamma", w.focal_gamma);
  if (w.lambda_cls < 0 || w.lambda_l1 < 0 || w.lambda_iou < 0) {
    throw SchemaError("cost weights must be nonnegative");
  }
  if (w.lambda_cls == 0 && w.lambda_l1 == 0 && w.lambda_iou == 0) {
    throw SchemaError("at least one cost weight must be positive");
  }
  return w;
}

AssignConfig parse_assign_config(const json& j) {
  AssignConfig cfg;
  const std::string strategy = j.value("strategy", "bipartite");
  if (strategy == "threshold") {
    cfg.strategy = AssignStrategy::threshold;
  } else if (strategy == "mincost") {
    cfg.strategy = AssignStrategy::mincost;
  } else if (strategy == "bipartite") {
    cfg.strategy = AssignStrategy::bipartite;
  } else {
    throw SchemaError("strategy must be 'threshold', 'mincost' or 'bipartite'");
  }
  if (j.contains("theta")) {
    const json& t = j["theta"];
    const std::string kind = t.value("kind", "constant");
    if (kind == "constant") {
      cfg.theta.kind = ThetaRule::Kind::constant;
    } else if (kind == "quantile") {
      cfg.theta.kind = ThetaRule::Kind::quantile;
    } else {
      throw SchemaError("theta kind must be 'constant' or 'quantile'");
    }
    cfg.theta.value = t.value("value", cfg.theta.value);
  }
  return cfg;
}

toy::SceneConfig parse_scene_config(const json& j) {
  toy::SceneConfig cfg;
  cfg.width = j.value("width", cfg.width);
  cfg.height = j.value("height", cfg.height);
  cfg.categories = j.value("categories", cfg.categories);
  cfg.min_objects = j.value("min_objects", cfg.min_objects);
  cfg.max_objects = j.value("max_objects", cfg.max_objects);
  cfg.min_size = j.value("min_size", cfg.min_size);
  cfg.max_size = j.value("max_size", cfg.max_size);
  cfg.crowded = j.value("crowded", cfg.crowded);
  cfg.crowd_min_iou = j.value("crowd_min_iou", cfg.crowd_min_iou);
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  return cfg;
}

toy::ExperimentConfig parse_experiment_config(const Context& ctx, const json& j) {
  toy::ExperimentConfig cfg;
  cfg.root_seed = ctx.seed;
  cfg.jobs = ctx.jobs;
  cfg.seeds = j.value("seeds", cfg.seeds);
  cfg.steps = j.value("steps", cfg.steps);
  cfg.train_scenes = j.value("train_scenes", cfg.train_scenes);
  cfg.eval_scenes = j.value("eval_scenes", cfg.eval_scenes);
  cfg.lr = j.value("lr", cfg.lr);
  if (j.contains("toy")) {
    const json& t = j["toy"];
    cfg.toy.grid = t.value("grid", cfg.toy.grid);
    cfg.toy.patch = t.value("patch", cfg.toy.patch);
    cfg.toy.hidden = t.value("hidden", cfg.toy.hidden);
  }
  if (j.contains("scene")) cfg.scene = parse_scene_config(j["scene"]);
  cfg.toy.categories = cfg.scene.categories;
  if (j.contains("eval")) {
    const json& e = j["eval"];
    cfg.eval_score_tau = e.value("score_tau", cfg.eval_score_tau);
    cfg.nms_iou = e.value("nms_iou", cfg.nms_iou);
    cfg.redundancy_tau = e.value("redundancy_tau", cfg.redundancy_tau);
    cfg.gap_iou_floor = e.value("gap_iou_floor", cfg.gap_iou_floor);
    cfg.max_dets = e.value("max_dets", cfg.max_dets);
  }
  return cfg;
}

json seed_result_json(const toy::SeedResult& s) {
  json j;
  j["seed"] = s.seed;
  j["ap"] = s.ap;
  j["ap50"] = s.ap50;
  j["ap_nms"] = s.ap_nms;
  j["ap50_nms"] = s.ap50_nms;
  j["nms_delta"] = s.ap_nms - s.ap;
  j["recall50"] = s.recall50;
  j["recall50_nms"] = s.recall50_nms;
  j["mmr"] = s.mmr;
  j["mmr_nms"] = s.mmr_nms;
  j["score_gap_mean"] = s.gap_mean;
  j["score_gap_defined"] = s.gap_defined;
  j["top1_median"] = s.top1_median;
  j["redundancy"] = s.redundancy;
  j["first_loss"] = s.first_loss;
  j["final_loss"] = s.final_loss;
  return j;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int cmd_assign(const Options& opts, const std::filesystem::path& candidates_path,
               const std::filesystem::path& objects_path) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "assign");
    const CostWeights weights =
        parse_weights(j.contains("weights") ? j["weights"] : json::object());
    const AssignConfig assign_cfg = parse_assign_config(j);

    const io::CandidateFile file = io::load_candidates(candidates_path);
    const std::vector<GroundTruth> objects = io::load_objects(objects_path);
    for (size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].category < 0 || objects[i].category >= file.categories) {
        throw SchemaError(objects_path.string() + ": object " + std::to_string(i) +
                          " category outside [0, " + std::to_string(file.categories) +
                          ")");
      }
    }

    const CostMatrix cm = build_cost_matrix(file.candidates, objects, weights);
    const Assignment assignment = run_assignment(cm, assign_cfg);

    json summary;
    summary["n_samples"] = cm.n_samples;
    summary["n_objects"] = cm.n_objects;
    json per_object = json::array();
    for (int obj = 0; obj < cm.n_objects; ++obj) {
      double lo = cm.at(0, obj), hi = cm.at(0, obj);
      for (int i = 1; i < cm.n_samples; ++i) {
        lo = std::min(lo, cm.at(i, obj));
        hi = std::max(hi, cm.at(i, obj));
      }
      json o;
      o["min_total"] = lo;
      o["max_total"] = hi;
      per_object.push_back(o);
    }
    summary["per_object"] = per_object;

    json out;
    out["schema_version"] = 1;
    out["assignment"] = io::to_json(assignment);
    out["cost_summary"] = summary;
    io::write_text_file(ctx.out / "assignment.json", out.dump(2) + "\n");
    std::cout << ctx.out / "assignment.json" << "\n";
    return kOk;
  });
}

int cmd_perceptron(const Options& opts) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "perceptron");
    const int runs = j.value("runs", 100);
    const int n = j.value("n", 16);
    const int d = j.value("d", 4);
    const int max_steps = j.value("max_steps", 10000);
    theory::EtaPolicy eta;
    if (j.contains("eta")) {
      const std::string kind = j["eta"].value("kind", "constant");
      if (kind == "constant") {
        eta.kind = theory::EtaPolicy::Kind::constant;
      } else if (kind == "capped") {
        eta.kind = theory::EtaPolicy::Kind::capped;
      } else {
        throw SchemaError("eta kind must be 'constant' or 'capped'");
      }
      eta.base = j["eta"].value("base", eta.base);
    }
    theory::LabelRule rule = theory::LabelRule::one_to_one;
    const std::string rule_name = j.value("label_rule", "one_to_one");
    if (rule_name == "fixed_positive") {
      rule = theory::LabelRule::fixed_positive;
    } else if (rule_name != "one_to_one") {
      throw SchemaError("label_rule must be 'one_to_one' or 'fixed_positive'");
    }
    const int fixed_index = j.value("fixed_index", 0);
    if (runs < 1 || n < 2 || d < 1 || max_steps < 1) {
      throw SchemaError("perceptron config values out of range");
    }

    struct RunSummary {
      theory::RunResult run;
      theory::BoundReport bound;
    };
    std::vector<RunSummary> results(runs);
    const int jobs = ctx.jobs > 0 ? ctx.jobs
                                  : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<int> next{0};
    std::vector<std::future<void>> futures;
    for (int t = 0; t < std::min(jobs, runs); ++t) {
      futures.push_back(std::async(std::launch::async, [&]() {
        for (int k = next.fetch_add(1); k < runs; k = next.fetch_add(1)) {
          std::mt19937_64 sample_rng = make_stream(ctx.seed, "perceptron-samples", k);
          std::mt19937_64 init_rng = make_stream(ctx.seed, "perceptron-init", k);
          const theory::SampleSet samples = theory::SampleSet::random(n, d, sample_rng);
          std::vector<double> w0 = theory::random_unit_weights(d + 1, init_rng);
          results[k].run = theory::run_to_convergence(samples, eta, max_steps,
                                                      std::move(w0), rule, fixed_index);
          results[k].bound = theory::theorem_bound(results[k].run.state);
        }
      }));
    }
    for (auto& f : futures) f.get();

    int converged = 0, evaluable = 0, conditions_ok = 0, bound_ok = 0;
    for (int k = 0; k < runs; ++k) {
      const RunSummary& r = results[k];
      io::write_text_file(ctx.out / ("trace_seed" + std::to_string(k) + ".csv"),
                          io::trace_csv(r.run.state));
      if (r.run.converged) ++converged;
      if (r.bound.evaluable) {
        ++evaluable;
        if (r.bound.all_conditions) {
          ++conditions_ok;
          if (r.run.state.updates <= r.bound.bound) ++bound_ok;
        }
      }
    }

    json out;
    out["schema_version"] = 1;
    out["runs"] = runs;
    out["n"] = n;
    out["d"] = d;
    out["eta"] = {{"kind", eta.kind == theory::EtaPolicy::Kind::capped ? "capped"
                                                                       : "constant"},
                  {"base", eta.base}};
    out["converged"] = converged;
    out["certificates_evaluable"] = evaluable;
    out["all_conditions_true"] = conditions_ok;
    out["bound_satisfied"] = bound_ok;
    out["excluded"] = runs - conditions_ok;
    out["exclusion_rate"] = runs > 0 ? double(runs - conditions_ok) / runs : 0.0;
    json per_run = json::array();
    for (int k = 0; k < runs; ++k) {
      const RunSummary& r = results[k];
      json e;
      e["seed_index"] = k;
      e["converged"] = r.run.converged;
      e["updates"] = r.run.state.updates;
      e["bound_evaluable"] = r.bound.evaluable;
      if (r.bound.evaluable) {
        e["bound"] = r.bound.bound;
        e["delta_min"] = r.bound.delta_min;
        e["all_conditions"] = r.bound.all_conditions;
      } else {
        e["reason"] = r.bound.reason;
      }
      per_run.push_back(e);
    }
    out["per_run"] = per_run;
    io::write_text_file(ctx.out / "perceptron_summary.json", out.dump(2) + "\n");
    std::cout << "runs=" << runs << " converged=" << converged
              << " hypothesis_ok=" << conditions_ok << " bound_ok=" << bound_ok
              << "\n";
    return kOk;
  });
}

int cmd_train(const Options& opts) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "train");
    toy::ExperimentConfig base = parse_experiment_config(ctx, j);

    std::vector<toy::Regime> regimes;
    if (ctx.regime) {
      const auto r = toy::regime_from_name(*ctx.regime);
      if (!r) throw SchemaError("unknown regime '" + *ctx.regime + "'");
      regimes.push_back(*r);
    } else if (j.contains("regimes")) {
      for (const auto& name : j["regimes"]) {
        const auto r = toy::regime_from_name(name.get<std::string>());
        if (!r) throw SchemaError("unknown regime '" + name.get<std::string>() + "'");
        regimes.push_back(*r);
      }
    } else {
      regimes = toy::all_regimes();
    }

    // Scenes are regime-independent; export them once per seed.
    for (int i = 0; i < base.seeds; ++i) {
      std::vector<toy::Scene> scenes = toy::experiment_scenes(base, i, false);
      const std::vector<toy::Scene> held_out = toy::experiment_scenes(base, i, true);
      scenes.insert(scenes.end(), held_out.begin(), held_out.end());
      io::save_scenes_jsonl(ctx.out / ("scenes_seed" + std::to_string(i) + ".jsonl"),
                            scenes);
    }

    json report;
    report["schema_version"] = 1;
    report["seed"] = ctx.seed;
    json regime_rows = json::array();
    std::ostringstream table;
    table << "regime,ap,ap_nms,nms_delta,score_gap_median,top1_median,redundancy\n";

    for (toy::Regime regime : regimes) {
      toy::ExperimentConfig cfg = base;
      cfg.regime = regime;
      std::vector<toy::ToyModel> models;
      const toy::ExperimentReport rep = toy::run_experiment(cfg, &models);

      for (size_t k = 0; k < rep.per_seed.size(); ++k) {
        const std::string stem =
            std::string("hist_") + toy::regime_name(regime) + "_seed" + std::to_string(k);
        io::write_text_file(ctx.out / (stem + "_early.csv"),
                            io::histogram_csv(rep.per_seed[k].hist_early));
        io::write_text_file(ctx.out / (stem + "_mid.csv"),
                            io::histogram_csv(rep.per_seed[k].hist_mid));
        io::write_text_file(ctx.out / (stem + "_late.csv"),
                            io::histogram_csv(rep.per_seed[k].hist_late));
        io::save_checkpoint(ctx.out / (std::string("checkpoint_") +
                                       toy::regime_name(regime) + "_seed" +
                                       std::to_string(k) + ".bin"),
                            models[k]);
      }

      json row;
      row["regime"] = toy::regime_name(regime);
      row["ap_mean"] = rep.ap_mean;
      row["ap_nms_mean"] = rep.ap_nms_mean;
      row["nms_delta_mean"] = rep.delta_mean;
      row["score_gap_median"] = rep.gap_median;
      row["top1_median"] = rep.top1_median_median;
      row["redundancy_mean"] = rep.redundancy_mean;
      json per_seed = json::array();
      for (const toy::SeedResult& s : rep.per_seed) per_seed.push_back(seed_result_json(s));
      row["per_seed"] = per_seed;
      regime_rows.push_back(row);

      table << toy::regime_name(regime) << "," << io::format_double(rep.ap_mean) << ","
            << io::format_double(rep.ap_nms_mean) << ","
            << io::format_double(rep.delta_mean) << ","
            << io::format_double(rep.gap_median) << ","
            << io::format_double(rep.top1_median_median) << ","
            << io::format_double(rep.redundancy_mean) << "\n";
      std::cout << toy::regime_name(regime) << ": ap=" << rep.ap_mean
                << " ap+nms=" << rep.ap_nms_mean << " delta=" << rep.delta_mean
                << " gap=" << rep.gap_median << "\n";
    }
    report["regimes"] = regime_rows;
    io::write_text_file(ctx.out / "report.json", report.dump(2) + "\n");
    io::write_text_file(ctx.out / "report.csv", table.str());
    return kOk;
  });
}

int cmd_crowd(const Options& opts) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "crowd");

    toy::ExperimentConfig cfg = parse_experiment_config(ctx, j);
    if (!j.contains("scene")) {
      cfg.scene.crowded = true;
      cfg.scene.categories = 1;
      cfg.scene.min_objects = 4;
      cfg.scene.max_objects = 6;
      cfg.scene.min_size = 0.2;
      cfg.scene.max_size = 0.4;
      cfg.scene.crowd_min_iou = 0.55;
      cfg.toy.categories = 1;
    }
    cfg.seeds = j.value("seeds", 10);
    cfg.regime = toy::Regime::o2o_loc_cls_pred;
    if (ctx.regime) {
      const auto r = toy::regime_from_name(*ctx.regime);
      if (!r) throw SchemaError("unknown regime '" + *ctx.regime + "'");
      cfg.regime = *r;
    }
    std::vector<double> nms_thresholds = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    if (j.contains("nms_thresholds")) {
      nms_thresholds.clear();
      for (const auto& t : j["nms_thresholds"]) nms_thresholds.push_back(t.get<double>());
    }

    std::vector<toy::ToyModel> models;
    const toy::ExperimentReport rep = toy::run_experiment(cfg, &models);

    // Rows: annotation oracle and trained model, no-NMS plus each threshold,
    // averaged over seeds.
    struct Row {
      std::string source;
      double nms_thr = -1.0;  // -1: no NMS
      double ap50 = 0.0, mmr = 0.0, recall = 0.0;
    };
    std::vector<Row> rows;
    auto add_row = [&](const std::string& source, double thr, double ap50, double mmr,
                       double recall) {
      rows.push_back({source, thr, ap50, mmr, recall});
    };

    const int seeds = cfg.seeds;
    std::vector<DetectionSet> model_dets(seeds), annotation_dets(seeds);
    std::vector<GroundTruthSet> gts(seeds);
    for (int k = 0; k < seeds; ++k) {
      const std::vector<toy::Scene> held_out = toy::experiment_scenes(cfg, k, true);
      for (const toy::Scene& s : held_out) {
        gts[k].push_back(s.objects);
        std::vector<Detection> annotation;
        for (const GroundTruth& g : s.objects) annotation.push_back({g.box, g.category, 1.0});
        annotation_dets[k].push_back(annotation);
        const toy::CellOutputs out = toy::forward(models[k], s);
        model_dets[k].push_back(
            score_filter(toy::detections_from(out, cfg.max_dets), cfg.eval_score_tau));
      }
    }

    auto averaged = [&](const std::vector<DetectionSet>& dets, double thr,
                        const std::string& source) {
      double ap50 = 0.0, mmr = 0.0, recall = 0.0;
      for (int k = 0; k < seeds; ++k) {
        DetectionSet current = dets[k];
        if (thr >= 0.0) {
          for (auto& img : current) img = nms(img, thr, true);
        }
        ap50 += 100.0 * evaluate_ap(current, gts[k], {0.5}, cfg.max_dets);
        mmr += evaluate_mmr(current, gts[k], cfg.max_dets);
        recall += recall_at(current, gts[k], 0.5, cfg.max_dets);
      }
      add_row(source, thr, ap50 / seeds, mmr / seeds, recall / seeds);
    };

    averaged(annotation_dets, -1.0, "annotation");
    for (double thr : nms_thresholds) averaged(annotation_dets, thr, "annotation");
    averaged(model_dets, -1.0, "model");
    for (double thr : nms_thresholds) averaged(model_dets, thr, "model");

    std::ostringstream csv;
    csv << "source,nms_iou,ap50,mmr,recall\n";
    json rows_json = json::array();
    for (const Row& r : rows) {
      csv << r.source << "," << (r.nms_thr < 0 ? "none" : io::format_double(r.nms_thr))
          << "," << io::format_double(r.ap50) << "," << io::format_double(r.mmr) << ","
          << io::format_double(r.recall) << "\n";
      json e;
      e["source"] = r.source;
      if (r.nms_thr < 0) {
        e["nms_iou"] = nullptr;
      } else {
        e["nms_iou"] = r.nms_thr;
      }
      e["ap50"] = r.ap50;
      e["mmr"] = r.mmr;
      e["recall"] = r.recall;
      rows_json.push_back(e);
    }

    json out;
    out["schema_version"] = 1;
    out["seed"] = ctx.seed;
    out["regime"] = toy::regime_name(cfg.regime);
    out["seeds"] = seeds;
    out["rows"] = rows_json;
    json per_seed = json::array();
    for (const toy::SeedResult& s : rep.per_seed) per_seed.push_back(seed_result_json(s));
    out["per_seed"] = per_seed;
    io::write_text_file(ctx.out / "crowd_report.json", out.dump(2) + "\n");
    io::write_text_file(ctx.out / "crowd_curve.csv", csv.str());
    for (const Row& r : rows) {
      std::cout << r.source << " nms="
                << (r.nms_thr < 0 ? std::string("none") : io::format_double(r.nms_thr))
                << " ap50=" << r.ap50 << " mmr=" << r.mmr << " recall=" << r.recall
                << "\n";
    }
    return kOk;
  });
}

int cmd_eval(const Options& opts, const std::filesystem::path& detections,
             const std::filesystem::path& ground_truth) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "eval");
    const double redundancy_tau = j.value("redundancy_tau", 0.3);
    const int max_dets = j.value("max_dets", -1);

    const DetectionSet dets = io::load_detections(detections);
    const GroundTruthSet gts = io::load_ground_truth_set(ground_truth);
    if (dets.size() != gts.size()) {
      throw SchemaError("detection and ground-truth files disagree on image count");
    }
    const EvalResult result = evaluate(dets, gts, redundancy_tau, max_dets);

    json out;
    out["schema_version"] = 1;
    out["result"] = io::to_json(result);
    io::write_text_file(ctx.out / "eval.json", out.dump(2) + "\n");

    for (const PrCurve& curve : result.curves) {
      std::ostringstream csv;
      csv << "recall,precision\n";
      for (int k = 0; k <= 100; ++k) {
        csv << io::format_double(k / 100.0) << ","
            << io::format_double(curve.precision[k]) << "\n";
      }
      std::ostringstream name;
      name << "pr_curve_iou" << static_cast<int>(std::lround(curve.iou_threshold * 100))
           << ".csv";
      io::write_text_file(ctx.out / name.str(), csv.str());
    }
    std::cout << "ap=" << result.ap << " ap50=" << result.ap50
              << " recall50=" << result.recall50 << " mmr=" << result.mmr << "\n";
    return kOk;
  });
}

int cmd_nms(const Options& opts, const std::filesystem::path& detections) {
  return run_guarded([&]() {
    const Context ctx = make_context(opts);
    const json j = section(ctx, "nms");
    const double iou_thr = j.value("iou", 0.5);
    const bool classwise = j.value("classwise", true);
    const double score_tau = j.value("score_tau", 0.0);

    DetectionSet dets = io::load_detections(detections);
    for (auto& img : dets) {
      img = nms(score_filter(img, score_tau), iou_thr, classwise);
    }
    io::save_detections(ctx.out / "detections_nms.json", dets);
    size_t kept = 0;
    for (const auto& img : dets) kept += img.size();
    std::cout << "kept " << kept << " detections\n";
    return kOk;
  });
}

}  // namespace detlab::cmd
