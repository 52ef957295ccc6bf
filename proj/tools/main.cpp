#include <CLI11.hpp>

#include "detlab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"detlab: matching costs, sample assignment and NMS-free detection "
               "mechanics at desk scale"};
  app.require_subcommand(1);

  detlab::cmd::Options opts;
  std::string config, out, regime;
  uint64_t seed = 0;
  int jobs = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "worker count, 0 = hardware concurrency");
  };

  std::string candidates_file, objects_file, detections_file, gts_file;

  CLI::App* assign = app.add_subcommand("assign", "match candidates to objects");
  add_common(assign);
  assign->add_option("candidates", candidates_file, "candidates JSON")->required();
  assign->add_option("objects", objects_file, "objects JSON")->required();

  CLI::App* perceptron =
      app.add_subcommand("perceptron", "seeded one-to-one label perceptron runs");
  add_common(perceptron);

  CLI::App* train = app.add_subcommand("train", "train toy detectors per regime");
  add_common(train);
  train->add_option("--regime", regime, "run a single regime");

  CLI::App* crowd = app.add_subcommand("crowd", "NMS sweep on crowded scenes");
  add_common(crowd);
  crowd->add_option("--regime", regime, "training regime for the model rows");

  CLI::App* eval = app.add_subcommand("eval", "evaluate detections against objects");
  add_common(eval);
  eval->add_option("detections", detections_file, "detections JSON")->required();
  eval->add_option("objects", gts_file, "per-image ground truth JSON")->required();

  CLI::App* nms = app.add_subcommand("nms", "standalone score filter + NMS");
  add_common(nms);
  nms->add_option("detections", detections_file, "detections JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (!config.empty()) opts.config_path = config;
  if (!out.empty()) opts.out = out;
  if (!regime.empty()) opts.regime = regime;
  if (app.get_subcommand()->count("--seed") > 0) opts.seed = seed;
  if (jobs > 0) opts.jobs = jobs;

  if (assign->parsed()) return detlab::cmd::cmd_assign(opts, candidates_file, objects_file);
  if (perceptron->parsed()) return detlab::cmd::cmd_perceptron(opts);
  if (train->parsed()) return detlab::cmd::cmd_train(opts);
  if (crowd->parsed()) return detlab::cmd::cmd_crowd(opts);
  if (eval->parsed()) return detlab::cmd::cmd_eval(opts, detections_file, gts_file);
  if (nms->parsed()) return detlab::cmd::cmd_nms(opts, detections_file);
  return detlab::cmd::kConfigError;
}
