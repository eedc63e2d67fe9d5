#include "mitoforge/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mitoforge/csv.hpp"
#include "mitoforge/ensemble.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/fda.hpp"
#include "mitoforge/fisheye.hpp"
#include "mitoforge/imaging.hpp"
#include "mitoforge/lora.hpp"
#include "mitoforge/pipeline.hpp"
#include "mitoforge/random.hpp"

namespace mitoforge::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradcheckTolerance = 1e-5;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

// ---- option bundles ---------------------------------------------------------

struct AugmentArgs {
  std::string config, manifest, out_dir, provenance;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct FisheyeArgs {
  std::string input, out;
  double k = 0.0;
};

struct FdaArgs {
  std::vector<std::string> sources;
  std::string target, target_dir, out, out_dir;
  double beta = 0.01;
  std::uint64_t seed = 0;
};

struct SampleArgs {
  std::string manifest, weights = "1,0.15,0.15", out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct SplitArgs {
  std::string manifest, out;
  double ratio = 0.8;
  std::uint64_t seed = 0;
  bool per_source = false;
};

struct GradcheckArgs {
  std::size_t d = 8, heads = 2, rank = 2, tokens = 4, samples = 4;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

struct DemoTrainArgs {
  std::string out;
  std::size_t epochs = 200, patience = 200, d = 8, heads = 2, rank = 2, tokens = 4;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

struct EnsembleFitArgs {
  std::vector<std::string> preds;
  std::string labels, out;
  std::size_t iterations = 25, workers = 1;
};

struct EnsemblePredictArgs {
  std::vector<std::string> preds;
  std::string weights, out;
};

struct EvaluateArgs {
  std::string preds, labels;
  bool by_domain = false;
  bool json = false;
};

// ---- subcommand bodies ------------------------------------------------------

int do_augment(const AugmentArgs& a, std::ostream&, std::ostream& err) {
  AugmentConfig cfg = load_augment_config(a.config);
  cfg.seed = a.seed;
  const auto records = read_manifest(a.manifest);
  TargetPool targets;
  if (cfg.target_dir) {
    fs::path dir = *cfg.target_dir;
    if (dir.is_relative()) dir = fs::path(a.config).parent_path() / dir;
    targets = TargetPool::load(dir);
  }
  if (cfg.fda_probability > 0.0 && targets.empty()) {
    fail(ErrorKind::MissingTargets,
         "fda_probability > 0 but no target images were found (set target_dir)");
  }
  const auto provenance = augment_records(records, fs::path(a.manifest).parent_path(), cfg,
                                          targets, a.out_dir, a.workers);
  if (!a.provenance.empty()) {
    std::string text;
    for (const auto& p : provenance) text += to_json_line(p) + "\n";
    write_text(a.provenance, text);
  }
  err << "augmented " << records.size() << " images into " << a.out_dir << "\n";
  return kSuccess;
}

int do_fisheye(const FisheyeArgs& a, std::ostream&, std::ostream&) {
  const ImageBuffer img = load_png(a.input);
  save_png(fisheye(img, {a.k, Interpolator::clamp()}), a.out);
  return kSuccess;
}

int do_fda(const FdaArgs& a, std::ostream&, std::ostream& err) {
  if (a.target.empty() == a.target_dir.empty()) {
    fail(ErrorKind::InvalidInput, "fda: give exactly one of --target or --target-dir");
  }
  if (a.sources.size() > 1 && a.out_dir.empty()) {
    fail(ErrorKind::InvalidInput, "fda: several sources need --out-dir");
  }
  if (a.out.empty() == a.out_dir.empty()) {
    fail(ErrorKind::InvalidInput, "fda: give exactly one of --out or --out-dir");
  }
  TargetPool pool;
  if (!a.target.empty()) {
    pool.add(fs::path(a.target).filename().string(), load_png(a.target));
  } else {
    pool = TargetPool::load(a.target_dir);
    if (pool.empty()) fail(ErrorKind::MissingTargets, "no PNG targets in " + a.target_dir);
  }
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);

  for (std::size_t i = 0; i < a.sources.size(); ++i) {
    CounterRng rng(derive_seed(a.seed, i));
    const std::size_t pick = pool.size() == 1 ? 0 : rng.below(pool.size());
    const ImageBuffer src = load_png(a.sources[i]);
    const fs::path out = a.out_dir.empty()
                             ? fs::path(a.out)
                             : fs::path(a.out_dir) / fs::path(a.sources[i]).filename();
    save_png(fda_transfer(src, pool.image(pick), {a.beta}), out);
    err << a.sources[i] << " <- " << pool.name(pick) << "\n";
  }
  return kSuccess;
}

GroupWeights parse_group_weights(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(csv::parse_double(item, "--weights"));
  require(values.size() == 3,
          "--weights expects three values: primary_train,external_a,external_b");
  GroupWeights gw;
  gw.weights = {{DatasetGroup::PrimaryTrain, values[0]},
                {DatasetGroup::ExternalA, values[1]},
                {DatasetGroup::ExternalB, values[2]}};
  return gw;
}

int do_sample(const SampleArgs& a, std::ostream&, std::ostream&) {
  const auto records = read_manifest(a.manifest);
  const auto ids = weighted_sample(records, parse_group_weights(a.weights), a.n, a.seed);
  std::ostringstream out;
  csv::write_row(out, {"draw", "id"});
  for (std::size_t i = 0; i < ids.size(); ++i) csv::write_row(out, {std::to_string(i), ids[i]});
  write_text(a.out, out.str());
  return kSuccess;
}

int do_split(const SplitArgs& a, std::ostream&, std::ostream& err) {
  if (a.per_source) {
    fail(ErrorKind::InvalidInput, "--split-per-source is reserved and not supported yet");
  }
  const auto records = read_manifest(a.manifest);
  auto split = split_manifest(records, a.ratio, a.seed);
  err << "train " << split.train.size() << ", val " << split.val.size() << "\n";
  auto all = std::move(split.train);
  all.insert(all.end(), split.val.begin(), split.val.end());
  write_manifest(all, a.out);
  return kSuccess;
}

int do_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  using namespace lora;
  const ModelShape shape{a.d, a.heads, a.rank, 2, a.scale};
  const ToyClassifier model = make_gradcheck_model(shape, a.seed);
  CounterRng rng(derive_seed(a.seed, 2));
  Batch x;
  std::vector<int> y;
  for (std::size_t n = 0; n < a.samples; ++n) {
    Matrix s(a.tokens, a.d);
    for (double& v : s.data()) v = rng.normal();
    x.push_back(std::move(s));
    y.push_back(static_cast<int>(n % 2));
  }
  const auto report = gradient_check(model, x, y);
  out << "max_relative_error " << std::setprecision(6) << report.max_relative_error
      << " (" << report.worst_tensor << "[" << report.worst_index << "], "
      << report.entries << " entries)\n";
  if (report.max_relative_error < kGradcheckTolerance) return kSuccess;
  err << "gradient check failed: tolerance " << kGradcheckTolerance << "\n";
  return kCheckFailed;
}

int do_demo_train(const DemoTrainArgs& a, std::ostream& out, std::ostream&) {
  using namespace lora;
  const ModelShape shape{a.d, a.heads, a.rank, 2, 1.0};
  const auto train = make_separable_tokens(200, a.d, a.tokens, 2.0, 0.1, derive_seed(a.seed, 1));
  const auto val = make_separable_tokens(100, a.d, a.tokens, 2.0, 0.1, derive_seed(a.seed, 2));
  ToyClassifier model = make_toy_classifier(shape, derive_seed(a.seed, 3));
  const auto before = frozen_checksum(model.layer);

  TrainOptions opt;
  opt.lr = a.lr;
  opt.epochs = a.epochs;
  opt.patience = a.patience;
  opt.seed = derive_seed(a.seed, 4);
  const auto result = train_toy(model, train, val, opt);

  std::ostringstream csv_out;
  csv::write_row(csv_out, {"epoch", "train_loss", "val_loss", "val_balanced_accuracy"});
  for (const auto& e : result.history) {
    csv::write_row(csv_out, {std::to_string(e.epoch), csv::format_double(e.train_loss),
                             csv::format_double(e.val_loss),
                             csv::format_double(e.val_balanced_accuracy)});
  }
  write_text(a.out, csv_out.str());
  const bool frozen_unchanged = frozen_checksum(result.model.layer) == before;
  out << "best_epoch " << result.best_epoch << " val_balanced_accuracy "
      << result.best_val_balanced_accuracy << " frozen_unchanged "
      << (frozen_unchanged ? "true" : "false") << "\n";
  return frozen_unchanged ? kSuccess : kCheckFailed;
}

std::vector<PredictionMatrix> load_all(const std::vector<std::string>& paths) {
  std::vector<PredictionMatrix> preds;
  for (const auto& p : paths) preds.push_back(read_predictions(p));
  return preds;
}

int do_ensemble_fit(const EnsembleFitArgs& a, std::ostream&, std::ostream& err) {
  const auto preds = load_all(a.preds);
  const auto truth = read_labels(a.labels, preds.front().classes);
  const auto fit = fit_greedy(preds, truth, a.iterations, a.workers);
  write_text(a.out, weights_to_json(fit));
  err << "fit balanced accuracy " << fit.fit_balanced_accuracy << " (best round "
      << fit.best_round << ")\n";
  return kSuccess;
}

int do_ensemble_predict(const EnsemblePredictArgs& a, std::ostream&, std::ostream&) {
  const auto preds = load_all(a.preds);
  const auto weights = weights_from_json(read_text(a.weights));
  const auto result = ensemble_predict(preds, weights);
  write_predictions(result.probs, a.out);
  return kSuccess;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream&) {
  const auto table = csv::read(a.preds);
  EvalReport report;
  if (table.header.size() == 2 && table.header[0] == "id" && table.header[1] == "pred") {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& row : table.rows) {
      ids.push_back(row[0]);
      labels.push_back(static_cast<int>(csv::parse_int(row[1], "pred of " + row[0])));
    }
    report = evaluate(ids, labels, read_labels(a.labels), a.by_domain);
  } else {
    const auto preds = read_predictions(a.preds);
    report = evaluate(preds, read_labels(a.labels, preds.classes), a.by_domain);
  }
  out << (a.json ? report_to_json(report) : format_report_table(report));
  return kSuccess;
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::Io ? kIoError : kValidationError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mitoforge: augmentation, LoRA and ensemble toolkit for mitosis classifiers",
               "mitoforge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::function<int()> action;

  // augment
  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Run the seeded augmentation chain over a manifest");
  augment->add_option("--config", aug.config, "AugmentConfig JSON")->required()->check(CLI::ExistingFile);
  augment->add_option("--manifest", aug.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  augment->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  augment->add_option("--seed", aug.seed, "Base seed (overrides the config)")->required();
  augment->add_option("--provenance", aug.provenance, "Provenance JSONL output");
  augment->add_option("--workers", aug.workers, "Worker threads")->check(CLI::PositiveNumber);
  augment->callback([&] { action = [&] { return do_augment(aug, out, err); }; });

  // fisheye
  FisheyeArgs fe;
  auto* fisheye_cmd = app.add_subcommand("fisheye", "Apply the radial fisheye warp to a PNG");
  fisheye_cmd->add_option("--input", fe.input, "Input PNG")->required()->check(CLI::ExistingFile);
  fisheye_cmd->add_option("--k", fe.k, "Distortion coefficient (> -1)")->required();
  fisheye_cmd->add_option("--out", fe.out, "Output PNG")->required();
  fisheye_cmd->callback([&] { action = [&] { return do_fisheye(fe, out, err); }; });

  // fda
  FdaArgs fd;
  auto* fda_cmd = app.add_subcommand("fda", "Fourier domain adaptation against a target image");
  fda_cmd->add_option("--source", fd.sources, "Source PNG(s)")->required()->check(CLI::ExistingFile);
  auto* target_opt = fda_cmd->add_option("--target", fd.target, "Target PNG")->check(CLI::ExistingFile);
  auto* target_dir_opt = fda_cmd->add_option("--target-dir", fd.target_dir, "Directory of target PNGs")
                             ->check(CLI::ExistingDirectory);
  fda_cmd->add_option("--beta", fd.beta, "Low-frequency window fraction")->check(CLI::Range(0.0, 1.0));
  fda_cmd->add_option("--out", fd.out, "Output PNG");
  fda_cmd->add_option("--out-dir", fd.out_dir, "Output directory (batch mode)");
  auto* fda_seed = fda_cmd->add_option("--seed", fd.seed, "Seed for drawing targets");
  target_opt->excludes(target_dir_opt);
  target_dir_opt->needs(fda_seed);
  fda_cmd->callback([&] { action = [&] { return do_fda(fd, out, err); }; });

  // sample
  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Group-weighted sampling with replacement");
  sample->add_option("--manifest", sa.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  sample->add_option("--weights", sa.weights, "primary_train,external_a,external_b weights");
  sample->add_option("--n", sa.n, "Number of draws")->required()->check(CLI::PositiveNumber);
  sample->add_option("--seed", sa.seed, "Seed")->required();
  sample->add_option("--out", sa.out, "Output CSV (draw,id)")->required();
  sample->callback([&] { action = [&] { return do_sample(sa, out, err); }; });

  // split
  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Seeded train/val split of the primary group");
  split->add_option("--manifest", sp.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  split->add_option("--ratio", sp.ratio, "Train fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", sp.seed, "Seed")->required();
  split->add_option("--out", sp.out, "Output manifest")->required();
  split->add_flag("--split-per-source", sp.per_source, "Reserved");
  split->callback([&] { action = [&] { return do_split(sp, out, err); }; });

  // lora
  auto* lora_cmd = app.add_subcommand("lora", "Toy LoRA attention model tools");
  lora_cmd->require_subcommand(1);
  GradcheckArgs gc;
  auto* gradcheck = lora_cmd->add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--d", gc.d, "Model width");
  gradcheck->add_option("--heads", gc.heads, "Attention heads");
  gradcheck->add_option("--rank", gc.rank, "Adapter rank");
  gradcheck->add_option("--tokens", gc.tokens, "Tokens per sample");
  gradcheck->add_option("--samples", gc.samples, "Batch size");
  gradcheck->add_option("--scale", gc.scale, "Adapter scale");
  gradcheck->add_option("--seed", gc.seed, "Seed")->required();
  gradcheck->callback([&] { action = [&] { return do_gradcheck(gc, out, err); }; });

  DemoTrainArgs dt;
  auto* demo = lora_cmd->add_subcommand("demo-train", "Train the toy model on separable data");
  demo->add_option("--out", dt.out, "History CSV")->required();
  demo->add_option("--epochs", dt.epochs, "Maximum epochs");
  demo->add_option("--patience", dt.patience, "Early-stopping patience");
  demo->add_option("--lr", dt.lr, "Learning rate");
  demo->add_option("--d", dt.d, "Model width");
  demo->add_option("--heads", dt.heads, "Attention heads");
  demo->add_option("--rank", dt.rank, "Adapter rank");
  demo->add_option("--tokens", dt.tokens, "Tokens per sample");
  demo->add_option("--seed", dt.seed, "Seed")->required();
  demo->callback([&] { action = [&] { return do_demo_train(dt, out, err); }; });

  // ensemble
  auto* ensemble_cmd = app.add_subcommand("ensemble", "Weighted ensemble of prediction files");
  ensemble_cmd->require_subcommand(1);
  EnsembleFitArgs ef;
  auto* fit = ensemble_cmd->add_subcommand("fit", "Greedy balanced-accuracy ensemble selection");
  fit->add_option("--preds", ef.preds, "Prediction CSVs")->required()->check(CLI::ExistingFile);
  fit->add_option("--labels", ef.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--iterations", ef.iterations, "Selection rounds")->check(CLI::PositiveNumber);
  fit->add_option("--workers", ef.workers, "Threads for candidate scoring")->check(CLI::PositiveNumber);
  fit->add_option("--out", ef.out, "Weights JSON")->required();
  fit->callback([&] { action = [&] { return do_ensemble_fit(ef, out, err); }; });

  EnsemblePredictArgs ep;
  auto* predict = ensemble_cmd->add_subcommand("predict", "Blend predictions with fitted weights");
  predict->add_option("--preds", ep.preds, "Prediction CSVs")->required()->check(CLI::ExistingFile);
  predict->add_option("--weights", ep.weights, "Weights JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", ep.out, "Blended predictions CSV")->required();
  predict->callback([&] { action = [&] { return do_ensemble_predict(ep, out, err); }; });

  // evaluate
  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Balanced accuracy report (OBA + per domain)");
  evaluate_cmd->add_option("--preds", ev.preds, "Predictions CSV (probabilities or id,pred)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--labels", ev.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_flag("--by-domain", ev.by_domain, "Report per-domain balanced accuracy");
  evaluate_cmd->add_flag("--json", ev.json, "Emit the report as JSON");
  evaluate_cmd->callback([&] { action = [&] { return do_evaluate(ev, out, err); }; });

  // CLI11 consumes arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kValidationError;
  }

  try {
    return action ? action() : kValidationError;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (IoError): " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

}  // namespace mitoforge::cli
