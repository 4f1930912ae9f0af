#include "pcert/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "pcert/cached_classifier.hpp"
#include "pcert/classifier.hpp"
#include "pcert/dataset.hpp"
#include "pcert/defense.hpp"
#include "pcert/mask_geometry.hpp"
#include "pcert/oracle.hpp"
#include "pcert/parallel.hpp"
#include "pcert/strategies.hpp"
#include "pcert/train.hpp"

namespace pcert {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  int n = 32;
  double patch_frac = 0.024;
  int patch_size = 0;
  int k = 3;
  std::string strategy = "none";
  int epochs = 10;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  float fill = 0.0f;
  std::string dataset = "synth";
  std::string data_path;
  std::string model;
  std::string out;
  std::size_t threads = 1;
  std::size_t count = 512;
  std::uint64_t data_seed = 0;
  std::size_t limit = 0;
  std::size_t hidden = 64;
  bool include_clean = false;
  bool frozen_reference = false;
  std::string in;
  std::vector<std::string> runs;
  std::size_t dictionary_size = 8;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string percent(double fraction) { return fmt::format("{:.1f}%", 100.0 * fraction); }
std::string loss6(double v) { return fmt::format("{:.6f}", v); }

int resolve_patch_side(const Options& o, int n) {
  if (o.patch_size > 0) return o.patch_size;
  return patch_side_from_fraction(n, n, o.patch_frac);
}

LabeledDataset load_dataset(const Options& o) {
  LabeledDataset data;
  if (o.dataset == "synth") {
    SynthSpec spec;
    spec.side = o.n;
    spec.seed = o.data_seed;
    data = generate_synth(spec, o.count).data;
  } else if (o.dataset == "cifar10") {
    if (o.data_path.empty()) throw UsageError("--data-path is required for --dataset cifar10");
    data = load_cifar10_binary(o.data_path);
  } else {
    throw UsageError(fmt::format("unknown dataset '{}'", o.dataset));
  }
  if (o.limit > 0 && data.size() > o.limit) {
    data.images.resize(o.limit);
    data.labels.resize(o.limit);
  }
  if (data.size() == 0) throw InvalidArgument("dataset is empty");
  return data;
}

int image_side(const LabeledDataset& data) {
  const ImageTensor& first = data.images.front();
  if (first.height() != first.width()) throw DimensionMismatch("mask sets require square images");
  return static_cast<int>(first.height());
}

// Stand-in when a strategy never queries the classifier.
class UniformClassifier final : public Classifier {
 public:
  explicit UniformClassifier(std::size_t classes) : classes_(classes) {}
  std::size_t class_count() const override { return classes_; }
  ProbabilityVector predict(const ImageTensor&) const override {
    return ProbabilityVector(classes_, 1.0 / static_cast<double>(classes_));
  }

 private:
  std::size_t classes_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class Run {
 public:
  Run(std::string name, const Options& o, const std::vector<std::string>& argv)
      : name_(std::move(name)), options_(o), argv_(argv) {}

  void param(const std::string& key, json value) { params_[key] = std::move(value); }
  void output(const std::string& name, const std::string& text) { outputs_.emplace_back(name, text); }

  // Writes outputs (and the manifest) under --out, or the first output to `out` otherwise.
  void finish(std::ostream& out) const {
    if (options_.out.empty()) {
      for (const auto& [file, text] : outputs_) out << text;
      return;
    }
    fs::create_directories(options_.out);
    json manifest;
    manifest["tool"] = "patchcert";
    manifest["version"] = kToolVersion;
    manifest["subcommand"] = name_;
    manifest["seed"] = options_.seed;
    manifest["argv"] = argv_;
    manifest["params"] = params_;
    json files = json::array();
    for (const auto& [file, text] : outputs_) {
      write_file(fs::path(options_.out) / file, text);
      files.push_back(file);
    }
    manifest["outputs"] = files;
    std::string stem = name_;
    std::replace(stem.begin(), stem.end(), ' ', '-');
    write_file(fs::path(options_.out) / (stem + ".manifest.json"), manifest.dump(2) + "\n");
  }

 private:
  std::string name_;
  const Options& options_;
  std::vector<std::string> argv_;
  json params_ = json::object();
  std::vector<std::pair<std::string, std::string>> outputs_;
};

int cmd_masks_gen(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  const int p = resolve_patch_side(o, o.n);
  const MaskSet set = build_mask_set(o.n, p, o.k);
  std::string positions;
  for (int pos : set.positions()) positions += (positions.empty() ? "" : ",") + std::to_string(pos);
  out << fmt::format("s={} m={} positions {}\n", set.stride(), set.mask_side(), positions);
  if (!o.out.empty()) {
    Run run("masks gen", o, argv);
    run.param("n", o.n);
    run.param("patch_side", p);
    run.param("k", o.k);
    run.output("masks.txt", to_descriptor(set));
    run.finish(out);
  }
  return 0;
}

int cmd_masks_verify(const Options& o, std::ostream& out) {
  const MaskSet set = o.in.empty() ? build_mask_set(o.n, resolve_patch_side(o, o.n), o.k)
                                   : load_descriptor(o.in);
  const int p = o.patch_size > 0 ? o.patch_size : set.patch_side();
  const CoveringReport report = verify_r_covering(set, p);
  if (report) {
    out << "covering: OK\n";
    return 0;
  }
  out << fmt::format("covering: FAILED at patch ({}, {})\n", report.uncovered->first,
                     report.uncovered->second);
  return 1;
}

std::string format_copy_ids(const AugmentedCopy& copy) {
  std::string ids;
  if (copy.mask_set == "free") {
    for (const MaskRect& r : copy.masks) {
      ids += fmt::format("{}({} {} {} {})", ids.empty() ? "" : " ", r.x0, r.y0, r.w, r.h);
    }
    return "free:" + ids;
  }
  for (std::size_t id : copy.mask_ids) ids += (ids.empty() ? "" : " ") + std::to_string(id);
  return copy.mask_set + ":" + ids;
}

int cmd_augment(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  const StrategyKind kind = parse_strategy(o.strategy);
  const LabeledDataset data = load_dataset(o);
  const int n = image_side(data);
  std::optional<MlpModel> model;
  if (!o.model.empty()) model = MlpModel::load(o.model);
  if (!model && (strategy_uses_classifier(kind) || kind == StrategyKind::kSaliency)) {
    throw UsageError(fmt::format("strategy '{}' needs --model", o.strategy));
  }
  const UniformClassifier uniform(data.class_count);
  const Classifier& classifier = model ? static_cast<const Classifier&>(*model) : uniform;

  StrategyContext ctx(n, resolve_patch_side(o, n), o.fill);
  ctx.saliency_k = o.k;
  CachedClassifier cache(classifier, o.fill);
  SaliencyProvider saliency;
  if (model) {
    saliency = [&](const ImageTensor& img, std::size_t label) { return gradient_saliency(*model, img, label); };
  }

  std::vector<ImageId> ids(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) ids[i] = cache.register_image(data.images[i]);
  std::vector<std::string> rows(data.size());
  parallel_for(data.size(), o.threads, [&](std::size_t i) {
    Rng rng(o.seed + i);
    const StrategyOutcome outcome = run_strategy(kind, ctx, cache, ids[i], data.labels[i], rng, saliency);
    std::string mask_ids;
    std::string losses;
    for (std::size_t c = 0; c < outcome.copies.size(); ++c) {
      const AugmentedCopy& copy = outcome.copies[c];
      mask_ids += (c ? "|" : "") + format_copy_ids(copy);
      losses += (c ? "|" : "") + (copy.loss ? loss6(*copy.loss) : std::string());
    }
    rows[i] = fmt::format("{},{},{},{},{},{}\n", i, o.strategy, mask_ids, losses,
                          outcome.scheduled_evaluations, outcome.unique_evaluations);
  });
  std::string csv = "image_id,strategy,mask_ids,losses,scheduled_passes,unique_passes\n";
  for (const std::string& row : rows) csv += row;
  Run run("augment", o, argv);
  run.param("strategy", o.strategy);
  run.param("patch_side", ctx.coarse().patch_side());
  run.param("dataset_size", data.size());
  run.output("augment.csv", csv);
  run.finish(out);
  return 0;
}

int cmd_train(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.out.empty()) throw UsageError("train needs --out");
  const LabeledDataset data = load_dataset(o);
  const int n = image_side(data);
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.momentum = o.momentum;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.strategy = parse_strategy(o.strategy);
  cfg.patch_side = resolve_patch_side(o, n);
  cfg.saliency_k = o.k;
  cfg.fill = o.fill;
  cfg.include_clean = o.include_clean;
  cfg.frozen_reference = o.frozen_reference;
  cfg.threads = o.threads;

  const ImageTensor& first = data.images.front();
  MlpModel initial = o.model.empty()
                         ? MlpModel::initialized({first.height(), first.width(), first.channels()},
                                                 o.hidden, data.class_count, o.seed)
                         : MlpModel::load(o.model);
  const TrainResult result = train(std::move(initial), data, cfg);

  std::string log = "epoch,lr,mean_loss,scheduled_passes,unique_passes\n";
  for (const EpochLog& e : result.log) {
    log += fmt::format("{},{:.6f},{},{},{}\n", e.epoch, e.learning_rate, loss6(e.mean_loss),
                       e.scheduled_evaluations, e.unique_evaluations);
  }
  const auto bytes = result.model.serialize();

  Run run("train", o, argv);
  run.param("strategy", o.strategy);
  run.param("epochs", o.epochs);
  run.param("patch_side", cfg.patch_side);
  run.param("dataset_size", data.size());
  run.param("hidden", result.model.hidden());
  run.output("train_log.csv", log);
  run.output("model.bin", std::string(bytes.begin(), bytes.end()));
  run.finish(out);
  out << fmt::format("trained {} epochs, final mean loss {}\n", o.epochs,
                     loss6(result.log.back().mean_loss));
  return 0;
}

int cmd_certify(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.model.empty()) throw UsageError("certify needs --model");
  const MlpModel model = MlpModel::load(o.model);
  const LabeledDataset data = load_dataset(o);
  const int n = image_side(data);
  const int p = resolve_patch_side(o, n);
  const MaskSet set = build_mask_set(n, p, o.k);
  const EvaluationMetrics m = evaluate(model, data, set, o.fill, o.threads);

  std::string csv = "image_id,true_label,defended_label,case,certified,witness,unique_passes\n";
  for (std::size_t i = 0; i < m.per_image.size(); ++i) {
    const ImageEvaluation& row = m.per_image[i];
    const auto& w = row.certification.witness;
    csv += fmt::format("{},{},{},{},{},{},{}\n", i, row.true_label, row.inference.label,
                       case_tag(row.inference.inference_case), row.certification.certified ? 1 : 0,
                       w ? fmt::format("{}-{}", w->first, w->second) : std::string(),
                       row.unique_evaluations);
  }
  const std::string summary =
      fmt::format("# clean_accuracy={} certified_robust_accuracy={} cases=I:{}/II:{}/III:{} "
                  "unique_passes={}\n",
                  percent(m.clean_accuracy), percent(m.certified_robust_accuracy),
                  m.case_histogram[0], m.case_histogram[1], m.case_histogram[2],
                  m.total_unique_evaluations);
  csv += summary;

  Run run("certify", o, argv);
  run.param("k", set.k());
  run.param("patch_side", p);
  run.param("dataset_size", data.size());
  run.output("certify.csv", csv);
  run.finish(out);
  if (!o.out.empty()) out << summary;
  return 0;
}

int cmd_attack(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.model.empty()) throw UsageError("attack-sim needs --model");
  const MlpModel model = MlpModel::load(o.model);
  const LabeledDataset data = load_dataset(o);
  const int n = image_side(data);
  const int p = resolve_patch_side(o, n);
  const MaskSet set = build_mask_set(n, p, o.k);
  const auto dictionary = make_patch_dictionary(p, o.dictionary_size, o.seed);

  std::string csv = "image_id,patch_x,patch_y,fill,defended_label,true_label\n";
  std::size_t certified = 0;
  std::size_t unsound = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    CachedClassifier cache(model, o.fill);
    const ImageId id = cache.register_image(data.images[i]);
    const bool is_certified = certify(cache, id, data.labels[i], set).certified;
    AttackOptions opts;
    opts.image_id = i;
    opts.threads = o.threads;
    opts.fill = o.fill;
    const AttackReport report = attack_simulate(data.images[i], data.labels[i], model, set, p,
                                                dictionary, opts);
    if (is_certified) {
      ++certified;
      if (!report.violations.empty() || report.covered_prediction_mismatches > 0) ++unsound;
    }
    violations += report.violations.size();
    for (const Violation& v : report.violations) {
      csv += fmt::format("{},{},{},{},{},{}\n", v.image_id, v.x, v.y, v.fill, v.defended_label,
                         v.true_label);
    }
  }
  Run run("attack-sim", o, argv);
  run.param("k", set.k());
  run.param("patch_side", p);
  run.param("dictionary_size", dictionary.size());
  run.param("dataset_size", data.size());
  run.output("violations.csv", csv);
  run.finish(out);
  out << fmt::format("images={} certified={} violations={} unsound_certified={}\n", data.size(),
                     certified, violations, unsound);
  return unsound == 0 ? 0 : 1;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string format_per_image(std::size_t total, std::size_t per) {
  if (per == 0 || total == 0) return "-";  // strategy never queries the classifier
  if (total % per == 0) return std::to_string(total / per);
  return fmt::format("{:.1f}", static_cast<double>(total) / static_cast<double>(per));
}

int cmd_report(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.runs.empty()) throw UsageError("report needs --runs");
  std::string table =
      "| strategy | passes/image | unique passes/image | clean acc | certified acc |\n"
      "|---|---|---|---|---|\n";
  for (const std::string& dir : o.runs) {
    const json manifest = json::parse(read_file(fs::path(dir) / "train.manifest.json"));
    const auto& params = manifest.at("params");
    const std::size_t images = params.at("dataset_size").get<std::size_t>();
    const int epochs = params.at("epochs").get<int>();
    std::size_t scheduled = 0;
    std::size_t unique = 0;
    for (const auto& row : read_csv_rows(fs::path(dir) / "train_log.csv")) {
      scheduled += std::stoull(row.at(3));
      unique += std::stoull(row.at(4));
    }
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t certified = 0;
    for (const auto& row : read_csv_rows(fs::path(dir) / "certify.csv")) {
      ++total;
      if (row.at(1) == row.at(2)) ++correct;
      if (row.at(4) == "1") ++certified;
    }
    if (total == 0) throw FormatError("no certification rows in " + dir);
    const std::size_t per = images * static_cast<std::size_t>(epochs);
    table += fmt::format("| {} | {} | {} | {} | {} |\n", params.at("strategy").get<std::string>(),
                         format_per_image(scheduled, per), format_per_image(unique, per),
                         percent(static_cast<double>(correct) / static_cast<double>(total)),
                         percent(static_cast<double>(certified) / static_cast<double>(total)));
  }
  out << table;
  if (!o.out.empty()) {
    Run run("report", o, argv);
    run.param("runs", o.runs);
    run.output("report.md", table);
    run.finish(out);
  }
  return 0;
}

void add_dataset_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset, "synth or cifar10")->check(CLI::IsMember({"synth", "cifar10"}));
  cmd->add_option("--data-path", o.data_path, "CIFAR-10 binary batch file");
  cmd->add_option("--count", o.count, "synthetic image count");
  cmd->add_option("--data-seed", o.data_seed, "synthetic dataset seed");
  cmd->add_option("--limit", o.limit, "use only the first N images (0 = all)");
  cmd->add_option("--n", o.n, "synthetic image side");
}

void add_patch_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--patch-frac", o.patch_frac, "patch area as a fraction of the image");
  cmd->add_option("--patch-size", o.patch_size, "patch side in pixels (overrides --patch-frac)");
}

std::vector<std::string> with_override(std::vector<std::string> argv, const std::string& flag,
                                       const std::string& value) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == flag) {
      ++i;
      continue;
    }
    if (argv[i].rfind(flag + "=", 0) == 0) continue;
    out.push_back(argv[i]);
  }
  out.push_back(flag);
  out.push_back(value);
  return out;
}

int replay(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"replay a saved run"};
  std::string manifest_path;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  app.add_option("--manifest", manifest_path)->required();
  app.add_option("--threads", threads);
  app.add_option("--out", out_dir);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }
  const json manifest = json::parse(read_file(manifest_path));
  auto argv = manifest.at("argv").get<std::vector<std::string>>();
  if (threads) argv = with_override(argv, "--threads", std::to_string(*threads));
  if (out_dir) argv = with_override(argv, "--out", *out_dir);
  if (std::find(argv.begin(), argv.end(), "--manifest") != argv.end()) {
    err << "manifest argv must not itself replay a manifest\n";
    return 2;
  }
  return cli_dispatch(argv, out, err);
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (!args.empty() && (args[0] == "--manifest" || args[0].rfind("--manifest=", 0) == 0)) {
    try {
      return replay(args, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }

  Options o;
  CLI::App app{"Certified patch defense: mask sets, worst-case mask training, certification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* masks = app.add_subcommand("masks", "build or verify a covering mask set");
  masks->require_subcommand(1);
  auto* gen = masks->add_subcommand("gen", "print (and optionally save) a mask set");
  gen->add_option("--n", o.n, "image side");
  add_patch_flags(gen, o);
  gen->add_option("--k", o.k, "masks per axis");
  gen->add_option("--out", o.out, "output directory");
  gen->add_option("--threads", o.threads, "accepted for uniformity; generation is serial");
  auto* verify = masks->add_subcommand("verify", "brute-force covering check");
  verify->add_option("--in", o.in, "mask descriptor file");
  verify->add_option("--n", o.n, "image side");
  add_patch_flags(verify, o);
  verify->add_option("--k", o.k, "masks per axis");
  verify->add_option("--threads", o.threads, "accepted for uniformity; verification is serial");

  const std::vector<std::string> strategies{"random", "rand3", "rand6", "rand", "saliency", "greedy3",
                                            "greedy6", "multisize", "grid3", "grid6", "none"};

  auto* augment = app.add_subcommand("augment", "run a masking strategy on each image");
  add_dataset_flags(augment, o);
  add_patch_flags(augment, o);
  augment->add_option("--strategy", o.strategy)->check(CLI::IsMember(strategies));
  augment->add_option("--k", o.k, "mask set for the saliency strategy (3 or 6)");
  augment->add_option("--model", o.model, "model checkpoint");
  augment->add_option("--seed", o.seed);
  augment->add_option("--fill", o.fill);
  augment->add_option("--threads", o.threads);
  augment->add_option("--out", o.out, "output directory");

  auto* train_cmd = app.add_subcommand("train", "train the built-in model with a masking strategy");
  add_dataset_flags(train_cmd, o);
  add_patch_flags(train_cmd, o);
  train_cmd->add_option("--strategy", o.strategy)->check(CLI::IsMember(strategies));
  train_cmd->add_option("--k", o.k, "mask set for the saliency strategy (3 or 6)");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--lr", o.lr);
  train_cmd->add_option("--momentum", o.momentum);
  train_cmd->add_option("--batch", o.batch);
  train_cmd->add_option("--seed", o.seed);
  train_cmd->add_option("--fill", o.fill);
  train_cmd->add_option("--hidden", o.hidden, "hidden width of a freshly initialized model");
  train_cmd->add_option("--model", o.model, "initial model checkpoint");
  train_cmd->add_flag("--include-clean", o.include_clean, "also train on clean images");
  train_cmd->add_flag("--frozen-reference", o.frozen_reference, "select masks with the initial weights");
  train_cmd->add_option("--threads", o.threads);
  train_cmd->add_option("--out", o.out, "output directory")->required();

  auto* certify_cmd = app.add_subcommand("certify", "defended inference and certification");
  add_dataset_flags(certify_cmd, o);
  add_patch_flags(certify_cmd, o);
  certify_cmd->add_option("--model", o.model)->required();
  certify_cmd->add_option("--k", o.k);
  certify_cmd->add_option("--fill", o.fill);
  certify_cmd->add_option("--seed", o.seed);
  certify_cmd->add_option("--threads", o.threads);
  certify_cmd->add_option("--out", o.out, "output directory");

  auto* attack = app.add_subcommand("attack-sim", "exhaustive patch placement with a fill dictionary");
  add_dataset_flags(attack, o);
  add_patch_flags(attack, o);
  attack->add_option("--model", o.model)->required();
  attack->add_option("--k", o.k);
  attack->add_option("--fill", o.fill);
  attack->add_option("--seed", o.seed, "seed for the random patch fills");
  attack->add_option("--dictionary-size", o.dictionary_size, "number of random patch fills");
  attack->add_option("--threads", o.threads);
  attack->add_option("--out", o.out, "output directory");

  auto* report = app.add_subcommand("report", "strategy comparison table from train+certify runs");
  report->add_option("--runs", o.runs, "run directories holding train and certify outputs")->required();
  report->add_option("--threads", o.threads, "accepted for uniformity; reporting is serial");
  report->add_option("--out", o.out, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_masks_gen(o, args, out);
    if (verify->parsed()) return cmd_masks_verify(o, out);
    if (augment->parsed()) return cmd_augment(o, args, out);
    if (train_cmd->parsed()) return cmd_train(o, args, out);
    if (certify_cmd->parsed()) return cmd_certify(o, args, out);
    if (attack->parsed()) return cmd_attack(o, args, out);
    if (report->parsed()) return cmd_report(o, args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace pcert
