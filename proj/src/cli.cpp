#include "twincl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "twincl/checkpoint.hpp"
#include "twincl/io.hpp"

namespace twincl {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Train: return "train";
    case Mode::Eval: return "eval";
    case Mode::Diagnose: return "diagnose";
    case Mode::Sweep: return "sweep";
  }
  return "train";
}

namespace {

Mode parse_mode(const std::string& s) {
  if (s == "train") return Mode::Train;
  if (s == "eval") return Mode::Eval;
  if (s == "diagnose") return Mode::Diagnose;
  if (s == "sweep") return Mode::Sweep;
  throw Error("unknown mode '" + s + "'");
}

struct OptionSpec {
  std::string key;
  std::string help;
  bool flag = false;
};

const std::vector<OptionSpec>& option_specs() {
  static const std::vector<OptionSpec> specs = {
      {"train-file", "training interactions"},
      {"test-file", "test interactions"},
      {"format", "input format: adj or pairs"},
      {"out-dir", "directory for logs, checkpoint and reports"},
      {"checkpoint", "checkpoint path (default <out-dir>/model.ckpt)"},
      {"epochs", "maximum number of epochs"},
      {"batch-size", "positive pairs per mini-batch"},
      {"dim", "embedding dimension"},
      {"layers", "propagation layers"},
      {"lr", "Adam learning rate"},
      {"tau", "contrastive temperature"},
      {"t-uniform", "uniformity kernel temperature"},
      {"lambda-cl", "contrastive loss weight"},
      {"cl-reduction", "contrastive loss over batch rows: sum or mean"},
      {"cl-normalize", "cosine logits in the contrastive loss: true or false"},
      {"gamma", "uniformity loss weight"},
      {"lambda-reg", "L2 regularization weight"},
      {"beta", "twin momentum coefficient"},
      {"variant", "objective: au or bpr"},
      {"seed", "random seed"},
      {"patience", "early-stopping patience in epochs"},
      {"validation-fraction", "per-user share of training edges held out"},
      {"log-every", "iteration log interval"},
      {"diag-sample", "users/items sampled for the uniformity diagnostic"},
      {"sweep-lambda-cl", "comma-separated lambda-cl values to sweep"},
      {"sweep-beta", "comma-separated beta values to sweep"},
      {"sweep-gamma", "comma-separated gamma values to sweep"},
      {"determinism", "single-threaded kernels for reproducible runs", true},
      {"mode", "train, eval, diagnose or sweep (config file only)"},
  };
  return specs;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("invalid value '" + v + "' for " + key);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error("invalid integer '" + v + "' for " + key);
  return x;
}

Index to_count(const std::string& key, const std::string& v) {
  const auto x = to_int(key, v);
  if (x < 0) throw Error(key + " must be non-negative");
  return static_cast<Index>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("invalid boolean '" + v + "' for " + key);
}

bool parse_reduction(const std::string& v) {
  if (v == "sum") return false;
  if (v == "mean") return true;
  throw Error("invalid cl-reduction '" + v + "' (expected sum or mean)");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string tok; std::getline(ss, tok, ',');) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) out.push_back(to_double(key, tok));
  }
  if (out.empty()) throw Error(key + " needs at least one value");
  return out;
}

std::string join_keys() {
  std::string s;
  for (const auto& k : config_keys()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

void set_sweep(RunConfig& c, const std::string& param, std::vector<double> values) {
  auto it = std::find_if(c.sweep.begin(), c.sweep.end(),
                         [&](const SweepAxis& a) { return a.param == param; });
  if (it != c.sweep.end()) {
    it->values = std::move(values);
  } else {
    c.sweep.push_back({param, std::move(values)});
  }
}

}  // namespace

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? out_dir / "model.ckpt" : checkpoint;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : option_specs()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

void set_option(RunConfig& c, const std::string& key, const std::string& v) {
  auto& t = c.train;
  auto& o = t.objective;
  if (key == "train-file") c.train_file = v;
  else if (key == "test-file") c.test_file = v;
  else if (key == "format") c.format = parse_format(v);
  else if (key == "out-dir") c.out_dir = v;
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "epochs") t.epochs = static_cast<int>(to_count(key, v));
  else if (key == "batch-size") t.batch_size = to_count(key, v);
  else if (key == "dim") t.dim = to_count(key, v);
  else if (key == "layers") t.layers = static_cast<int>(to_count(key, v));
  else if (key == "lr") t.lr = to_double(key, v);
  else if (key == "tau") o.tau = to_double(key, v);
  else if (key == "t-uniform") o.t_uniform = to_double(key, v);
  else if (key == "lambda-cl") o.lambda_cl = to_double(key, v);
  else if (key == "cl-reduction") o.cl_mean = parse_reduction(v);
  else if (key == "cl-normalize") o.cl_normalize = to_bool(key, v);
  else if (key == "gamma") o.gamma = to_double(key, v);
  else if (key == "lambda-reg") o.lambda_reg = to_double(key, v);
  else if (key == "beta") t.beta = to_double(key, v);
  else if (key == "variant") o.variant = parse_variant(v);
  else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_count(key, v));
  else if (key == "patience") t.early_stop_patience = static_cast<int>(to_count(key, v));
  else if (key == "validation-fraction") c.validation_fraction = to_double(key, v);
  else if (key == "log-every") t.log_every = to_count(key, v);
  else if (key == "diag-sample") c.diag_sample = to_count(key, v);
  else if (key == "sweep-lambda-cl") set_sweep(c, "lambda-cl", to_list(key, v));
  else if (key == "sweep-beta") set_sweep(c, "beta", to_list(key, v));
  else if (key == "sweep-gamma") set_sweep(c, "gamma", to_list(key, v));
  else if (key == "determinism") t.determinism = to_bool(key, v);
  else if (key == "mode") c.mode = parse_mode(v);
  else throw Error("unknown key '" + key + "'; valid keys: " + join_keys());
}

void apply_config_file(std::istream& in, RunConfig& config,
                       const std::vector<std::string>& skip, const std::string& source) {
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
      throw Error(source + ":" + std::to_string(line_no) + ": unknown key '" + key +
                  "'; valid keys: " + join_keys());
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    set_option(config, key, value);
  }
}

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& c) {
  const auto& t = c.train;
  const auto& o = t.objective;
  std::vector<std::pair<std::string, std::string>> out = {
      {"mode", to_string(c.mode)},
      {"train-file", c.train_file},
      {"test-file", c.test_file},
      {"format", to_string(c.format)},
      {"out-dir", c.out_dir.string()},
      {"checkpoint", c.checkpoint_path().string()},
      {"epochs", std::to_string(t.epochs)},
      {"batch-size", std::to_string(t.batch_size)},
      {"dim", std::to_string(t.dim)},
      {"layers", std::to_string(t.layers)},
      {"lr", fmt(t.lr)},
      {"tau", fmt(o.tau)},
      {"t-uniform", fmt(o.t_uniform)},
      {"lambda-cl", fmt(o.lambda_cl)},
      {"cl-reduction", o.cl_mean ? "mean" : "sum"},
      {"cl-normalize", o.cl_normalize ? "true" : "false"},
      {"gamma", fmt(o.gamma)},
      {"lambda-reg", fmt(o.lambda_reg)},
      {"beta", fmt(t.beta)},
      {"variant", to_string(o.variant)},
      {"seed", std::to_string(t.seed)},
      {"patience", std::to_string(t.early_stop_patience)},
      {"validation-fraction", fmt(c.validation_fraction)},
      {"log-every", std::to_string(t.log_every)},
      {"diag-sample", std::to_string(c.diag_sample)},
      {"determinism", t.determinism ? "true" : "false"},
  };
  for (const auto& axis : c.sweep) {
    std::string vals;
    for (double v : axis.values) vals += (vals.empty() ? "" : ",") + fmt(v);
    out.emplace_back("sweep-" + axis.param, vals);
  }
  return out;
}

std::optional<RunConfig> parse_config(const std::vector<std::string>& args,
                                      std::ostream& help_out) {
  CLI::App app{"Twin graph contrastive learning for collaborative filtering", "twincl"};
  app.require_subcommand(1);
  std::map<std::string, CLI::App*> modes;
  modes["train"] = app.add_subcommand("train", "train a model and evaluate it on the test split");
  modes["eval"] = app.add_subcommand("eval", "score a checkpoint on the test split");
  modes["diagnose"] = app.add_subcommand(
      "diagnose", "alignment/uniformity, popularity groups and twin divergence of a checkpoint");
  modes["sweep"] = app.add_subcommand("sweep", "train once per hyperparameter grid value");
  for (auto& [name, sub] : modes) sub->fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "file of 'key = value' lines");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool determinism = false;
  for (const auto& spec : option_specs()) {
    if (spec.key == "mode") continue;
    if (spec.flag) {
      options[spec.key] = app.add_flag("--" + spec.key, determinism, spec.help);
    } else {
      options[spec.key] = app.add_option("--" + spec.key, values[spec.key], spec.help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    help_out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    help_out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw Error(e.what());
  }

  RunConfig config;
  Mode chosen = Mode::Train;
  for (auto& [name, sub] : modes)
    if (sub->parsed()) chosen = parse_mode(name);
  config.mode = chosen;

  std::vector<std::string> given;
  for (auto& [key, opt] : options)
    if (opt->count() > 0) given.push_back(key);

  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw Error("cannot open config file " + config_file);
    config.config_file = config_file;
    apply_config_file(in, config, given, config_file);
    if (config.mode != chosen)
      throw Error("conflicting modes: subcommand '" + to_string(chosen) +
                  "' but config file says '" + to_string(config.mode) + "'");
  }
  for (const auto& key : given) {
    if (key == "determinism") {
      config.train.determinism = determinism;
    } else {
      set_option(config, key, values[key]);
    }
  }
  config.train.validate();
  if (config.mode == Mode::Sweep && config.sweep.empty())
    throw Error("sweep needs at least one of --sweep-lambda-cl, --sweep-beta, --sweep-gamma");
  return config;
}

DatasetSplits load_splits(const RunConfig& config) {
  if (config.train_file.empty()) throw Error("--train-file is required");
  const auto train_raw = load_interactions(config.train_file, config.format);
  std::vector<RawInteraction> test_raw;
  if (!config.test_file.empty()) test_raw = load_interactions(config.test_file, config.format);
  return build_splits(train_raw, test_raw, config.validation_fraction, config.train.seed);
}

namespace {

void write_config_comments(std::ostream& out, const RunConfig& config) {
  for (const auto& [k, v] : describe(config)) out << "# " << k << " = " << v << '\n';
}

void write_report_csv(const std::filesystem::path& path, const RankingReport& report,
                      const RunConfig& config) {
  AtomicFile file(path);
  auto& out = file.stream();
  write_config_comments(out, config);
  out << "k,recall,ndcg,evaluated_users\n" << std::setprecision(10);
  for (Index j = 0; j < report.ks.size(); ++j)
    out << report.ks[j] << ',' << report.recall[j] << ',' << report.ndcg[j] << ','
        << report.evaluated_users << '\n';
  file.commit();
}

void print_report(std::ostream& log, const RankingReport& report, const std::string& title) {
  log << title << " (" << report.evaluated_users << " users, " << report.skipped_users
      << " without ground truth)\n";
  log << "    K     Recall       NDCG\n";
  for (Index j = 0; j < report.ks.size(); ++j) {
    log << std::setw(5) << report.ks[j] << std::fixed << std::setprecision(6)
        << std::setw(11) << report.recall[j] << std::setw(11) << report.ndcg[j] << '\n';
  }
  log.unsetf(std::ios::fixed);
}

template <typename Fn>
void write_atomic(const std::filesystem::path& path, Fn&& fn, bool binary = false) {
  AtomicFile file(path, binary);
  fn(file.stream());
  file.commit();
}

void check_checkpoint_shape(const Checkpoint& ckpt, const DatasetSplits& splits) {
  const auto& th = ckpt.twins.theta;
  if (th.num_users != splits.num_users || th.num_items != splits.num_items)
    throw Error("checkpoint has " + std::to_string(th.num_users) + " users / " +
                std::to_string(th.num_items) + " items, dataset has " +
                std::to_string(splits.num_users) + " / " + std::to_string(splits.num_items));
}

void run_train(const RunConfig& config, std::ostream& log) {
  const auto splits = load_splits(config);
  std::filesystem::create_directories(config.out_dir);
  log << "users " << splits.num_users << ", items " << splits.num_items << ", train "
      << splits.train.size() << ", validation " << splits.validation.size() << ", test "
      << splits.test.size() << " (excluded " << splits.excluded_test << ")\n";
  auto result = train(splits, config.train, [&](const EpochRecord& e) {
    log << "epoch " << e.epoch << "  recall@20 " << std::setprecision(5)
        << e.metrics.recall_at(20) << "  ndcg@20 " << e.metrics.ndcg_at(20) << "  "
        << std::setprecision(3) << e.seconds << "s\n";
  });
  if (!result.log.aborted.empty()) throw Error("training aborted: " + result.log.aborted);

  write_atomic(config.out_dir / "train_log.csv",
               [&](std::ostream& o) { write_iteration_csv(o, result.log); });
  write_atomic(config.out_dir / "epochs.csv",
               [&](std::ostream& o) { write_epoch_csv(o, result.log); });
  write_atomic(config.out_dir / "user_ids.csv",
               [&](std::ostream& o) { write_id_map(o, splits.users); });
  write_atomic(config.out_dir / "item_ids.csv",
               [&](std::ostream& o) { write_id_map(o, splits.items); });
  write_atomic(config.out_dir / "config.txt", [&](std::ostream& o) {
    for (const auto& [k, v] : describe(config)) o << k << " = " << v << '\n';
  });
  save_checkpoint(config.checkpoint_path(), {result.best, std::nullopt});

  log << "best epoch " << result.best_epoch << '\n';
  if (!splits.test.empty()) {
    const auto lists = test_lists(splits);
    const auto report = rank_and_score(result.final_z, splits.num_users, lists.train_mask,
                                       lists.ground_truth, kDefaultKs,
                                       {.parallel = !config.train.determinism});
    print_report(log, report, "test");
    write_report_csv(config.out_dir / "report.csv", report, config);
  }
}

Matrix representations(const Checkpoint& ckpt, const DatasetSplits& splits,
                       const RunConfig& config) {
  const auto graph = build_graph(splits.train, splits.num_users, splits.num_items);
  const auto adj = normalized_adjacency(graph);
  return propagate(adj, ckpt.twins.theta.values, config.train.layers, false,
                   !config.train.determinism)
      .z;
}

void run_eval(const RunConfig& config, std::ostream& log) {
  const auto splits = load_splits(config);
  if (splits.test.empty()) throw Error("eval needs a non-empty --test-file");
  const auto ckpt = load_checkpoint(config.checkpoint_path());
  check_checkpoint_shape(ckpt, splits);
  const Matrix z = representations(ckpt, splits, config);
  const auto lists = test_lists(splits);
  const auto report = rank_and_score(z, splits.num_users, lists.train_mask, lists.ground_truth,
                                     kDefaultKs, {.parallel = !config.train.determinism});
  print_report(log, report, "test");
  std::filesystem::create_directories(config.out_dir);
  write_report_csv(config.out_dir / "report.csv", report, config);
}

void run_diagnose(const RunConfig& config, std::ostream& log) {
  const auto splits = load_splits(config);
  if (splits.test.empty()) throw Error("diagnose needs a non-empty --test-file");
  const auto ckpt = load_checkpoint(config.checkpoint_path());
  check_checkpoint_shape(ckpt, splits);
  const Matrix z = representations(ckpt, splits, config);

  const auto au = measure_alignment_uniformity(z, splits.num_users, splits.test,
                                               config.diag_sample, config.train.seed,
                                               config.train.objective.t_uniform);
  const auto div = encoder_divergence(ckpt.twins.theta, ckpt.twins.phi);
  std::vector<Index> item_counts(splits.num_items, 0);
  for (const auto& [u, i] : splits.train) ++item_counts[i];
  const auto lists = test_lists(splits);
  const auto groups = popularity_breakdown(z, splits.num_users, item_counts, lists.train_mask,
                                           lists.ground_truth, 20, !config.train.determinism);

  log << std::setprecision(6) << "alignment " << au.align << "\nuniformity " << au.uniform
      << "\ntwin cosine similarity " << div.cosine_similarity << "\ntwin euclidean distance "
      << div.euclidean_distance << "\n\ngroup  interactions  recall@20\n";
  for (int g = 0; g < kPopularityGroups; ++g)
    log << std::setw(5) << g + 1 << std::setw(14) << groups.group_interactions[g]
        << std::setw(11) << groups.recall[g] << '\n';

  std::filesystem::create_directories(config.out_dir);
  write_atomic(config.out_dir / "popularity.csv", [&](std::ostream& o) {
    write_config_comments(o, config);
    o << "group_id,recall@20\n" << std::setprecision(10);
    for (int g = 0; g < kPopularityGroups; ++g) o << g + 1 << ',' << groups.recall[g] << '\n';
  });
  write_atomic(config.out_dir / "diagnose.csv", [&](std::ostream& o) {
    write_config_comments(o, config);
    o << "metric,value\n" << std::setprecision(12);
    o << "align," << au.align << "\nuniform," << au.uniform << "\ncos_sim,"
      << div.cosine_similarity << "\neuclid_dist," << div.euclidean_distance << '\n';
  });
}

void run_sweep_mode(const RunConfig& config, std::ostream& log) {
  const auto splits = load_splits(config);
  if (splits.test.empty()) throw Error("sweep needs a non-empty --test-file");
  const auto rows = run_sweep(config, splits, log);
  std::filesystem::create_directories(config.out_dir);
  write_atomic(config.out_dir / "sweep.csv", [&](std::ostream& o) {
    write_config_comments(o, config);
    o << "param,value,recall@20,ndcg@20\n" << std::setprecision(10);
    for (const auto& r : rows)
      o << r.param << ',' << r.value << ',' << r.recall20 << ',' << r.ndcg20 << '\n';
  });
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& config, const DatasetSplits& splits,
                                std::ostream& log) {
  if (config.sweep.empty()) throw Error("sweep grid is empty");
  const auto lists = test_lists(splits);
  std::vector<SweepRow> rows;
  for (const auto& axis : config.sweep) {
    for (double value : axis.values) {
      TrainConfig tc = config.train;
      if (axis.param == "lambda-cl") tc.objective.lambda_cl = value;
      else if (axis.param == "beta") tc.beta = value;
      else if (axis.param == "gamma") tc.objective.gamma = value;
      else throw Error("cannot sweep '" + axis.param + "'");
      const auto result = train(splits, tc);
      if (!result.log.aborted.empty()) throw Error("training aborted: " + result.log.aborted);
      const auto report = rank_and_score(result.final_z, splits.num_users, lists.train_mask,
                                         lists.ground_truth, kDefaultKs,
                                         {.parallel = !tc.determinism});
      rows.push_back({axis.param, value, report.recall_at(20), report.ndcg_at(20)});
      log << axis.param << '=' << value << "  recall@20 " << rows.back().recall20
          << "  ndcg@20 " << rows.back().ndcg20 << '\n';
    }
  }
  return rows;
}

void run(const RunConfig& config, std::ostream& log) {
  switch (config.mode) {
    case Mode::Train: run_train(config, log); break;
    case Mode::Eval: run_eval(config, log); break;
    case Mode::Diagnose: run_diagnose(config, log); break;
    case Mode::Sweep: run_sweep_mode(config, log); break;
  }
}

int main_with_args(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  try {
    auto config = parse_config(args, out);
    if (!config) return 0;
    run(*config, out);
    return 0;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "twincl: " << msg << '\n';
    return 1;
  }
}

}  // namespace twincl
