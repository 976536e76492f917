#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twincl/data.hpp"
#include "twincl/trainer.hpp"

namespace twincl {

enum class Mode { Train, Eval, Diagnose, Sweep };

std::string to_string(Mode m);

/// One swept hyperparameter: "lambda-cl", "beta" or "gamma", and its values.
struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

struct RunConfig {
  Mode mode = Mode::Train;
  std::string train_file;
  std::string test_file;
  InteractionFormat format = InteractionFormat::Adjacency;
  std::filesystem::path out_dir = "twincl_out";
  std::filesystem::path checkpoint;  // defaults to <out_dir>/model.ckpt
  std::string config_file;
  TrainConfig train;
  double validation_fraction = 0.1;
  Index diag_sample = 10000;
  std::vector<SweepAxis> sweep;

  std::filesystem::path checkpoint_path() const;
};

/// Every resolved setting as (key, value), keys spelled like the flags.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& config);

/// Keys accepted in a config file (flag names without the leading dashes).
const std::vector<std::string>& config_keys();

/// Parses `twincl <mode> [flags]`. Precedence: flag > config-file key >
/// built-in default. Returns nullopt after printing help to `help_out`.
/// Throws Error on bad input.
std::optional<RunConfig> parse_config(const std::vector<std::string>& args,
                                      std::ostream& help_out);

/// Applies `key = value` lines (with '#' comments) to `config`. Keys listed
/// in `skip` are left alone; flags given on the command line go there.
void apply_config_file(std::istream& in, RunConfig& config,
                       const std::vector<std::string>& skip = {},
                       const std::string& source = "<config>");

/// Sets one option by key, as from a config file or flag value.
void set_option(RunConfig& config, const std::string& key, const std::string& value);

struct SweepRow {
  std::string param;
  double value = 0.0;
  double recall20 = 0.0;
  double ndcg20 = 0.0;
};

/// Trains once per grid value (other settings and seed shared) and scores
/// each run on the test split.
std::vector<SweepRow> run_sweep(const RunConfig& config, const DatasetSplits& splits,
                                std::ostream& log);

DatasetSplits load_splits(const RunConfig& config);

/// Dispatches on config.mode, writing outputs under config.out_dir.
void run(const RunConfig& config, std::ostream& log);

/// Entry point used by the twincl executable; returns the process exit code.
int main_with_args(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err);

}  // namespace twincl
