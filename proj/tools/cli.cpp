#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybridflow/checkpoint.hpp"
#include "hybridflow/errors.hpp"
#include "hybridflow/evaluation.hpp"
#include "hybridflow/hybrid.hpp"
#include "hybridflow/pipeline.hpp"
#include "hybridflow/robustness.hpp"

namespace hybridflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string item(text.substr(start, comma - start));
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> parse_archs(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& item : split_list(text)) {
    if (item == "all") {
      out.insert(out.end(), hybrid::kArchitectures.begin(), hybrid::kArchitectures.end());
    } else {
      hybrid::parse_architecture(item);
      out.push_back(item);
    }
  }
  if (out.empty()) throw UsageError("no architecture given");
  return out;
}

std::vector<impute::Method> parse_methods(std::string_view text) {
  std::vector<impute::Method> out;
  for (const auto& item : split_list(text)) {
    if (item == "all") {
      out = {impute::Method::Mean, impute::Method::Median, impute::Method::Interpolation};
    } else {
      out.push_back(impute::parse_method(item));
    }
  }
  if (out.empty()) throw UsageError("no imputation method given");
  return out;
}

std::vector<double> parse_ratios(std::string_view text) {
  if (text == "default") return eval::default_ratio_grid();
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size())
      throw UsageError("invalid ratio '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty ratio list");
  return out;
}

std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = base + i;
  return out;
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::chrono::sys_days parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw UsageError("invalid date '" + text + "'; expected YYYY-MM-DD");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw UsageError("invalid date '" + text + "'");
  return std::chrono::sys_days{ymd};
}

// Config reading: every key is optional, unknown keys are rejected.
template <class T>
void read(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw UsageError("config: unknown key '" + key + "' in " + std::string(where));
  }
}

json synth_json(const synth::SynthConfig& s) {
  return {{"p", s.p},
          {"days", s.days},
          {"seed", s.seed},
          {"weekend_scale", s.weekend_scale},
          {"propagation_lag", s.propagation_lag},
          {"noise_std", s.noise_std},
          {"disturbance_share", s.disturbance_share},
          {"disturbance_ar", s.disturbance_ar},
          {"native_missing_ratio", s.native_missing_ratio},
          {"start_date", format_date(s.start_date)}};
}

void read_synth(const json& j, synth::SynthConfig& s) {
  reject_unknown(j,
                 {"p", "days", "seed", "weekend_scale", "propagation_lag", "noise_std",
                  "disturbance_share", "disturbance_ar", "native_missing_ratio", "start_date",
                  "profile"},
                 "synth");
  read(j, "p", s.p);
  read(j, "days", s.days);
  read(j, "seed", s.seed);
  read(j, "weekend_scale", s.weekend_scale);
  read(j, "propagation_lag", s.propagation_lag);
  read(j, "noise_std", s.noise_std);
  read(j, "disturbance_share", s.disturbance_share);
  read(j, "disturbance_ar", s.disturbance_ar);
  read(j, "native_missing_ratio", s.native_missing_ratio);
  read(j, "profile", s.profile);
  if (j.contains("start_date")) s.start_date = parse_date(j["start_date"].get<std::string>());
}

struct Progress {
  std::ostream& err;
  bool quiet;
  template <class... Args>
  void operator()(const char* fmt, Args... args) const {
    if (quiet) return;
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    err << buf << '\n';
  }
};

data::FlowDataset load_data(const ExperimentConfig& cfg, const char* command) {
  if (cfg.data_path) return data::load_csv(*cfg.data_path);
  if (cfg.has_synth) return synth::generate(cfg.synth);
  throw UsageError(std::string(command) +
                   ": no data; pass --data or a config with a \"synth\" section");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string provenance(std::string_view command, const ExperimentConfig& cfg) {
  return "# hybridflow " + std::string(kVersion) + " " + std::string(command) +
         " config=" + cfg.hash() + "\n";
}

std::string checkpoint_name(std::string_view arch, impute::Method method, std::uint64_t seed) {
  return std::string(arch) + "_" + std::string(impute::method_name(method)) + "_seed" +
         std::to_string(seed);
}

// --- subcommands ---------------------------------------------------------

int cmd_synth(const ExperimentConfig& cfg, std::ostream& out) {
  const data::FlowDataset ds = synth::generate(cfg.synth);
  fs::path path = cfg.out;
  if (path.extension() != ".csv") path /= "flows.csv";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::save_csv(ds, path);
  out << "wrote " << path.string() << ": " << ds.stations_count() << " stations, "
      << ds.timestamps() << " timestamps, " << ds.timestamps() * ds.stations_count() -
                                                  ds.observed_count()
      << " missing cells\n";
  return kOk;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out, const Progress& log) {
  cfg.train.validate();
  const data::FlowDataset ds = load_data(cfg, "train");
  fs::create_directories(cfg.out / "checkpoints");

  std::ostringstream metrics, runs;
  metrics << provenance("train", cfg)
          << "arch,imputation,runs,val_mae_mean,val_mae_sd,val_rmse_mean,val_rmse_sd,"
             "test_mae_mean,test_mae_sd,test_rmse_mean,test_rmse_sd\n";
  runs << provenance("train", cfg)
       << "arch,imputation,seed,best_epoch,val_mae,val_rmse,test_mae,test_rmse,checkpoint\n";
  std::ofstream trainlog = open_out(cfg.out / "trainlog.jsonl");

  for (impute::Method method : cfg.methods) {
    const PreparedData prepared = prepare(ds, method, cfg.window);
    for (const auto& arch : cfg.archs) {
      const std::string m(impute::method_name(method));
      log("training %s (%s), %zu run(s), %zu epoch(s)", arch.c_str(), m.c_str(),
          cfg.train.runs, cfg.train.max_epochs);
      auto on_epoch = [&](const train::EpochLog& e) {
        log("  epoch %zu: loss %.5f val_mae %.5f (%.1fs)", e.epoch, e.train_loss, e.val_mae,
            e.seconds);
      };
      train::ExperimentResult result = train::run_experiment(arch, prepared, cfg.train, on_epoch);
      for (auto& r : result.runs) {
        const std::string name = checkpoint_name(arch, method, r.seed);
        io::Checkpoint ckpt{name + "_" + cfg.hash().substr(0, 8), r.model, prepared.window,
                            prepared.stats, method, r.seed};
        save_checkpoint(ckpt, cfg.out / "checkpoints" / (name + ".json"));
        r.log.checkpoint_id = ckpt.id;
        trainlog << r.log.to_jsonl();
        runs << arch << ',' << m << ',' << r.seed << ',' << r.log.best_epoch << ','
             << num(r.val_mae) << ',' << num(r.val_rmse) << ',' << num(r.test_mae) << ','
             << num(r.test_rmse) << ",checkpoints/" << name << ".json\n";
      }
      metrics << arch << ',' << m << ',' << result.runs.size() << ','
              << num(result.val_mae.mean) << ',' << num(result.val_mae.sd) << ','
              << num(result.val_rmse.mean) << ',' << num(result.val_rmse.sd) << ','
              << num(result.test_mae.mean) << ',' << num(result.test_mae.sd) << ','
              << num(result.test_rmse.mean) << ',' << num(result.test_rmse.sd) << '\n';
      char line[256];
      std::snprintf(line, sizeof line, "%-14s %-7s val MAE %.4f +- %.4f  test MAE %.4f +- %.4f\n",
                    arch.c_str(), m.c_str(), result.val_mae.mean, result.val_mae.sd,
                    result.test_mae.mean, result.test_mae.sd);
      out << line;
    }
  }
  open_out(cfg.out / "metrics.csv") << metrics.str();
  open_out(cfg.out / "runs.csv") << runs.str();
  return kOk;
}

int cmd_eval(const ExperimentConfig& cfg, bool methods_given, const std::string& split_name,
             std::ostream& out) {
  if (!cfg.checkpoint) throw UsageError("eval: --checkpoint is required");
  io::Checkpoint ckpt = io::load_checkpoint(*cfg.checkpoint);
  const data::FlowDataset ds = data::clean(load_data(cfg, "eval"));
  const impute::Method method = methods_given ? cfg.methods.front() : ckpt.method;
  const PreparedData prepared = prepare(ds, ds, method, ckpt.window, ckpt.stats);
  if (prepared.inputs.stations_count() != ckpt.model.spec().p)
    throw DataError("eval: data has " + std::to_string(prepared.inputs.stations_count()) +
                    " stations, checkpoint expects " + std::to_string(ckpt.model.spec().p));
  data::DayRange days;
  if (split_name == "test") {
    days = prepared.test_days();
  } else if (split_name == "val") {
    days = prepared.val_days();
  } else {
    throw UsageError("eval: --split must be test or val");
  }
  eval::EvalReport report =
      eval::evaluate(ckpt.model, prepared, days, eval::parse_views(cfg.views));
  report.metadata["checkpoint"] = ckpt.id;
  report.metadata["split"] = split_name;
  report.metadata["config"] = cfg.hash();
  open_out(cfg.out / "eval.json") << report.to_json() << '\n';
  std::ofstream csv = open_out(cfg.out / "eval.csv");
  report.write_csv(csv);
  out << "overall " << split_name << " MAE " << num(report.overall.mae()) << " RMSE "
      << num(report.overall.rmse()) << " over " << report.overall.count << " cells\n";
  return kOk;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, const Progress& log) {
  const data::FlowDataset ds = load_data(cfg, "sweep");
  const std::vector<double> ratios = cfg.ratios.empty() ? eval::default_ratio_grid() : cfg.ratios;
  const std::vector<std::uint64_t> seeds =
      cfg.sweep_seeds.empty() ? consecutive_seeds(1, 5) : cfg.sweep_seeds;

  std::optional<io::Checkpoint> ckpt;
  if (cfg.scope == impute::Scope::TestOnly) {
    if (!cfg.checkpoint)
      throw UsageError("sweep: --scope test evaluates a trained model; pass --checkpoint");
    ckpt = io::load_checkpoint(*cfg.checkpoint);
  } else if (cfg.archs.size() != 1) {
    throw UsageError("sweep: --scope all retrains one architecture; pass a single --arch");
  }

  std::ostringstream csv;
  csv << provenance("sweep", cfg) << "ratio,method,mae_mean,mae_sd,rmse_mean,rmse_sd\n";
  json summary{{"scope", std::string(impute::scope_name(cfg.scope))},
               {"seeds", seeds},
               {"config", cfg.hash()},
               {"curves", json::array()}};
  for (impute::Method method : cfg.methods) {
    const std::string m(impute::method_name(method));
    log("sweep %s: %zu ratio(s) x %zu seed(s)", m.c_str(), ratios.size(), seeds.size());
    std::vector<eval::SweepPoint> curve;
    if (ckpt) {
      curve = eval::sweep_complete_train(ckpt->model, ckpt->stats, ds, ckpt->window, method,
                                         ratios, seeds);
    } else {
      curve = eval::sweep_incomplete_train(cfg.archs.front(), ds, cfg.window, method, ratios,
                                           seeds, cfg.train);
    }
    json points = json::array();
    for (const auto& pt : curve) {
      csv << num(pt.ratio) << ',' << m << ',' << num(pt.mae.mean) << ',' << num(pt.mae.sd) << ','
          << num(pt.rmse.mean) << ',' << num(pt.rmse.sd) << '\n';
      points.push_back({{"ratio", pt.ratio},
                        {"mae_mean", pt.mae.mean},
                        {"mae_sd", pt.mae.sd},
                        {"rmse_mean", pt.rmse.mean},
                        {"rmse_sd", pt.rmse.sd},
                        {"evaluated_cells", pt.evaluated_cells}});
      char line[160];
      std::snprintf(line, sizeof line, "%-6s ratio %.2f  MAE %.4f +- %.4f  RMSE %.4f +- %.4f\n",
                    m.c_str(), pt.ratio, pt.mae.mean, pt.mae.sd, pt.rmse.mean, pt.rmse.sd);
      out << line;
    }
    json entry{{"method", m}, {"points", points}};
    const bool has_zero = !curve.empty() && curve.front().ratio == 0.0;
    if (has_zero) {
      json deg = json::object();
      for (const auto& pt : curve) deg[num(pt.ratio)] = eval::degradation(curve, pt.ratio);
      entry["degradation"] = deg;
    }
    summary["curves"].push_back(entry);
  }
  open_out(cfg.out / "sweep.csv") << csv.str();
  open_out(cfg.out / "sweep.json") << summary.dump(2) << '\n';
  return kOk;
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  if (data_path) j["data"] = data_path->generic_string();
  if (has_synth) j["synth"] = synth_json(synth);
  j["archs"] = archs;
  json methods = json::array();
  for (auto m : this->methods) methods.push_back(std::string(impute::method_name(m)));
  j["imputation"] = methods;
  j["window"] = {{"n", window.n}, {"h", window.h}, {"n_d", window.n_d}, {"n_w", window.n_w}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"l2", train.l2},
                {"max_epochs", train.max_epochs},
                {"runs", train.runs},
                {"seeds", train.run_seeds()},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"eps", train.eps}};
  j["sweep"] = {{"ratios", ratios},
                {"seeds", sweep_seeds},
                {"scope", std::string(impute::scope_name(scope))}};
  if (checkpoint) j["checkpoint"] = checkpoint->generic_string();
  j["views"] = views;
  return j.dump();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_json()); }

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path.string());
  ExperimentConfig cfg;
  try {
    const json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config: top level must be an object");
    reject_unknown(j,
                   {"schema_version", "data", "synth", "archs", "imputation", "window", "train",
                    "sweep", "checkpoint", "views", "out"},
                   "config");
    const int version = j.value("schema_version", 0);
    if (version != kConfigSchemaVersion)
      throw UsageError("config: schema_version " + std::to_string(version) + " unsupported (want " +
                       std::to_string(kConfigSchemaVersion) + ")");
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    if (j.contains("data")) cfg.data_path = resolve(j["data"].get<std::string>());
    if (j.contains("synth")) {
      read_synth(j["synth"], cfg.synth);
      cfg.has_synth = true;
    }
    if (j.contains("archs")) {
      const json& a = j["archs"];
      std::string list;
      if (a.is_string()) {
        list = a.get<std::string>();
      } else {
        for (const auto& item : a) list += item.get<std::string>() + ",";
      }
      cfg.archs = parse_archs(list);
    }
    if (j.contains("imputation")) {
      const json& m = j["imputation"];
      std::string list;
      if (m.is_string()) {
        list = m.get<std::string>();
      } else {
        for (const auto& item : m) list += item.get<std::string>() + ",";
      }
      cfg.methods = parse_methods(list);
    }
    if (j.contains("window")) {
      const json& w = j["window"];
      reject_unknown(w, {"n", "h", "n_d", "n_w"}, "window");
      read(w, "n", cfg.window.n);
      read(w, "h", cfg.window.h);
      read(w, "n_d", cfg.window.n_d);
      read(w, "n_w", cfg.window.n_w);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      reject_unknown(t, {"learning_rate", "l2", "max_epochs", "runs", "seeds", "beta1", "beta2", "eps"},
                     "train");
      read(t, "learning_rate", cfg.train.learning_rate);
      read(t, "l2", cfg.train.l2);
      read(t, "max_epochs", cfg.train.max_epochs);
      read(t, "runs", cfg.train.runs);
      read(t, "seeds", cfg.train.seeds);
      read(t, "beta1", cfg.train.beta1);
      read(t, "beta2", cfg.train.beta2);
      read(t, "eps", cfg.train.eps);
      if (!cfg.train.seeds.empty() && !t.contains("runs")) cfg.train.runs = cfg.train.seeds.size();
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      reject_unknown(s, {"ratios", "seeds", "scope"}, "sweep");
      read(s, "ratios", cfg.ratios);
      read(s, "seeds", cfg.sweep_seeds);
      if (s.contains("scope")) cfg.scope = impute::parse_scope(s["scope"].get<std::string>());
    }
    if (j.contains("checkpoint")) cfg.checkpoint = resolve(j["checkpoint"].get<std::string>());
    read(j, "views", cfg.views);
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid LSTM/CNN traffic flow forecasting", "hybridflow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // Flag values; applied over the config file only when given.
  std::string config_path, data_path, arch, impute_list, ratios, scope, out_dir, checkpoint, views;
  std::string split_name = "test";
  std::size_t runs = 0, epochs = 0, p = 0, days = 0, lag = 0;
  std::uint64_t seed = 0;
  double lr = 0, l2 = 0, missing = 0, noise = 0;
  bool quiet = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("-q,--quiet", quiet, "suppress progress on stderr");
  };
  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--data", data_path, "flow CSV (stations sidecar read when present)");
  };
  auto train_opts = [&](CLI::App* sub) {
    sub->add_option("--arch", arch, "architecture name, comma list or 'all'");
    sub->add_option("--runs", runs, "number of runs (seeds)");
    sub->add_option("--seed", seed, "first seed; runs use consecutive seeds");
    sub->add_option("--epochs", epochs, "training epochs");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--l2", l2, "L2 regularization weight");
  };

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corridor dataset");
  common(synth_cmd);
  synth_cmd->add_option("--p", p, "stations");
  synth_cmd->add_option("--days", days, "days");
  synth_cmd->add_option("--seed", seed, "generator seed");
  synth_cmd->add_option("--lag", lag, "propagation lag between neighbouring stations");
  synth_cmd->add_option("--noise", noise, "relative noise level");
  synth_cmd->add_option("--missing", missing, "native missing ratio");

  CLI::App* train_cmd = app.add_subcommand("train", "train architectures and report metrics");
  common(train_cmd);
  data_opts(train_cmd);
  train_opts(train_cmd);
  train_cmd->add_option("--impute", impute_list, "mean, median, interp, comma list or all");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  common(eval_cmd);
  data_opts(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON");
  eval_cmd->add_option("--impute", impute_list, "override the checkpoint's imputation");
  eval_cmd->add_option("--views", views, "overall,horizon,tod,dow,station or all");
  eval_cmd->add_option("--split", split_name, "test or val");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "error against injected missing ratio");
  common(sweep_cmd);
  data_opts(sweep_cmd);
  train_opts(sweep_cmd);
  sweep_cmd->add_option("--checkpoint", checkpoint, "trained model (scope test)");
  sweep_cmd->add_option("--impute", impute_list, "mean, median, interp, comma list or all");
  sweep_cmd->add_option("--ratios", ratios, "comma list of ratios or 'default'");
  sweep_cmd->add_option("--scope", scope, "test (complete-train) or all (incomplete-train)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
      out << kVersion << '\n';
      return kOk;
    } catch (const CLI::Success&) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "usage error: " << e.what() << '\n';
      return kUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };

    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (given("--out")) cfg.out = out_dir;
    if (given("--data")) cfg.data_path = data_path;
    if (given("--checkpoint")) cfg.checkpoint = checkpoint;
    if (given("--arch")) cfg.archs = parse_archs(arch);
    const bool methods_given = given("--impute");
    if (methods_given) cfg.methods = parse_methods(impute_list);
    if (given("--views")) cfg.views = views;
    if (given("--ratios")) cfg.ratios = parse_ratios(ratios);
    if (given("--scope")) cfg.scope = impute::parse_scope(scope);
    if (given("--epochs")) cfg.train.max_epochs = epochs;
    if (given("--lr")) cfg.train.learning_rate = lr;
    if (given("--l2")) cfg.train.l2 = l2;
    const Progress log{err, quiet};

    if (sub == synth_cmd) {
      cfg.has_synth = true;
      if (given("--p")) cfg.synth.p = p;
      if (given("--days")) cfg.synth.days = days;
      if (given("--seed")) cfg.synth.seed = seed;
      if (given("--lag")) cfg.synth.propagation_lag = lag;
      if (given("--noise")) cfg.synth.noise_std = noise;
      if (given("--missing")) cfg.synth.native_missing_ratio = missing;
      if (!given("--out") && !cfg.out.has_extension()) cfg.out /= "flows.csv";
      return cmd_synth(cfg, out);
    }
    if (sub == train_cmd) {
      if (given("--runs")) {
        cfg.train.runs = runs;
        if (!cfg.train.seeds.empty() && !given("--seed"))
          cfg.train.seeds = consecutive_seeds(cfg.train.seeds.front(), runs);
      }
      if (given("--seed")) cfg.train.seeds = consecutive_seeds(seed, cfg.train.runs);
      return cmd_train(cfg, out, log);
    }
    if (sub == eval_cmd) return cmd_eval(cfg, methods_given, split_name, out);
    // sweep: --runs and --seed pick the injection seeds; one model per seed
    // when retraining.
    const std::size_t count =
        given("--runs") ? runs : (cfg.sweep_seeds.empty() ? 5 : cfg.sweep_seeds.size());
    if (given("--runs") || given("--seed"))
      cfg.sweep_seeds = consecutive_seeds(given("--seed") ? seed : 1, count);
    cfg.train.runs = 1;
    cfg.train.seeds.clear();
    return cmd_sweep(cfg, out, log);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace hybridflow::cli
