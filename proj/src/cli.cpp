#include "swdrso/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "swdrso/checkpoint.hpp"
#include "swdrso/corruption.hpp"
#include "swdrso/data.hpp"
#include "swdrso/error.hpp"
#include "swdrso/eval.hpp"
#include "swdrso/oracle.hpp"
#include "swdrso/parallel.hpp"
#include "swdrso/trainer.hpp"

namespace swdrso::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Logger {
  int verbosity = 1;  // 0 quiet, 1 normal, 2 verbose
  void info(const std::string& msg) const {
    if (verbosity >= 1) std::cerr << msg << "\n";
  }
  void debug(const std::string& msg) const {
    if (verbosity >= 2) std::cerr << msg << "\n";
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- gen-data

struct GenOptions {
  std::string task = "classification";
  SyntheticSpec spec;
  std::size_t n_eval = 0;
  std::string out;
  std::string eval_out;
  std::string out_dir;
  std::size_t relevant = 1;
  std::size_t distractors = 4;
  std::size_t train_groups = 200;
  std::size_t group_size = 3;
};

int cmd_gen_data(const GenOptions& o, const Logger& log) {
  SyntheticSpec spec = o.spec;
  json resolved = {{"command", "gen-data"}, {"task", o.task},       {"n_sets", spec.n_sets},
                   {"classes", spec.classes}, {"n_min", spec.n_min}, {"n_max", spec.n_max},
                   {"dim", spec.dim},         {"dispersion", spec.dispersion},
                   {"noise", spec.noise},     {"shift", spec.shift},
                   {"prototypes", spec.prototypes},
                   {"seed", spec.seed}};
  if (o.task == "classification") {
    if (o.out.empty()) throw ValidationError("--out is required for classification data");
    if (o.n_eval > 0 && o.eval_out.empty()) throw ValidationError("--n-eval needs --eval-out");
    if (o.n_eval >= spec.n_sets) throw ValidationError("--n-eval must be smaller than --n-sets");
    resolved["n_eval"] = o.n_eval;
    log.info("resolved config: " + resolved.dump());
    Dataset all = gen_classification(spec);
    Dataset eval(all.end() - static_cast<std::ptrdiff_t>(o.n_eval), all.end());
    all.resize(all.size() - o.n_eval);
    write_dataset(all, o.out);
    if (o.n_eval > 0) {
      for (auto& s : eval) s.split_tag = SplitTag::clean;
      write_dataset(eval, o.eval_out);
    }
    log.info("wrote " + std::to_string(all.size()) + " training sets" +
             (o.n_eval ? ", " + std::to_string(eval.size()) + " evaluation sets" : ""));
    return 0;
  }
  if (o.task != "ranking") throw ValidationError("--task must be classification or ranking");
  if (o.out_dir.empty()) throw ValidationError("--out-dir is required for ranking data");
  RankingSpec rs;
  rs.base = spec;
  rs.relevant = o.relevant;
  rs.distractors_per_query = o.distractors;
  rs.train_groups = o.train_groups;
  rs.train_group_size = o.group_size;
  resolved["relevant"] = rs.relevant;
  resolved["distractors"] = rs.distractors_per_query;
  resolved["train_groups"] = rs.train_groups;
  resolved["group_size"] = rs.train_group_size;
  log.info("resolved config: " + resolved.dump());
  const RankingData data = gen_ranking(rs);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_dataset(data.train, dir / "train.jsonl");
  write_dataset(data.queries, dir / "queries.jsonl");
  write_dataset(data.candidates, dir / "candidates.jsonl");
  write_relevance(data.relevance, dir / "relevance.jsonl");
  log.info("wrote ranking data to " + dir.string());
  return 0;
}

// ---------------------------------------------------------------- corrupt

struct CorruptOptions {
  std::string in;
  std::string out;
  std::string splits_out;
  double mild = 0.1;
  double severe = 0.4;
  std::vector<double> ratios{0.5, 0.3, 0.2};
  std::vector<std::string> ops{"delete", "add", "replace"};
  std::string bbox = "per_set";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

int cmd_corrupt(const CorruptOptions& o, const Logger& log) {
  if (o.ratios.size() != 3) throw ValidationError("--ratios needs three values");
  if (o.bbox != "per_set" && o.bbox != "dataset") {
    throw ValidationError("--bbox must be per_set or dataset");
  }
  log.info("resolved config: " + json{{"command", "corrupt"}, {"in", o.in}, {"out", o.out},
                                      {"splits_out", o.splits_out}, {"mild_p", o.mild},
                                      {"severe_p", o.severe}, {"ratios", o.ratios},
                                      {"ops", o.ops}, {"bbox", o.bbox}, {"seed", o.seed},
                                      {"workers", o.workers}}
                                         .dump());
  Dataset data = read_dataset(o.in);
  std::vector<std::string> ids;
  for (const auto& s : data) ids.push_back(s.id);
  const auto splits = assign_splits(ids, SplitPlan{o.ratios[0], o.ratios[1], o.ratios[2], o.seed});

  CorruptionSpec base;
  base.ops.clear();
  for (const auto& name : o.ops) base.ops.push_back(corruption_op_from_string(name));
  base.seed = o.seed;
  if (o.bbox == "dataset") {
    base.bbox_source = BBoxSource::dataset;
    BoundingBox box;
    for (const auto& s : data) {
      if (box.lo.empty()) box = BoundingBox::of(s.elements);
      else box.extend(s.elements);
    }
    base.dataset_bbox = box;
  }
  CorruptionSpec mild = base, severe = base;
  mild.p = o.mild;
  severe.p = o.severe;
  mild.validate();
  severe.validate();

  parallel_for(data.size(), o.workers, [&](std::size_t i) {
    SetInstance& s = data[i];
    const SplitTag tag = splits.at(s.id);
    if (tag == SplitTag::mild) s = corrupt(s, mild);
    if (tag == SplitTag::severe) s = corrupt(s, severe);
    s.split_tag = tag;
  });
  write_dataset(data, o.out);
  if (!o.splits_out.empty()) {
    json sidecar = json::object();
    for (const auto& s : data) sidecar[s.id] = std::string(to_string(s.split_tag));
    write_text(o.splits_out, sidecar.dump(1) + "\n");
  }
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& s : data) ++counts[static_cast<int>(s.split_tag)];
  log.info("clean " + std::to_string(counts[1]) + ", mild " + std::to_string(counts[2]) +
           ", severe " + std::to_string(counts[3]));
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string config;
  std::string data;
  std::string out;
  std::string metrics;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> epochs;
  std::optional<double> alpha;
  std::optional<double> lr;
  std::optional<std::string> adversary;
  std::optional<std::string> encoder;
};

// flag > SWDRSO_CONFIG > ./swdrso.config > built-in defaults.
std::optional<fs::path> config_path(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("SWDRSO_CONFIG"); env && *env) return fs::path(env);
  if (fs::exists("swdrso.config")) return fs::path("swdrso.config");
  return std::nullopt;
}

json load_config_json(const std::optional<fs::path>& path) {
  if (!path) return json::object();
  const std::string text = read_text(*path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path->string() + ": " + e.what());
  }
}

int cmd_train(const TrainOptions& o, const Logger& log) {
  if (o.out.empty()) throw ValidationError("--out is required");
  const Dataset data = read_dataset(o.data);
  if (data.empty()) throw ValidationError("--data " + o.data + " contains no sets");

  Checkpoint ckpt;
  if (!o.resume.empty()) {
    ckpt = load_checkpoint(o.resume);
    if (o.epochs) ckpt.config.epochs = *o.epochs;
    if (o.workers) ckpt.config.workers = *o.workers;
    if (o.seed || o.alpha || o.lr || o.adversary || o.encoder || !o.config.empty()) {
      throw ValidationError("--resume only accepts --epochs and --workers overrides");
    }
  } else {
    const auto path = config_path(o.config);
    json raw = load_config_json(path);
    const std::size_t dim = data.front().dim();
    // Fill shape fields from the data before the config is validated.
    if (raw.is_object() && !raw.contains("input_dim")) raw["input_dim"] = dim;
    if (raw.is_object() && !raw.contains("d") && raw.value("hidden", json(1)) == json(0)) {
      raw["d"] = raw["input_dim"];
    }
    TrainConfig c = train_config_from_json(raw);
    if (c.input_dim != dim) {
      throw ValidationError("config field 'input_dim' (" + std::to_string(c.input_dim) +
                            ") does not match the dataset element dimension (" +
                            std::to_string(dim) + ")");
    }
    if (!raw.contains("num_classes") && c.task == Task::classification) {
      int top = 0;
      for (const auto& s : data) top = std::max(top, s.label.value_or(0));
      c.num_classes = static_cast<std::size_t>(top) + 1;
    }
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.lr) c.lr = *o.lr;
    if (o.adversary) c.adversary.mode = adversary_mode_from_string(*o.adversary);
    if (o.encoder) c.encoder_mode = encoder_mode_from_string(*o.encoder);
    c.validate();
    ckpt.config = c;
    ckpt.model = Model::init(c);
    ckpt.adam = AdamState::for_tensors(ckpt.model.tensors());
    log.info("config source: " + (path ? path->string() : std::string("defaults")));
  }
  const TrainConfig& config = ckpt.config;
  log.info("resolved config: " + to_json(config).dump());

  const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.jsonl" : o.metrics;
  std::ofstream metrics(metrics_path, o.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);

  bool saved = false;
  for (std::size_t epoch = ckpt.epochs_done; epoch < config.epochs; ++epoch) {
    const EpochMetrics m = train_epoch(data, ckpt.model, config, ckpt.adam, epoch);
    json record = to_json(m);
    metrics << record.dump() << "\n" << std::flush;
    std::ostringstream line;
    line << "epoch " << epoch << ": clean " << m.clean_loss << ", robust " << m.robust_loss
         << ", total " << m.total_loss << ", " << m.seconds << " s";
    log.info(line.str());
    ckpt.epochs_done = epoch + 1;
    save_checkpoint(ckpt, o.out);
    saved = true;
  }
  if (!saved) save_checkpoint(ckpt, o.out);
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string queries;
  std::string candidates;
  std::string relevance;
  std::vector<std::size_t> ks{1, 5, 10};
  std::string out;
  std::string table;
  std::size_t workers = 1;
};

int cmd_eval(const EvalOptions& o, const Logger& log) {
  log.info("resolved config: " + json{{"command", "eval"}, {"checkpoint", o.checkpoint},
                                      {"data", o.data}, {"queries", o.queries},
                                      {"candidates", o.candidates}, {"relevance", o.relevance},
                                      {"ks", o.ks}, {"out", o.out}, {"table", o.table},
                                      {"workers", o.workers}}
                                         .dump());
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  EvalReport report;
  if (ckpt.model.task == Task::classification) {
    if (o.data.empty()) throw ValidationError("--data is required for a classification model");
    report = evaluate_classification(ckpt.model, read_dataset(o.data), o.workers);
  } else {
    if (o.queries.empty() || o.candidates.empty() || o.relevance.empty()) {
      throw ValidationError("--queries, --candidates and --relevance are required for ranking");
    }
    report = evaluate_ranking(ckpt.model, read_dataset(o.queries), read_dataset(o.candidates),
                              read_relevance(o.relevance), o.ks, o.workers);
  }
  const std::string text = report.to_json().dump(2) + "\n";
  if (o.out.empty()) std::cout << text;
  else write_text(o.out, text);
  if (!o.table.empty()) write_text(o.table, report.table());
  return 0;
}

// ---------------------------------------------------------------- check

int cmd_check(std::uint64_t seed, const Logger& log) {
  log.info("resolved config: " + json{{"command", "check"}, {"seed", seed}}.dump());
  bool all = true;
  for (const auto& r : oracle::run_oracle_suite(seed)) {
    all = all && r.passed;
    std::printf("%s %s: %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str(), r.seconds);
  }
  std::fflush(stdout);
  return all ? 0 : 2;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const BenchOptions& o, const std::string& out, const Logger& log) {
  log.info("resolved config: " +
           json{{"command", "bench"}, {"T_values", o.T_values}, {"K_values", o.K_values},
                {"T_fixed", o.T_fixed}, {"K_fixed", o.K_fixed}, {"batch_size", o.batch_size},
                {"set_size", o.set_size}, {"dim", o.dim}, {"H", o.H}, {"R", o.R},
                {"repeats", o.repeats}, {"workers", o.workers}, {"seed", o.seed}}
               .dump());
  const BenchReport report = run_bench(o);
  std::ostringstream table;
  table << "sweep\tT\tK\tseconds\n";
  for (const auto& r : report.T_sweep) table << "T\t" << r.T << "\t" << r.K << "\t" << r.seconds << "\n";
  for (const auto& r : report.K_sweep) table << "K\t" << r.T << "\t" << r.K << "\t" << r.seconds << "\n";
  std::cout << table.str();
  std::cout << "r2_T\t" << report.r2_T << "\nr2_K\t" << report.r2_K << "\n";
  if (!out.empty()) write_text(out, table.str());
  return 0;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ValidationError(flag + ": expected a comma-separated list of positive integers");
    }
  }
  if (out.empty()) throw ValidationError(flag + " must not be empty");
  return out;
}

}  // namespace

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("r_squared needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("r_squared needs distinct x values");
  if (syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

BenchReport run_bench(const BenchOptions& o) {
  SyntheticSpec spec;
  spec.n_sets = o.batch_size;
  spec.classes = o.classes;
  spec.n_min = spec.n_max = o.set_size;
  spec.dim = o.dim;
  spec.seed = o.seed;
  const Dataset data = gen_classification(spec);
  std::vector<std::size_t> batch(data.size());
  std::iota(batch.begin(), batch.end(), std::size_t{0});

  auto time_config = [&](std::size_t T, std::size_t K) {
    TrainConfig c;
    c.input_dim = c.d = o.dim;
    c.hidden = 0;
    c.H = o.H;
    c.R = o.R;
    c.num_classes = o.classes;
    c.batch_size = o.batch_size;
    c.seed = o.seed;
    c.workers = o.workers;
    c.adversary.T = T;
    c.adversary.K = K;
    c.adversary.rho = 1e6;  // every batch member qualifies, so pools hold exactly K
    c.validate();
    Model model = Model::init(c);
    AdamState adam = AdamState::for_tensors(model.tensors());
    train_step(data, batch, model, c, adam, 0, 0);  // warm-up
    std::vector<double> times;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      train_step(data, batch, model, c, adam, 0, r + 1);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2),
                     times.end());
    return times[times.size() / 2];
  };

  BenchReport report;
  std::vector<double> xs, ys;
  for (std::size_t T : o.T_values) {
    report.T_sweep.push_back({T, o.K_fixed, time_config(T, o.K_fixed)});
    xs.push_back(static_cast<double>(T));
    ys.push_back(report.T_sweep.back().seconds);
  }
  report.r2_T = r_squared(xs, ys);
  xs.clear();
  ys.clear();
  for (std::size_t K : o.K_values) {
    report.K_sweep.push_back({o.T_fixed, K, time_config(o.T_fixed, K)});
    xs.push_back(static_cast<double>(K));
    ys.push_back(report.K_sweep.back().seconds);
  }
  report.r2_K = r_squared(xs, ys);
  return report;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Sliced-Wasserstein distributionally robust set learning"};
  app.name("swdrso");
  app.require_subcommand(1);
  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "More logging");
  app.add_flag("-q,--quiet", quiet, "Only errors");

  GenOptions gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  g->add_option("--task", gen.task, "classification or ranking")->capture_default_str();
  g->add_option("--n-sets", gen.spec.n_sets, "Sets (queries for ranking)")->capture_default_str();
  g->add_option("--classes", gen.spec.classes, "Classes")->capture_default_str();
  g->add_option("--n-min", gen.spec.n_min, "Minimum elements per set")->capture_default_str();
  g->add_option("--n-max", gen.spec.n_max, "Maximum elements per set")->capture_default_str();
  g->add_option("--dim", gen.spec.dim, "Element dimension")->capture_default_str();
  g->add_option("--dispersion", gen.spec.dispersion, "Prototype spread around class centers")
      ->capture_default_str();
  g->add_option("--noise", gen.spec.noise, "Element spread around prototypes")->capture_default_str();
  g->add_option("--shift", gen.spec.shift, "Per-set translation scale")->capture_default_str();
  g->add_option("--prototypes", gen.spec.prototypes, "Prototypes per class")->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Master seed")->capture_default_str();
  g->add_option("--out", gen.out, "Classification: training sets file");
  g->add_option("--n-eval", gen.n_eval, "Classification: sets held out for evaluation")
      ->capture_default_str();
  g->add_option("--eval-out", gen.eval_out, "Classification: evaluation sets file");
  g->add_option("--out-dir", gen.out_dir, "Ranking: output directory");
  g->add_option("--relevant", gen.relevant, "Ranking: relevant candidates per query")
      ->capture_default_str();
  g->add_option("--distractors", gen.distractors, "Ranking: distractors per query")
      ->capture_default_str();
  g->add_option("--train-groups", gen.train_groups, "Ranking: training groups")->capture_default_str();
  g->add_option("--group-size", gen.group_size, "Ranking: sets per training group")
      ->capture_default_str();

  CorruptOptions cor;
  std::string ratios = "0.5,0.3,0.2";
  std::string ops = "delete,add,replace";
  auto* c = app.add_subcommand("corrupt", "Assign splits and corrupt an evaluation dataset");
  c->add_option("--in", cor.in, "Input dataset")->required();
  c->add_option("--out", cor.out, "Corrupted dataset")->required();
  c->add_option("--splits-out", cor.splits_out, "Split assignment sidecar (JSON)");
  c->add_option("--mild-p", cor.mild, "Corruption level of the mild split")->capture_default_str();
  c->add_option("--severe-p", cor.severe, "Corruption level of the severe split")->capture_default_str();
  c->add_option("--ratios", ratios, "clean,mild,severe fractions")->capture_default_str();
  c->add_option("--ops", ops, "Comma-separated subset of delete,add,replace")->capture_default_str();
  c->add_option("--bbox", cor.bbox, "per_set or dataset")->capture_default_str();
  c->add_option("--seed", cor.seed, "Master seed")->capture_default_str();
  c->add_option("--workers", cor.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "Config file (else $SWDRSO_CONFIG, else ./swdrso.config)");
  t->add_option("--data", tr.data, "Training dataset")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--metrics", tr.metrics, "Epoch metrics log (default <out>.metrics.jsonl)");
  t->add_option("--resume", tr.resume, "Continue from this checkpoint");
  t->add_option("--seed", tr.seed, "Override the config seed");
  t->add_option("--workers", tr.workers, "Worker threads")->check(CLI::PositiveNumber);
  t->add_option("--epochs", tr.epochs, "Override the epoch count");
  t->add_option("--alpha", tr.alpha, "Override the robust weight");
  t->add_option("--lr", tr.lr, "Override the learning rate");
  t->add_option("--adversary", tr.adversary, "barycentric, discrete, random_inbatch or rcs");
  t->add_option("--encoder", tr.encoder, "sw or meanpool");

  EvalOptions ev;
  std::string ks = "1,5,10";
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint per split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  e->add_option("--data", ev.data, "Classification: split-tagged dataset");
  e->add_option("--queries", ev.queries, "Ranking: split-tagged queries");
  e->add_option("--candidates", ev.candidates, "Ranking: candidate pool");
  e->add_option("--relevance", ev.relevance, "Ranking: relevance file");
  e->add_option("--ks", ks, "Ranking: cutoffs")->capture_default_str();
  e->add_option("--out", ev.out, "Report path (default stdout)");
  e->add_option("--table", ev.table, "Also write a tab-separated table");
  e->add_option("--workers", ev.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  std::uint64_t check_seed = 0;
  auto* k = app.add_subcommand("check", "Run the oracle suite");
  k->add_option("--seed", check_seed, "Seed for the random instances")->capture_default_str();

  BenchOptions bench;
  std::string bench_out;
  auto* b = app.add_subcommand("bench", "Time a training minibatch across T and K");
  b->add_option("--repeats", bench.repeats, "Timed repeats per point (median)")
      ->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--batch-size", bench.batch_size, "Minibatch size")->capture_default_str();
  b->add_option("--workers", bench.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  b->add_option("--out", bench_out, "Write the timing table here");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }

  Logger log;
  log.verbosity = quiet ? 0 : 1 + verbose;
  try {
    if (*g) return cmd_gen_data(gen, log);
    if (*c) {
      std::stringstream rs(ratios);
      std::string item;
      cor.ratios.clear();
      while (std::getline(rs, item, ',')) {
        try {
          cor.ratios.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw ValidationError("--ratios: cannot parse '" + item + "'");
        }
      }
      cor.ops.clear();
      std::stringstream os(ops);
      while (std::getline(os, item, ',')) cor.ops.push_back(item);
      return cmd_corrupt(cor, log);
    }
    if (*t) return cmd_train(tr, log);
    if (*e) {
      ev.ks = parse_size_list(ks, "--ks");
      return cmd_eval(ev, log);
    }
    if (*k) return cmd_check(check_seed, log);
    if (*b) return cmd_bench(bench, bench_out, log);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const TrainingError& err) {
    std::cerr << "error: " << err.what() << "\nstate: " << err.state().dump() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace swdrso::cli
