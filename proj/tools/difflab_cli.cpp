#include "difflab_cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "difflab/estimators.hpp"
#include "difflab/gaussian.hpp"
#include "difflab/guidance.hpp"
#include "difflab/losses.hpp"
#include "difflab/persistence.hpp"
#include "difflab/samplers.hpp"
#include "difflab/training.hpp"

namespace difflab::cli {
namespace {

// Options that name where results go; they never change file contents and are
// left out of the metadata block.
const std::set<std::string> kOutputOptions = {"out", "loss-out"};

struct Profile {
  const char* timesteps;
  const char* beta_start;
  const char* beta_end;
};

const std::map<std::string, Profile>& profiles() {
  static const std::map<std::string, Profile> table = {
      {"full", {"1000", "1e-4", "0.02"}},
      {"desk", {"100", "1e-3", "0.1"}},
  };
  return table;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option storage shared by the subcommands.

struct ScheduleOpts {
  std::string profile = "full";
  std::string kind = "linear";
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double cosine_offset = 0.008;
};

struct ModelOpts {
  std::string model = "eps";
  std::string hidden = "64,64";
  bool conditional = false;
  std::string weights = "0.6,0.4";
  std::string means = "-2,2";
  std::string vars = "0.25,0.25";
};

struct TrainOpts {
  long steps = 20000;
  int batch = 64;
  double lr = 0.05;
  double label_dropout = 0.1;
  long eval_interval = 100;
  std::string loss = "simple";
  std::string optimizer = "sgd";
  double momentum = 0.9;
  std::string loss_out;
};

struct SampleOpts {
  std::string checkpoint;
  std::string sampler = "ddpm";
  std::string sigma = "zero";
  std::string sigmas;
  int chains = 1000;
  bool trajectory = false;
  std::optional<int> label;
  std::string guidance = "none";
  double scale = 0.0;
  std::string classifier;
};

struct Opts {
  std::uint64_t seed = 0;
  std::string out;
  ScheduleOpts sched;
  ModelOpts model;
  TrainOpts train;
  SampleOpts sample;
  // forward / vlb
  std::string x0 = "1";
  int forward_chains = 1;
  long vlb_samples = 1000;
  // demos
  std::string q = "1,1";
  std::string p = "0,4";
  std::string theta = "0.5,1.5";
  std::string sample_sizes = "100,1000,10000,100000,1000000";
  // hist
  std::string input;
  int bins = 50;
  std::string range;
  int hist_t = 0;
  int hist_dim = 0;
};

void add_seed(CLI::App* app, Opts& o) {
  app->add_option("--seed", o.seed, "Seed for every random draw")->required();
}

void add_out(CLI::App* app, Opts& o, bool required, const std::string& what) {
  auto* opt = app->add_option("--out", o.out, what);
  if (required) opt->required();
}

void add_schedule(CLI::App* app, Opts& o) {
  app->add_option("--profile", o.sched.profile, "Default set: full (T=1000) or desk (T=100)")
      ->check(CLI::IsMember({"full", "desk"}));
  app->add_option("--schedule", o.sched.kind, "linear or cosine")->check(CLI::IsMember({"linear", "cosine"}));
  app->add_option("--timesteps", o.sched.timesteps, "Number of diffusion steps T");
  app->add_option("--beta-start", o.sched.beta_start, "Linear schedule beta_1");
  app->add_option("--beta-end", o.sched.beta_end, "Linear schedule beta_T");
  app->add_option("--cosine-offset", o.sched.cosine_offset, "Cosine schedule offset");
}

void add_model(CLI::App* app, Opts& o) {
  app->add_option("--model", o.model.model, "eps (noise predictor) or classifier")
      ->check(CLI::IsMember({"eps", "classifier"}));
  app->add_option("--hidden", o.model.hidden, "Hidden widths, comma separated; empty for none");
  app->add_flag("--conditional", o.model.conditional, "Condition the noise predictor on the class label");
  app->add_option("--weights", o.model.weights, "Mixture weights");
  app->add_option("--means", o.model.means, "Mixture means (1-D)");
  app->add_option("--vars", o.model.vars, "Mixture variances (1-D)");
}

void add_train(CLI::App* app, Opts& o) {
  app->add_option("--steps", o.train.steps, "Optimizer steps");
  app->add_option("--batch", o.train.batch, "Batch size");
  app->add_option("--lr", o.train.lr, "Learning rate");
  app->add_option("--label-dropout", o.train.label_dropout, "Probability of replacing the label by null");
  app->add_option("--eval-interval", o.train.eval_interval, "Steps per loss-curve entry");
  app->add_option("--loss", o.train.loss, "simple or weighted")->check(CLI::IsMember({"simple", "weighted"}));
  app->add_option("--optimizer", o.train.optimizer, "sgd or momentum")->check(CLI::IsMember({"sgd", "momentum"}));
  app->add_option("--momentum", o.train.momentum, "Momentum coefficient");
  app->add_option("--loss-out", o.train.loss_out, "Loss-curve CSV path");
}

void add_sample(CLI::App* app, Opts& o) {
  app->add_option("--checkpoint", o.sample.checkpoint, "Noise-predictor checkpoint")->required();
  app->add_option("--sampler", o.sample.sampler, "ddpm or ddim")->check(CLI::IsMember({"ddpm", "ddim"}));
  app->add_option("--sigma", o.sample.sigma, "DDIM sigma policy: zero, ddpm or explicit")
      ->check(CLI::IsMember({"zero", "ddpm", "explicit"}));
  app->add_option("--sigmas", o.sample.sigmas, "Explicit DDIM sigmas sigma_1..sigma_T");
  app->add_option("--chains", o.sample.chains, "Number of independent chains");
  app->add_flag("--trajectory", o.sample.trajectory, "Record every state, not only x_0");
  app->add_option("--label", o.sample.label, "Class label (target class under guidance)");
  app->add_option("--guidance", o.sample.guidance, "none, classifier or cfg")
      ->check(CLI::IsMember({"none", "classifier", "cfg"}));
  app->add_option("--scale", o.sample.scale, "Guidance scale s");
  app->add_option("--classifier", o.sample.classifier, "Classifier checkpoint for classifier guidance");
}

// ---------------------------------------------------------------------------
// Config files and profiles are applied by appending `--key=value` tokens for
// every option the command line leaves unset, so explicit flags always win.

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw UsageError(path + ":" + std::to_string(n) + ": empty key");
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return entries;
}

std::string option_key(const std::string& token) {
  if (token.rfind("--", 0) != 0) return "";
  const auto eq = token.find('=');
  return token.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
}

std::optional<std::string> flag_value(const std::vector<std::string>& args, const std::string& key) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (option_key(args[i]) != key) continue;
    const auto eq = args[i].find('=');
    if (eq != std::string::npos) return args[i].substr(eq + 1);
    if (i + 1 < args.size()) return args[i + 1];
  }
  return std::nullopt;
}

bool has_option(const CLI::App* app, const std::string& key) {
  return app->get_option_no_throw("--" + key) != nullptr;
}

std::vector<std::string> apply_config_and_profile(const CLI::App& root, std::vector<std::string> args) {
  if (args.empty()) return args;
  const CLI::App* sub = root.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return args;

  std::set<std::string> given;
  for (const auto& token : args) {
    const std::string key = option_key(token);
    if (!key.empty()) given.insert(key);
  }

  if (const auto path = flag_value(args, "config")) {
    for (const auto& [key, value] : read_config(*path)) {
      if (key == "config") throw UsageError("config files cannot include other config files");
      if (!has_option(sub, key)) {
        // Keys meant for another subcommand are allowed so one file can serve them all.
        bool known = false;
        for (const CLI::App* other : root.get_subcommands({})) known = known || has_option(other, key);
        if (!known) throw UsageError("unknown config key '" + key + "'");
        continue;
      }
      if (given.insert(key).second) args.push_back("--" + key + "=" + value);
    }
  }

  if (has_option(sub, "profile")) {
    const std::string name = flag_value(args, "profile").value_or("full");
    const auto it = profiles().find(name);
    if (it != profiles().end()) {
      const Profile& p = it->second;
      for (const auto& [key, value] : {std::pair<std::string, const char*>{"timesteps", p.timesteps},
                                       {"beta-start", p.beta_start},
                                       {"beta-end", p.beta_end}}) {
        if (given.insert(key).second) args.push_back("--" + key + "=" + value);
      }
    }
  }
  return args;
}

// ---------------------------------------------------------------------------
// Metadata: the resolved value of every option, in registration order.

std::vector<std::string> metadata(const CLI::App& sub, const std::string& format, std::uint64_t seed) {
  std::vector<std::string> lines = {"format " + format, "command " + sub.get_name(), "seed " + std::to_string(seed)};
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty()) continue;
    const std::string& key = names.front();
    if (key == "help" || key == "help-all" || key == "config" || key == "seed" || kOutputOptions.count(key) > 0) continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    lines.push_back(key + "=" + value);
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Helpers turning option strings into library objects.

std::vector<int> parse_int_list(const std::string& text, const std::string& field) {
  std::vector<int> v;
  if (trim(text).empty()) return v;
  for (double d : parse_double_list(text)) {
    if (d != std::floor(d) || d < 1 || d > 1e6) throw ValidationError(field, "expected positive integers");
    v.push_back(static_cast<int>(d));
  }
  return v;
}

Schedule build_schedule(const ScheduleOpts& o) {
  ScheduleSpec spec;
  spec.kind = schedule_kind_from_string(o.kind);
  spec.steps = o.timesteps;
  spec.beta_start = o.beta_start;
  spec.beta_end = o.beta_end;
  spec.cosine_offset = o.cosine_offset;
  return make_schedule(spec);
}

GmmSpec build_gmm(const ModelOpts& o) {
  GmmSpec g;
  g.weights = parse_double_list(o.weights);
  for (double m : parse_double_list(o.means)) g.means.push_back({m});
  for (double v : parse_double_list(o.vars)) g.vars.push_back({v});
  for (std::size_t k = 0; k < g.weights.size(); ++k) g.labels.push_back(static_cast<int>(k));
  g.validate();
  return g;
}

Architecture build_arch(const ModelOpts& o) {
  return Architecture{1, parse_int_list(o.hidden, "hidden")};
}

TrainConfig build_train_config(const TrainOpts& o) {
  TrainConfig c;
  c.steps = o.steps;
  c.batch_size = o.batch;
  c.learning_rate = o.lr;
  c.label_dropout = o.label_dropout;
  c.eval_interval = o.eval_interval;
  c.loss = o.loss == "weighted" ? LossVariant::kWeighted : LossVariant::kSimple;
  c.optimizer = o.optimizer == "momentum" ? OptimizerKind::kMomentum : OptimizerKind::kSgd;
  c.momentum = o.momentum;
  c.validate();
  return c;
}

std::string render(const std::vector<std::string>& meta, const std::function<void(std::ostream&)>& body) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  write_metadata(ss, meta);
  body(ss);
  return ss.str();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Subcommands.

// `init` and `train` draw initial parameters from stream 0 and training batches
// from stream 1, so `train --steps 0` reproduces `init` exactly.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTrainStream = 1;

void write_model(const Opts& o, const CLI::App& sub, std::ostream& out, bool train_it) {
  const Schedule sched = build_schedule(o.sched);
  const GmmSpec data = build_gmm(o.model);
  const Architecture arch = build_arch(o.model);
  const Provenance prov{o.seed, metadata(sub, kCheckpointFormat, o.seed)};
  Rng init_rng(o.seed, kInitStream);
  Rng train_rng(o.seed, kTrainStream);
  std::optional<TrainReport> report;
  std::string text;
  if (o.model.model == "classifier") {
    if (o.model.conditional) throw ValidationError("conditional", "applies to noise predictors only");
    Classifier c = init_classifier(arch, data.num_classes(), init_rng);
    if (train_it) report = train_classifier(c, data, sched, build_train_config(o.train), train_rng);
    text = format_checkpoint(c, sched, prov);
  } else {
    NoisePredictor m = init_noise_predictor(arch, o.model.conditional ? data.num_classes() : 0, init_rng);
    if (train_it) report = train(m, data, sched, build_train_config(o.train), train_rng);
    text = format_checkpoint(m, sched, prov);
  }
  emit(o.out, text, out);
  if (report && !o.train.loss_out.empty()) {
    emit(o.train.loss_out,
         render(metadata(sub, kCsvFormat, o.seed), [&](std::ostream& s) { write_loss_curve(s, *report); }), out);
  }
}

void run_sample(const Opts& o, const CLI::App& sub, std::ostream& out) {
  const SampleOpts& so = o.sample;
  const ModelCheckpoint ck = load_checkpoint(so.checkpoint);

  SamplerConfig cfg;
  cfg.kind = so.sampler == "ddim" ? SamplerKind::kDdim : SamplerKind::kDdpm;
  cfg.sigma = so.sigma == "ddpm" ? SigmaPolicy::kDdpmEquivalent
              : so.sigma == "explicit" ? SigmaPolicy::kExplicit
                                       : SigmaPolicy::kZero;
  if (!so.sigmas.empty()) cfg.explicit_sigmas = parse_double_list(so.sigmas);
  cfg.chains = so.chains;
  cfg.record_trajectory = so.trajectory;
  cfg.seed = o.seed;

  GuidanceConfig g;
  g.mode = so.guidance == "classifier" ? GuidanceMode::kClassifier
           : so.guidance == "cfg"      ? GuidanceMode::kClassifierFree
                                       : GuidanceMode::kNone;
  g.scale = so.scale;
  g.target = so.label;
  std::optional<ClassifierCheckpoint> cls;
  if (g.mode == GuidanceMode::kClassifier) {
    if (so.classifier.empty()) throw ValidationError("classifier", "classifier guidance needs --classifier");
    cls = load_classifier_checkpoint(so.classifier);
    if (!(cls->schedule.spec() == ck.schedule.spec())) {
      throw ValidationError("classifier", "classifier and model were trained on different schedules");
    }
    g.classifier = &cls->classifier;
  } else if (!so.classifier.empty()) {
    throw ValidationError("classifier", "--classifier is only used with --guidance classifier");
  }
  if (so.label && g.mode == GuidanceMode::kNone && !ck.model.conditional()) {
    throw ValidationError("label", "the checkpoint holds an unconditional model");
  }

  const auto chains = guided_sample(ck.model, cfg, g, ck.schedule);
  SampleTableOptions table;
  table.label = so.label;
  if (g.mode != GuidanceMode::kNone) {
    table.guidance_mode = so.guidance;
    table.guidance_scale = so.scale;
  }
  emit(o.out, render(metadata(sub, kCsvFormat, o.seed), [&](std::ostream& s) { write_sample_table(s, chains, table); }),
       out);
}

void run_forward(const Opts& o, const CLI::App& sub, std::ostream& out) {
  const Schedule sched = build_schedule(o.sched);
  const Vec x0 = parse_double_list(o.x0);
  if (o.forward_chains < 1) throw ValidationError("chains", "must be >= 1");
  std::vector<Trajectory> chains;
  for (int c = 0; c < o.forward_chains; ++c) {
    Rng rng(o.seed, static_cast<std::uint64_t>(c));
    chains.push_back(simulate_forward(x0, sched, rng));
  }
  emit(o.out, render(metadata(sub, kCsvFormat, o.seed), [&](std::ostream& s) { write_trajectories(s, chains); }), out);
}

void run_vlb(const Opts& o, const CLI::App& sub, std::ostream& out) {
  const ModelCheckpoint ck = load_checkpoint(o.sample.checkpoint);
  const Vec x0 = parse_double_list(o.x0);
  Rng rng(o.seed);
  const VlbReport report = vlb_estimate(ck.model, x0, ck.schedule, o.vlb_samples, rng);
  emit(o.out, render(metadata(sub, kCsvFormat, o.seed), [&](std::ostream& s) { write_vlb_report(s, report); }), out);
}

std::vector<long> parse_sample_sizes(const std::string& text) {
  std::vector<long> sizes;
  for (double d : parse_double_list(text)) {
    if (d != std::floor(d) || d < 1 || d > 1e9) throw ValidationError("samples", "expected positive integers");
    sizes.push_back(static_cast<long>(d));
  }
  if (sizes.empty()) throw ValidationError("samples", "needs at least one sample size");
  return sizes;
}

DiagGaussian parse_gaussian(const std::string& text, const std::string& field) {
  const Vec mv = parse_double_list(text);
  if (mv.size() != 2) throw ValidationError(field, "expected mean,variance");
  return DiagGaussian({mv[0]}, {mv[1]});
}

void run_kl_demo(const Opts& o, const CLI::App& sub, std::ostream& out) {
  const DiagGaussian q = parse_gaussian(o.q, "q");
  const DiagGaussian p = parse_gaussian(o.p, "p");
  const auto sizes = parse_sample_sizes(o.sample_sizes);
  const double exact = kl_closed_form(q, p);
  auto body = [&](std::ostream& s) {
    s << "samples,closed_form,mc_estimate,std_error,abs_diff\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      // The same per-draw log ratio as kl_mc, kept here to also report the standard error.
      Rng rng(o.seed, i);
      const McEstimate est = mc_expectation(
          [&](Rng& r) { return sample(q, r)[0]; },
          [&](double x) { return log_pdf(q, Vec{x}) - log_pdf(p, Vec{x}); }, sizes[i], rng);
      s << std::to_string(sizes[i]) << ',' << format_double(exact) << ',' << format_double(est.estimate) << ','
        << format_double(est.std_error) << ',' << format_double(std::abs(est.estimate - exact)) << '\n';
    }
  };
  emit(o.out, render(metadata(sub, kCsvFormat, o.seed), body), out);
}

void run_reparam_demo(const Opts& o, const CLI::App& sub, std::ostream& out) {
  const Vec th = parse_double_list(o.theta);
  if (th.size() != 2) throw ValidationError("theta", "expected theta1,theta2");
  const std::array<double, 2> theta{th[0], th[1]};
  const auto sizes = parse_sample_sizes(o.sample_sizes);
  const ScalarFunctionProbe probe = quadratic_probe();
  const double exact_value = 0.5 * (theta[0] * theta[0] + theta[1] * theta[1]);
  auto rel = [](double est, double ref) { return ref == 0.0 ? std::abs(est) : std::abs(est - ref) / std::abs(ref); };
  auto body = [&](std::ostream& s) {
    s << "samples,grad_theta1,grad_theta2,rel_err_theta1,rel_err_theta2,expectation,expectation_se,exact_expectation\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      Rng grad_rng(o.seed, 2 * i);
      Rng value_rng(o.seed, 2 * i + 1);
      const auto g = reparam_grad(theta, sizes[i], grad_rng, probe);
      std::string value = ",";
      if (sizes[i] >= 2) {
        const McEstimate e = mc_expectation([&](Rng& r) { return theta[0] + theta[1] * r.normal(); }, probe.f,
                                            sizes[i], value_rng);
        value = format_double(e.estimate) + "," + format_double(e.std_error);
      }
      s << std::to_string(sizes[i]) << ',' << format_double(g[0]) << ',' << format_double(g[1]) << ','
        << format_double(rel(g[0], theta[0])) << ',' << format_double(rel(g[1], theta[1])) << ',' << value << ','
        << format_double(exact_value) << '\n';
    }
  };
  emit(o.out, render(metadata(sub, kCsvFormat, o.seed), body), out);
}

void run_hist(const Opts& o, const CLI::App& sub, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw Error("cannot open '" + o.input + "'");
  const auto rows = read_sample_table(in);
  if (o.bins < 1) throw ValidationError("bins", "must be >= 1");
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (r.t != o.hist_t) continue;
    if (o.hist_dim < 0 || static_cast<std::size_t>(o.hist_dim) >= r.x.size()) {
      throw ValidationError("dim", "out of range for the sample table");
    }
    xs.push_back(r.x[static_cast<std::size_t>(o.hist_dim)]);
  }
  if (xs.empty()) throw ValidationError("t", "no rows at t = " + std::to_string(o.hist_t));
  double lo = 0.0;
  double hi = 0.0;
  if (o.range.empty()) {
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  } else {
    const Vec r = parse_double_list(o.range);
    if (r.size() != 2 || !(r[0] < r[1])) throw ValidationError("range", "expected lo,hi with lo < hi");
    lo = r[0];
    hi = r[1];
  }
  const double width = (hi - lo) / o.bins;
  std::vector<long> counts(static_cast<std::size_t>(o.bins), 0);
  long outside = 0;
  for (double x : xs) {
    if (x < lo || x > hi) {
      ++outside;
      continue;
    }
    auto b = static_cast<long>((x - lo) / width);
    b = std::min<long>(b, o.bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  auto meta = metadata(sub, kCsvFormat, 0);
  meta.erase(meta.begin() + 2);  // no seed: histograms are deterministic
  meta.push_back("outside_range=" + std::to_string(outside));
  auto body = [&](std::ostream& s) {
    s << "bin,lo,hi,count,density\n";
    const double n = static_cast<double>(xs.size());
    for (int b = 0; b < o.bins; ++b) {
      const double a = lo + b * width;
      const double z = b + 1 == o.bins ? hi : lo + (b + 1) * width;
      const long c = counts[static_cast<std::size_t>(b)];
      s << std::to_string(b) << ',' << format_double(a) << ',' << format_double(z) << ',' << std::to_string(c) << ','
        << format_double(static_cast<double>(c) / (n * width)) << '\n';
    }
  };
  emit(o.out, render(meta, body), out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Opts o;
  CLI::App app{"Toy diffusion models: training, sampling, guidance and estimator demos", "difflab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto add_config = [](CLI::App* sub) {
    sub->add_option("--config", "key=value file; explicit flags take precedence");
  };

  auto* init = app.add_subcommand("init", "Write a freshly initialized checkpoint");
  add_seed(init, o);
  add_config(init);
  add_out(init, o, true, "Checkpoint path");
  add_schedule(init, o);
  add_model(init, o);

  auto* train_cmd = app.add_subcommand("train", "Train a noise predictor or classifier on the mixture");
  add_seed(train_cmd, o);
  add_config(train_cmd);
  add_out(train_cmd, o, true, "Checkpoint path");
  add_schedule(train_cmd, o);
  add_model(train_cmd, o);
  add_train(train_cmd, o);

  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a checkpoint");
  add_seed(sample_cmd, o);
  add_config(sample_cmd);
  add_out(sample_cmd, o, false, "Sample table path (stdout if omitted)");
  add_sample(sample_cmd, o);

  auto* forward_cmd = app.add_subcommand("forward", "Simulate forward noising trajectories");
  add_seed(forward_cmd, o);
  add_config(forward_cmd);
  add_out(forward_cmd, o, false, "Trajectory CSV path (stdout if omitted)");
  add_schedule(forward_cmd, o);
  forward_cmd->add_option("--x0", o.x0, "Starting point, comma separated");
  forward_cmd->add_option("--chains", o.forward_chains, "Number of trajectories");

  auto* vlb_cmd = app.add_subcommand("vlb", "Estimate the variational bound terms at x_0");
  add_seed(vlb_cmd, o);
  add_config(vlb_cmd);
  add_out(vlb_cmd, o, false, "Report CSV path (stdout if omitted)");
  vlb_cmd->add_option("--checkpoint", o.sample.checkpoint, "Noise-predictor checkpoint")->required();
  vlb_cmd->add_option("--x0", o.x0, "Data point, comma separated");
  vlb_cmd->add_option("--samples", o.vlb_samples, "Monte Carlo draws per term");

  auto* kl_cmd = app.add_subcommand("kl-demo", "Closed-form KL against Monte Carlo estimates");
  add_seed(kl_cmd, o);
  add_config(kl_cmd);
  add_out(kl_cmd, o, false, "CSV path (stdout if omitted)");
  kl_cmd->add_option("--q", o.q, "q as mean,variance");
  kl_cmd->add_option("--p", o.p, "p as mean,variance");
  kl_cmd->add_option("--samples", o.sample_sizes, "Sample sizes, comma separated");

  auto* reparam_cmd = app.add_subcommand("reparam-demo", "Reparameterization gradient convergence table");
  add_seed(reparam_cmd, o);
  add_config(reparam_cmd);
  add_out(reparam_cmd, o, false, "CSV path (stdout if omitted)");
  reparam_cmd->add_option("--theta", o.theta, "theta1,theta2 of N(theta1, theta2^2)");
  reparam_cmd->add_option("--samples", o.sample_sizes, "Sample sizes, comma separated");

  auto* hist_cmd = app.add_subcommand("hist", "Bin one coordinate of a sample table");
  add_config(hist_cmd);
  add_out(hist_cmd, o, false, "CSV path (stdout if omitted)");
  hist_cmd->add_option("--input", o.input, "Sample table")->required();
  hist_cmd->add_option("--bins", o.bins, "Number of bins");
  hist_cmd->add_option("--range", o.range, "lo,hi (data range if omitted)");
  hist_cmd->add_option("--t", o.hist_t, "Rows at this time step");
  hist_cmd->add_option("--dim", o.hist_dim, "Coordinate to bin");

  try {
    std::vector<std::string> full = apply_config_and_profile(app, args);
    std::reverse(full.begin(), full.end());  // CLI11 consumes the vector from the back
    app.parse(full);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "difflab: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "difflab: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "difflab: " << e.what() << "\n";
    return kExitDomain;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    if (sub == init) write_model(o, *sub, out, false);
    else if (sub == train_cmd) write_model(o, *sub, out, true);
    else if (sub == sample_cmd) run_sample(o, *sub, out);
    else if (sub == forward_cmd) run_forward(o, *sub, out);
    else if (sub == vlb_cmd) run_vlb(o, *sub, out);
    else if (sub == kl_cmd) run_kl_demo(o, *sub, out);
    else if (sub == reparam_cmd) run_reparam_demo(o, *sub, out);
    else run_hist(o, *sub, out);
  } catch (const std::exception& e) {
    err << "difflab: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace difflab::cli
