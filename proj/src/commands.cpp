#include "care/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "care/error.hpp"
#include "care/inference.hpp"
#include "care/io.hpp"
#include "care/simulation.hpp"

namespace care::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output files are rendered in memory first and only written once the whole
// command has succeeded.
using OutputSet = std::vector<std::pair<fs::path, std::string>>;

void write_outputs(const OutputSet& outputs) {
  for (const auto& [path, content] : outputs) io::atomic_write_file(path, content);
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = fnv1a(config.canonical());
  if (!config.comparisons.empty() && fs::exists(config.comparisons)) {
    h = fnv1a(read_file(config.comparisons), h);
  }
  if (!config.covariates.empty() && fs::exists(config.covariates)) {
    h = fnv1a(read_file(config.covariates), h);
  }
  return hex64(h);
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json provenance(const RunConfig& config, const std::string& hash) {
  Json p;
  p["tool"] = "care";
  p["version"] = kVersion;
  p["command"] = config.command;
  p["config_hash"] = hash;
  p["seed"] = config.seed;
  p["timestamp"] = utc_timestamp();
  return p;
}

std::string csv_provenance(const RunConfig& config, const std::string& hash) {
  std::ostringstream os;
  os << "# care " << kVersion << " command=" << config.command
     << " config_hash=" << hash << " seed=" << config.seed << '\n';
  return os.str();
}

Json to_array(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct Inputs {
  io::ParsedComparisons comparisons;
  Matrix raw;
  std::vector<std::string> feature_names;
};

// Item ids in the order the covariates file lists them.
std::vector<std::string> covariate_item_order(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> ids;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = io::split_csv_line(line);
    if (!cells.empty()) ids.push_back(cells[0]);
  }
  return ids;
}

Inputs load_inputs(const RunConfig& config) {
  Inputs in;
  in.comparisons = io::parse_comparisons_csv(config.comparisons);
  if (!config.covariates.empty()) {
    // Number items as the covariates file lists them so outputs line up.
    const std::set<std::string> seen(in.comparisons.item_ids.begin(),
                                     in.comparisons.item_ids.end());
    std::vector<std::string> order;
    for (const auto& id : covariate_item_order(config.covariates)) {
      if (seen.count(id)) order.push_back(id);
    }
    in.comparisons = io::parse_comparisons_csv(config.comparisons, order);
  }
  if (in.comparisons.ties_rejected > 0) {
    std::cerr << "care: dropped " << in.comparisons.ties_rejected
              << " tied comparison rows\n";
  }
  if (config.covariates.empty()) {
    in.raw = Matrix(static_cast<Eigen::Index>(in.comparisons.item_ids.size()), 0);
  } else {
    io::ParsedCovariates cov =
        io::parse_covariates_csv(config.covariates, in.comparisons.item_ids);
    if (cov.extra_items > 0) {
      std::cerr << "care: ignored " << cov.extra_items
                << " covariate rows for items without comparisons\n";
    }
    in.raw = std::move(cov.raw);
    in.feature_names = std::move(cov.feature_names);
  }
  return in;
}

PipelineResult fit_inputs(const RunConfig& config, const Inputs& in) {
  PipelineResult out = fit_care_scores_pipeline(
      in.comparisons.data, in.raw, config.fit_config(), config.standardize);
  if (out.fit.stop_reason == StopReason::kMaxIterations) {
    std::ostringstream os;
    os << "no convergence within " << config.max_iters
       << " iterations (projected gradient norm "
       << io::format_double(out.fit.diagnostics.final_grad_norm) << ")";
    throw ConvergenceFailure(os.str());
  }
  if (!out.fit.converged) {
    std::cerr << "care: stopped on the step tolerance before the gradient "
                 "tolerance was met\n";
  }
  return out;
}

Json fit_json(const RunConfig& config, const std::string& hash,
              const Inputs& in, const PipelineResult& pr) {
  const FitResult& fit = pr.fit;
  const ComparisonData& data = in.comparisons.data;
  Json j;
  j["provenance"] = provenance(config, hash);
  j["items"] = in.comparisons.item_ids;
  j["features"] = in.feature_names;
  Json graph;
  graph["n_items"] = data.n_items();
  graph["n_edges"] = data.n_edges();
  graph["total_trials"] = data.total_trials();
  graph["ties_rejected"] = in.comparisons.ties_rejected;
  j["graph"] = graph;
  Json pre;
  pre["standardized"] = pr.covariates.standardized;
  pre["scale_k"] = pr.covariates.scale_k;
  pre["column_means"] = to_array(pr.covariates.column_means);
  pre["column_sds"] = to_array(pr.covariates.column_sds);
  j["preprocessing"] = pre;
  j["converged"] = fit.converged;
  j["stop_reason"] = to_string(fit.stop_reason);
  Json diag;
  diag["iterations"] = fit.diagnostics.iterations;
  diag["final_grad_norm"] = fit.diagnostics.final_grad_norm;
  diag["kappa1"] = fit.diagnostics.kappa1;
  diag["incoherence"] = fit.diagnostics.incoherence;
  diag["connectivity"] = fit.diagnostics.connectivity;
  diag["step_size"] = fit.step_size;
  diag["likelihood_scale"] = fit.likelihood_scale;
  diag["objective"] =
      fit.objective_trace.empty() ? 0.0 : fit.objective_trace.back();
  j["diagnostics"] = diag;
  j["alpha"] = to_array(fit.params.alpha);
  j["beta"] = to_array(fit.params.beta);
  j["scores"] = to_array(fit.scores);
  return j;
}

std::string inference_csv(const RunConfig& config, const std::string& hash,
                          const Inputs& in, const InferenceReport& report) {
  std::ostringstream os;
  os << csv_provenance(config, hash);
  os << "kind,index,name,estimate,std_error,z_stat,p_value,ci_low,ci_high,level\n";
  for (const CoefficientRow& r : report.rows) {
    const bool alpha = r.kind == CoefficientKind::kAlpha;
    const std::string& name =
        alpha ? in.comparisons.item_ids[r.index] : in.feature_names[r.index];
    os << (alpha ? "alpha" : "beta") << ',' << r.index << ',' << name << ','
       << io::format_double(r.estimate) << ',' << io::format_double(r.std_error)
       << ',' << io::format_double(r.z_stat) << ','
       << io::format_double(r.p_value) << ',' << io::format_double(r.ci_low)
       << ',' << io::format_double(r.ci_high) << ','
       << io::format_double(r.level) << '\n';
  }
  return os.str();
}

std::string ranking_csv(const RunConfig& config, const std::string& hash,
                        const Inputs& in, const RankingScores& ranking) {
  std::ostringstream os;
  os << csv_provenance(config, hash);
  os << "item,score1,score2,tau,rank1,rank2\n";
  for (std::size_t i = 0; i < in.comparisons.item_ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    os << in.comparisons.item_ids[i] << ','
       << io::format_double(ranking.scores1[k]) << ','
       << io::format_double(ranking.scores2[k]) << ','
       << io::format_double(ranking.taus[k]) << ',' << ranking.ranks1[i] << ','
       << ranking.ranks2[i] << '\n';
  }
  return os.str();
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing --") + what);
  if (!fs::exists(path)) {
    throw ConfigError(std::string(what) + " file not found: " + path.string());
  }
}

std::vector<PLPair> parse_pairs(const std::string& text) {
  std::vector<PLPair> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("pairs must look like p:L,p:L (got '" + item + "')");
    }
    try {
      out.push_back({std::stod(item.substr(0, colon)),
                     std::stoll(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ConfigError("cannot parse (p, L) pair '" + item + "'");
    }
  }
  return out;
}

std::set<Statistic> parse_statistics(const std::string& text) {
  std::set<Statistic> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(statistic_from_string(item));
  }
  return out;
}

Json summary_json(const PairSummary& ps) {
  Json j;
  j["p"] = ps.pair.p;
  j["L"] = ps.pair.trials;
  j["replications"] = ps.replications;
  j["resamples"] = ps.resamples;
  Json stats = Json::object();
  for (const auto& [key, s] : ps.stats) {
    stats[key] = {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}};
  }
  j["stats"] = stats;
  Json ks = Json::object();
  for (const auto& [key, v] : ps.ks_distance) ks[key] = v;
  j["ks_distance"] = ks;
  Json hist = Json::object();
  for (const auto& [key, h] : ps.histograms) {
    hist[key] = {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts},
                 {"below", h.below}, {"above", h.above}};
  }
  j["histograms"] = hist;
  return j;
}

}  // namespace

FitConfig RunConfig::fit_config() const {
  FitConfig fc;
  if (step_size > 0.0) fc.step_size = step_size;
  fc.max_iters = max_iters;
  fc.grad_tol = grad_tol;
  fc.step_tol = step_tol;
  fc.ridge_alpha = ridge_alpha;
  if (likelihood_scale > 0.0) fc.likelihood_scale = likelihood_scale;
  fc.seed = seed;
  return fc;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  auto num = [](double x) { return io::format_double(x); };
  os << "command=" << command << "\ncomparisons=" << comparisons.string()
     << "\ncovariates=" << covariates.string() << "\nstandardize=" << standardize
     << "\nstep_size=" << num(step_size) << "\nmax_iters=" << max_iters
     << "\ngrad_tol=" << num(grad_tol) << "\nstep_tol=" << num(step_tol)
     << "\nridge_alpha=" << num(ridge_alpha)
     << "\nlikelihood_scale=" << num(likelihood_scale)
     << "\nlevel=" << num(level) << "\nquantile_level=" << num(quantile_level)
     << "\neigen_cutoff=" << num(eigen_cutoff) << "\nn=" << n << "\nd=" << d
     << "\np=" << num(p) << "\ntrials=" << trials << "\nseed=" << seed
     << "\nexperiment=" << experiment << "\nreplications=" << replications
     << "\ninstances=" << instances << "\npairs=" << pairs
     << "\nstatistics=" << statistics << '\n';
  return os.str();
}

void RunConfig::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (!(quantile_level > 0.5 && quantile_level < 1.0)) {
    throw ConfigError("quantile_level must lie in (0.5, 1)");
  }
  if (!(eigen_cutoff > 0.0 && eigen_cutoff < 1.0)) {
    throw ConfigError("eigen_cutoff must lie in (0, 1)");
  }
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (instances < 1) throw ConfigError("instances must be at least 1");
  try {
    fit_config().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

int cmd_simulate(const RunConfig& config) {
  SyntheticSpec spec;
  spec.n = config.n;
  spec.d = config.d;
  spec.seed = config.seed;
  const SyntheticTruth truth = generate_truth(spec);
  if (!(config.p > 0.0 && config.p <= 1.0) || config.trials < 1) {
    throw ConfigError("simulate needs p in (0, 1] and trials >= 1");
  }
  // Stream 0 generated the truth; the comparison draw uses stream 1.
  const ComparisonData data = sample_comparisons(
      truth.covariates, truth.truth, config.p, config.trials, config.seed, 1);
  const auto ids = io::default_item_ids(config.n);
  const auto features = io::default_feature_names(config.d);
  const std::string hash = config_hash(config);

  std::ostringstream comparisons;
  comparisons << csv_provenance(config, hash);
  io::write_comparisons_csv(comparisons, data, ids);
  std::ostringstream covariates;
  covariates << csv_provenance(config, hash);
  io::write_covariates_csv(covariates, truth.covariates.raw, ids, features);

  const Vector scores = item_scores(truth.covariates, truth.truth);
  std::ostringstream truth_csv;
  truth_csv << csv_provenance(config, hash) << "item,alpha,score\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    truth_csv << ids[i] << ',' << io::format_double(truth.truth.alpha[k]) << ','
              << io::format_double(scores[k]) << '\n';
  }
  Json tj;
  tj["provenance"] = provenance(config, hash);
  tj["n"] = config.n;
  tj["d"] = config.d;
  tj["p"] = config.p;
  tj["L"] = config.trials;
  tj["connected"] = is_connected(data);
  tj["n_edges"] = data.n_edges();
  tj["kappa1"] = truth.kappa1;
  tj["scale_k"] = truth.covariates.scale_k;
  tj["alpha"] = to_array(truth.truth.alpha);
  tj["beta"] = to_array(truth.truth.beta);

  const fs::path out = config.output_dir;
  write_outputs({{out / "comparisons.csv", comparisons.str()},
                 {out / "covariates.csv", covariates.str()},
                 {out / "truth.csv", truth_csv.str()},
                 {out / "truth.json", dump(tj)}});
  return kExitOk;
}

int cmd_fit(const RunConfig& config) {
  require_file(config.comparisons, "comparisons");
  if (!config.covariates.empty()) require_file(config.covariates, "covariates");
  const Inputs in = load_inputs(config);
  const PipelineResult pr = fit_inputs(config, in);
  const std::string hash = config_hash(config);
  write_outputs({{config.output_dir / "fit.json",
                  dump(fit_json(config, hash, in, pr))}});
  return kExitOk;
}

int cmd_infer(const RunConfig& config) {
  require_file(config.comparisons, "comparisons");
  if (!config.covariates.empty()) require_file(config.covariates, "covariates");
  const Inputs in = load_inputs(config);
  const PipelineResult pr = fit_inputs(config, in);
  const VarianceModel vm = variance_model_at(
      in.comparisons.data, pr.covariates, pr.projection, pr.fit.params,
      config.eigen_cutoff);
  if (vm.warning) std::cerr << "care: " << *vm.warning << '\n';
  const InferenceReport report =
      build_inference_report(pr.fit, vm, config.level, config.quantile_level);
  const std::string hash = config_hash(config);
  write_outputs(
      {{config.output_dir / "fit.json", dump(fit_json(config, hash, in, pr))},
       {config.output_dir / "inference.csv",
        inference_csv(config, hash, in, report)}});
  return kExitOk;
}

int cmd_rank(const RunConfig& config) {
  require_file(config.comparisons, "comparisons");
  if (!config.covariates.empty()) require_file(config.covariates, "covariates");
  const Inputs in = load_inputs(config);
  const PipelineResult pr = fit_inputs(config, in);
  const VarianceModel vm = variance_model_at(
      in.comparisons.data, pr.covariates, pr.projection, pr.fit.params,
      config.eigen_cutoff);
  if (vm.warning) std::cerr << "care: " << *vm.warning << '\n';
  const RankingScores ranking =
      care_ranking_scores(pr.fit, vm, config.quantile_level);
  const std::string hash = config_hash(config);
  write_outputs(
      {{config.output_dir / "fit.json", dump(fit_json(config, hash, in, pr))},
       {config.output_dir / "ranking.csv", ranking_csv(config, hash, in, ranking)}});
  return kExitOk;
}

int cmd_experiment(const RunConfig& config) {
  const bool rate = config.experiment == "rate";
  if (!rate && config.experiment != "distribution") {
    throw ConfigError("experiment must be 'rate' or 'distribution'");
  }
  ExperimentPlan plan;
  plan.pl_pairs = config.pairs.empty()
                      ? (rate ? rate_study_pairs()
                              : distribution_study_pairs(config.n, config.d))
                      : parse_pairs(config.pairs);
  plan.replications =
      config.replications > 0 ? config.replications : (rate ? 200 : 250);
  plan.statistics =
      config.statistics.empty()
          ? (rate ? std::set<Statistic>{Statistic::kAlphaLinf,
                                        Statistic::kBetaRelL2}
                  : std::set<Statistic>{Statistic::kQqAlpha1, Statistic::kHistA,
                                        Statistic::kHistB, Statistic::kCoverage})
          : parse_statistics(config.statistics);
  plan.level = config.level;
  plan.fit = config.fit_config();
  plan.threads = config.threads;

  const std::string hash = config_hash(config);
  Json result;
  result["provenance"] = provenance(config, hash);
  result["kind"] = config.experiment;
  result["n"] = config.n;
  result["d"] = config.d;
  result["replications"] = plan.replications;
  result["rng"] = "mt19937_64 seeded by seed_seq(seed, stream_id)";
  Json instances = Json::array();

  const std::string head = csv_provenance(config, hash);
  std::ostringstream records;
  records << head
          << "instance,pair_index,p,L,replication,stream_id,resamples,converged,"
             "iterations,statistic,value\n";
  std::ostringstream summary;
  summary << head
          << "instance,pair_index,p,L,statistic,mean,sd,count,ks_distance\n";
  std::ostringstream hist;
  hist << head << "instance,pair_index,p,L,statistic,bin_lo,bin_hi,count\n";
  std::ostringstream qq;
  qq << head << "instance,pair_index,p,L,statistic,theoretical,sample\n";

  for (std::size_t inst = 0; inst < config.instances; ++inst) {
    SyntheticSpec spec;
    spec.n = config.n;
    spec.d = config.d;
    spec.seed = config.seed + inst;
    const ExperimentResult res = rate ? run_rate_experiment(spec, plan)
                                      : run_distribution_experiment(spec, plan);
    Json ij;
    ij["seed"] = spec.seed;
    ij["truth_kappa1"] = res.truth_kappa1;
    Json pairs = Json::array();
    for (const PairSummary& ps : res.pairs) pairs.push_back(summary_json(ps));
    ij["pairs"] = pairs;
    if (rate) {
      Json scaling = Json::object();
      for (const char* stat : {"alpha_linf", "beta_rel_l2"}) {
        try {
          const ScalingFit sf = fit_rate_scaling(res, stat);
          scaling[stat] = {{"slope", sf.slope},
                           {"intercept", sf.intercept},
                           {"r_squared", sf.r_squared}};
        } catch (const InvalidArgument&) {
        }
      }
      ij["scaling"] = scaling;
    }
    instances.push_back(ij);

    for (const ReplicationRecord& rec : res.records) {
      const PLPair& pl = plan.pl_pairs[rec.pair_index];
      for (const auto& [key, value] : rec.values) {
        records << inst << ',' << rec.pair_index << ',' << io::format_double(pl.p)
                << ',' << pl.trials << ',' << rec.replication << ','
                << rec.stream_id << ',' << rec.resamples << ','
                << (rec.converged ? 1 : 0) << ',' << rec.iterations << ',' << key
                << ',' << io::format_double(value) << '\n';
      }
    }
    for (std::size_t k = 0; k < res.pairs.size(); ++k) {
      const PairSummary& ps = res.pairs[k];
      const std::string prefix = std::to_string(inst) + ',' + std::to_string(k) +
                                 ',' + io::format_double(ps.pair.p) + ',' +
                                 std::to_string(ps.pair.trials) + ',';
      for (const auto& [key, s] : ps.stats) {
        const auto ks = ps.ks_distance.find(key);
        summary << prefix << key << ',' << io::format_double(s.mean) << ','
                << io::format_double(s.sd) << ',' << s.count << ','
                << (ks == ps.ks_distance.end() ? "" : io::format_double(ks->second))
                << '\n';
      }
      for (const auto& [key, h] : ps.histograms) {
        const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
          hist << prefix << key << ','
               << io::format_double(h.lo + width * static_cast<double>(b)) << ','
               << io::format_double(h.lo + width * static_cast<double>(b + 1))
               << ',' << h.counts[b] << '\n';
        }
      }
      for (const auto& [key, q] : ps.qq) {
        for (std::size_t m = 0; m < q.sample.size(); ++m) {
          qq << prefix << key << ',' << io::format_double(q.theoretical[m]) << ','
             << io::format_double(q.sample[m]) << '\n';
        }
      }
    }
  }
  result["instances"] = instances;

  const fs::path dir = config.output_dir / "experiment";
  OutputSet outputs{{dir / "result.json", dump(result)},
                    {dir / "records.csv", records.str()},
                    {dir / "summary.csv", summary.str()}};
  if (!rate) {
    outputs.emplace_back(dir / "histograms.csv", hist.str());
    outputs.emplace_back(dir / "qq.csv", qq.str());
  }
  write_outputs(outputs);
  return kExitOk;
}

int run(const RunConfig& config) {
  try {
    config.validate();
    if (config.command == "simulate") return cmd_simulate(config);
    if (config.command == "fit") return cmd_fit(config);
    if (config.command == "infer") return cmd_infer(config);
    if (config.command == "rank") return cmd_rank(config);
    if (config.command == "experiment") return cmd_experiment(config);
    throw ConfigError("unknown command '" + config.command + "'");
  } catch (const ConvergenceFailure& e) {
    std::cerr << "care: convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::kParse:
        std::cerr << "care: parse error: " << e.what() << '\n';
        return kExitParse;
      case ErrorKind::kConnectivity:
        std::cerr << "care: connectivity error: " << e.what() << '\n';
        return kExitConnectivity;
      case ErrorKind::kConfig:
        std::cerr << "care: config error: " << e.what() << '\n';
        return kExitConfig;
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kDegenerateDesign:
      case ErrorKind::kDegenerateContrast:
        std::cerr << "care: data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "care: error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Covariate-assisted ranking from pairwise comparisons"};
  app.set_config("--config", "", "Flat key = value settings file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  RunConfig cfg;
  std::string comparisons;
  std::string covariates;
  std::string output_dir = cfg.output_dir.string();
  app.add_option("command", cfg.command, "simulate | fit | infer | rank | experiment")
      ->required()
      ->check(CLI::IsMember({"simulate", "fit", "infer", "rank", "experiment"}));
  app.add_option("--comparisons", comparisons, "Comparisons CSV");
  app.add_option("--covariates", covariates, "Covariates CSV (omit for no covariates)");
  app.add_option("--out", output_dir, "Output directory")->capture_default_str();
  app.add_flag("--standardize,!--no-standardize", cfg.standardize,
               "Standardize covariate columns before rescaling");
  app.add_option("--step-size", cfg.step_size, "Gradient step (0 = automatic)");
  app.add_option("--max-iters", cfg.max_iters)->capture_default_str();
  app.add_option("--grad-tol", cfg.grad_tol)->capture_default_str();
  app.add_option("--step-tol", cfg.step_tol)->capture_default_str();
  app.add_option("--ridge-alpha", cfg.ridge_alpha, "Ridge penalty on alpha only");
  app.add_option("--likelihood-scale", cfg.likelihood_scale,
                 "Objective divisor (0 = total trials)");
  app.add_option("--level", cfg.level, "Confidence level")->capture_default_str();
  app.add_option("--quantile-level", cfg.quantile_level,
                 "Soft-threshold normal quantile level")
      ->capture_default_str();
  app.add_option("--eigen-cutoff", cfg.eigen_cutoff)->capture_default_str();
  app.add_option("--n", cfg.n, "Items (simulate/experiment)")->capture_default_str();
  app.add_option("--d", cfg.d, "Covariates (simulate/experiment)")->capture_default_str();
  app.add_option("--p", cfg.p, "Edge probability (simulate)")->capture_default_str();
  app.add_option("--L,--trials", cfg.trials, "Trials per edge (simulate)")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--experiment", cfg.experiment, "rate | distribution")
      ->capture_default_str();
  app.add_option("--replications", cfg.replications,
                 "Replications per (p, L) pair (0 = study default)");
  app.add_option("--instances", cfg.instances, "Independent truths (seed, seed+1, ...)");
  app.add_option("--pairs", cfg.pairs, "Override (p, L) pairs as p:L,p:L");
  app.add_option("--statistics", cfg.statistics, "Comma separated statistics");
  app.add_option("--threads", cfg.threads, "Worker threads")
      ->envname("CARE_THREADS")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  cfg.comparisons = comparisons;
  cfg.covariates = covariates;
  cfg.output_dir = output_dir;
  return run(cfg);
}

}  // namespace care::cli
