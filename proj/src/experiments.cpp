#include "ascltsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ascltsim/rng.hpp"

namespace ascltsim {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      config_error(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["model"] = model;
  j["tau"] = tau;
  json ladder = json::array();
  for (GridSize n : n_ladder) ladder.push_back({n.n1, n.n2});
  j["n_ladder"] = ladder;
  j["reps"] = reps;
  j["seed"] = seed;
  j["normalization"] = to_string(normalization);
  j["method"] = method;
  j["epsilon"] = epsilon;
  j["conditions"] = {{"berman", cond_berman},
                     {"dprime", cond_dprime},
                     {"gap", cond_gap},
                     {"gap_reps", gap_reps}};
  j["output_dir"] = output_dir;
  return j.dump();  // nlohmann::json keeps keys sorted
}

ExperimentConfig parse_experiment_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  reject_unknown_keys(j,
                      {"model", "tau", "n_ladder", "reps", "seed", "normalization", "method",
                       "epsilon", "conditions", "output_dir"},
                      "");

  ExperimentConfig c;
  if (!j.contains("model") || !j["model"].is_string()) config_error("model", "string required");
  c.model = j["model"].get<std::string>();
  parse_model(c.model);  // validate against the catalog now

  if (!j.contains("tau") || !j["tau"].is_number()) config_error("tau", "number required");
  c.tau = j["tau"].get<double>();
  if (!(c.tau >= 0.0)) config_error("tau", "must be >= 0");

  if (!j.contains("n_ladder") || !j["n_ladder"].is_array() || j["n_ladder"].empty()) {
    config_error("n_ladder", "non-empty array of [n1,n2] pairs required");
  }
  for (const auto& entry : j["n_ladder"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
        !entry[1].is_number_integer()) {
      config_error("n_ladder", "entries must be [n1,n2] integer pairs");
    }
    const GridSize n{entry[0].get<int>(), entry[1].get<int>()};
    if (!n.positive()) config_error("n_ladder", "grid sizes must be >= 1x1");
    if (!c.n_ladder.empty()) {
      const GridSize prev = c.n_ladder.back();
      if (!(n.n1 > prev.n1 && n.n2 > prev.n2)) {
        config_error("n_ladder", "must be strictly increasing in both coordinates");
      }
    }
    c.n_ladder.push_back(n);
  }

  if (!j.contains("reps") || !j["reps"].is_number_integer()) {
    config_error("reps", "integer required");
  }
  c.reps = j["reps"].get<int>();
  if (c.reps < 1) config_error("reps", "must be >= 1");

  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    config_error("seed", "nonnegative integer required");
  }
  c.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("normalization")) {
    if (!j["normalization"].is_string()) config_error("normalization", "string required");
    c.normalization = parse_normalization(j["normalization"].get<std::string>());
  }
  if (j.contains("method")) {
    if (!j["method"].is_string()) config_error("method", "string required");
    c.method = j["method"].get<std::string>();
    if (c.method != "auto") parse_sample_method(c.method);
  }
  if (j.contains("epsilon")) {
    if (!j["epsilon"].is_number()) config_error("epsilon", "number required");
    c.epsilon = j["epsilon"].get<double>();
    if (!(c.epsilon > 0.0)) config_error("epsilon", "must be > 0");
  }
  if (j.contains("conditions")) {
    const json& cond = j["conditions"];
    if (!cond.is_object()) config_error("conditions", "object required");
    reject_unknown_keys(cond, {"berman", "dprime", "gap", "gap_reps"}, "conditions");
    auto flag = [&](const char* name, bool& out) {
      if (cond.contains(name)) {
        if (!cond[name].is_boolean()) config_error(std::string("conditions.") + name, "boolean required");
        out = cond[name].get<bool>();
      }
    };
    flag("berman", c.cond_berman);
    flag("dprime", c.cond_dprime);
    flag("gap", c.cond_gap);
    if (cond.contains("gap_reps")) {
      if (!cond["gap_reps"].is_number_integer()) config_error("conditions.gap_reps", "integer required");
      c.gap_reps = cond["gap_reps"].get<int>();
      if (c.gap_reps < 0) config_error("conditions.gap_reps", "must be >= 0");
    }
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) config_error("output_dir", "string required");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config_text(ss.str());
}

namespace {

std::function<FieldRealization(std::uint64_t)> make_sampler(const CorrelationModel& model,
                                                            GridSize n,
                                                            const std::string& method) {
  if (method == "auto") return make_default_sampler(model, n);
  switch (parse_sample_method(method)) {
    case SampleMethod::iid:
      if (model.id() != "iid") {
        throw ConfigError("method 'iid' only samples the iid model, not '" + model.id() + "'");
      }
      return [n](std::uint64_t s) { return sample_iid(n, s); };
    case SampleMethod::cholesky: {
      auto sampler = std::make_shared<CholeskySampler>(model, n);
      return [sampler](std::uint64_t s) { return sampler->sample(s); };
    }
    case SampleMethod::circulant: {
      auto sampler = std::make_shared<CirculantSampler>(model, n);
      return [sampler](std::uint64_t s) { return sampler->sample(s); };
    }
  }
  throw InternalError("unreachable sampler method");
}

NormalSummary summarize(const std::vector<double>& values) {
  NormalSummary s;
  const double r = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= r;
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(acc / (r - 1.0));
  }
  s.stderr_ = s.sd / std::sqrt(r);
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  if (threads < 1) threads = 1;
  const auto model = parse_model(config.model);
  const GridSize n_max = config.n_ladder.back();
  if (const auto dom = model->domain(); dom && !leq(n_max, *dom)) {
    throw ConfigError("config model '" + config.model + "' is only defined on " +
                      to_string(*dom) + " but the ladder reaches " + to_string(n_max));
  }

  const LevelSchedule schedule = LevelSchedule::constant(n_max, config.tau);
  const Grid<double> base = schedule.materialize_base(n_max);
  const auto sampler = make_sampler(*model, n_max, config.method);

  const std::size_t ladder_count = config.n_ladder.size();
  ExperimentResult result;
  result.config = config;
  result.records.assign(ladder_count, std::vector<RepRecord>(config.reps));

  // Replication worker: field at n_max once, prefix DP once, then every
  // ladder checkpoint reads shared prefix sums.
  auto run_rep = [&](int rep) {
    const FieldRealization field =
        sampler(derive_rep_seed(config.seed, static_cast<std::uint64_t>(rep)));
    const Grid<double> m = prefix_max(field);
    Grid<std::uint8_t> bits(n_max);
    for (int k1 = 1; k1 <= n_max.n1; ++k1) {
      for (int k2 = 1; k2 <= n_max.n2; ++k2) {
        bits(k1, k2) = (m(k1, k2) <= base(k1, k2)) ? 1 : 0;
      }
    }
    const std::vector<double> a_paper =
        asclt_averages_at(bits, config.n_ladder, Normalization::paper_log);
    const std::vector<double> a_harmonic =
        asclt_averages_at(bits, config.n_ladder, Normalization::harmonic);
    for (std::size_t li = 0; li < ladder_count; ++li) {
      RepRecord& rec = result.records[li][static_cast<std::size_t>(rep)];
      rec.rep = rep;
      rec.a_paper = a_paper[li];
      rec.a_harmonic = a_harmonic[li];
      rec.no_exceed = bits(config.n_ladder[li].n1, config.n_ladder[li].n2);
    }
  };

  if (threads == 1 || config.reps == 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_rep(rep);
  } else {
    std::vector<std::thread> pool;
    const int nthreads = std::min(threads, config.reps);
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (int rep = t; rep < config.reps; rep += nthreads) run_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  const bool iid = config.model == "iid";
  for (std::size_t li = 0; li < ladder_count; ++li) {
    const GridSize n = config.n_ladder[li];
    std::vector<double> vp, vh;
    vp.reserve(result.records[li].size());
    vh.reserve(result.records[li].size());
    std::int64_t hits = 0;
    for (const RepRecord& rec : result.records[li]) {
      vp.push_back(rec.a_paper);
      vh.push_back(rec.a_harmonic);
      hits += rec.no_exceed;
    }
    LadderSummary s;
    s.n = n;
    s.paper = summarize(vp);
    s.harmonic = summarize(vh);
    if (iid) {
      s.paper.analytic = (n.n1 >= 3 && n.n2 >= 3)
                             ? std::optional<double>(expected_average_iid(n, config.tau,
                                                                          Normalization::paper_log))
                             : std::nullopt;
      s.harmonic.analytic = expected_average_iid(n, config.tau, Normalization::harmonic);
      s.p_exact = no_exceedance_prob_iid(n, config.tau);
    }
    s.exp_neg_tau = std::exp(-config.tau);
    s.p_hat = static_cast<double>(hits) / config.reps;
    s.p_hat_stderr = std::sqrt(s.p_hat * (1.0 - s.p_hat) / config.reps);
    result.summaries.push_back(s);
  }

  if (config.cond_berman || config.cond_dprime || config.cond_gap) {
    for (GridSize n : config.n_ladder) {
      ConditionReport report;
      report.n = n;
      report.epsilon = config.epsilon;
      report.params = block_parameters(n);
      const LevelSchedule local = LevelSchedule::constant(n, config.tau);
      if (config.cond_berman) {
        report.berman = berman_sup(*model, local, n, config.epsilon);
      }
      if (config.cond_dprime) {
        GridSize block{0, 0};
        report.dprime_value = dprime_sum_default(*model, local, n, report.params, &block);
        report.dprime_block = block;
      }
      if (config.cond_gap) {
        const int reps = config.gap_reps > 0 ? config.gap_reps : config.reps;
        constexpr std::uint64_t kGapSalt = 0x6761705f73616c74ULL;  // "gap_salt"
        report.gap = rectangle_independence_gap(*model, local, n, grid_partition(n, 2, 2),
                                                std::max(reps, 100), config.seed ^ kGapSalt);
      }
      result.conditions.push_back(report);
    }
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_experiment_outputs(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  {
    std::ofstream out(fs::path(dir) / "trajectories.csv");
    if (!out) throw IoError("cannot write trajectories.csv");
    out << "n1,n2,rep,normalization,A_n,indicator_Mn\n";
    for (std::size_t li = 0; li < result.records.size(); ++li) {
      const GridSize n = result.config.n_ladder[li];
      for (const RepRecord& rec : result.records[li]) {
        out << n.n1 << ',' << n.n2 << ',' << rec.rep << ",paper_log," << fmt(rec.a_paper) << ','
            << rec.no_exceed << '\n';
        out << n.n1 << ',' << n.n2 << ',' << rec.rep << ",harmonic," << fmt(rec.a_harmonic)
            << ',' << rec.no_exceed << '\n';
      }
    }
  }

  {
    std::ofstream out(fs::path(dir) / "summary.csv");
    if (!out) throw IoError("cannot write summary.csv");
    out << "n1,n2,normalization,mean_A,sd_A,stderr_A,analytic_E,exp_neg_tau,abs_gap_to_exp,"
           "p_hat_no_exceed,p_hat_stderr,p_exact\n";
    for (const LadderSummary& s : result.summaries) {
      auto row = [&](const char* name, const NormalSummary& ns) {
        out << s.n.n1 << ',' << s.n.n2 << ',' << name << ',' << fmt(ns.mean) << ','
            << fmt(ns.sd) << ',' << fmt(ns.stderr_) << ','
            << (ns.analytic ? fmt(*ns.analytic) : std::string()) << ',' << fmt(s.exp_neg_tau)
            << ',' << fmt(std::abs(ns.mean - s.exp_neg_tau)) << ',' << fmt(s.p_hat) << ','
            << fmt(s.p_hat_stderr) << ',' << (s.p_exact ? fmt(*s.p_exact) : std::string())
            << '\n';
      };
      row("paper_log", s.paper);
      row("harmonic", s.harmonic);
    }
  }

  {
    std::ofstream out(fs::path(dir) / "conditions.json");
    if (!out) throw IoError("cannot write conditions.json");
    out << "[\n";
    for (std::size_t i = 0; i < result.conditions.size(); ++i) {
      out << condition_report_json(result.conditions[i]);
      if (i + 1 < result.conditions.size()) out << ',';
      out << '\n';
    }
    out << "]\n";
  }

  {
    const std::string canonical = result.config.canonical_json();
    nlohmann::json manifest;
    manifest["artifact"] = "ascltsim";
    manifest["version"] = kArtifactVersion;
    manifest["seed"] = result.config.seed;
    manifest["config"] = nlohmann::json::parse(canonical);
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    manifest["config_hash"] = hash;
    manifest["outputs"] = {"trajectories.csv", "summary.csv", "conditions.json"};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
  }
}

std::string format_convergence_table(const ExperimentResult& result) {
  std::ostringstream out;
  const bool paper = result.config.normalization == Normalization::paper_log;
  out << "n1 n2 mean_A sd_A analytic_E exp(-tau) |mean-exp| p_hat(Mn<=u) p_stderr\n";
  for (const LadderSummary& s : result.summaries) {
    const NormalSummary& ns = paper ? s.paper : s.harmonic;
    char analytic[32] = "-";
    if (ns.analytic) std::snprintf(analytic, sizeof analytic, "%.6f", *ns.analytic);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d %d %.6f %.6f %s %.6f %.6f %.6f %.6f\n", s.n.n1, s.n.n2,
                  ns.mean, ns.sd, analytic, s.exp_neg_tau, std::abs(ns.mean - s.exp_neg_tau),
                  s.p_hat, s.p_hat_stderr);
    out << buf;
  }
  return out.str();
}

}  // namespace ascltsim
