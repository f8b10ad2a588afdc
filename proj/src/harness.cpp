#include "hadmc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "hadmc/errors.hpp"
#include "hadmc/rng.hpp"
#include "hadmc/serialize.hpp"

namespace hadmc {

namespace fs = std::filesystem;

std::vector<std::pair<int, int>> SweepConfig::grid() const {
  if (!points.empty()) return points;
  std::vector<std::pair<int, int>> out;
  for (int k1 : kappa1_values) {
    for (int k2 : kappa2_values) out.emplace_back(k1, k2);
  }
  return out;
}

SweepConfig default_sweep_config() {
  SweepConfig c;
  for (int k = 1; k <= 19; ++k) {
    c.kappa1_values.push_back(k);
    c.kappa2_values.push_back(k);
  }
  return c;
}

namespace {

std::vector<int> int_array(io::ObjectReader& r, const std::string& key) {
  const auto& v = r.at(key);
  if (!v.is_array() || v.empty()) throw ParseError(r.child_path(key), "expected a non-empty array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long>() < 1) throw ParseError(r.child_path(key), "expected positive integers");
    out.push_back(x.get<int>());
  }
  return out;
}

SweepConfig sweep_config_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  SweepConfig c = default_sweep_config();
  if (r.has("kappa1")) c.kappa1_values = int_array(r, "kappa1");
  if (r.has("kappa2")) c.kappa2_values = int_array(r, "kappa2");
  if (r.has("points")) {
    const auto& v = r.at("points");
    if (!v.is_array() || v.empty()) throw ParseError(r.child_path("points"), "expected a non-empty array of pairs");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& p = v[i];
      const std::string pp = r.child_path("points") + "[" + std::to_string(i) + "]";
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer() ||
          p[0].get<long>() < 1 || p[1].get<long>() < 1) {
        throw ParseError(pp, "expected [kappa1, kappa2] with positive integers");
      }
      c.points.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
  }
  c.samples = static_cast<int>(r.integer_or("samples", c.samples));
  c.n_pi = r.integer_or("n_pi", c.n_pi);
  c.b_pi = static_cast<int>(r.integer_or("b_pi", c.b_pi));
  c.buffer = r.integer_or("buffer", c.buffer);
  c.histogram_bins = static_cast<int>(r.integer_or("histogram_bins", c.histogram_bins));
  r.finish();
  if (c.samples <= 0) throw ParseError(r.child_path("samples"), "must be positive");
  if (c.n_pi < 0) throw ParseError(r.child_path("n_pi"), "must be nonnegative");
  if (c.b_pi <= 0) throw ParseError(r.child_path("b_pi"), "must be positive");
  if (c.buffer < c.b_pi) throw ParseError(r.child_path("buffer"), "must hold at least b_pi tuples");
  if (c.histogram_bins <= 0) throw ParseError(r.child_path("histogram_bins"), "must be positive");
  return c;
}

nlohmann::json sweep_config_to_json(const SweepConfig& c) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [a, b] : c.points) points.push_back({a, b});
  nlohmann::json doc = {{"kappa1", c.kappa1_values}, {"kappa2", c.kappa2_values}, {"samples", c.samples},
                        {"n_pi", c.n_pi},           {"b_pi", c.b_pi},           {"buffer", c.buffer},
                        {"histogram_bins", c.histogram_bins}};
  if (!c.points.empty()) doc["points"] = points;
  return doc;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& header, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw ParseError(what, "unexpected header, want \"" + header + "\"");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != columns) {
      throw ParseError(what + ":" + std::to_string(lineno), "expected " + std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_number(const std::string& cell, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || *end != '\0') throw ParseError(where, "non-numeric cell \"" + cell + "\"");
  return v;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, bool desk_scale) {
  io::ObjectReader r(doc, "");
  ExperimentConfig c;
  const nlohmann::json empty = nlohmann::json::object();
  c.scenario = scenario_config_from_json(r.has("scenario") ? r.at("scenario") : empty, "scenario");
  c.model = model_config_from_json(r.has("model") ? r.at("model") : empty, "model");
  const TrainConfig base = desk_scale ? desk_scale_train_config() : TrainConfig{};
  c.train = train_config_from_json(r.has("train") ? r.at("train") : empty, "train", base);
  c.sweep = sweep_config_from_json(r.has("sweep") ? r.at("sweep") : empty, "sweep");
  c.output_dir = r.string_or("output_dir", "");
  r.finish();
  return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  return {{"scenario", scenario_config_to_json(c.scenario)},
          {"model", model_config_to_json(c.model)},
          {"train", train_config_to_json(c.train)},
          {"sweep", sweep_config_to_json(c.sweep)},
          {"output_dir", c.output_dir}};
}

void apply_scenario_tag(ScenarioConfig& c, const std::string& tag) {
  if (tag.size() != 3 || tag[0] != 'S' || (tag[1] != 'A' && tag[1] != 'R') || tag[2] < '1' || tag[2] > '4') {
    throw ParseError("--scenario", "expected SA1..SA4 or SR1..SR4, got \"" + tag + "\"");
  }
  c.type = tag[1] == 'A' ? DeploymentType::A : DeploymentType::R;
  const auto [n, m] = scenario_size(tag[2] - '0');
  c.n = n;
  c.m = m;
}

std::vector<ComparisonRow> run_comparison(const std::vector<NamedController>& models,
                                          const std::vector<DeploymentSpec>& deployments, const std::string& scenario,
                                          const EpisodeOptions& options) {
  std::vector<ComparisonRow> rows(models.size() * deployments.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const auto& model = models[k / deployments.size()];
    const std::size_t d = k % deployments.size();
    if (!model.controller) throw ContractViolation("run_comparison: model \"" + model.name + "\" has no controller");
    const auto res = run_episode(*model.controller, deployments[d], options);
    auto& row = rows[k];
    row.model = model.name;
    row.scenario = scenario;
    row.deployment_id = static_cast<int>(d);
    row.objective = res.objective;
    row.completion_time = res.makespan;
    row.completion_rate = res.completed ? 1.0 : 0.0;
    row.t_obs = res.ledger.observing;
    row.t_chg = res.ledger.charging;
    row.t_wait = res.ledger.wait;
    row.t_fly = res.ledger.flight;
  });
  return rows;
}

namespace {
constexpr const char* kComparisonHeader =
    "model,scenario,deployment_id,objective,completion_time,completion_rate,t_obs,t_chg,t_wait,t_fly";
constexpr const char* kSweepHeader = "pipeline,kappa1,kappa2,variance";
}  // namespace

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = std::string(kComparisonHeader) + "\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.scenario + "," + std::to_string(r.deployment_id) + "," + fmt(r.objective) + "," +
           fmt(r.completion_time) + "," + fmt(r.completion_rate) + "," + fmt(r.t_obs) + "," + fmt(r.t_chg) + "," +
           fmt(r.t_wait) + "," + fmt(r.t_fly) + "\n";
  }
  return out;
}

std::vector<ComparisonRow> comparison_from_csv(const std::string& text) {
  std::vector<ComparisonRow> rows;
  int line = 1;
  for (const auto& c : parse_csv(text, kComparisonHeader, "comparison.csv")) {
    const std::string where = "comparison.csv:" + std::to_string(++line);
    ComparisonRow r;
    r.model = c[0];
    r.scenario = c[1];
    if (r.model.empty() || r.scenario.empty()) throw ParseError(where, "empty model or scenario");
    r.deployment_id = static_cast<int>(to_number(c[2], where));
    r.objective = to_number(c[3], where);
    r.completion_time = to_number(c[4], where);
    r.completion_rate = to_number(c[5], where);
    r.t_obs = to_number(c[6], where);
    r.t_chg = to_number(c[7], where);
    r.t_wait = to_number(c[8], where);
    r.t_fly = to_number(c[9], where);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ComparisonSummary> summarize(const std::vector<ComparisonRow>& rows) {
  std::vector<ComparisonSummary> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<std::vector<const ComparisonRow*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.model, r.scenario);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.emplace_back();
      out.push_back({r.model, r.scenario});
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& s = out[g];
    const double n = static_cast<double>(groups[g].size());
    double completed = 0.0;
    s.deployments = static_cast<int>(groups[g].size());
    for (const auto* r : groups[g]) {
      s.mean_objective += r->objective;
      s.completion_rate += r->completion_rate;
      s.t_obs += r->t_obs;
      s.t_chg += r->t_chg;
      s.t_wait += r->t_wait;
      s.t_fly += r->t_fly;
      if (r->completion_rate > 0.5) {
        s.mean_completion_time += r->completion_time;
        completed += 1.0;
      }
    }
    s.mean_objective /= n;
    for (const auto* r : groups[g]) s.std_objective += (r->objective - s.mean_objective) * (r->objective - s.mean_objective);
    s.std_objective = std::sqrt(s.std_objective / n);
    s.completion_rate /= n;
    s.mean_completion_time = completed > 0 ? s.mean_completion_time / completed : 0.0;
    s.t_obs /= n;
    s.t_chg /= n;
    s.t_wait /= n;
    s.t_fly /= n;
  }
  return out;
}

std::string summary_to_csv(const std::vector<ComparisonSummary>& rows) {
  std::string out =
      "model,scenario,deployments,mean_objective,std_objective,mean_completion_time,completion_rate,t_obs,t_chg,t_wait,"
      "t_fly\n";
  for (const auto& s : rows) {
    out += s.model + "," + s.scenario + "," + std::to_string(s.deployments) + "," + fmt(s.mean_objective) + "," +
           fmt(s.std_objective) + "," + fmt(s.mean_completion_time) + "," + fmt(s.completion_rate) + "," + fmt(s.t_obs) +
           "," + fmt(s.t_chg) + "," + fmt(s.t_wait) + "," + fmt(s.t_fly) + "\n";
  }
  return out;
}

double frequency_variance(const std::vector<long>& counts) {
  if (counts.empty()) throw ContractViolation("frequency_variance: no outputs");
  double total = 0.0;
  for (long c : counts) total += static_cast<double>(c);
  if (total <= 0.0) throw ContractViolation("frequency_variance: no samples");
  const double k = static_cast<double>(counts.size());
  const double mean = 1.0 / k;
  double var = 0.0;
  for (long c : counts) {
    const double f = static_cast<double>(c) / total - mean;
    var += f * f;
  }
  return var / k;
}

double quantize4(double v) { return std::round(v * 1e4) / 1e4; }

SweepPoint codec_output_variance(const ActionCodec<float>& codec, int samples, int bins, std::uint64_t seed) {
  if (samples <= 0 || bins <= 0) throw ContractViolation("codec_output_variance: samples and bins must be positive");
  const int k1 = codec.config().kappa1;
  const int k2 = codec.config().kappa2;
  const int rows = codec.table_rows();
  std::mt19937_64 rng(seed);
  std::vector<int> all(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) all[static_cast<std::size_t>(i)] = i;
  std::vector<long> discrete(static_cast<std::size_t>(rows), 0);
  nn::Matrix<float> xs(samples, k2);
  std::vector<float> z(static_cast<std::size_t>(k1));
  for (int s = 0; s < samples; ++s) {
    for (auto& v : z) v = static_cast<float>(quantize4(uniform(rng, -1.0, 1.0)));
    for (int j = 0; j < k2; ++j) xs(s, j) = static_cast<float>(quantize4(uniform(rng, -1.0, 1.0)));
    ++discrete[static_cast<std::size_t>(codec.lookup_discrete(z, all))];
  }
  const nn::Matrix<float> a_con = codec.decode_continuous_batch(xs);
  std::vector<long> continuous(static_cast<std::size_t>(bins), 0);
  for (int s = 0; s < samples; ++s) {
    const double u = (std::clamp(static_cast<double>(a_con(s, 0)), -1.0, 1.0) + 1.0) / 2.0;
    const int b = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
    ++continuous[static_cast<std::size_t>(b)];
  }
  return {k1, k2, frequency_variance(discrete), frequency_variance(continuous)};
}

std::vector<SweepPoint> latent_dim_sweep(const ScenarioConfig& scenario, const ModelConfig& model, const TrainConfig& train,
                                         const SweepConfig& sweep, std::uint64_t seed) {
  const auto grid = sweep.grid();
  if (grid.empty()) throw ContractViolation("latent_dim_sweep: empty grid");
  const EpisodeOptions options{train.reward, train.max_stages};
  const auto specs = make_deployments(scenario, DeploymentSet::train);
  const auto buffer = build_pretrain_buffer(specs, static_cast<std::size_t>(sweep.buffer), derive_seed(seed, 40), options);
  const int sd = static_cast<int>(state_dim(static_cast<std::size_t>(scenario.n), static_cast<std::size_t>(scenario.m)));
  std::vector<SweepPoint> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    ModelConfig mc = model;
    mc.kappa1 = grid[g].first;
    mc.kappa2 = grid[g].second;
    ActionCodec<float> codec(codec_config_for(mc, scenario.m, sd, train.policy.lr), derive_seed(seed, 41));
    std::mt19937_64 rng(derive_seed(seed, 42));
    if (codec.config().use_aae && sweep.n_pi > 0) pretrain_decoder(codec, buffer, sweep.n_pi, sweep.b_pi, rng, sweep.n_pi);
    out[g] = codec_output_variance(codec, sweep.samples, sweep.histogram_bins, derive_seed(seed, 43));
  });
  return out;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& p : points) {
    out += "embedding," + std::to_string(p.kappa1) + "," + std::to_string(p.kappa2) + "," + fmt(p.discrete_variance) + "\n";
  }
  for (const auto& p : points) {
    out += "aae," + std::to_string(p.kappa1) + "," + std::to_string(p.kappa2) + "," + fmt(p.continuous_variance) + "\n";
  }
  return out;
}

std::vector<SweepPoint> sweep_from_csv(const std::string& text) {
  std::map<std::pair<int, int>, SweepPoint> byKey;
  std::vector<std::pair<int, int>> order;
  std::set<std::pair<std::string, std::pair<int, int>>> seen;
  int line = 1;
  for (const auto& c : parse_csv(text, kSweepHeader, "sweep.csv")) {
    const std::string where = "sweep.csv:" + std::to_string(++line);
    if (c[0] != "embedding" && c[0] != "aae") throw ParseError(where, "pipeline must be embedding or aae");
    const auto key = std::make_pair(static_cast<int>(to_number(c[1], where)), static_cast<int>(to_number(c[2], where)));
    if (key.first < 1 || key.second < 1) throw ParseError(where, "latent dimensions must be positive");
    if (!seen.insert({c[0], key}).second) throw ParseError(where, "duplicate grid point");
    auto it = byKey.find(key);
    if (it == byKey.end()) {
      it = byKey.emplace(key, SweepPoint{key.first, key.second}).first;
      order.push_back(key);
    }
    const double v = to_number(c[3], where);
    if (c[0] == "embedding") {
      it->second.discrete_variance = v;
    } else {
      it->second.continuous_variance = v;
    }
  }
  if (seen.size() != 2 * order.size()) throw ParseError("sweep.csv", "every grid point needs both pipelines");
  std::vector<SweepPoint> out;
  for (const auto& k : order) out.push_back(byKey[k]);
  return out;
}

std::vector<fs::path> make_report(const fs::path& dir) {
  std::vector<std::string> missing;
  for (const char* f : {"comparison.csv", "sweep.csv"}) {
    if (!fs::exists(dir / f)) missing.push_back((dir / f).string());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ParseError("inputs", "missing " + list);
  }
  const auto rows = comparison_from_csv(io::read_text(dir / "comparison.csv"));
  const auto points = sweep_from_csv(io::read_text(dir / "sweep.csv"));

  nlohmann::json curves = {{"series", nlohmann::json::array()}};
  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "report.csv")) runs.push_back(e.path());
  }
  std::sort(runs.begin(), runs.end());
  for (const auto& run : runs) {
    std::vector<EvalRow> eval;
    try {
      eval = eval_rows_from_csv(io::read_text(run / "report.csv"));
    } catch (const ParseError& e) {
      throw ParseError((run / "report.csv").string(), e.what());
    }
    nlohmann::json s = {{"model", run.filename().string()}};
    for (const auto& r : eval) {
      s["step"].push_back(r.step);
      s["mean_reward"].push_back(r.mean_reward);
      s["completion_rate"].push_back(r.completion_rate);
      s["mean_objective"].push_back(r.mean_objective);
    }
    curves["series"].push_back(s);
  }

  const auto summary = summarize(rows);
  nlohmann::json grouped = {{"metrics", {"objective", "completion_time"}}, {"groups", nlohmann::json::array()}};
  nlohmann::json stacked = {{"components", {"t_obs", "t_chg", "t_wait", "t_fly"}}, {"bars", nlohmann::json::array()}};
  std::vector<std::string> scenarios;
  for (const auto& s : summary) {
    if (std::find(scenarios.begin(), scenarios.end(), s.scenario) == scenarios.end()) scenarios.push_back(s.scenario);
  }
  for (const auto& sc : scenarios) {
    nlohmann::json g = {{"scenario", sc}, {"models", nlohmann::json::array()}};
    for (const auto& s : summary) {
      if (s.scenario != sc) continue;
      g["models"].push_back({{"model", s.model},
                             {"objective", s.mean_objective},
                             {"objective_std", s.std_objective},
                             {"completion_time", s.mean_completion_time},
                             {"completion_rate", s.completion_rate}});
      stacked["bars"].push_back(
          {{"model", s.model}, {"scenario", sc}, {"values", {s.t_obs, s.t_chg, s.t_wait, s.t_fly}}});
    }
    grouped["groups"].push_back(g);
  }

  std::set<int> k1s, k2s;
  for (const auto& p : points) {
    k1s.insert(p.kappa1);
    k2s.insert(p.kappa2);
  }
  const std::vector<int> k1v(k1s.begin(), k1s.end()), k2v(k2s.begin(), k2s.end());
  nlohmann::json heat = {{"kappa1", k1v}, {"kappa2", k2v}, {"pipelines", nlohmann::json::object()}};
  for (const char* pipe : {"embedding", "aae"}) {
    nlohmann::json mat = nlohmann::json::array();
    for (int a : k1v) {
      nlohmann::json row = nlohmann::json::array();
      for (int b : k2v) {
        nlohmann::json cell = nullptr;
        for (const auto& p : points) {
          if (p.kappa1 == a && p.kappa2 == b) cell = std::string(pipe) == "embedding" ? p.discrete_variance : p.continuous_variance;
        }
        row.push_back(cell);
      }
      mat.push_back(row);
    }
    heat["pipelines"][pipe] = mat;
  }

  const fs::path out = dir / "bundles";
  const std::vector<std::pair<std::string, nlohmann::json>> files = {{"reward_curves.json", curves},
                                                                    {"grouped_bars.json", grouped},
                                                                    {"stacked_bars.json", stacked},
                                                                    {"heatmap.json", heat}};
  std::vector<fs::path> written;
  for (const auto& [name, doc] : files) {
    io::write_json_atomic(out / name, doc);
    written.push_back(out / name);
  }
  return written;
}

}  // namespace hadmc
