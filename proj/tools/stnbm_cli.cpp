// stnbm: command-line front end for the symmetric MPS Born machine library.

#include <openssl/evp.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stnbm/stnbm.hpp"

extern char** environ;

namespace {

using json = nlohmann::json;
using namespace stnbm;

constexpr const char* kEnvPrefix = "STNBM_";

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int k = 0; k < len; ++k) {
    s += hex[md[k] >> 4];
    s += hex[md[k] & 15];
  }
  return s;
}

std::string file_digest(const std::string& path) { return sha256_hex(io::read_text(path)); }

/// Inputs and outputs touched by one command, for the run manifest.
struct Run {
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;

  std::string input(const std::string& path) {
    inputs[path] = file_digest(path);
    return path;
  }
  void output(const std::string& path) {
    if (std::find(outputs.begin(), outputs.end(), path) == outputs.end()) outputs.push_back(path);
  }
};

struct Common {
  bool json = false;
  unsigned threads = 1;
  std::string manifest;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_flag("--json", c.json, "Print a machine-readable summary");
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  sub->add_option("--manifest", c.manifest, "Write a run manifest to this path");
}

/// Every option of `app` and its subcommands falls back to STNBM_<NAME>.
void add_env_fallbacks(CLI::App* app) {
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || opt->get_lnames().empty()) continue;
    std::string env = kEnvPrefix;
    for (char ch : name) env += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(env);
  }
  for (CLI::App* sub : app->get_subcommands({})) add_env_fallbacks(sub);
}

json option_snapshot(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "manifest") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::map<std::string, std::string> stnbm_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind(kEnvPrefix, 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    if (key == std::string(kEnvPrefix) + "MANIFEST") continue;
    env[key] = kv.substr(eq + 1);
  }
  return env;
}

std::vector<std::size_t> link_sector_counts(const SymMPS& m) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) s.push_back(m.tensor(i).leg(2).num_sectors());
  return s;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s + "]";
}

// ---------------------------------------------------------------------------
// Commands. Each returns a JSON summary; `text` collects the human-readable form.

struct EmbedOpts {
  std::string constraints, seeds, out;
  int method = 2;
};

json cmd_embed(const EmbedOpts& o, Run& run, std::string& text) {
  const auto cs = io::load_constraints(run.input(o.constraints));
  const auto seeds = SeedSet(cs, io::load_bitstrings(run.input(o.seeds)).bitstrings);
  const SymMPS m = embed(cs, seeds, o.method == 1 ? EmbedMethod::Method1 : EmbedMethod::Method2);
  io::save_model(o.out, m);
  run.output(o.out);
  json j{{"N", cs.num_sites()},          {"m", cs.num_constraints()},        {"method", o.method},
         {"seeds", seeds.size()},        {"bond_dims", m.bond_dims()},       {"sector_counts", link_sector_counts(m)},
         {"parameters", m.num_parameters()}, {"model", o.out}};
  text = "embedded " + std::to_string(seeds.size()) + " seeds with method " + std::to_string(o.method) +
         "\nbond dims " + join(m.bond_dims()) + "\nsectors per link " + join(link_sector_counts(m)) + "\nwrote " +
         o.out + "\n";
  return j;
}

struct TrainOpts {
  std::string model, data, out, loss;
  std::optional<double> temperature;
  std::size_t sweeps = 1, chi = 32;
  double alpha = 0.02, cutoff = 0.0;
};

json cmd_train(const TrainOpts& o, Run& run, std::string& text) {
  SymMPS m = io::load_model(run.input(o.model));
  const auto data = io::load_bitstrings(run.input(o.data));
  detail::require(!data.bitstrings.empty(), "training data file is empty");
  WeightedTrainingSet ts;
  if (o.temperature) {
    detail::require(*o.temperature > 0.0, "temperature must be positive");
    std::vector<double> costs;
    for (std::size_t k = 0; k < data.costs.size(); ++k) {
      if (!data.costs[k]) detail::fail("--temperature needs a cost on every data line (line " + std::to_string(k + 1) + ")");
      costs.push_back(*data.costs[k]);
    }
    ts = WeightedTrainingSet::from_costs(data.bitstrings, costs, *o.temperature);
  } else {
    ts = WeightedTrainingSet::uniform(data.bitstrings);
  }
  for (const auto& [x, w] : ts.items()) {
    if (x.size() != m.size())
      detail::fail("training bitstring " + x.str() + " has length " + std::to_string(x.size()) + ", model has " +
                   std::to_string(m.size()) + " sites");
    if (m.amplitude(x) == 0.0) detail::fail("training bitstring " + x.str() + " lies outside the model support");
  }
  TrainConfig tc;
  tc.learning_rate = o.alpha;
  tc.chi_max = o.chi;
  tc.sweeps = o.sweeps;
  tc.cutoff = o.cutoff;
  std::vector<double> trace{nll(m, ts)};
  const auto t = train(m, ts, tc);
  trace.insert(trace.end(), t.begin(), t.end());
  io::save_model(o.out, m);
  run.output(o.out);
  if (!o.loss.empty()) {
    std::string csv = "sweep,nll\n";
    for (std::size_t s = 0; s < trace.size(); ++s) csv += std::to_string(s) + "," + io::format_double(trace[s]) + "\n";
    io::write_text(o.loss, csv);
    run.output(o.loss);
  }
  text = "items " + std::to_string(ts.size()) + ", entropy " + io::format_double(ts.entropy()) + "\n";
  for (std::size_t s = 0; s < trace.size(); ++s) text += "sweep " + std::to_string(s) + " nll " + io::format_double(trace[s]) + "\n";
  text += "bond dims " + join(m.bond_dims()) + "\nwrote " + o.out + "\n";
  return json{{"items", ts.size()},        {"entropy", ts.entropy()}, {"nll", trace},
              {"bond_dims", m.bond_dims()}, {"model", o.out}};
}

struct SampleOpts {
  std::string model, out, constraints;
  std::size_t num = 1000;
  std::uint64_t seed = 0;
};

json cmd_sample(const SampleOpts& o, unsigned threads, Run& run, std::string& text) {
  const SymMPS m = io::load_model(run.input(o.model));
  run.seed = o.seed;
  const auto batch = sample_batch(m, o.num, o.seed, threads);
  io::write_text(o.out, io::format_bitstrings(batch.bitstrings));
  run.output(o.out);
  json j{{"samples", batch.size()}, {"distinct", batch.counts.size()}, {"seed", o.seed}, {"out", o.out}};
  text = "drew " + std::to_string(batch.size()) + " samples (" + std::to_string(batch.counts.size()) + " distinct)\n";
  if (!o.constraints.empty()) {
    const auto cs = io::load_constraints(run.input(o.constraints));
    std::size_t ok = 0;
    for (const auto& x : batch.bitstrings) ok += cs.satisfied_by(x) ? 1 : 0;
    const double v = batch.size() ? static_cast<double>(ok) / static_cast<double>(batch.size()) : 1.0;
    j["validity"] = v;
    text += "validity " + io::format_double(v) + "\n";
  }
  text += "wrote " + o.out + "\n";
  return j;
}

CostFunction external_cost(const std::string& command) {
  return [command](const std::vector<Bitstring>& xs) {
    const char* tmpdir = std::getenv("TMPDIR");
    std::string tmpl = std::string(tmpdir && *tmpdir ? tmpdir : "/tmp") + "/stnbm-costXXXXXX";
    const int fd = mkstemp(tmpl.data());
    if (fd < 0) throw std::runtime_error("cannot create a temporary file for the cost command");
    close(fd);
    struct Cleanup {
      std::string p;
      ~Cleanup() { std::remove(p.c_str()); }
    } cleanup{tmpl};
    io::write_text(tmpl, io::format_bitstrings(xs));
    const std::string full = command + " < '" + tmpl + "'";
    FILE* p = popen(full.c_str(), "r");
    if (!p) throw std::runtime_error("cannot start cost command");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    if (status != 0) throw NumericalError("cost command exited with status " + std::to_string(status));
    std::vector<double> costs;
    std::size_t pos = 0;
    while (pos < out.size()) {
      std::size_t end = out.find('\n', pos);
      if (end == std::string::npos) end = out.size();
      std::string line = out.substr(pos, end - pos);
      pos = end + 1;
      const auto a = line.find_first_not_of(" \t\r");
      if (a == std::string::npos) continue;
      line = line.substr(a, line.find_last_not_of(" \t\r") - a + 1);
      double v = 0.0;
      auto [q, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || q != line.data() + line.size())
        throw NumericalError("cost command printed a non-numeric line: '" + line + "'");
      costs.push_back(v);
    }
    if (costs.size() != xs.size())
      throw NumericalError("cost command returned " + std::to_string(costs.size()) + " values for " +
                           std::to_string(xs.size()) + " bitstrings");
    return costs;
  };
}

struct GeoOpts {
  std::string constraints, cost = "negsep", cost_command, seeds, out, utility_csv;
  GeoConfig cfg;
  std::optional<double> eps_abs;
};

json cmd_geo(GeoOpts o, unsigned threads, Run& run, std::string& text) {
  const auto cs = io::load_constraints(run.input(o.constraints));
  CostFunction cost;
  if (o.cost == "negsep") {
    cost = pointwise(negative_separation_cost);
  } else if (o.cost == "zero") {
    cost = pointwise([](const Bitstring&) { return 0.0; });
  } else if (o.cost == "external") {
    detail::require(!o.cost_command.empty(), "--cost external needs --cost-command");
    cost = external_cost(o.cost_command);
  } else {
    detail::fail("unknown cost '" + o.cost + "' (expected negsep, zero or external)");
  }
  o.cfg.threads = threads;
  o.cfg.eps_abs = o.eps_abs;
  run.seed = o.cfg.seed;
  GeoStart start;
  if (!o.seeds.empty())
    start.seeds = SeedSet(cs, io::load_bitstrings(run.input(o.seeds)).bitstrings);
  else
    start.valid_space = build_valid_space_mps(cs);
  const auto res = geo_run(cs, cost, o.cfg, start);

  json iters = json::array();
  for (const auto& it : res.iterations)
    iters.push_back({{"t", it.t},
                     {"embedded", it.embedded},
                     {"temperature", std::isfinite(it.temperature) ? json(it.temperature) : json(nullptr)},
                     {"nll", std::isfinite(it.nll) ? json(it.nll) : json(nullptr)},
                     {"utility", it.utility},
                     {"batch_min", it.batch_min},
                     {"best_cost", it.best_cost},
                     {"validity", it.validity},
                     {"bond_dims", it.bond_dims}});
  const bool found = std::isfinite(res.best_cost);
  json report{{"N", cs.num_sites()},
              {"m", cs.num_constraints()},
              {"cost", o.cost},
              {"best", found ? json(res.best.str()) : json(nullptr)},
              {"best_cost", found ? json(res.best_cost) : json(nullptr)},
              {"converged", res.converged},
              {"evaluations", res.evaluations},
              {"utility_trace", res.utility_trace()},
              {"iterations", iters}};
  if (!o.out.empty()) {
    io::write_text(o.out, report.dump(2) + "\n");
    run.output(o.out);
  }
  if (!o.utility_csv.empty()) {
    std::string csv = "t,utility,best_cost\n";
    for (const auto& it : res.iterations)
      csv += std::to_string(it.t) + "," + io::format_double(it.utility) + "," + io::format_double(it.best_cost) + "\n";
    io::write_text(o.utility_csv, csv);
    run.output(o.utility_csv);
  }
  for (const auto& it : res.iterations)
    text += "t=" + std::to_string(it.t) + (it.t == 0 ? " uniform " : it.embedded ? " embed   " : " rebuild ") +
            "utility " + io::format_double(it.utility) + " best " + io::format_double(it.best_cost) + "\n";
  text += std::string(res.converged ? "converged" : "iteration limit reached") + ", best " +
          (found ? res.best.str() + " cost " + io::format_double(res.best_cost) : std::string("none")) + "\n";
  return report;
}

struct OracleOpts {
  std::string constraints, out;
  bool count_only = false, as_printed = false;
  std::optional<std::int64_t> a;
  std::int64_t kappa = 0, n = 0;
  std::size_t budget = 100000, max_seeds = static_cast<std::size_t>(-1);
  std::uint64_t seed = 0;
};

std::pair<std::vector<std::int64_t>, std::int64_t> single_row(const ConstraintSystem& cs) {
  detail::require(cs.num_constraints() == 1, "this oracle handles a single equality (A must have one row)");
  return {cs.A()[0], cs.b()[0]};
}

json write_solutions(const SolutionSet& s, const OracleOpts& o, Run& run, std::string& text) {
  if (!o.out.empty()) {
    io::write_text(o.out, io::format_bitstrings(s.bitstrings));
    run.output(o.out);
  }
  text = "solutions " + std::to_string(s.size()) + "\n";
  return json{{"count", std::to_string(s.size())}};
}

json cmd_oracle(const std::string& which, const OracleOpts& o, Run& run, std::string& text) {
  if (which == "degeneracy") {
    json rows = json::array();
    std::vector<std::int64_t> as;
    if (o.a) {
      as.push_back(*o.a);
    } else {
      for (std::int64_t a = 0; 2 * a < o.n - o.kappa; ++a) as.push_back(a);
      detail::require(!as.empty(), "no admissible a for these kappa and N");
    }
    for (auto a : as) {
      const BigInt c = o.as_printed ? degeneracy_count_as_printed(a, o.kappa, o.n) : degeneracy_count(a, o.kappa, o.n);
      rows.push_back({{"a", a}, {"cost", -o.n + o.kappa + a - 1}, {"count", c.str()}});
      text += "a=" + std::to_string(a) + " cost " + std::to_string(-o.n + o.kappa + a - 1) + " count " + c.str() + "\n";
    }
    const BigInt total = binomial(o.n, o.kappa);
    text += "binomial(N, kappa) = " + total.str() + "\n";
    return json{{"N", o.n}, {"kappa", o.kappa}, {"as_printed", o.as_printed}, {"rows", rows}, {"binomial", total.str()}};
  }
  const auto cs = io::load_constraints(run.input(o.constraints));
  if (which == "enumerate") return write_solutions(enumerate_solutions(cs), o, run, text);
  if (which == "mitm") {
    const auto [a, b] = single_row(cs);
    if (o.count_only) {
      const auto c = count_single_equality_mitm(a, b);
      text = "solutions " + c.str() + "\n";
      return json{{"count", c.str()}};
    }
    return write_solutions(solve_single_equality_mitm(a, b), o, run, text);
  }
  if (which == "dp") {
    const auto [a, b] = single_row(cs);
    const auto r = solve_single_equality_dp(a, b, !o.count_only);
    if (r.solutions) return write_solutions(*r.solutions, o, run, text);
    text = "solutions " + r.count.str() + "\n";
    return json{{"count", r.count.str()}};
  }
  // random-search
  run.seed = o.seed;
  std::mt19937_64 rng(o.seed);
  const auto seeds = random_valid_search(cs, o.budget, rng, o.max_seeds);
  if (!o.out.empty()) {
    io::write_text(o.out, io::format_bitstrings(seeds.bitstrings()));
    run.output(o.out);
  }
  text = "found " + std::to_string(seeds.size()) + " distinct solutions in " + std::to_string(o.budget) + " draws\n";
  return json{{"found", seeds.size()}, {"budget", o.budget}, {"seed", o.seed}};
}

struct EnumerateOpts {
  std::string model, out, constraints;
  std::size_t limit = std::size_t{1} << 22;
};

json cmd_enumerate(const EnumerateOpts& o, Run& run, std::string& text) {
  const SymMPS m = io::load_model(run.input(o.model));
  const auto s = support(m, o.limit);
  if (!o.out.empty()) {
    io::write_text(o.out, io::format_bitstrings(s));
    run.output(o.out);
  }
  json j{{"support", s.size()}, {"bond_dims", m.bond_dims()}};
  text = "support " + std::to_string(s.size()) + "\n";
  if (!o.constraints.empty()) {
    const auto cs = io::load_constraints(run.input(o.constraints));
    std::size_t bad = 0;
    for (const auto& x : s) bad += cs.satisfied_by(x) ? 0 : 1;
    j["invalid"] = bad;
    text += "invalid " + std::to_string(bad) + "\n";
  }
  return j;
}

int run_cli(std::vector<std::string> args, std::ostream& out);

/// Re-runs the command recorded in a manifest and compares output digests.
json cmd_replay(const std::string& path, std::string& text, bool& reproduced) {
  json m;
  try {
    m = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    detail::fail("malformed manifest " + path + ": " + e.what());
  }
  if (!m.contains("argv") || !m.contains("inputs") || !m.contains("outputs")) detail::fail("manifest lacks argv/inputs/outputs");
  for (const auto& [p, d] : m.at("inputs").items())
    if (file_digest(p) != d.get<std::string>()) detail::fail("input " + p + " changed since the recorded run");
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  std::vector<std::string> clean;
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--manifest") {
      ++k;
      continue;
    }
    if (argv[k].rfind("--manifest=", 0) == 0) continue;
    clean.push_back(argv[k]);
  }
  // Restore the recorded environment fallbacks and nothing else.
  for (const auto& [k, v] : stnbm_environment()) unsetenv(k.c_str());
  unsetenv((std::string(kEnvPrefix) + "MANIFEST").c_str());
  if (m.contains("environment"))
    for (const auto& [k, v] : m.at("environment").items()) setenv(k.c_str(), v.get<std::string>().c_str(), 1);
  std::ostringstream inner;  // the replayed run's own summary is not part of ours
  const int rc = run_cli(clean, inner);
  json res{{"exit_code", rc}, {"outputs", json::object()}};
  reproduced = rc == 0;
  for (const auto& [p, d] : m.at("outputs").items()) {
    const bool same = std::filesystem::exists(p) && file_digest(p) == d.get<std::string>();
    res["outputs"][p] = same;
    reproduced = reproduced && same;
    text += (same ? "match    " : "MISMATCH ") + p + "\n";
  }
  res["reproduced"] = reproduced;
  text += reproduced ? "reproduced\n" : "not reproduced\n";
  return res;
}

int run_cli(std::vector<std::string> args, std::ostream& out) {
  CLI::App app{"Symmetric MPS Born machines for equality-constrained binary problems", "stnbm"};
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;
  EmbedOpts eo;
  TrainOpts to;
  SampleOpts so;
  GeoOpts go;
  OracleOpts oo;
  EnumerateOpts no;
  std::string replay_path;

  auto* embed_cmd = app.add_subcommand("embed", "Build a symmetric MPS from constraints and seeds");
  embed_cmd->add_option("--constraints", eo.constraints, "Constraint system JSON")->required();
  embed_cmd->add_option("--seeds", eo.seeds, "Seed bitstrings, one per line")->required();
  embed_cmd->add_option("--method", eo.method, "Embedding method")->check(CLI::IsMember({1, 2}))->capture_default_str();
  embed_cmd->add_option("--out", eo.out, "Model file to write")->required();
  add_common(embed_cmd, common);

  auto* train_cmd = app.add_subcommand("train", "Train a model on weighted bitstrings");
  train_cmd->add_option("--model", to.model, "Input model file")->required();
  train_cmd->add_option("--data", to.data, "Training bitstrings, optionally followed by a cost")->required();
  train_cmd->add_option("--temperature", to.temperature, "Softmax temperature for cost weights");
  train_cmd->add_option("--sweeps", to.sweeps, "Number of sweeps")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--chi", to.chi, "Maximum bond dimension")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--alpha", to.alpha, "Learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--cutoff", to.cutoff, "Relative singular value cutoff")->capture_default_str();
  train_cmd->add_option("--out", to.out, "Model file to write")->required();
  train_cmd->add_option("--loss", to.loss, "Loss CSV (sweep,nll)");
  add_common(train_cmd, common);

  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a model");
  sample_cmd->add_option("--model", so.model, "Model file")->required();
  sample_cmd->add_option("--num", so.num, "Number of samples")->capture_default_str();
  sample_cmd->add_option("--seed", so.seed, "RNG seed")->capture_default_str();
  sample_cmd->add_option("--out", so.out, "Sample file to write")->required();
  sample_cmd->add_option("--constraints", so.constraints, "Report validity against this system");
  add_common(sample_cmd, common);

  auto* geo_cmd = app.add_subcommand("geo", "Run the constrained generator-enhanced optimization loop");
  geo_cmd->add_option("--constraints", go.constraints, "Constraint system JSON")->required();
  geo_cmd->add_option("--cost", go.cost, "negsep, zero or external")->capture_default_str();
  geo_cmd->add_option("--cost-command", go.cost_command, "Shell command: bitstrings on stdin, costs on stdout");
  geo_cmd->add_option("--seeds", go.seeds, "Start from these seeds instead of the exact valid space");
  geo_cmd->add_option("--queries", go.cfg.queries, "Samples per iteration")->capture_default_str();
  geo_cmd->add_option("--elites", go.cfg.elite_count, "Elite count")->capture_default_str();
  geo_cmd->add_option("--chi", go.cfg.chi_max, "Maximum bond dimension")->capture_default_str();
  geo_cmd->add_option("--alpha", go.cfg.learning_rate, "Learning rate")->capture_default_str();
  geo_cmd->add_option("--sweeps", go.cfg.sweeps_per_iter, "Sweeps per iteration")->capture_default_str();
  geo_cmd->add_option("--max-iters", go.cfg.max_iters, "Outer iterations")->capture_default_str();
  geo_cmd->add_option("--eps-rel", go.cfg.eps_rel, "Relative stopping tolerance on utility")->capture_default_str();
  geo_cmd->add_option("--eps-abs", go.eps_abs, "Absolute stopping tolerance on utility");
  geo_cmd->add_flag("--merge-training", go.cfg.merge_training, "Pick elites from batch plus previous training set");
  geo_cmd->add_flag("--vanilla", go.cfg.vanilla, "Use a dense model instead of the symmetric one");
  geo_cmd->add_option("--utility-fraction", go.cfg.utility_fraction, "Fraction averaged by the utility")
      ->capture_default_str();
  geo_cmd->add_option("--seed", go.cfg.seed, "RNG seed")->capture_default_str();
  geo_cmd->add_option("--out", go.out, "Report JSON");
  geo_cmd->add_option("--utility-csv", go.utility_csv, "Utility trace CSV");
  add_common(geo_cmd, common);

  auto* oracle_cmd = app.add_subcommand("oracle", "Exact and heuristic reference solvers");
  oracle_cmd->require_subcommand(1);
  std::map<std::string, CLI::App*> oracle_subs;
  for (const char* name : {"enumerate", "mitm", "dp", "random-search"}) {
    auto* s = oracle_cmd->add_subcommand(name);
    s->add_option("--constraints", oo.constraints, "Constraint system JSON")->required();
    s->add_option("--out", oo.out, "Write solutions (or found seeds) here");
    add_common(s, common);
    oracle_subs[name] = s;
  }
  oracle_subs["enumerate"]->description("All solutions by exhaustive Gray-code enumeration (N <= 26)");
  oracle_subs["mitm"]->description("Single-equality solutions by meet in the middle (N <= 40)");
  oracle_subs["dp"]->description("Single-equality count by dynamic programming (non-negative data)");
  oracle_subs["random-search"]->description("Uniform random search for valid bitstrings");
  for (const char* name : {"mitm", "dp"})
    oracle_subs[name]->add_flag("--count-only", oo.count_only, "Only report the count");
  oracle_subs["random-search"]->add_option("--budget", oo.budget, "Random draws")->capture_default_str();
  oracle_subs["random-search"]->add_option("--seed", oo.seed, "RNG seed")->capture_default_str();
  oracle_subs["random-search"]->add_option("--max-seeds", oo.max_seeds, "Stop after this many distinct solutions");
  auto* deg = oracle_cmd->add_subcommand("degeneracy", "Closed-form degeneracy counts for the separation cost");
  deg->add_option("--a", oo.a, "Extra zeros a (all admissible values if omitted)");
  deg->add_option("--kappa", oo.kappa, "Number of ones")->required();
  deg->add_option("--n", oo.n, "Number of sites")->required();
  deg->add_flag("--as-printed", oo.as_printed, "Use the uncorrected a = 0 branch");
  add_common(deg, common);
  oracle_subs["degeneracy"] = deg;

  auto* enum_cmd = app.add_subcommand("enumerate", "List the support of a model");
  enum_cmd->add_option("--model", no.model, "Model file")->required();
  enum_cmd->add_option("--limit", no.limit, "Maximum support size")->capture_default_str();
  enum_cmd->add_option("--out", no.out, "Write the support here");
  enum_cmd->add_option("--constraints", no.constraints, "Count support strings violating this system");
  add_common(enum_cmd, common);

  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  replay_cmd->add_option("--from", replay_path, "Manifest file")->required();
  replay_cmd->add_flag("--json", common.json, "Print a machine-readable summary");

  add_env_fallbacks(&app);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, std::cerr);
    return rc == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Run run;
  json summary;
  std::string text;
  const CLI::App* selected = nullptr;
  std::string command;
  int rc = 0;
  try {
    if (*embed_cmd) {
      selected = embed_cmd, command = "embed";
      summary = cmd_embed(eo, run, text);
    } else if (*train_cmd) {
      selected = train_cmd, command = "train";
      summary = cmd_train(to, run, text);
    } else if (*sample_cmd) {
      selected = sample_cmd, command = "sample";
      summary = cmd_sample(so, common.threads, run, text);
    } else if (*geo_cmd) {
      selected = geo_cmd, command = "geo";
      summary = cmd_geo(go, common.threads, run, text);
    } else if (*oracle_cmd) {
      for (const auto& [name, s] : oracle_subs)
        if (*s) {
          selected = s, command = "oracle " + name;
          summary = cmd_oracle(name, oo, run, text);
        }
    } else if (*enum_cmd) {
      selected = enum_cmd, command = "enumerate";
      summary = cmd_enumerate(no, run, text);
    } else if (*replay_cmd) {
      bool ok = false;
      summary = cmd_replay(replay_path, text, ok);
      if (common.json)
        out << summary.dump(2) << "\n";
      else
        out << text;
      return ok ? 0 : 3;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json outputs = json::object();
  for (const auto& p : run.outputs) outputs[p] = file_digest(p);
  json manifest{{"command", command},
                {"argv", args},
                {"config", option_snapshot(selected)},
                {"environment", stnbm_environment()},
                {"rng_seed", run.seed ? json(*run.seed) : json(nullptr)},
                {"inputs", run.inputs},
                {"outputs", outputs},
                {"timings", {{"wall_seconds", seconds}}}};
  if (!common.manifest.empty()) io::write_text(common.manifest, manifest.dump(2) + "\n");
  if (common.json) {
    summary["manifest"] = manifest;
    out << summary.dump(2) << "\n";
  } else {
    out << text;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(std::move(args), std::cout);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
