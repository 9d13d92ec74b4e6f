// Copyright 2026 The RR-Unlearn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rr/cli/config.h"

#include <cmath>
#include <cstdlib>
#include <set>

#include "rr/error.h"
#include "rr/files.h"

namespace rr::cli {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& reason) {
  throw Error(ErrorCode::kConfigError, path + ": " + reason);
}

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(path_.empty() ? "config" : path_, "expected an object");
  }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string Path(const std::string& key) const { return Join(path_, key); }

  void Int(const std::string& key, int& out, long long lo, long long hi) {
    long long v = out;
    Integer(key, v, lo, hi);
    out = static_cast<int>(v);
  }

  void Size(const std::string& key, std::size_t& out, long long lo) {
    long long v = static_cast<long long>(out);
    Integer(key, v, lo, (1LL << 40));
    out = static_cast<std::size_t>(v);
  }

  void Integer(const std::string& key, long long& out, long long lo, long long hi) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number_integer()) Fail(Path(key), "expected an integer");
    const long long x = v->get<long long>();
    if (x < lo || x > hi) Fail(Path(key), fmt_range(lo, hi));
    out = x;
  }

  void Seed(const std::string& key, std::uint64_t& out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number_integer()) Fail(Path(key), "expected an integer");
    if (!v->is_number_unsigned() && v->get<long long>() < 0) {
      Fail(Path(key), "must be non-negative");
    }
    out = v->get<std::uint64_t>();
  }

  void Double(const std::string& key, double& out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number()) Fail(Path(key), "expected a number");
    out = v->get<double>();
    if (!std::isfinite(out)) Fail(Path(key), "must be finite");
  }

  void Bool(const std::string& key, bool& out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_boolean()) Fail(Path(key), "expected true or false");
    out = v->get<bool>();
  }

  void String(const std::string& key, std::string& out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_string()) Fail(Path(key), "expected a string");
    out = v->get<std::string>();
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorCode::kConfigError, "unknown key '" + Path(it.key()) + "'");
      }
    }
  }

 private:
  static std::string fmt_range(long long lo, long long hi) {
    return "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Capability CapabilityFromName(const std::string& name, const std::string& path) {
  for (Capability c : kAllCapabilities) {
    if (CapabilityName(c) == name) return c;
  }
  throw Error(ErrorCode::kConfigError, "unknown key '" + path + "'");
}

BackendEntry ParseBackend(const json& j, const std::string& path) {
  Section s(j, path);
  BackendEntry entry;
  BackendConfig& c = entry.config;
  if (const json* kind = s.Find("kind")) {
    if (!kind->is_string()) Fail(s.Path("kind"), "expected a string");
    try {
      c.kind = ParseBackendKind(kind->get<std::string>());
    } catch (const Error& e) {
      Fail(s.Path("kind"), e.what());
    }
  }
  s.String("endpoint", c.endpoint);
  s.Int("timeout_ms", c.timeout_ms, 1, 86'400'000);
  s.Int("max_in_flight", c.max_in_flight, 1, 1024);
  if (s.Find("seed")) {
    std::uint64_t seed = 0;
    s.Seed("seed", seed);
    c.seed = seed;
  }
  s.String("token_env", entry.token_env);
  s.Int("retries", c.retries, 0, 100);
  s.Int("backoff_ms", c.backoff_ms, 0, 600'000);
  s.Finish();
  return entry;
}

void ParseAlg1(const json& j, Alg1Section& a) {
  Section s(j, "alg1");
  DatagenConfig& d = a.datagen;
  s.Int("m", d.m, 1, 1'000'000);
  s.Int("n", d.n, 1, 1'000'000);
  s.Double("alpha", d.alpha);
  s.Size("pool_size", d.pool_size, 1);
  s.Size("d_p", d.d_p, 1);
  s.Size("k_warm", d.k_warm, 0);
  s.Size("batch_size", a.batch_size, 1);
  s.Size("vendi_cap", d.vendi_cap, 0);
  s.Double("local_sigma", d.local_sigma);
  s.Double("tau_floor", d.tau_floor);
  s.Double("nu", d.nu);
  s.Double("lambda_reg", d.lambda_reg);
  s.String("contexts", a.contexts);
  if (const json* dec = s.Find("decoding")) {
    Section ds(*dec, "alg1.decoding");
    ds.Int("max_tokens", d.decoding.max_tokens, 1, 1'000'000);
    ds.Double("temperature", d.decoding.temperature);
    ds.Double("top_p", d.decoding.top_p);
    ds.Int("samples", d.decoding.samples, 1, 1'000'000);
    ds.Finish();
  }
  s.Finish();
}

void ParseUnlearn(const json& j, UnlearnSection& u) {
  Section s(j, "unlearn");
  if (const json* grid = s.Find("grid")) {
    if (!grid->is_array()) Fail(s.Path("grid"), "expected an array of numbers");
    u.rule.grid.clear();
    for (const json& g : *grid) {
      if (!g.is_number()) Fail(s.Path("grid"), "expected an array of numbers");
      u.rule.grid.push_back(g.get<double>());
    }
  }
  s.Double("forget_ratio", u.rule.forget_ratio);
  s.Double("utility_floor", u.rule.utility_floor);
  s.Int("T", u.iterations, 1, 1000);
  if (const json* t = s.Find("targets")) {
    Section ts(*t, "unlearn.targets");
    TradeoffPoint p{0.0, 0.0};
    if (!ts.Find("s") || !ts.Find("u")) Fail("unlearn.targets", "needs both s and u");
    ts.Double("s", p.s);
    ts.Double("u", p.u);
    ts.Finish();
    u.targets = p;
  }
  long long rank = static_cast<long long>(u.hyper.rank);
  s.Integer("rank", rank, 1, 4096);
  u.hyper.rank = static_cast<std::size_t>(rank);
  s.Int("steps", u.hyper.steps, 0, 10'000'000);
  s.Double("learning_rate", u.hyper.learning_rate);
  if (u.hyper.learning_rate <= 0.0) Fail("unlearn.learning_rate", "must be positive");
  s.Bool("override_infeasible", u.override_infeasible);
  s.String("base_ref", u.base_ref);
  s.String("forget_dataset", u.forget_dataset);
  s.String("retain_dataset", u.retain_dataset);
  s.Finish();
  try {
    ValidateRule(u.rule);
  } catch (const Error& e) {
    Fail("unlearn", e.what());
  }
}

void ApplyEnvOverrides(RunConfig& config) {
  for (Capability c : kAllCapabilities) {
    const char* url = std::getenv(std::string(EndpointEnvVar(c)).c_str());
    if (url == nullptr || *url == '\0') continue;
    BackendConfig& b = config.backends[c].config;
    b.kind = BackendKind::kHttp;
    b.endpoint = url;
  }
}

void Finalize(RunConfig& config, bool apply_env) {
  for (Capability c : kAllCapabilities) {
    auto [it, inserted] = config.backends.try_emplace(c);
    if (inserted) it->second.config.kind = BackendKind::kToy;
  }
  if (apply_env) ApplyEnvOverrides(config);
  for (auto& [cap, entry] : config.backends) {
    BackendConfig& b = entry.config;
    const std::string path = "backends." + std::string(CapabilityName(cap));
    if (b.kind != BackendKind::kHttp && !b.seed) b.seed = config.seed;
    if (!entry.token_env.empty()) {
      const char* token = std::getenv(entry.token_env.c_str());
      if (token == nullptr) Fail(path + ".token_env", "variable " + entry.token_env + " is not set");
      b.bearer_token = token;
    }
    try {
      ValidateBackendConfig(b);
    } catch (const Error& e) {
      Fail(path, e.what());
    }
  }

  config.alg1.datagen.seed = config.seed;
  ValidateDatagenConfig(config.alg1.datagen);

  const auto must_exist = [&](const std::string& key, const std::string& value) {
    if (value.empty() || value.rfind("toy:", 0) == 0) return;
    if (!std::filesystem::exists(config.Resolve(value))) {
      Fail(key, "no such file '" + config.Resolve(value).string() + "'");
    }
  };
  must_exist("alg1.contexts", config.alg1.contexts);
  must_exist("adapters.signature", config.signature);
  must_exist("unlearn.forget_dataset", config.unlearn.forget_dataset);
  must_exist("unlearn.retain_dataset", config.unlearn.retain_dataset);

  const bool remote_model = config.backends.at(Capability::kTrain).config.kind == BackendKind::kHttp ||
                            config.backends.at(Capability::kEvaluate).config.kind == BackendKind::kHttp;
  if (remote_model && config.signature.empty()) {
    Fail("adapters.signature", "required when train or evaluate is an http backend");
  }
}

}  // namespace

std::filesystem::path RunConfig::Resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

RunConfig ParseConfigJson(const json& j, const std::filesystem::path& base_dir, bool apply_env) {
  RunConfig config;
  config.base_dir = base_dir;
  Section s(j, "");
  s.Seed("seed", config.seed);
  std::string output_dir;
  s.String("output_dir", output_dir);
  if (!output_dir.empty()) config.output_dir = output_dir;
  if (const json* b = s.Find("backends")) {
    if (!b->is_object()) Fail("backends", "expected an object");
    for (auto it = b->begin(); it != b->end(); ++it) {
      const std::string path = "backends." + it.key();
      config.backends[CapabilityFromName(it.key(), path)] = ParseBackend(it.value(), path);
    }
  }
  if (const json* a = s.Find("alg1")) ParseAlg1(*a, config.alg1);
  if (const json* u = s.Find("unlearn")) ParseUnlearn(*u, config.unlearn);
  if (const json* a = s.Find("adapters")) {
    Section as(*a, "adapters");
    as.String("signature", config.signature);
    as.Finish();
  }
  if (const json* sub = s.Find("subspace")) {
    Section ss(*sub, "subspace");
    ss.Size("k", config.subspace.k, 1);
    ss.Bool("normalized", config.subspace.normalized);
    ss.Finish();
  }
  s.Finish();
  Finalize(config, apply_env);
  return config;
}

RunConfig ParseConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return ParseConfigJson(j, dir);
}

RunConfig DefaultConfig(std::uint64_t seed) {
  return ParseConfigJson(json{{"seed", seed}});
}

nlohmann::ordered_json ConfigSnapshot(const RunConfig& config) {
  using oj = nlohmann::ordered_json;
  oj out;
  out["seed"] = config.seed;
  oj backends = oj::object();
  for (Capability c : kAllCapabilities) {
    const BackendEntry& e = config.backends.at(c);
    const BackendConfig& b = e.config;
    oj o;
    o["kind"] = BackendKindName(b.kind);
    if (b.kind == BackendKind::kHttp) {
      o["endpoint"] = b.endpoint;
      o["timeout_ms"] = b.timeout_ms;
      o["max_in_flight"] = b.max_in_flight;
      o["retries"] = b.retries;
      o["backoff_ms"] = b.backoff_ms;
      if (!e.token_env.empty()) o["token_env"] = e.token_env;
    } else {
      o["seed"] = *b.seed;
    }
    backends[std::string(CapabilityName(c))] = std::move(o);
  }
  out["backends"] = std::move(backends);

  const DatagenConfig& d = config.alg1.datagen;
  oj alg1;
  alg1["m"] = d.m;
  alg1["n"] = d.n;
  alg1["alpha"] = d.alpha;
  alg1["pool_size"] = d.pool_size;
  alg1["d_p"] = d.d_p;
  alg1["k_warm"] = d.k_warm;
  alg1["batch_size"] = config.alg1.batch_size;
  alg1["vendi_cap"] = d.vendi_cap;
  alg1["local_sigma"] = d.local_sigma;
  alg1["tau_floor"] = d.tau_floor;
  alg1["nu"] = d.nu;
  alg1["lambda_reg"] = d.lambda_reg;
  alg1["decoding"] = {{"max_tokens", d.decoding.max_tokens},
                      {"temperature", d.decoding.temperature},
                      {"top_p", d.decoding.top_p},
                      {"samples", d.decoding.samples}};
  if (!config.alg1.contexts.empty()) alg1["contexts"] = config.alg1.contexts;
  out["alg1"] = std::move(alg1);

  const UnlearnSection& u = config.unlearn;
  oj un;
  un["grid"] = u.rule.grid;
  un["forget_ratio"] = u.rule.forget_ratio;
  un["utility_floor"] = u.rule.utility_floor;
  un["T"] = u.iterations;
  if (u.targets) un["targets"] = {{"s", u.targets->s}, {"u", u.targets->u}};
  un["rank"] = u.hyper.rank;
  un["steps"] = u.hyper.steps;
  un["learning_rate"] = u.hyper.learning_rate;
  un["override_infeasible"] = u.override_infeasible;
  un["base_ref"] = u.base_ref;
  if (!u.forget_dataset.empty()) un["forget_dataset"] = u.forget_dataset;
  un["retain_dataset"] = u.retain_dataset;
  out["unlearn"] = std::move(un);

  if (!config.signature.empty()) out["adapters"] = {{"signature", config.signature}};
  out["subspace"] = {{"k", config.subspace.k}, {"normalized", config.subspace.normalized}};
  return out;
}

}  // namespace rr::cli
