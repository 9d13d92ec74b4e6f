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

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <semaphore>
#include <thread>

#include "rr/backends.h"
#include "rr/error.h"
#include "rr/files.h"

namespace rr {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // never ends in '/'
};

Url ParseUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw Error(ErrorCode::kConfigError, "unsupported endpoint '" + url + "' (http:// only)");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Url out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

[[noreturn]] void Malformed(const std::string& what, const std::string& detail) {
  throw Error(ErrorCode::kBackendUnavailable, "malformed reply from " + what + ": " + detail);
}

// Merge plan with absolute adapter paths; the server may not share our
// working directory.
nlohmann::json WirePlan(const WeightState& plan) {
  nlohmann::json j = nlohmann::json::parse(MergePlanToJson(plan).dump());
  for (auto& term : j["terms"]) {
    term["adapter_path"] =
        std::filesystem::absolute(term["adapter_path"].get<std::string>()).string();
  }
  return j;
}

}  // namespace

struct HttpTransport::Impl {
  explicit Impl(BackendConfig c)
      : config(std::move(c)), url(ParseUrl(config.endpoint)), slots(config.max_in_flight) {}

  BackendConfig config;
  Url url;
  mutable std::counting_semaphore<1 << 16> slots;

  // One request with retries. body == nullptr means GET.
  std::string Send(const Url& target, const std::string* body, bool retry) const {
    using namespace std::chrono;
    if (!slots.try_acquire_for(milliseconds(config.timeout_ms))) {
      throw Error(ErrorCode::kTimeout, "no free request slot for " + target.origin);
    }
    struct Release {
      std::counting_semaphore<1 << 16>& s;
      ~Release() { s.release(); }
    } release{slots};

    const int attempts = retry ? 1 + config.retries : 1;
    const std::string where = target.origin + target.path;
    std::string last;
    bool last_was_timeout = false;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(milliseconds(config.backoff_ms << (attempt - 1)));
      }
      httplib::Client client(target.origin);
      const auto timeout = milliseconds(config.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      if (!config.bearer_token.empty()) client.set_bearer_token_auth(config.bearer_token);

      const httplib::Result res =
          body ? client.Post(target.path, *body, "application/json") : client.Get(target.path);
      if (!res) {
        const httplib::Error err = res.error();
        last_was_timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                           err == httplib::Error::ConnectionTimeout;
        last = httplib::to_string(err);
        if (last_was_timeout) continue;
        throw Error(ErrorCode::kBackendUnavailable, where + ": " + last);
      }
      if (res->status >= 200 && res->status < 300) return res->body;
      last_was_timeout = false;
      last = "HTTP " + std::to_string(res->status);
      if (res->status >= 500) continue;
      break;
    }
    throw Error(last_was_timeout ? ErrorCode::kTimeout : ErrorCode::kBackendUnavailable,
                where + ": " + last + " after " + std::to_string(attempts) + " attempt(s)");
  }
};

HttpTransport::HttpTransport(BackendConfig config) {
  if (config.kind != BackendKind::kHttp) {
    throw Error(ErrorCode::kConfigError, "HttpTransport needs an http backend config");
  }
  ValidateBackendConfig(config);
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpTransport::~HttpTransport() = default;

const BackendConfig& HttpTransport::config() const { return impl_->config; }

nlohmann::json HttpTransport::Post(const std::string& path, const nlohmann::json& body,
                                   bool retry) const {
  const Url target{impl_->url.origin, impl_->url.path + path};
  const std::string payload = body.dump();
  const std::string reply = impl_->Send(target, &payload, retry);
  try {
    return nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception& e) {
    Malformed(path, e.what());
  }
}

std::string HttpTransport::Get(const std::string& url) const {
  return impl_->Send(ParseUrl(url), nullptr, true);
}

HttpRenderer::HttpRenderer(std::shared_ptr<const HttpTransport> transport)
    : transport_(std::move(transport)) {}

std::string HttpRenderer::Render(std::span<const double> z) const {
  const nlohmann::json reply =
      transport_->Post("/render", {{"z", std::vector<double>(z.begin(), z.end())}}, true);
  try {
    return reply.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    Malformed("/render", e.what());
  }
}

HttpGenerator::HttpGenerator(std::shared_ptr<const HttpTransport> transport)
    : transport_(std::move(transport)) {}

std::vector<std::string> HttpGenerator::Generate(const std::string& context,
                                                 const std::string& instruction,
                                                 const DecodingParams& params) const {
  ValidateDecodingParams(params);
  const nlohmann::json body = {
      {"context", context},
      {"instruction", instruction},
      {"params",
       {{"max_tokens", params.max_tokens},
        {"temperature", params.temperature},
        {"top_p", params.top_p},
        {"samples", params.samples}}}};
  const nlohmann::json reply = transport_->Post("/generate", body, true);
  std::vector<std::string> texts;
  try {
    texts = reply.at("texts").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    Malformed("/generate", e.what());
  }
  if (texts.size() != static_cast<std::size_t>(params.samples)) {
    Malformed("/generate", "expected " + std::to_string(params.samples) + " texts, got " +
                               std::to_string(texts.size()));
  }
  return texts;
}

HttpEmbedder::HttpEmbedder(std::shared_ptr<const HttpTransport> transport)
    : transport_(std::move(transport)) {}

EmbeddingSet HttpEmbedder::Embed(const std::vector<std::string>& texts) const {
  if (texts.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to embed");
  const nlohmann::json reply = transport_->Post("/embed", {{"texts", texts}}, true);
  std::vector<std::vector<double>> rows;
  try {
    rows = reply.at("embeddings").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    Malformed("/embed", e.what());
  }
  if (rows.size() != texts.size() || rows.front().empty()) {
    Malformed("/embed", "expected one non-empty vector per text");
  }
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) Malformed("/embed", "ragged embeddings");
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(rows[i][j])) Malformed("/embed", "non-finite embedding");
      m(i, j) = rows[i][j];
    }
  }
  return EmbeddingSet::Normalized(std::move(m));
}

HttpRelevance::HttpRelevance(std::shared_ptr<const HttpTransport> transport)
    : transport_(std::move(transport)) {}

std::vector<double> HttpRelevance::Score(const std::vector<std::string>& texts) const {
  const nlohmann::json reply = transport_->Post("/score", {{"texts", texts}}, true);
  std::vector<double> scores;
  try {
    scores = reply.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    Malformed("/score", e.what());
  }
  if (scores.size() != texts.size()) Malformed("/score", "expected one score per text");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) Malformed("/score", "score outside [0, 1]");
  }
  return scores;
}

HttpTrainer::HttpTrainer(std::shared_ptr<const HttpTransport> transport,
                         std::filesystem::path download_dir, ModelSignature signature)
    : transport_(std::move(transport)),
      download_dir_(std::move(download_dir)),
      signature_(std::move(signature)) {}

AdapterDelta HttpTrainer::Train(const WeightState& plan, const std::string& dataset_ref,
                                Objective objective, const TrainHyper& hyper) const {
  nlohmann::json body;
  body["plan"] = WirePlan(plan);
  body["dataset_ref"] = dataset_ref;
  body["objective"] = ObjectiveName(objective);
  body["hyper"] = {{"rank", hyper.rank},
                   {"steps", hyper.steps},
                   {"learning_rate", hyper.learning_rate},
                   {"adapter_name", hyper.adapter_name}};
  const nlohmann::json reply = transport_->Post("/train", body, false);
  std::string url, sha;
  try {
    url = reply.at("adapter_url").get<std::string>();
    sha = reply.at("sha256").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    Malformed("/train", e.what());
  }

  std::filesystem::path dir;
  if (url.rfind("http://", 0) == 0) {
    while (!url.empty() && url.back() == '/') url.pop_back();
    dir = download_dir_ / sha;
    WriteTextFile(dir / "manifest.json", transport_->Get(url + "/manifest.json"));
    WriteTextFile(dir / "tensors.bin", transport_->Get(url + "/tensors.bin"));
  } else if (url.rfind("file://", 0) == 0) {
    dir = url.substr(7);
  } else {
    dir = url;
  }
  AdapterDelta delta = ReadAdapter(dir);
  if (Sha256OfFile(dir / "tensors.bin") != sha) {
    throw Error(ErrorCode::kChecksumMismatch,
                "trainer reported sha256 " + sha + " for " + dir.string());
  }
  Validate(delta, signature_);
  return delta;
}

HttpEvaluator::HttpEvaluator(std::shared_ptr<const HttpTransport> transport)
    : transport_(std::move(transport)) {}

TradeoffPoint HttpEvaluator::Evaluate(const WeightState& plan) const {
  const nlohmann::json reply = transport_->Post("/evaluate", {{"plan", WirePlan(plan)}}, true);
  TradeoffPoint point;
  try {
    point = {reply.at("s").get<double>(), reply.at("u").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    Malformed("/evaluate", e.what());
  }
  if (!std::isfinite(point.s) || !std::isfinite(point.u)) {
    Malformed("/evaluate", "non-finite score");
  }
  return point;
}

}  // namespace rr
