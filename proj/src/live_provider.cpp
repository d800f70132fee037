// Live-backend transport for the semantic provider. No backend is bundled;
// this speaks a generic request/response document contract so deployments can
// point the scanner at their own extraction service.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "biv/semantic_provider.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "biv/text.hpp"

namespace biv {

namespace {

using nlohmann::json;

struct ParsedUrl {
  std::string scheme;
  std::string host_port;  // host[:port], the httplib client address
  std::string path;       // leading slash included
};

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ProviderUnavailableError("malformed endpoint URL: " + url);
  }
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "http" && out.scheme != "https") {
    throw ProviderUnavailableError("unsupported endpoint scheme: " + out.scheme);
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  out.host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (out.host_port.empty()) {
    throw ProviderUnavailableError("malformed endpoint URL: " + url);
  }
  return out;
}

json post_json(const LiveEndpointConfig& config, const json& body) {
  const ParsedUrl url = parse_url(config.url);
  const std::string origin = url.scheme + "://" + url.host_port;
  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (const char* token = std::getenv(config.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderUnavailableError("transport failure contacting " + config.url);
  }
  if (res->status != 200) {
    throw ProviderUnavailableError("endpoint returned status " + std::to_string(res->status));
  }
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw ProviderUnavailableError("endpoint returned non-JSON body");
  }
  return parsed;
}

}  // namespace

LiveProvider::LiveProvider(LiveEndpointConfig config) : config_(std::move(config)) {}

std::string LiveProvider::template_hash(const std::string& name) const {
  if (config_.template_dir.empty()) return {};
  const std::filesystem::path file =
      std::filesystem::path(config_.template_dir) / (name + ".txt");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ProviderUnavailableError("missing prompt template " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string hash = sha256_hex(buf.str());

  const std::filesystem::path manifest =
      std::filesystem::path(config_.template_dir) / "manifest.json";
  std::ifstream min(manifest);
  if (min) {
    json doc = json::parse(min, nullptr, false);
    if (!doc.is_discarded() && doc.contains(name) && doc[name].get<std::string>() != hash) {
      throw ProviderUnavailableError("prompt template hash mismatch for " + name);
    }
  }
  return hash;
}

std::vector<SemanticClaim> LiveProvider::extract_claims(const std::vector<SourceDocument>& docs,
                                                        ClaimKind kind) {
  const std::string tmpl =
      kind == ClaimKind::Declared ? "extract-declared" : "extract-actual-instruction";
  json body;
  body["template"] = {{"name", tmpl}, {"sha256", template_hash(tmpl)}};
  body["kind"] = std::string(format_claim_kind(kind));
  body["documents"] = json::array();
  for (const auto& doc : docs) {
    body["documents"].push_back({{"path", doc.path}, {"text", doc.text}});
  }
  const json reply = post_json(config_, body);
  std::vector<SemanticClaim> claims;
  if (!reply.contains("claims") || !reply["claims"].is_array()) return claims;
  for (const auto& item : reply["claims"]) {
    SemanticClaim c;
    try {
      c.capability = parse_capability(item.at("capability").get<std::string>());
    } catch (const UnknownCapabilityError&) {
      continue;  // capabilities outside the taxonomy are not extracted
    }
    c.quoted_span = item.value("quote", "");
    c.source_doc = item.value("doc", "");
    c.claim_kind = kind;
    c.raw_confidence = item.value("confidence", 0.5);
    claims.push_back(std::move(c));
  }
  return claims;
}

std::optional<JudgeFixture> LiveProvider::judge_package(const SkillPackage& pkg) {
  json body;
  body["template"] = {{"name", "judge"}, {"sha256", template_hash("judge")}};
  body["package_hash"] = package_content_hash(pkg.root);
  body["documents"] = json::array();
  for (const auto* bucket : {&pkg.metadata_docs, &pkg.code_files, &pkg.instruction_docs}) {
    for (const auto& doc : *bucket) {
      body["documents"].push_back({{"path", doc.path}, {"text", doc.text}});
    }
  }
  const json reply = post_json(config_, body);
  if (!reply.contains("judge")) return std::nullopt;
  JudgeFixture j;
  j.label = reply["judge"].value("label", "Safe");
  j.confidence = reply["judge"].value("confidence", 0.5);
  j.rationale = reply["judge"].value("rationale", "");
  return j;
}

}  // namespace biv
