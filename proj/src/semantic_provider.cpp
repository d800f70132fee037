#include "biv/semantic_provider.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "biv/patterns.hpp"
#include "biv/text.hpp"

namespace biv {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<SourceDocument> sorted_docs(std::vector<SourceDocument> docs) {
  std::sort(docs.begin(), docs.end(), [](const SourceDocument& a, const SourceDocument& b) {
    return std::tie(a.path, a.start_line) < std::tie(b.path, b.start_line);
  });
  return docs;
}

// True when the batch's capability multiset reproduces the full taxonomy or
// one whole category verbatim.
bool is_taxonomy_echo(const std::vector<SemanticClaim>& claims) {
  if (claims.empty()) return false;
  std::vector<CapabilityId> batch;
  batch.reserve(claims.size());
  for (const auto& c : claims) batch.push_back(c.capability);
  std::sort(batch.begin(), batch.end());

  const auto all = all_capabilities();
  std::vector<CapabilityId> full(all.begin(), all.end());
  std::sort(full.begin(), full.end());
  if (batch == full) return true;

  for (std::size_t cat = 0; cat < kCategoryCount; ++cat) {
    std::vector<CapabilityId> members;
    for (CapabilityId cap : all) {
      if (category_of(cap) == static_cast<CapabilityCategory>(cat)) members.push_back(cap);
    }
    std::sort(members.begin(), members.end());
    if (batch == members) return true;
  }
  return false;
}

bool path_matches(const std::string& doc_path, const std::string& claimed) {
  if (doc_path == claimed) return true;
  if (doc_path.size() > claimed.size()) {
    return doc_path.size() - claimed.size() >= 1 &&
           doc_path.compare(doc_path.size() - claimed.size(), claimed.size(), claimed) == 0 &&
           doc_path[doc_path.size() - claimed.size() - 1] == '/';
  }
  if (claimed.size() > doc_path.size()) {
    return claimed.compare(claimed.size() - doc_path.size(), doc_path.size(), doc_path) == 0 &&
           claimed[claimed.size() - doc_path.size() - 1] == '/';
  }
  return false;
}

SemanticClaim claim_from_json(const json& j) {
  SemanticClaim c;
  c.capability = parse_capability(j.at("capability").get<std::string>());
  c.quoted_span = j.at("quote").get<std::string>();
  c.source_doc = j.value("doc", "");
  c.claim_kind = parse_claim_kind(j.value("kind", "declared"));
  c.raw_confidence = j.value("confidence", 0.5);
  return c;
}

ordered_json claim_to_json(const SemanticClaim& c) {
  ordered_json j;
  j["capability"] = std::string(format_capability(c.capability));
  j["quote"] = c.quoted_span;
  j["doc"] = c.source_doc;
  j["kind"] = std::string(format_claim_kind(c.claim_kind));
  j["confidence"] = c.raw_confidence;
  return j;
}

}  // namespace

std::string_view format_claim_kind(ClaimKind k) {
  return k == ClaimKind::Declared ? "declared" : "actual-instruction";
}

ClaimKind parse_claim_kind(std::string_view name) {
  if (name == "declared") return ClaimKind::Declared;
  if (name == "actual-instruction") return ClaimKind::ActualInstruction;
  throw std::runtime_error("unknown claim kind: \"" + std::string(name) + "\"");
}

std::string claim_set_key(const std::vector<SourceDocument>& docs, ClaimKind kind) {
  std::string buffer;
  for (const SourceDocument& doc : sorted_docs(docs)) {
    buffer += normalize_text(doc.text);
    buffer.push_back('\x1e');
  }
  buffer += format_claim_kind(kind);
  return sha256_hex(buffer);
}

ReplayFixture load_fixture_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ProviderUnavailableError("cannot read fixture file " + file.string());
  json doc = json::parse(in);
  ReplayFixture fixture;
  if (doc.contains("claims")) {
    for (auto& [key, arr] : doc["claims"].items()) {
      std::vector<SemanticClaim> claims;
      for (const auto& item : arr) claims.push_back(claim_from_json(item));
      fixture.claims[key] = std::move(claims);
    }
  }
  if (doc.contains("judges")) {
    for (auto& [key, entry] : doc["judges"].items()) {
      JudgeFixture j;
      j.label = entry.at("label").get<std::string>();
      j.confidence = entry.value("confidence", 0.5);
      j.rationale = entry.value("rationale", "");
      fixture.judges[key] = std::move(j);
    }
  }
  return fixture;
}

void save_fixture_file(const std::filesystem::path& file, const ReplayFixture& fixture) {
  ordered_json doc;
  doc["schema"] = "biv-fixtures/v1";
  ordered_json claims = ordered_json::object();
  for (const auto& [key, list] : fixture.claims) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : list) arr.push_back(claim_to_json(c));
    claims[key] = std::move(arr);
  }
  doc["claims"] = std::move(claims);
  ordered_json judges = ordered_json::object();
  for (const auto& [key, j] : fixture.judges) {
    ordered_json entry;
    entry["label"] = j.label;
    entry["confidence"] = j.confidence;
    entry["rationale"] = j.rationale;
    judges[key] = std::move(entry);
  }
  doc["judges"] = std::move(judges);
  std::ofstream out(file);
  out << doc.dump(2) << "\n";
}

ReplayProvider::ReplayProvider(const std::filesystem::path& fixture_file)
    : fixture_(load_fixture_file(fixture_file)) {}

ReplayProvider::ReplayProvider(ReplayFixture fixture) : fixture_(std::move(fixture)) {}

std::vector<SemanticClaim> ReplayProvider::extract_claims(const std::vector<SourceDocument>& docs,
                                                          ClaimKind kind) {
  const std::string key = claim_set_key(docs, kind);
  auto it = fixture_.claims.find(key);
  if (it == fixture_.claims.end()) throw FixtureMissingError(key);
  return it->second;
}

std::optional<JudgeFixture> ReplayProvider::judge_package(const SkillPackage& pkg) {
  auto it = fixture_.judges.find(package_content_hash(pkg.root));
  if (it == fixture_.judges.end()) return std::nullopt;
  return it->second;
}

std::vector<SemanticClaim> apply_filters(const std::vector<SemanticClaim>& claims,
                                         const std::vector<SourceDocument>& sources,
                                         std::vector<std::string>* rejection_log) {
  const auto log = [&](const std::string& msg) {
    if (rejection_log) rejection_log->push_back(msg);
  };

  // Filter 1: taxonomy-echo rejection drops the whole batch.
  if (is_taxonomy_echo(claims)) {
    log("taxonomy-echo: batch capability list reproduces the taxonomy verbatim");
    return {};
  }

  std::vector<SemanticClaim> accepted;
  for (const SemanticClaim& claim : claims) {
    // Filter 2: substring grounding on the normalized token sequence.
    const auto quote_tokens = ground_tokens(claim.quoted_span);
    if (quote_tokens.empty()) {
      log("grounding: empty quote for " + std::string(format_capability(claim.capability)));
      continue;
    }
    const SourceDocument* grounded_in = nullptr;
    for (const SourceDocument& doc : sources) {
      if (!claim.source_doc.empty() && !path_matches(doc.path, claim.source_doc)) continue;
      if (tokens_contain(ground_tokens(doc.text), quote_tokens)) {
        grounded_in = &doc;
        break;
      }
    }
    if (grounded_in == nullptr) {
      log("grounding: no substring match for \"" + claim.quoted_span + "\" (" +
          std::string(format_capability(claim.capability)) + ")");
      continue;
    }

    // Filter 3: keyword quality for high-risk capabilities.
    if (const auto* lexicon = claim_keyword_lexicon(claim.capability)) {
      std::string_view window = claim.quoted_span;
      const std::size_t offset = find_grounded_span(grounded_in->text, claim.quoted_span);
      if (offset != std::string::npos)
        window = sentence_around(grounded_in->text, offset, offset + claim.quoted_span.size());
      if (!contains_any_keyword(window, *lexicon)) {
        log("keyword-quality: no domain keyword near quote for " +
            std::string(format_capability(claim.capability)));
        continue;
      }
    }
    accepted.push_back(claim);
  }
  return accepted;
}

}  // namespace biv
