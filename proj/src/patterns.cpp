#include "biv/patterns.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>

#include "biv/text.hpp"

namespace biv {

namespace {

PatternTables builtin_tables() {
  PatternTables t;
  t.secret_env_fragments = {"TOKEN", "KEY", "SECRET", "PASSWORD", "CREDENTIAL"};
  t.secret_path_fragments = {
      ".aws/credentials", ".aws/config", ".ssh/", "id_rsa",    "id_ed25519",
      ".netrc",           ".pgpass",     ".git-credentials",   ".npmrc",
      ".docker/config",   "/etc/passwd", "/etc/shadow",        "keychain",
      ".kube/config",     ".env",        ".gnupg",
  };
  t.startup_path_fragments = {
      ".bashrc",       ".bash_profile", ".zshrc",         ".profile",
      "crontab",       "cron.d",        "cron.daily",     "systemd",
      "launchagents",  "launchdaemons", "rc.local",       "autostart",
      "/etc/init",     "authorized_keys",
  };
  t.directive_phrases = {"always", "never", "do not ask", "silently", "instead of", "override"};
  t.credential_keywords = {"token", "key", "secret", "password", "credential", "auth"};
  t.code_eval_keywords = {"eval", "exec", "compile", "run"};
  t.instruction_keywords = {"always", "never", "ignore", "instead", "silently", "do not"};
  t.ransomware_keywords = {"ransom", "decrypt your", "encrypt your", "payment to unlock",
                           "bitcoin", "files are locked"};
  t.cryptominer_keywords = {"stratum+tcp", "xmrig", "minerd", "coinhive",
                            "hashrate",    "monero", "mining pool", "cryptonight"};
  t.telemetry_keywords = {"telemetry", "analytics", "crash report", "usage statistics",
                          "sentry",    "mixpanel",  "amplitude",    "metrics endpoint"};
  t.recon_keywords = {"uname", "hostnamectl", "whoami", "fingerprint", "sw_vers",
                      "system profile", "/proc/cpuinfo"};
  return t;
}

PatternTables& mutable_tables() {
  static PatternTables tables = builtin_tables();
  return tables;
}

void append_unique(std::vector<std::string>& dst, const std::vector<std::string>& extra) {
  for (const auto& e : extra) {
    if (std::find(dst.begin(), dst.end(), e) == dst.end()) dst.push_back(e);
  }
}

nlohmann::ordered_json to_json(const std::vector<std::string>& v) {
  return nlohmann::ordered_json(v);
}

}  // namespace

const PatternTables& patterns() { return mutable_tables(); }

void extend_patterns(const PatternTables& extra) {
  PatternTables& t = mutable_tables();
  append_unique(t.secret_env_fragments, extra.secret_env_fragments);
  append_unique(t.secret_path_fragments, extra.secret_path_fragments);
  append_unique(t.startup_path_fragments, extra.startup_path_fragments);
  append_unique(t.directive_phrases, extra.directive_phrases);
  append_unique(t.credential_keywords, extra.credential_keywords);
  append_unique(t.code_eval_keywords, extra.code_eval_keywords);
  append_unique(t.instruction_keywords, extra.instruction_keywords);
  append_unique(t.ransomware_keywords, extra.ransomware_keywords);
  append_unique(t.cryptominer_keywords, extra.cryptominer_keywords);
  append_unique(t.telemetry_keywords, extra.telemetry_keywords);
  append_unique(t.recon_keywords, extra.recon_keywords);
}

void reset_patterns() { mutable_tables() = builtin_tables(); }

bool is_secret_env_name(std::string_view name) {
  const std::string upper = [&] {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }();
  for (const auto& frag : patterns().secret_env_fragments) {
    if (upper.find(frag) != std::string::npos) return true;
  }
  return false;
}

CapabilityId classify_read_path(std::string_view path) {
  const std::string lower = to_lower(path);
  for (const auto& frag : patterns().secret_path_fragments) {
    if (lower.find(to_lower(frag)) != std::string::npos) return CapabilityId::FileReadSensitive;
  }
  if (lower.rfind("~/", 0) == 0 || lower.rfind("$home", 0) == 0 ||
      lower.rfind("/home/", 0) == 0 || lower.rfind("/users/", 0) == 0 ||
      lower.rfind("%userprofile%", 0) == 0) {
    return CapabilityId::FileReadHome;
  }
  return CapabilityId::FileReadProject;
}

CapabilityId classify_write_path(std::string_view path) {
  const std::string lower = to_lower(path);
  for (const auto& frag : patterns().startup_path_fragments) {
    if (lower.find(to_lower(frag)) != std::string::npos) return CapabilityId::FileWriteSensitive;
  }
  for (const auto& frag : patterns().secret_path_fragments) {
    if (lower.find(to_lower(frag)) != std::string::npos) return CapabilityId::FileWriteSensitive;
  }
  if (lower.rfind("/etc/", 0) == 0) return CapabilityId::FileWriteSensitive;
  return CapabilityId::FileWrite;
}

bool is_persistence_path(std::string_view path) {
  const std::string lower = to_lower(path);
  for (const auto& frag : patterns().startup_path_fragments) {
    if (lower.find(to_lower(frag)) != std::string::npos) return true;
  }
  return false;
}

bool contains_any_keyword(std::string_view text, const std::vector<std::string>& lexicon) {
  for (const auto& kw : lexicon) {
    if (contains_ci(text, kw)) return true;
  }
  return false;
}

const std::vector<std::string>* claim_keyword_lexicon(CapabilityId cap) {
  const PatternTables& t = patterns();
  switch (category_of(cap)) {
    case CapabilityCategory::Credential:
      return &t.credential_keywords;
    case CapabilityCategory::InstructionLevel:
      return &t.instruction_keywords;
    default:
      break;
  }
  if (cap == CapabilityId::CodeEval || cap == CapabilityId::CodeEvalDynamic) {
    return &t.code_eval_keywords;
  }
  return nullptr;
}

std::string patterns_manifest_json() {
  const PatternTables& t = patterns();
  nlohmann::ordered_json doc;
  doc["version"] = std::string(kPatternsVersion);
  doc["secret_env_fragments"] = to_json(t.secret_env_fragments);
  doc["secret_path_fragments"] = to_json(t.secret_path_fragments);
  doc["startup_path_fragments"] = to_json(t.startup_path_fragments);
  doc["directive_phrases"] = to_json(t.directive_phrases);
  doc["credential_keywords"] = to_json(t.credential_keywords);
  doc["code_eval_keywords"] = to_json(t.code_eval_keywords);
  doc["instruction_keywords"] = to_json(t.instruction_keywords);
  doc["ransomware_keywords"] = to_json(t.ransomware_keywords);
  doc["cryptominer_keywords"] = to_json(t.cryptominer_keywords);
  doc["telemetry_keywords"] = to_json(t.telemetry_keywords);
  doc["recon_keywords"] = to_json(t.recon_keywords);
  return doc.dump(2) + "\n";
}

}  // namespace biv
