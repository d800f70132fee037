#include <algorithm>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biv/analyzers.hpp"
#include "biv/patterns.hpp"
#include "biv/text.hpp"

namespace biv {

namespace {

constexpr std::size_t kMaxDetections = 4096;

std::string trim_line(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() > 200) out.resize(200);
  return out;
}

// One rule: cheap substring prefilter, then the regex. `path_group` names a
// capture holding a path literal to classify; 0 means the capability is fixed.
struct JsRule {
  const char* name;
  const char* prefilter;
  const char* pattern;
  CapabilityId cap;
  int path_group;        // capture index for read/write path classification
  bool write_path;       // classify as write target instead of read
};

const std::vector<JsRule>& js_rules() {
  static const std::vector<JsRule> kRules = {
      {"fetch-call", "fetch", R"((^|[^A-Za-z0-9_.])fetch\s*\()", CapabilityId::NetworkOutboundHttp, 0, false},
      {"axios-call", "axios", R"(axios(\.(get|post|put|patch|delete|head|request))?\s*\()", CapabilityId::NetworkOutboundHttp, 0, false},
      {"node-http", "ttp", R"((^|[^A-Za-z0-9_.])https?\.(request|get)\s*\()", CapabilityId::NetworkOutboundHttp, 0, false},
      {"xhr", "XMLHttpRequest", R"(new\s+XMLHttpRequest)", CapabilityId::NetworkOutboundHttp, 0, false},
      {"net-socket", "net", R"((^|[^A-Za-z0-9_.])(net\.(connect|createConnection)|new\s+net\.Socket|tls\.connect))", CapabilityId::NetworkOutboundSocket, 0, false},
      {"server-listen", "createServer", R"((https?|net)\.createServer)", CapabilityId::NetworkInbound, 0, false},
      {"child-exec", "exec", R"((^|[^A-Za-z0-9_.])(exec|execSync)\s*\()", CapabilityId::ProcessExecShell, 0, false},
      {"child-exec-qualified", "child_process", R"(child_process\.(exec|execSync)\s*\()", CapabilityId::ProcessExecShell, 0, false},
      {"child-spawn", "spawn", R"((^|[^A-Za-z0-9_.])(spawn|spawnSync|execFile|execFileSync|fork)\s*\()", CapabilityId::ProcessExec, 0, false},
      {"child-spawn-qualified", "child_process", R"(child_process\.(spawn|spawnSync|execFile|execFileSync|fork)\s*\()", CapabilityId::ProcessExec, 0, false},
      {"eval-call", "eval", R"((^|[^A-Za-z0-9_.])eval\s*\()", CapabilityId::CodeEvalDynamic, 0, false},
      {"new-function", "Function", R"(new\s+Function\s*\()", CapabilityId::CodeEvalDynamic, 0, false},
      {"vm-run", "vm.run", R"(vm\.runIn(NewContext|ThisContext)\s*\()", CapabilityId::CodeEvalDynamic, 0, false},
      {"fs-read", "fs", R"(fs(\.promises)?\.(readFile|readFileSync|createReadStream)\s*\(\s*["'`]?([^"'`,)]*))", CapabilityId::FileReadProject, 3, false},
      {"fs-write", "fs", R"(fs(\.promises)?\.(writeFile|writeFileSync|appendFile|appendFileSync|createWriteStream)\s*\(\s*["'`]?([^"'`,)]*))", CapabilityId::FileWrite, 3, true},
      {"fs-enumerate", "fs", R"(fs(\.promises)?\.(readdir|readdirSync|opendir|opendirSync)\s*\()", CapabilityId::FileEnumerate, 0, false},
      {"fs-delete", "fs", R"(fs(\.promises)?\.(unlink|unlinkSync|rm|rmSync|rmdir|rmdirSync)\s*\()", CapabilityId::FileDelete, 0, false},
      {"buffer-base64", "base64", R"((Buffer\.from\s*\(.*["'`]base64["'`]|\.toString\s*\(\s*["'`]base64["'`]))", CapabilityId::EncodingBase64, 0, false},
      {"atob-btoa", "tob", R"((^|[^A-Za-z0-9_.])(atob|btoa)\s*\()", CapabilityId::EncodingBase64, 0, false},
      {"zlib-call", "zlib", R"(zlib\.[A-Za-z]+\s*\()", CapabilityId::EncodingCompression, 0, false},
      {"crypto-call", "crypto", R"(crypto\.(createHash|createHmac|createCipheriv|createCipher|createDecipheriv|subtle))", CapabilityId::EncodingCrypto, 0, false},
      {"keytar-read", "keytar", R"(keytar\.(getPassword|findCredentials|findPassword)\s*\()", CapabilityId::CredentialRead, 0, false},
      {"keytar-write", "keytar", R"(keytar\.setPassword\s*\()", CapabilityId::CredentialCreate, 0, false},
  };
  return kRules;
}

const std::regex& env_prop_re() {
  static const std::regex re(R"(process\.env\.([A-Za-z_][A-Za-z0-9_]*))");
  return re;
}
const std::regex& env_index_re() {
  static const std::regex re(R"(process\.env\[\s*["'`]([^"'`]+)["'`]\s*\])");
  return re;
}

std::vector<std::regex>& compiled_rules() {
  static std::vector<std::regex> res = [] {
    std::vector<std::regex> v;
    v.reserve(js_rules().size());
    for (const auto& r : js_rules()) v.emplace_back(r.pattern);
    return v;
  }();
  return res;
}

void scan_file(const SourceDocument& doc, std::vector<Detection>& dets) {
  std::vector<std::string> lines = split_lines(doc.text);
  std::set<std::pair<int, std::size_t>> seen;  // (capability, line) within this file
  auto emit = [&](CapabilityId cap, std::size_t rel, const std::string& line) {
    if (dets.size() >= kMaxDetections) return;
    std::size_t abs = doc.start_line + rel;
    if (!seen.insert({static_cast<int>(cap), abs}).second) return;
    Detection d;
    d.capability = cap;
    d.file = doc.path;
    d.line = abs;
    d.analyzer = AnalyzerKind::JstsRegex;
    d.sites.push_back(Site{doc.path, abs});
    d.evidence = trim_line(line);
    dets.push_back(std::move(d));
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;

    if (line.find("process.env") != std::string::npos) {
      bool named = false;
      for (auto it = std::sregex_iterator(line.begin(), line.end(), env_prop_re());
           it != std::sregex_iterator(); ++it) {
        named = true;
        std::string name = (*it)[1].str();
        emit(is_secret_env_name(name) ? CapabilityId::EnvAccessSensitive
                                      : CapabilityId::EnvAccessSpecific,
             i, line);
      }
      for (auto it = std::sregex_iterator(line.begin(), line.end(), env_index_re());
           it != std::sregex_iterator(); ++it) {
        named = true;
        std::string name = (*it)[1].str();
        emit(is_secret_env_name(name) ? CapabilityId::EnvAccessSensitive
                                      : CapabilityId::EnvAccessSpecific,
             i, line);
      }
      if (!named) emit(CapabilityId::EnvAccessBulk, i, line);  // whole-object use
    }

    const auto& rules = js_rules();
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (line.find(rules[r].prefilter) == std::string::npos) continue;
      std::smatch m;
      if (!std::regex_search(line, m, compiled_rules()[r])) continue;
      CapabilityId cap = rules[r].cap;
      if (rules[r].path_group > 0) {
        std::string path = m[rules[r].path_group].str();
        if (!path.empty() && (path.find('$') != std::string::npos || path.find('+') != std::string::npos))
          path.clear();  // interpolated: classify as unknown
        cap = rules[r].write_path ? classify_write_path(path) : classify_read_path(path);
      }
      if (cap == CapabilityId::CodeEvalDynamic) {
        // eval with a bare string literal is static code evaluation
        std::size_t open = line.find('(', m.position(0));
        if (open != std::string::npos) {
          std::size_t arg = line.find_first_not_of(" \t", open + 1);
          if (arg != std::string::npos && (line[arg] == '"' || line[arg] == '\''))
            cap = CapabilityId::CodeEval;
        }
      }
      emit(cap, i, line);
    }
  }
}

}  // namespace

AnalyzerOutput analyze_jsts(const std::vector<const SourceDocument*>& files, bool parallel) {
  AnalyzerOutput out;
  std::vector<std::vector<Detection>> per_file(files.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::size_t i = 0; i < files.size(); ++i) scan_file(*files[i], per_file[i]);
  for (auto& dets : per_file) {
    add_cooccurrence_chains(dets, out.chains);
    for (auto& d : dets) out.detections.push_back(std::move(d));
  }
  return out;
}

std::string jsts_patterns_manifest_json() {
  nlohmann::ordered_json j;
  j["analyzer"] = "jsts-regex";
  j["version"] = "jsts-patterns/v1";
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  {
    nlohmann::ordered_json env;
    env["name"] = "process-env";
    env["pattern"] = "process.env.<NAME> | process.env[\"<NAME>\"] | bare process.env";
    env["capability"] = "ENV_ACCESS_SPECIFIC / ENV_ACCESS_SENSITIVE / ENV_ACCESS_BULK";
    rules.push_back(std::move(env));
  }
  for (const auto& r : js_rules()) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    row["pattern"] = r.pattern;
    row["capability"] = std::string(format_capability(r.cap));
    if (r.path_group > 0) row["path_classified"] = r.write_path ? "write" : "read";
    rules.push_back(std::move(row));
  }
  j["rules"] = std::move(rules);
  j["chains"] = "intra-file co-occurrence: (env|file-read) -> network, network -> execute";
  return j.dump(2) + "\n";
}

}  // namespace biv
