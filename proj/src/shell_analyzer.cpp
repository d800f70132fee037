#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
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

// Shell variables that read as interpreter state, not environment secrets.
const std::set<std::string>& builtin_vars() {
  static const std::set<std::string> kBuiltins = {
      "PATH",   "PWD",    "OLDPWD", "HOME",     "IFS",     "SHELL",       "TERM",
      "LANG",   "LC_ALL", "RANDOM", "SECONDS",  "LINENO",  "FUNCNAME",    "OSTYPE",
      "UID",    "EUID",   "PPID",   "HOSTNAME", "USER",    "BASH_SOURCE", "OPTARG",
      "OPTIND", "REPLY",  "PS1",    "PS2",      "COLUMNS", "LINES",       "EDITOR",
      "TMPDIR", "SHLVL",  "HOSTTYPE"};
  return kBuiltins;
}

struct LogicalLine {
  std::string text;       // joined physical lines
  std::size_t first = 0;  // 0-based physical line of the first piece
};

std::vector<LogicalLine> logical_lines(const std::vector<std::string>& lines) {
  std::vector<LogicalLine> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    LogicalLine ll;
    ll.first = i;
    std::string text = lines[i];
    auto ends_open = [](const std::string& t) -> int {
      std::size_t e = t.find_last_not_of(" \t\r");
      if (e == std::string::npos) return 0;
      if (t[e] == '\\') return 1;  // explicit continuation
      if (t[e] == '|') return 2;   // pipeline continues on the next line
      if (e >= 1 && t[e] == '&' && t[e - 1] == '&') return 2;
      return 0;
    };
    int open;
    while ((open = ends_open(text)) != 0 && i + 1 < lines.size()) {
      if (open == 1) text.resize(text.find_last_not_of(" \t\r"));  // drop the backslash
      ++i;
      text += " " + lines[i];
    }
    ll.text = std::move(text);
    out.push_back(std::move(ll));
  }
  return out;
}

bool word_in(const std::string& line, const std::string& word, std::size_t* at = nullptr) {
  std::size_t pos = 0;
  while ((pos = line.find(word, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(line[pos - 1])) ||
                                 line[pos - 1] == '_' || line[pos - 1] == '-');
    std::size_t end = pos + word.size();
    bool right_ok = end >= line.size() || !(std::isalnum(static_cast<unsigned char>(line[end])) ||
                                            line[end] == '_' || line[end] == '-');
    if (left_ok && right_ok) {
      if (at) *at = pos;
      return true;
    }
    pos = end;
  }
  return false;
}

// Extracts $NAME and ${NAME...} reads (upper-case shell/env style only).
std::vector<std::string> var_reads(const std::string& line) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    if (line[i] != '$') continue;
    std::size_t j = i + 1;
    if (line[j] == '{') ++j;
    std::size_t start = j;
    while (j < line.size() &&
           (std::isupper(static_cast<unsigned char>(line[j])) ||
            std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '_'))
      ++j;
    if (j == start) continue;
    if (std::isdigit(static_cast<unsigned char>(line[start]))) continue;  // positional
    std::string name = line.substr(start, j - start);
    if (name.size() < 2) continue;
    names.push_back(std::move(name));
    i = j;
  }
  return names;
}

std::optional<std::string> token_after(const std::string& line, std::size_t from) {
  std::size_t b = line.find_first_not_of(" \t", from);
  if (b == std::string::npos) return std::nullopt;
  char quote = 0;
  if (line[b] == '"' || line[b] == '\'') {
    quote = line[b];
    ++b;
  }
  std::size_t e = b;
  while (e < line.size()) {
    char c = line[e];
    if (quote && c == quote) break;
    if (!quote && (c == ' ' || c == '\t' || c == ';' || c == '|' || c == '&' || c == ')' ||
                   c == '>' || c == '<'))
      break;
    ++e;
  }
  if (e == b) return std::nullopt;
  return line.substr(b, e - b);
}

struct ChainKey {
  CapabilityId source;
  CapabilityId sink;
  friend bool operator<(const ChainKey& a, const ChainKey& b) {
    return std::tie(a.source, a.sink) < std::tie(b.source, b.sink);
  }
};

struct FileScan {
  std::vector<Detection> detections;
  std::map<ChainKey, FlowChain> chains;  // deduped by shape, first sites win
};

constexpr std::size_t kNoDet = static_cast<std::size_t>(-1);

void scan_file(const SourceDocument& doc, FileScan& out) {
  std::vector<std::string> physical = split_lines(doc.text);
  std::vector<LogicalLine> lines = logical_lines(physical);

  // Pass 1: variables assigned anywhere in this script are not env reads.
  std::set<std::string> assigned;
  for (const auto& ll : lines) {
    const std::string& t = ll.text;
    std::size_t p = t.find_first_not_of(" \t");
    if (p == std::string::npos) continue;
    std::size_t q = p;
    if (t.compare(p, 7, "export ") == 0 || t.compare(p, 6, "local ") == 0 ||
        t.compare(p, 9, "readonly ") == 0) {
      std::size_t sp = t.find(' ', p);
      q = t.find_first_not_of(" \t", sp);
      if (q == std::string::npos) continue;
    }
    std::size_t r = q;
    while (r < t.size() && (std::isupper(static_cast<unsigned char>(t[r])) ||
                            std::isdigit(static_cast<unsigned char>(t[r])) || t[r] == '_'))
      ++r;
    if (r > q && r < t.size() && t[r] == '=') assigned.insert(t.substr(q, r - q));
    if (t.compare(p, 4, "for ") == 0) {
      if (auto var = token_after(t, p + 4)) assigned.insert(*var);
    }
    if (t.compare(p, 5, "read ") == 0) {
      std::size_t v = t.find_last_of(' ');
      if (v != std::string::npos && v + 1 < t.size()) assigned.insert(t.substr(v + 1));
    }
  }

  std::map<std::pair<int, std::size_t>, std::size_t> seen;  // (cap, line) -> index
  auto emit = [&](CapabilityId cap, std::size_t rel, const std::string& line) -> std::size_t {
    std::size_t abs = doc.start_line + rel;
    auto key = std::make_pair(static_cast<int>(cap), abs);
    auto it = seen.find(key);
    if (it != seen.end()) return it->second;
    if (out.detections.size() >= kMaxDetections) return kNoDet;
    Detection d;
    d.capability = cap;
    d.file = doc.path;
    d.line = abs;
    d.analyzer = AnalyzerKind::ShellLiteral;
    d.sites.push_back(Site{doc.path, abs});
    d.evidence = trim_line(line);
    out.detections.push_back(std::move(d));
    seen.emplace(key, out.detections.size() - 1);
    return out.detections.size() - 1;
  };
  auto chain = [&](std::size_t src_idx, std::size_t snk_idx, SourceClass cls) {
    if (src_idx == kNoDet || snk_idx == kNoDet) return;
    const Detection& src = out.detections[src_idx];
    const Detection& snk = out.detections[snk_idx];
    ChainKey key{src.capability, snk.capability};
    if (out.chains.count(key)) return;
    FlowChain c;
    c.source = src.capability;
    c.sink = snk.capability;
    c.sites = {Site{src.file, src.line}, Site{snk.file, snk.line}};
    c.scope = ChainScope::IntraFileCoOccurrence;
    c.source_class = cls;
    out.chains.emplace(std::move(key), std::move(c));
  };

  for (const auto& ll : lines) {
    const std::string& line = ll.text;
    std::size_t rel = ll.first;
    std::string trimmed = trim_line(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;

    // Environment reads.
    std::vector<std::size_t> env_sources;
    std::set<std::string> line_vars;
    for (const std::string& name : var_reads(line)) {
      if (assigned.count(name) || builtin_vars().count(name)) continue;
      if (!line_vars.insert(name).second) continue;
      CapabilityId cap = is_secret_env_name(name) ? CapabilityId::EnvAccessSensitive
                                                  : CapabilityId::EnvAccessSpecific;
      std::size_t idx = emit(cap, rel, line);
      if (idx != kNoDet) env_sources.push_back(idx);
    }

    // Network clients.
    bool has_curl = word_in(line, "curl") || word_in(line, "wget");
    std::size_t net = has_curl ? emit(CapabilityId::NetworkOutboundHttp, rel, line) : kNoDet;
    std::size_t sock = (word_in(line, "nc") || word_in(line, "ncat") || word_in(line, "netcat"))
                           ? emit(CapabilityId::NetworkOutboundSocket, rel, line)
                           : kNoDet;

    // File reads via cat / input redirection.
    std::vector<std::size_t> file_sources;
    std::size_t cat_at = 0;
    if (word_in(line, "cat", &cat_at)) {
      if (auto tok = token_after(line, cat_at + 3)) {
        std::size_t idx = emit(classify_read_path(*tok), rel, line);
        if (idx != kNoDet) file_sources.push_back(idx);
      }
    }
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '<') continue;
      if (i + 1 < line.size() && (line[i + 1] == '(' || line[i + 1] == '<')) continue;
      if (i > 0 && line[i - 1] == '>') continue;
      if (auto tok = token_after(line, i + 1)) {
        if (tok->rfind("/dev/", 0) == 0) continue;
        std::size_t idx = emit(classify_read_path(*tok), rel, line);
        if (idx != kNoDet) file_sources.push_back(idx);
      }
    }

    // Writes via output redirection.
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '>') continue;
      std::size_t after = i + 1;
      if (after < line.size() && line[after] == '>') ++after;
      if (i > 0 && (line[i - 1] == '<' || line[i - 1] == '>')) continue;
      if (after < line.size() && (line[after] == '&' || line[after] == '(')) continue;
      if (auto tok = token_after(line, after)) {
        if (tok->rfind("/dev/", 0) != 0 && (*tok)[0] != '&')
          emit(classify_write_path(*tok), rel, line);
      }
      i = after;
    }

    // Encoding helpers.
    if (word_in(line, "base64")) emit(CapabilityId::EncodingBase64, rel, line);
    if (word_in(line, "openssl") &&
        (word_in(line, "enc") || line.find("aes") != std::string::npos ||
         word_in(line, "rsautl") || word_in(line, "pkeyutl")))
      emit(CapabilityId::EncodingCrypto, rel, line);
    if (word_in(line, "gzip") || word_in(line, "gunzip") || word_in(line, "bzip2") ||
        word_in(line, "xz") || word_in(line, "zstd"))
      emit(CapabilityId::EncodingCompression, rel, line);

    if (word_in(line, "rm")) emit(CapabilityId::FileDelete, rel, line);

    // Download-and-execute: network output piped into an interpreter, or a
    // command substitution of a fetch fed to eval/source.
    bool pipe_shell = false, pipe_interp = false, eval_fetch = false;
    if (has_curl) {
      static const char* kShells[] = {"sh", "bash", "zsh", "dash", "ksh"};
      static const char* kInterps[] = {"python3", "python", "node", "ruby", "perl"};
      std::size_t pipe = line.find('|');
      while (pipe != std::string::npos) {
        std::size_t cmd = line.find_first_not_of(" \t", pipe + 1);
        if (cmd != std::string::npos) {
          if (line.compare(cmd, 5, "sudo ") == 0) cmd = line.find_first_not_of(" \t", cmd + 5);
          auto word_at = [&](const char* w) {
            std::size_t n = std::strlen(w);
            return cmd != std::string::npos && line.compare(cmd, n, w) == 0 &&
                   (cmd + n >= line.size() ||
                    !(std::isalnum(static_cast<unsigned char>(line[cmd + n])) ||
                      line[cmd + n] == '_'));
          };
          for (const char* s : kShells) pipe_shell = pipe_shell || word_at(s);
          for (const char* s : kInterps) pipe_interp = pipe_interp || word_at(s);
        }
        pipe = line.find('|', pipe + 1);
      }
      bool subst = line.find("$(curl") != std::string::npos ||
                   line.find("$(wget") != std::string::npos ||
                   line.find("<(curl") != std::string::npos ||
                   line.find("<(wget") != std::string::npos;
      if (subst && (word_in(line, "eval") || word_in(line, "source") ||
                    line.find("bash <(") != std::string::npos ||
                    line.find("sh <(") != std::string::npos ||
                    line.find(". <(") != std::string::npos))
        eval_fetch = true;
    }
    if (pipe_shell || pipe_interp || eval_fetch) {
      emit(CapabilityId::NetworkDownloadExecute, rel, line);
      CapabilityId sink = pipe_interp                            ? CapabilityId::ProcessExec
                          : (eval_fetch && word_in(line, "eval")) ? CapabilityId::CodeEvalDynamic
                                                                  : CapabilityId::ProcessExecShell;
      std::size_t snk = emit(sink, rel, line);
      if (net != kNoDet && snk != kNoDet) chain(net, snk, SourceClass::NetworkResponse);
    } else if (word_in(line, "eval")) {
      emit(CapabilityId::CodeEvalDynamic, rel, line);
    }

    // Same-line co-occurrence: sensitive material and a network client.
    std::size_t netish = net != kNoDet ? net : sock;
    if (netish != kNoDet) {
      for (std::size_t s : env_sources) chain(s, netish, SourceClass::Environment);
      for (std::size_t s : file_sources) chain(s, netish, SourceClass::FileRead);
    }
  }
}

}  // namespace

AnalyzerOutput analyze_shell(const std::vector<const SourceDocument*>& files, bool parallel) {
  AnalyzerOutput out;
  std::vector<FileScan> per_file(files.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::size_t i = 0; i < files.size(); ++i) scan_file(*files[i], per_file[i]);
  for (auto& fs : per_file) {
    for (auto& d : fs.detections) out.detections.push_back(std::move(d));
    for (auto& [key, c] : fs.chains) out.chains.push_back(std::move(c));
  }
  return out;
}

std::string shell_patterns_manifest_json() {
  nlohmann::ordered_json j;
  j["analyzer"] = "shell-literal";
  j["version"] = "shell-patterns/v1";
  j["rules"] = nlohmann::ordered_json::array({
      nlohmann::ordered_json{{"name", "env-read"},
                             {"pattern", "$NAME / ${NAME} reads, minus in-script assignments and builtins"},
                             {"capability", "ENV_ACCESS_SPECIFIC or ENV_ACCESS_SENSITIVE by name"}},
      nlohmann::ordered_json{{"name", "http-client"},
                             {"pattern", "curl | wget command word"},
                             {"capability", "NETWORK_OUTBOUND_HTTP"}},
      nlohmann::ordered_json{{"name", "socket-client"},
                             {"pattern", "nc | ncat | netcat command word"},
                             {"capability", "NETWORK_OUTBOUND_SOCKET"}},
      nlohmann::ordered_json{{"name", "cat-read"},
                             {"pattern", "cat <path>, input redirection < path"},
                             {"capability", "FILE_READ_* by path"}},
      nlohmann::ordered_json{{"name", "redirect-write"},
                             {"pattern", "> path, >> path"},
                             {"capability", "FILE_WRITE or FILE_WRITE_SENSITIVE by path"}},
      nlohmann::ordered_json{{"name", "encoders"},
                             {"pattern", "base64 / openssl enc / gzip family"},
                             {"capability", "ENCODING_*"}},
      nlohmann::ordered_json{{"name", "delete"},
                             {"pattern", "rm command word"},
                             {"capability", "FILE_DELETE"}},
      nlohmann::ordered_json{{"name", "download-execute"},
                             {"pattern", "curl|wget piped to an interpreter; eval/source of $(curl ...)"},
                             {"capability", "NETWORK_DOWNLOAD_EXECUTE plus the execute sink"}},
      nlohmann::ordered_json{{"name", "cooccurrence-chain"},
                             {"pattern", "env/file source and network client on one logical line"},
                             {"capability", "flow chain, deduped by (source, sink) per file"}},
  });
  return j.dump(2) + "\n";
}

}  // namespace biv
