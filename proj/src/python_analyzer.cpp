#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biv/analyzers.hpp"
#include "biv/patterns.hpp"
#include "biv/python_ast.hpp"
#include "biv/text.hpp"

namespace biv {

namespace {

constexpr std::size_t kMaxOrigins = 12;
constexpr std::size_t kMaxTransforms = 8;
constexpr std::size_t kMaxChains = 512;
constexpr std::size_t kMaxDetections = 4096;
constexpr int kSummaryRounds = 3;

struct TaintOrigin {
  SourceClass cls = SourceClass::FileRead;
  CapabilityId cap = CapabilityId::FileReadProject;
  Site site;
  std::vector<std::pair<CapabilityId, Site>> transforms;
  int param = -1;  // >=0: synthetic marker for the enclosing function's param
  bool inter = false;
  enum class Marker { None, WriteHandle, SocketHandle } marker = Marker::None;
  std::string note;  // env var name / literal write path

  friend bool operator==(const TaintOrigin& a, const TaintOrigin& b) {
    return a.cls == b.cls && a.cap == b.cap && a.site == b.site && a.transforms == b.transforms &&
           a.param == b.param && a.inter == b.inter && a.marker == b.marker && a.note == b.note;
  }
};

struct TaintSet {
  std::vector<TaintOrigin> origins;

  void add(TaintOrigin o) {
    if (origins.size() >= kMaxOrigins) return;
    if (std::find(origins.begin(), origins.end(), o) == origins.end()) origins.push_back(std::move(o));
  }
  void merge(const TaintSet& other) {
    for (const auto& o : other.origins) add(o);
  }
  bool empty() const { return origins.empty(); }
  friend bool operator==(const TaintSet& a, const TaintSet& b) { return a.origins == b.origins; }
};

void append_transform(TaintOrigin& o, CapabilityId cap, Site site) {
  if (o.transforms.size() >= kMaxTransforms) return;
  if (!o.transforms.empty() && o.transforms.back().first == cap && o.transforms.back().second == site)
    return;
  o.transforms.emplace_back(cap, site);
}

struct FnSummary {
  struct ParamSink {
    int param;
    CapabilityId sink;
    std::vector<std::pair<CapabilityId, Site>> transforms;
    Site sink_site;
    friend bool operator==(const ParamSink& a, const ParamSink& b) {
      return a.param == b.param && a.sink == b.sink && a.transforms == b.transforms &&
             a.sink_site == b.sink_site;
    }
  };
  struct ParamRet {
    int param;
    std::vector<std::pair<CapabilityId, Site>> transforms;
    friend bool operator==(const ParamRet& a, const ParamRet& b) {
      return a.param == b.param && a.transforms == b.transforms;
    }
  };
  std::vector<ParamSink> param_sinks;
  std::vector<ParamRet> param_returns;
  TaintSet returns;

  friend bool operator==(const FnSummary& a, const FnSummary& b) {
    return a.param_sinks == b.param_sinks && a.param_returns == b.param_returns &&
           a.returns == b.returns;
  }
};

struct EvalResult {
  TaintSet taint;
  std::optional<std::string> str_value;
  bool exact = false;  // literal value with no interpolation placeholders
};

enum class Action {
  EnvGet,
  EnvBulk,
  Http,
  UrlRetrieve,
  SocketNew,
  SocketConnect,
  Open,
  PathNew,
  PathJoin,
  Expanduser,
  ShutilCopy,
  Enumerate,
  Delete,
  Subproc,
  ShellExec,
  EvalCall,
  ExecCall,
  Transform,
  CredRead,
  CredCreate,
  UserInput,
  JsonDump
};

struct CallPattern {
  const char* path;
  Action action;
  CapabilityId cap;  // used by Transform / fixed-capability actions
};

// Canonical dotted call paths after import resolution.
constexpr CapabilityId kNone = CapabilityId::FileReadProject;  // placeholder for path-classified actions
const std::vector<CallPattern>& call_table() {
  static const std::vector<CallPattern> kTable = {
      {"os.environ.get", Action::EnvGet, kNone},
      {"os.environ.setdefault", Action::EnvGet, kNone},
      {"os.getenv", Action::EnvGet, kNone},
      {"os.environ.items", Action::EnvBulk, kNone},
      {"os.environ.keys", Action::EnvBulk, kNone},
      {"os.environ.values", Action::EnvBulk, kNone},
      {"os.environ.copy", Action::EnvBulk, kNone},
      {"requests.get", Action::Http, kNone},
      {"requests.post", Action::Http, kNone},
      {"requests.put", Action::Http, kNone},
      {"requests.patch", Action::Http, kNone},
      {"requests.delete", Action::Http, kNone},
      {"requests.head", Action::Http, kNone},
      {"requests.request", Action::Http, kNone},
      {"httpx.get", Action::Http, kNone},
      {"httpx.post", Action::Http, kNone},
      {"httpx.put", Action::Http, kNone},
      {"httpx.request", Action::Http, kNone},
      {"urllib.request.urlopen", Action::Http, kNone},
      {"urllib.request.urlretrieve", Action::UrlRetrieve, kNone},
      {"socket.socket", Action::SocketNew, kNone},
      {"socket.create_connection", Action::SocketConnect, kNone},
      {"open", Action::Open, kNone},
      {"io.open", Action::Open, kNone},
      {"pathlib.Path", Action::PathNew, kNone},
      {"pathlib.Path.home", Action::PathNew, kNone},
      {"os.path.join", Action::PathJoin, kNone},
      {"os.path.expanduser", Action::Expanduser, kNone},
      {"os.path.expandvars", Action::Expanduser, kNone},
      {"shutil.copy", Action::ShutilCopy, kNone},
      {"shutil.copy2", Action::ShutilCopy, kNone},
      {"shutil.copyfile", Action::ShutilCopy, kNone},
      {"shutil.move", Action::ShutilCopy, kNone},
      {"os.listdir", Action::Enumerate, kNone},
      {"os.scandir", Action::Enumerate, kNone},
      {"os.walk", Action::Enumerate, kNone},
      {"glob.glob", Action::Enumerate, kNone},
      {"glob.iglob", Action::Enumerate, kNone},
      {"os.remove", Action::Delete, kNone},
      {"os.unlink", Action::Delete, kNone},
      {"os.rmdir", Action::Delete, kNone},
      {"shutil.rmtree", Action::Delete, kNone},
      {"subprocess.run", Action::Subproc, kNone},
      {"subprocess.call", Action::Subproc, kNone},
      {"subprocess.check_call", Action::Subproc, kNone},
      {"subprocess.check_output", Action::Subproc, kNone},
      {"subprocess.Popen", Action::Subproc, kNone},
      {"os.execv", Action::Subproc, kNone},
      {"os.execvp", Action::Subproc, kNone},
      {"os.system", Action::ShellExec, kNone},
      {"os.popen", Action::ShellExec, kNone},
      {"eval", Action::EvalCall, kNone},
      {"exec", Action::ExecCall, kNone},
      {"base64.b64encode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.b64decode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.urlsafe_b64encode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.urlsafe_b64decode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.b32encode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.b16encode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.a85encode", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.encodebytes", Action::Transform, CapabilityId::EncodingBase64},
      {"base64.decodebytes", Action::Transform, CapabilityId::EncodingBase64},
      {"binascii.hexlify", Action::Transform, CapabilityId::EncodingBase64},
      {"binascii.unhexlify", Action::Transform, CapabilityId::EncodingBase64},
      {"codecs.encode", Action::Transform, CapabilityId::EncodingBase64},
      {"zlib.compress", Action::Transform, CapabilityId::EncodingCompression},
      {"zlib.decompress", Action::Transform, CapabilityId::EncodingCompression},
      {"gzip.compress", Action::Transform, CapabilityId::EncodingCompression},
      {"gzip.decompress", Action::Transform, CapabilityId::EncodingCompression},
      {"bz2.compress", Action::Transform, CapabilityId::EncodingCompression},
      {"bz2.decompress", Action::Transform, CapabilityId::EncodingCompression},
      {"lzma.compress", Action::Transform, CapabilityId::EncodingCompression},
      {"lzma.decompress", Action::Transform, CapabilityId::EncodingCompression},
      {"hashlib.md5", Action::Transform, CapabilityId::EncodingCrypto},
      {"hashlib.sha1", Action::Transform, CapabilityId::EncodingCrypto},
      {"hashlib.sha256", Action::Transform, CapabilityId::EncodingCrypto},
      {"hashlib.sha512", Action::Transform, CapabilityId::EncodingCrypto},
      {"hashlib.new", Action::Transform, CapabilityId::EncodingCrypto},
      {"hmac.new", Action::Transform, CapabilityId::EncodingCrypto},
      {"keyring.get_password", Action::CredRead, kNone},
      {"keyring.get_credential", Action::CredRead, kNone},
      {"keyring.set_password", Action::CredCreate, kNone},
      {"input", Action::UserInput, kNone},
      {"sys.stdin.read", Action::UserInput, kNone},
      {"sys.stdin.readline", Action::UserInput, kNone},
      {"sys.stdin.readlines", Action::UserInput, kNone},
      {"getpass.getpass", Action::UserInput, kNone},
      {"json.dump", Action::JsonDump, kNone},
  };
  return kTable;
}

const CallPattern* lookup_call(const std::string& path) {
  for (const auto& p : call_table())
    if (path == p.path) return &p;
  return nullptr;
}

std::string trim_copy(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() > 200) out.resize(200);
  return out;
}

struct Module {
  const SourceDocument* doc = nullptr;
  std::vector<PyStmt> stmts;
  std::vector<std::string> lines;
  bool failed = false;
  std::size_t fail_line = 0;
};

struct FnInfo {
  const PyStmt* def = nullptr;
  Module* mod = nullptr;
  FnSummary summary;
};

struct Ctx {
  Module* mod = nullptr;
  std::map<std::string, TaintSet> vars;
  std::map<std::string, std::pair<std::string, bool>> consts;  // name -> (value, exact)
  std::map<std::string, std::string> imports;                  // local -> canonical dotted
  FnSummary* summary = nullptr;
  int depth = 0;
};

class PyAnalysis {
 public:
  AnalyzerOutput run(const std::vector<const SourceDocument*>& files, bool parallel) {
    modules_.resize(files.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (std::size_t i = 0; i < files.size(); ++i) {
      Module& m = modules_[i];
      m.doc = files[i];
      m.lines = split_lines(files[i]->text);
      try {
        m.stmts = py_parse(files[i]->text);
      } catch (const PyParseError& e) {
        m.failed = true;
        m.fail_line = e.line;
      }
    }
    for (auto& m : modules_) {
      if (m.failed) {
        out_.warnings.push_back(m.doc->path + ": python parse failed near line " +
                                std::to_string(m.fail_line) + "; literal fallback used");
        fallback_scan(m);
        continue;
      }
      collect_functions(m, m.stmts);
    }
    // Bounded fixpoint over function summaries.
    emit_ = false;
    for (int round = 0; round < kSummaryRounds; ++round) {
      bool changed = false;
      for (auto& fn : fns_) {
        FnSummary next = analyze_function(fn);
        if (!(next == fn.summary)) {
          fn.summary = std::move(next);
          changed = true;
        }
      }
      if (!changed) break;
    }
    // Emission pass: module top level, then each function body once.
    emit_ = true;
    for (auto& m : modules_) {
      if (m.failed) continue;
      Ctx ctx;
      ctx.mod = &m;
      analyze_stmts(ctx, m.stmts);
    }
    for (auto& fn : fns_) analyze_function(fn);
    dedupe();
    return std::move(out_);
  }

 private:
  // ---- collection ----

  void collect_functions(Module& m, const std::vector<PyStmt>& stmts) {
    for (const auto& s : stmts) {
      if (s.kind == PyStmt::Kind::FunctionDef) {
        fn_index_.emplace(s.name, fns_.size());
        fns_.push_back(FnInfo{&s, &m, {}});
        collect_functions(m, s.body);
        continue;
      }
      collect_functions(m, s.body);
      collect_functions(m, s.orelse);
      collect_functions(m, s.finally_body);
    }
  }

  FnSummary analyze_function(FnInfo& fn) {
    Ctx ctx;
    ctx.mod = fn.mod;
    FnSummary summary;
    ctx.summary = &summary;
    seed_imports(ctx, fn.mod->stmts);
    const auto& params = fn.def->params;
    for (std::size_t i = 0; i < params.size(); ++i) {
      TaintOrigin marker;
      marker.param = static_cast<int>(i);
      marker.site = site_at(*fn.mod, fn.def->line);
      TaintSet t;
      t.add(marker);
      ctx.vars[params[i]] = std::move(t);
    }
    analyze_stmts(ctx, fn.def->body);
    return summary;
  }

  // Imports may sit at module top level while the function body is analyzed in
  // isolation, so resolve them up front (top-level only; nested are re-seen in
  // statement order).
  void seed_imports(Ctx& ctx, const std::vector<PyStmt>& stmts) {
    for (const auto& s : stmts)
      if (s.kind == PyStmt::Kind::Import)
        for (const auto& b : s.imports) ctx.imports[b.local] = b.target;
  }

  // ---- statement walk ----

  void analyze_stmts(Ctx& ctx, const std::vector<PyStmt>& stmts) {
    for (const auto& s : stmts) analyze_stmt(ctx, s);
  }

  void analyze_stmt(Ctx& ctx, const PyStmt& s) {
    switch (s.kind) {
      case PyStmt::Kind::Assign: {
        EvalResult val = s.value ? eval(ctx, *s.value) : EvalResult{};
        for (const auto& t : s.targets) apply_assign(ctx, t, val, *s.value);
        break;
      }
      case PyStmt::Kind::AugAssign: {
        EvalResult val = s.value ? eval(ctx, *s.value) : EvalResult{};
        if (!s.targets.empty() && s.targets[0].kind == PyExpr::Kind::Name) {
          ctx.vars[s.targets[0].name].merge(val.taint);
          ctx.consts.erase(s.targets[0].name);
        } else if (!s.targets.empty() && s.targets[0].kind == PyExpr::Kind::Subscript &&
                   s.targets[0].children[0].kind == PyExpr::Kind::Name) {
          ctx.vars[s.targets[0].children[0].name].merge(val.taint);
        }
        break;
      }
      case PyStmt::Kind::ExprStmt:
        if (s.value) eval(ctx, *s.value);
        break;
      case PyStmt::Kind::Return: {
        if (!s.value || !ctx.summary) break;
        EvalResult val = eval(ctx, *s.value);
        for (const auto& o : val.taint.origins) {
          if (o.marker != TaintOrigin::Marker::None) continue;
          if (o.param >= 0) {
            FnSummary::ParamRet pr{o.param, o.transforms};
            auto& v = ctx.summary->param_returns;
            if (std::find(v.begin(), v.end(), pr) == v.end() && v.size() < 32)
              v.push_back(std::move(pr));
          } else {
            ctx.summary->returns.add(o);
          }
        }
        break;
      }
      case PyStmt::Kind::FunctionDef:
        for (const auto& e : s.extra_exprs) eval(ctx, e);  // parameter defaults
        break;
      case PyStmt::Kind::ClassDef: {
        for (const auto& e : s.extra_exprs) eval(ctx, e);
        analyze_stmts(ctx, s.body);
        break;
      }
      case PyStmt::Kind::If: {
        if (s.value) eval(ctx, *s.value);
        ++ctx.depth;
        analyze_stmts(ctx, s.body);
        analyze_stmts(ctx, s.orelse);
        --ctx.depth;
        break;
      }
      case PyStmt::Kind::While: {
        if (s.value) eval(ctx, *s.value);
        ++ctx.depth;
        analyze_stmts(ctx, s.body);
        analyze_stmts(ctx, s.body);  // one extra pass for loop-carried taint
        analyze_stmts(ctx, s.orelse);
        --ctx.depth;
        break;
      }
      case PyStmt::Kind::For: {
        EvalResult iter = s.value ? eval(ctx, *s.value) : EvalResult{};
        ++ctx.depth;
        if (!s.targets.empty()) apply_assign(ctx, s.targets[0], iter, s.targets[0]);
        analyze_stmts(ctx, s.body);
        analyze_stmts(ctx, s.body);
        analyze_stmts(ctx, s.orelse);
        --ctx.depth;
        break;
      }
      case PyStmt::Kind::With: {
        for (std::size_t i = 0; i < s.with_exprs.size(); ++i) {
          EvalResult item = eval(ctx, s.with_exprs[i]);
          if (i < s.with_targets.size() && s.with_targets[i])
            apply_assign(ctx, *s.with_targets[i], item, s.with_exprs[i]);
        }
        analyze_stmts(ctx, s.body);
        break;
      }
      case PyStmt::Kind::Try: {
        analyze_stmts(ctx, s.body);
        ++ctx.depth;
        analyze_stmts(ctx, s.orelse);
        --ctx.depth;
        analyze_stmts(ctx, s.finally_body);
        break;
      }
      case PyStmt::Kind::Import:
        for (const auto& b : s.imports) ctx.imports[b.local] = b.target;
        break;
      case PyStmt::Kind::Other:
        for (const auto& e : s.extra_exprs) eval(ctx, e);
        break;
      case PyStmt::Kind::Pass:
        break;
    }
  }

  void apply_assign(Ctx& ctx, const PyExpr& target, const EvalResult& val, const PyExpr& value_expr) {
    switch (target.kind) {
      case PyExpr::Kind::Name: {
        if (ctx.depth == 0) {
          ctx.vars[target.name] = val.taint;
          if (val.str_value) ctx.consts[target.name] = {*val.str_value, val.exact};
          else ctx.consts.erase(target.name);
        } else {
          ctx.vars[target.name].merge(val.taint);
          ctx.consts.erase(target.name);
        }
        break;
      }
      case PyExpr::Kind::Attribute: {
        if (!target.children.empty() && target.children[0].kind == PyExpr::Kind::Name) {
          std::string key = target.children[0].name + "." + target.name;
          if (ctx.depth == 0) ctx.vars[key] = val.taint;
          else ctx.vars[key].merge(val.taint);
        }
        break;
      }
      case PyExpr::Kind::Subscript: {
        if (!target.children.empty() && target.children[0].kind == PyExpr::Kind::Name)
          ctx.vars[target.children[0].name].merge(val.taint);
        break;
      }
      case PyExpr::Kind::Tuple: {
        if (value_expr.kind == PyExpr::Kind::Tuple &&
            value_expr.children.size() == target.children.size()) {
          for (std::size_t i = 0; i < target.children.size(); ++i) {
            EvalResult part = eval(ctx, value_expr.children[i]);
            apply_assign(ctx, target.children[i], part, value_expr.children[i]);
          }
        } else {
          for (const auto& t : target.children) apply_assign(ctx, t, val, value_expr);
        }
        break;
      }
      case PyExpr::Kind::Starred:
        if (!target.children.empty()) apply_assign(ctx, target.children[0], val, value_expr);
        break;
      default:
        break;
    }
  }

  // ---- expression evaluation ----

  EvalResult eval(Ctx& ctx, const PyExpr& e) {
    switch (e.kind) {
      case PyExpr::Kind::Name: {
        EvalResult r;
        auto vi = ctx.vars.find(e.name);
        if (vi != ctx.vars.end()) r.taint = vi->second;
        auto ci = ctx.consts.find(e.name);
        if (ci != ctx.consts.end()) {
          r.str_value = ci->second.first;
          r.exact = ci->second.second;
        }
        return r;
      }
      case PyExpr::Kind::Str: {
        EvalResult r;
        r.str_value = e.literal;
        r.exact = !e.fstring;
        for (const auto& c : e.children) r.taint.merge(eval(ctx, c).taint);
        return r;
      }
      case PyExpr::Kind::Num:
        return {};
      case PyExpr::Kind::Attribute:
        return eval_attribute(ctx, e);
      case PyExpr::Kind::Subscript:
        return eval_subscript(ctx, e);
      case PyExpr::Kind::Call:
        return eval_call(ctx, e);
      case PyExpr::Kind::BinOp: {
        EvalResult r;
        std::vector<EvalResult> parts;
        for (const auto& c : e.children) parts.push_back(eval(ctx, c));
        for (const auto& p : parts) r.taint.merge(p.taint);
        if (parts.size() == 2 && parts[0].str_value && parts[1].str_value) {
          if (e.name == "+") {
            r.str_value = *parts[0].str_value + *parts[1].str_value;
            r.exact = parts[0].exact && parts[1].exact;
          } else if (e.name == "/") {  // pathlib join idiom
            r.str_value = *parts[0].str_value + "/" + *parts[1].str_value;
            r.exact = parts[0].exact && parts[1].exact;
          }
        }
        return r;
      }
      case PyExpr::Kind::Tuple:
      case PyExpr::Kind::Conditional:
      case PyExpr::Kind::Slice:
      case PyExpr::Kind::Starred:
      case PyExpr::Kind::Lambda: {
        EvalResult r;
        for (const auto& c : e.children) r.taint.merge(eval(ctx, c).taint);
        return r;
      }
    }
    return {};
  }

  EvalResult eval_attribute(Ctx& ctx, const PyExpr& e) {
    std::string path = dotted_path(ctx, e);
    if (path == "os.environ") {
      EvalResult r;
      Site site = site_at(*ctx.mod, e.line);
      emit_detection(CapabilityId::EnvAccessBulk, site);
      TaintOrigin o;
      o.cls = SourceClass::Environment;
      o.cap = CapabilityId::EnvAccessBulk;
      o.site = site;
      r.taint.add(o);
      return r;
    }
    EvalResult r;
    if (!e.children.empty()) r = eval(ctx, e.children[0]);
    r.str_value.reset();
    r.exact = false;
    if (!e.children.empty() && e.children[0].kind == PyExpr::Kind::Name) {
      auto vi = ctx.vars.find(e.children[0].name + "." + e.name);
      if (vi != ctx.vars.end()) r.taint.merge(vi->second);
    }
    return r;
  }

  EvalResult eval_subscript(Ctx& ctx, const PyExpr& e) {
    const PyExpr& base = e.children[0];
    if (dotted_path(ctx, base) == "os.environ") {
      EvalResult idx = eval(ctx, e.children[1]);
      return env_read(ctx, idx.exact && idx.str_value ? *idx.str_value : std::string(),
                      site_at(*ctx.mod, e.line));
    }
    EvalResult r = eval(ctx, base);
    r.taint.merge(eval(ctx, e.children[1]).taint);
    r.str_value.reset();
    r.exact = false;
    return r;
  }

  EvalResult env_read(Ctx& ctx, const std::string& name, Site site) {
    (void)ctx;
    EvalResult r;
    CapabilityId cap = !name.empty() && is_secret_env_name(name) ? CapabilityId::EnvAccessSensitive
                                                                 : CapabilityId::EnvAccessSpecific;
    emit_detection(cap, site);
    TaintOrigin o;
    o.cls = SourceClass::Environment;
    o.cap = cap;
    o.site = site;
    o.note = name;
    r.taint.add(o);
    return r;
  }

  // Builds "a.b.c" for pure name/attribute chains, resolving the head through
  // the module's import aliases; empty string otherwise.
  std::string dotted_path(Ctx& ctx, const PyExpr& e) {
    std::vector<const std::string*> parts;
    const PyExpr* cur = &e;
    while (cur->kind == PyExpr::Kind::Attribute) {
      parts.push_back(&cur->name);
      cur = &cur->children[0];
    }
    if (cur->kind != PyExpr::Kind::Name) return "";
    std::string head = cur->name;
    auto it = ctx.imports.find(head);
    if (it != ctx.imports.end()) head = it->second;
    std::string path = head;
    for (auto pi = parts.rbegin(); pi != parts.rend(); ++pi) path += "." + **pi;
    return path;
  }

  EvalResult eval_call(Ctx& ctx, const PyExpr& call) {
    const PyExpr& func = call.func();
    std::string path = dotted_path(ctx, func);
    const CallPattern* pattern = path.empty() ? nullptr : lookup_call(path);
    Site site = site_at(*ctx.mod, call.line);

    // Evaluate every argument exactly once (children[1..]): positionals first,
    // then kwargs, matching the child layout.
    std::vector<EvalResult> args;
    args.reserve(call.children.size() - 1);
    for (std::size_t i = 1; i < call.children.size(); ++i) args.push_back(eval(ctx, call.children[i]));

    if (pattern) return apply_pattern(ctx, *pattern, call, args, site);

    // Method fallback: evaluate the receiver, then dispatch on the attr name.
    EvalResult base;
    if (func.kind == PyExpr::Kind::Attribute) base = eval(ctx, func.children[0]);

    if (func.kind == PyExpr::Kind::Attribute) {
      EvalResult handled;
      if (method_dispatch(ctx, call, func, base, args, site, handled)) return handled;
    }

    // Package-local function: apply summaries by name.
    EvalResult viaFns;
    if (apply_local_functions(ctx, call, func, args, viaFns)) {
      viaFns.taint.merge(base.taint);
      return viaFns;
    }

    EvalResult r;
    r.taint = base.taint;
    for (const auto& a : args) r.taint.merge(a.taint);
    return r;
  }

  const EvalResult* kwarg(const PyExpr& call, const std::vector<EvalResult>& args,
                          const std::string& name) const {
    for (std::size_t i = 0; i < call.kwarg_names.size(); ++i)
      if (call.kwarg_names[i] == name) return &args[call.pos_arg_count + i];
    return nullptr;
  }

  const PyExpr* kwarg_expr(const PyExpr& call, const std::string& name) const {
    for (std::size_t i = 0; i < call.kwarg_names.size(); ++i)
      if (call.kwarg_names[i] == name) return &call.children[1 + call.pos_arg_count + i];
    return nullptr;
  }

  EvalResult apply_pattern(Ctx& ctx, const CallPattern& p, const PyExpr& call,
                           const std::vector<EvalResult>& args, Site site) {
    switch (p.action) {
      case Action::EnvGet: {
        std::string name;
        if (!args.empty() && args[0].exact && args[0].str_value) name = *args[0].str_value;
        return env_read(ctx, name, site);
      }
      case Action::EnvBulk: {
        EvalResult r;
        emit_detection(CapabilityId::EnvAccessBulk, site);
        TaintOrigin o;
        o.cls = SourceClass::Environment;
        o.cap = CapabilityId::EnvAccessBulk;
        o.site = site;
        r.taint.add(o);
        return r;
      }
      case Action::Http: {
        emit_detection(CapabilityId::NetworkOutboundHttp, site);
        for (const auto& a : args) sink_event(ctx, CapabilityId::NetworkOutboundHttp, site, a.taint);
        EvalResult r;
        TaintOrigin o;
        o.cls = SourceClass::NetworkResponse;
        o.cap = CapabilityId::NetworkOutboundHttp;
        o.site = site;
        r.taint.add(o);
        return r;
      }
      case Action::UrlRetrieve: {
        emit_detection(CapabilityId::NetworkOutboundHttp, site);
        std::string dest;
        if (args.size() > 1 && args[1].exact && args[1].str_value) dest = *args[1].str_value;
        CapabilityId wcap = classify_write_path(dest);
        emit_detection(wcap, site);
        for (const auto& a : args) sink_event(ctx, CapabilityId::NetworkOutboundHttp, site, a.taint);
        TaintOrigin net;
        net.cls = SourceClass::NetworkResponse;
        net.cap = CapabilityId::NetworkOutboundHttp;
        net.site = site;
        emit_chain(net, wcap, site);
        if (!dest.empty()) {
          TaintOrigin stored = net;
          append_transform(stored, wcap, site);
          dropper_paths_[dest] = stored;
        }
        return {};
      }
      case Action::SocketNew: {
        EvalResult r;
        TaintOrigin o;
        o.marker = TaintOrigin::Marker::SocketHandle;
        o.cap = CapabilityId::NetworkOutboundSocket;
        o.site = site;
        r.taint.add(o);
        return r;
      }
      case Action::SocketConnect: {
        emit_detection(CapabilityId::NetworkOutboundSocket, site);
        for (const auto& a : args) sink_event(ctx, CapabilityId::NetworkOutboundSocket, site, a.taint);
        EvalResult r;
        TaintOrigin o;
        o.marker = TaintOrigin::Marker::SocketHandle;
        o.cap = CapabilityId::NetworkOutboundSocket;
        o.site = site;
        r.taint.add(o);
        TaintOrigin net;
        net.cls = SourceClass::NetworkResponse;
        net.cap = CapabilityId::NetworkOutboundSocket;
        net.site = site;
        r.taint.add(net);
        return r;
      }
      case Action::Open:
        return open_call(call, args, site);
      case Action::PathNew: {
        EvalResult r;
        if (!args.empty()) {
          r = args[0];
        } else {
          r.str_value = "~";  // Path.home()
          r.exact = true;
        }
        return r;
      }
      case Action::PathJoin: {
        EvalResult r;
        bool all = !args.empty();
        bool exact = true;
        std::string joined;
        for (std::size_t i = 0; i < args.size(); ++i) {
          r.taint.merge(args[i].taint);
          if (!args[i].str_value) { all = false; continue; }
          if (i) joined += "/";
          joined += *args[i].str_value;
          exact = exact && args[i].exact;
        }
        if (all) {
          r.str_value = joined;
          r.exact = exact;
        }
        return r;
      }
      case Action::Expanduser: {
        EvalResult r;
        if (!args.empty()) r = args[0];
        return r;
      }
      case Action::ShutilCopy: {
        std::string src = !args.empty() && args[0].str_value ? *args[0].str_value : "";
        std::string dst = args.size() > 1 && args[1].str_value ? *args[1].str_value : "";
        CapabilityId rcap = classify_read_path(src);
        CapabilityId wcap = classify_write_path(dst);
        emit_detection(rcap, site);
        emit_detection(wcap, site);
        TaintOrigin o;
        o.cls = SourceClass::FileRead;
        o.cap = rcap;
        o.site = site;
        emit_chain(o, wcap, site);
        return {};
      }
      case Action::Enumerate:
        emit_detection(CapabilityId::FileEnumerate, site);
        return {};
      case Action::Delete:
        emit_detection(CapabilityId::FileDelete, site);
        return {};
      case Action::Subproc: {
        CapabilityId cap = CapabilityId::ProcessExec;
        const PyExpr* shell = kwarg_expr(call, "shell");
        if (shell && shell->kind == PyExpr::Kind::Name && shell->name == "True")
          cap = CapabilityId::ProcessExecShell;
        return exec_sink(ctx, cap, call, args, site);
      }
      case Action::ShellExec:
        return exec_sink(ctx, CapabilityId::ProcessExecShell, call, args, site);
      case Action::EvalCall:
      case Action::ExecCall: {
        bool literal_code = call.pos_arg_count >= 1 &&
                            call.children[1].kind == PyExpr::Kind::Str &&
                            !call.children[1].fstring;
        if (literal_code) {
          emit_detection(CapabilityId::CodeEval, site);
          return {};
        }
        return exec_sink(ctx, CapabilityId::CodeEvalDynamic, call, args, site);
      }
      case Action::Transform: {
        emit_detection(p.cap, site);
        EvalResult r;
        for (const auto& a : args)
          for (TaintOrigin o : a.taint.origins) {
            if (o.marker != TaintOrigin::Marker::None) continue;
            append_transform(o, p.cap, site);
            r.taint.add(o);
          }
        return r;
      }
      case Action::CredRead: {
        emit_detection(CapabilityId::CredentialRead, site);
        EvalResult r;
        TaintOrigin o;
        o.cls = SourceClass::CredentialStore;
        o.cap = CapabilityId::CredentialRead;
        o.site = site;
        r.taint.add(o);
        return r;
      }
      case Action::CredCreate:
        emit_detection(CapabilityId::CredentialCreate, site);
        return {};
      case Action::UserInput: {
        emit_detection(CapabilityId::FileReadProject, site);
        EvalResult r;
        TaintOrigin o;
        o.cls = SourceClass::UserInput;
        o.cap = CapabilityId::FileReadProject;
        o.site = site;
        r.taint.add(o);
        return r;
      }
      case Action::JsonDump: {
        if (args.size() > 1) {
          for (const auto& h : args[1].taint.origins)
            if (h.marker == TaintOrigin::Marker::WriteHandle)
              write_through_handle(ctx, h, args[0].taint, site);
        }
        return {};
      }
    }
    return {};
  }

  EvalResult open_call(const PyExpr& call, const std::vector<EvalResult>& args, Site site) {
    std::string path;
    bool exact_path = false;
    if (!args.empty() && args[0].str_value) {
      path = *args[0].str_value;
      exact_path = args[0].exact;
    }
    std::string mode = "r";
    if (args.size() > 1 && call.pos_arg_count >= 2 && args[1].str_value) mode = *args[1].str_value;
    if (const EvalResult* m = kwarg(call, args, "mode"); m && m->str_value) mode = *m->str_value;

    EvalResult r;
    bool writes = mode.find_first_of("wax") != std::string::npos;
    bool reads = mode.find('r') != std::string::npos || mode.find('+') != std::string::npos || !writes;
    if (writes) {
      CapabilityId wcap = classify_write_path(path);
      emit_detection(wcap, site);
      TaintOrigin h;
      h.marker = TaintOrigin::Marker::WriteHandle;
      h.cap = wcap;
      h.site = site;
      if (exact_path) h.note = path;
      r.taint.add(h);
    }
    if (reads) {
      CapabilityId rcap = classify_read_path(path);
      emit_detection(rcap, site);
      TaintOrigin o;
      o.cls = SourceClass::FileRead;
      o.cap = rcap;
      o.site = site;
      r.taint.add(o);
      if (exact_path) {
        auto it = dropper_paths_.find(path);
        if (it != dropper_paths_.end()) r.taint.add(it->second);  // reading back downloaded content
      }
    }
    if (!args.empty()) r.taint.merge(args[0].taint);
    return r;
  }

  EvalResult exec_sink(Ctx& ctx, CapabilityId cap, const PyExpr& call,
                       const std::vector<EvalResult>& args, Site site) {
    emit_detection(cap, site);
    for (const auto& a : args) sink_event(ctx, cap, site, a.taint);
    // Dropper linkage: executing a literal path that earlier received
    // network-fetched content closes the download -> write -> execute flow.
    if (!dropper_paths_.empty()) {
      std::vector<std::string> consts;
      for (std::size_t i = 1; i < call.children.size(); ++i)
        collect_string_consts(ctx, call.children[i], consts);
      for (const auto& s : consts)
        for (const auto& [dpath, origin] : dropper_paths_)
          if (s.find(dpath) != std::string::npos) emit_chain(origin, cap, site);
    }
    return {};
  }

  void collect_string_consts(Ctx& ctx, const PyExpr& e, std::vector<std::string>& out) {
    if (out.size() > 32) return;
    if (e.kind == PyExpr::Kind::Str && !e.fstring) {
      out.push_back(e.literal);
      return;
    }
    if (e.kind == PyExpr::Kind::Name) {
      auto ci = ctx.consts.find(e.name);
      if (ci != ctx.consts.end() && ci->second.second) out.push_back(ci->second.first);
      return;
    }
    for (const auto& c : e.children) collect_string_consts(ctx, c, out);
  }

  bool method_dispatch(Ctx& ctx, const PyExpr& call, const PyExpr& func, const EvalResult& base,
                       const std::vector<EvalResult>& args, Site site, EvalResult& out) {
    const std::string& m = func.name;
    auto base_has = [&](TaintOrigin::Marker marker) {
      for (const auto& o : base.taint.origins)
        if (o.marker == marker) return true;
      return false;
    };

    if ((m == "write" || m == "writelines") && base_has(TaintOrigin::Marker::WriteHandle)) {
      for (const auto& h : base.taint.origins)
        if (h.marker == TaintOrigin::Marker::WriteHandle)
          for (const auto& a : args) write_through_handle(ctx, h, a.taint, site);
      out = {};
      return true;
    }
    if ((m == "send" || m == "sendall" || m == "sendto" || m == "connect") &&
        base_has(TaintOrigin::Marker::SocketHandle)) {
      emit_detection(CapabilityId::NetworkOutboundSocket, site);
      for (const auto& a : args) sink_event(ctx, CapabilityId::NetworkOutboundSocket, site, a.taint);
      out = {};
      return true;
    }
    if ((m == "bind" || m == "listen" || m == "accept") && base_has(TaintOrigin::Marker::SocketHandle)) {
      emit_detection(CapabilityId::NetworkInbound, site);
      out = {};
      return true;
    }
    if ((m == "recv" || m == "recvfrom") && base_has(TaintOrigin::Marker::SocketHandle)) {
      EvalResult r;
      TaintOrigin o;
      o.cls = SourceClass::NetworkResponse;
      o.cap = CapabilityId::NetworkOutboundSocket;
      o.site = site;
      r.taint.add(o);
      out = std::move(r);
      return true;
    }
    if (m == "read_text" || m == "read_bytes") {
      std::string path = base.str_value ? *base.str_value : "";
      CapabilityId cap = classify_read_path(path);
      emit_detection(cap, site);
      EvalResult r;
      TaintOrigin o;
      o.cls = SourceClass::FileRead;
      o.cap = cap;
      o.site = site;
      r.taint.add(o);
      if (base.exact && base.str_value) {
        auto it = dropper_paths_.find(*base.str_value);
        if (it != dropper_paths_.end()) r.taint.add(it->second);
      }
      out = std::move(r);
      return true;
    }
    if (m == "write_text" || m == "write_bytes") {
      std::string path = base.str_value ? *base.str_value : "";
      CapabilityId cap = classify_write_path(path);
      emit_detection(cap, site);
      TaintOrigin h;
      h.marker = TaintOrigin::Marker::WriteHandle;
      h.cap = cap;
      h.site = site;
      if (base.exact && base.str_value) h.note = *base.str_value;
      for (const auto& a : args) write_through_handle(ctx, h, a.taint, site);
      out = {};
      return true;
    }
    if (m == "open" && base.str_value) {  // pathlib Path.open; mode arrives as arg0
      EvalResult r;
      std::string path = *base.str_value;
      std::string mode = "r";
      if (!args.empty() && call.pos_arg_count >= 1 && args[0].str_value) mode = *args[0].str_value;
      if (const EvalResult* mk = kwarg(call, args, "mode"); mk && mk->str_value) mode = *mk->str_value;
      bool writes = mode.find_first_of("wax") != std::string::npos;
      if (writes) {
        CapabilityId wcap = classify_write_path(path);
        emit_detection(wcap, site);
        TaintOrigin h;
        h.marker = TaintOrigin::Marker::WriteHandle;
        h.cap = wcap;
        h.site = site;
        if (base.exact) h.note = path;
        r.taint.add(h);
      } else {
        CapabilityId rcap = classify_read_path(path);
        emit_detection(rcap, site);
        TaintOrigin o;
        o.cls = SourceClass::FileRead;
        o.cap = rcap;
        o.site = site;
        r.taint.add(o);
      }
      out = std::move(r);
      return true;
    }
    if (m == "unlink" && base.str_value) {
      emit_detection(CapabilityId::FileDelete, site);
      out = {};
      return true;
    }
    if ((m == "iterdir" || m == "rglob") || (m == "glob" && base.str_value)) {
      emit_detection(CapabilityId::FileEnumerate, site);
      out = {};
      return true;
    }
    if (m == "expanduser" || m == "resolve" || m == "absolute") {
      out = base;
      return true;
    }
    if (m == "encrypt" || m == "decrypt") {
      emit_detection(CapabilityId::EncodingCrypto, site);
      EvalResult r;
      for (const auto& a : args)
        for (TaintOrigin o : a.taint.origins) {
          if (o.marker != TaintOrigin::Marker::None) continue;
          append_transform(o, CapabilityId::EncodingCrypto, site);
          r.taint.add(o);
        }
      for (TaintOrigin o : base.taint.origins) {
        if (o.marker != TaintOrigin::Marker::None) continue;
        append_transform(o, CapabilityId::EncodingCrypto, site);
        r.taint.add(o);
      }
      out = std::move(r);
      return true;
    }
    if (m == "update" || m == "append" || m == "add" || m == "extend") {
      // Accumulator methods push argument taint back into the receiver.
      if (func.children[0].kind == PyExpr::Kind::Name)
        for (const auto& a : args) ctx.vars[func.children[0].name].merge(a.taint);
      out = base;
      return true;
    }
    return false;
  }

  void write_through_handle(Ctx& ctx, const TaintOrigin& handle, const TaintSet& data, Site site) {
    sink_event(ctx, handle.cap, site, data);
    if (handle.note.empty()) return;
    for (const auto& o : data.origins) {
      if (o.cls == SourceClass::NetworkResponse && o.param < 0 &&
          o.marker == TaintOrigin::Marker::None) {
        TaintOrigin stored = o;
        append_transform(stored, handle.cap, site);
        dropper_paths_[handle.note] = stored;
        break;
      }
    }
  }

  bool apply_local_functions(Ctx& ctx, const PyExpr& call, const PyExpr& func,
                             const std::vector<EvalResult>& args, EvalResult& out) {
    const std::string& name = func.name;
    if (name.empty()) return false;
    auto [lo, hi] = fn_index_.equal_range(name);
    if (lo == hi) return false;
    bool attr_call = func.kind == PyExpr::Kind::Attribute;
    bool any = false;
    for (auto it = lo; it != hi; ++it) {
      const FnInfo& fn = fns_[it->second];
      const auto& params = fn.def->params;
      int shift = (attr_call && !params.empty() && (params[0] == "self" || params[0] == "cls")) ? 1 : 0;
      any = true;
      auto arg_slot = [&](int param) -> const EvalResult* {
        int pos = param - shift;
        if (pos >= 0 && static_cast<std::size_t>(pos) < call.pos_arg_count)
          return &args[static_cast<std::size_t>(pos)];
        if (param >= 0 && static_cast<std::size_t>(param) < params.size()) {
          const std::string& pname = params[static_cast<std::size_t>(param)];
          for (std::size_t k = 0; k < call.kwarg_names.size(); ++k)
            if (call.kwarg_names[k] == pname) return &args[call.pos_arg_count + k];
        }
        return nullptr;
      };
      for (const auto& ps : fn.summary.param_sinks) {
        const EvalResult* arg = arg_slot(ps.param);
        if (!arg) continue;
        for (const auto& o : arg->taint.origins) {
          if (o.marker != TaintOrigin::Marker::None) continue;
          if (o.param >= 0) {
            if (ctx.summary) {
              FnSummary::ParamSink composed{o.param, ps.sink, o.transforms, ps.sink_site};
              for (const auto& t : ps.transforms) composed.transforms.push_back(t);
              auto& v = ctx.summary->param_sinks;
              if (std::find(v.begin(), v.end(), composed) == v.end() && v.size() < 64)
                v.push_back(std::move(composed));
            }
          } else {
            TaintOrigin composed = o;
            for (const auto& t : ps.transforms) append_transform(composed, t.first, t.second);
            composed.inter = true;
            emit_chain(composed, ps.sink, ps.sink_site);
          }
        }
      }
      for (const auto& pr : fn.summary.param_returns) {
        const EvalResult* arg = arg_slot(pr.param);
        if (!arg) continue;
        for (TaintOrigin o : arg->taint.origins) {
          if (o.marker != TaintOrigin::Marker::None) continue;
          for (const auto& t : pr.transforms) append_transform(o, t.first, t.second);
          o.inter = true;
          out.taint.add(o);
        }
      }
      for (TaintOrigin o : fn.summary.returns.origins) {
        o.inter = true;
        out.taint.add(o);
      }
    }
    return any;
  }

  // ---- event emission ----

  void sink_event(Ctx& ctx, CapabilityId sink, Site site, const TaintSet& data) {
    for (const auto& o : data.origins) {
      if (o.marker != TaintOrigin::Marker::None) continue;
      if (o.param >= 0) {
        if (!ctx.summary) continue;
        FnSummary::ParamSink ps{o.param, sink, o.transforms, site};
        auto& v = ctx.summary->param_sinks;
        if (std::find(v.begin(), v.end(), ps) == v.end() && v.size() < 64) v.push_back(std::move(ps));
        continue;
      }
      emit_chain(o, sink, site);
    }
  }

  void emit_chain(const TaintOrigin& o, CapabilityId sink, Site sink_site) {
    if (!emit_ || out_.chains.size() >= kMaxChains) return;
    FlowChain c;
    c.source = o.cap;
    c.sites.push_back(o.site);
    for (const auto& [cap, site] : o.transforms) {
      c.transforms.push_back(cap);
      c.sites.push_back(site);
    }
    c.sink = sink;
    c.sites.push_back(sink_site);
    c.scope = o.inter ? ChainScope::InterProcedural : ChainScope::IntraProcedural;
    c.source_class = o.cls;
    if (std::find(out_.chains.begin(), out_.chains.end(), c) == out_.chains.end())
      out_.chains.push_back(std::move(c));
  }

  void emit_detection(CapabilityId cap, Site site) {
    if (!emit_ || out_.detections.size() >= kMaxDetections) return;
    Detection d;
    d.capability = cap;
    d.file = site.file;
    d.line = site.line;
    d.analyzer = AnalyzerKind::PythonAst;
    d.sites.push_back(site);
    d.evidence = snippet_at(site);
    out_.detections.push_back(std::move(d));
  }

  Site site_at(const Module& m, std::size_t rel_line) const {
    Site s;
    s.file = m.doc->path;
    s.line = m.doc->start_line + (rel_line > 0 ? rel_line - 1 : 0);
    return s;
  }

  std::string snippet_at(const Site& site) const {
    for (const auto& m : modules_) {
      if (m.doc->path != site.file) continue;
      std::size_t rel = site.line >= m.doc->start_line ? site.line - m.doc->start_line : 0;
      if (rel < m.lines.size()) return trim_copy(m.lines[rel]);
    }
    return "";
  }

  void fallback_scan(Module& m);

  void dedupe() {
    std::set<std::tuple<int, std::string, std::size_t>> seen;
    std::vector<Detection> kept;
    for (auto& d : out_.detections) {
      auto key = std::make_tuple(static_cast<int>(d.capability), d.file, d.line);
      if (seen.insert(key).second) kept.push_back(std::move(d));
    }
    out_.detections = std::move(kept);
  }

  std::vector<Module> modules_;
  std::vector<FnInfo> fns_;
  std::multimap<std::string, std::size_t> fn_index_;
  std::map<std::string, TaintOrigin> dropper_paths_;
  AnalyzerOutput out_;
  bool emit_ = false;
};

// Literal line scanner used when a file does not parse. Same capability
// vocabulary, no data flow; co-occurrence pairing supplies coarse chains.
struct FallbackHit {
  const char* needle;
  CapabilityId cap;
  bool word_boundary;
};

const std::vector<FallbackHit>& fallback_hits() {
  static const std::vector<FallbackHit> kHits = {
      {"requests.get", CapabilityId::NetworkOutboundHttp, false},
      {"requests.post", CapabilityId::NetworkOutboundHttp, false},
      {"requests.put", CapabilityId::NetworkOutboundHttp, false},
      {"requests.delete", CapabilityId::NetworkOutboundHttp, false},
      {"requests.request", CapabilityId::NetworkOutboundHttp, false},
      {"httpx.", CapabilityId::NetworkOutboundHttp, false},
      {"urllib.request.urlopen", CapabilityId::NetworkOutboundHttp, false},
      {"socket.socket", CapabilityId::NetworkOutboundSocket, false},
      {"socket.create_connection", CapabilityId::NetworkOutboundSocket, false},
      {"subprocess.", CapabilityId::ProcessExec, false},
      {"os.system(", CapabilityId::ProcessExecShell, false},
      {"os.popen(", CapabilityId::ProcessExecShell, false},
      {"eval(", CapabilityId::CodeEvalDynamic, true},
      {"exec(", CapabilityId::CodeEvalDynamic, true},
      {"base64.", CapabilityId::EncodingBase64, false},
      {"zlib.", CapabilityId::EncodingCompression, false},
      {"gzip.", CapabilityId::EncodingCompression, false},
      {"hashlib.", CapabilityId::EncodingCrypto, false},
      {"hmac.new", CapabilityId::EncodingCrypto, false},
      {"keyring.get_password", CapabilityId::CredentialRead, false},
      {"keyring.set_password", CapabilityId::CredentialCreate, false},
      {"os.listdir", CapabilityId::FileEnumerate, false},
      {"os.walk", CapabilityId::FileEnumerate, false},
      {"glob.glob", CapabilityId::FileEnumerate, false},
      {"os.remove", CapabilityId::FileDelete, false},
      {"shutil.rmtree", CapabilityId::FileDelete, false},
      {"input(", CapabilityId::FileReadProject, true},
  };
  return kHits;
}

bool word_boundary_before(const std::string& line, std::size_t pos) {
  if (pos == 0) return true;
  char c = line[pos - 1];
  return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.');
}

std::optional<std::string> first_quoted(const std::string& line, std::size_t from) {
  std::size_t q = line.find_first_of("\"'", from);
  if (q == std::string::npos) return std::nullopt;
  char quote = line[q];
  std::size_t end = line.find(quote, q + 1);
  if (end == std::string::npos) return std::nullopt;
  return line.substr(q + 1, end - q - 1);
}

void PyAnalysis::fallback_scan(Module& m) {
  std::vector<Detection> local;
  for (std::size_t i = 0; i < m.lines.size(); ++i) {
    const std::string& line = m.lines[i];
    Site site{m.doc->path, m.doc->start_line + i};
    auto hit = [&](CapabilityId cap) {
      if (out_.detections.size() + local.size() >= kMaxDetections) return;
      Detection d;
      d.capability = cap;
      d.file = site.file;
      d.line = site.line;
      d.analyzer = AnalyzerKind::PythonAst;
      d.sites.push_back(site);
      d.evidence = trim_copy(line);
      local.push_back(std::move(d));
    };
    for (const auto& h : fallback_hits()) {
      std::size_t pos = line.find(h.needle);
      if (pos == std::string::npos) continue;
      if (h.word_boundary && !word_boundary_before(line, pos)) continue;
      CapabilityId cap = h.cap;
      if (cap == CapabilityId::ProcessExec && line.find("shell=True") != std::string::npos)
        cap = CapabilityId::ProcessExecShell;
      hit(cap);
    }
    std::size_t env = line.find("os.environ");
    if (env == std::string::npos) env = line.find("os.getenv");
    if (env != std::string::npos) {
      auto name = first_quoted(line, env);
      bool bulk = line.find("os.environ.items") != std::string::npos ||
                  line.find("dict(os.environ") != std::string::npos;
      if (bulk) hit(CapabilityId::EnvAccessBulk);
      else if (name && is_secret_env_name(*name)) hit(CapabilityId::EnvAccessSensitive);
      else hit(CapabilityId::EnvAccessSpecific);
    }
    std::size_t op = line.find("open(");
    if (op != std::string::npos && word_boundary_before(line, op)) {
      auto path = first_quoted(line, op);
      std::string p = path.value_or("");
      bool writes = false;
      std::size_t close = line.find(')', op);
      std::string argseg = close == std::string::npos ? line.substr(op) : line.substr(op, close - op);
      if (argseg.find("'w") != std::string::npos || argseg.find("\"w") != std::string::npos ||
          argseg.find("'a") != std::string::npos || argseg.find("\"a") != std::string::npos)
        writes = true;
      if (writes) hit(classify_write_path(p));
      else hit(classify_read_path(p));
    }
  }
  add_cooccurrence_chains(local, out_.chains);
  for (auto& d : local) out_.detections.push_back(std::move(d));
}

}  // namespace

// Shared by the literal analyzers: pair first-seen sensitive-read sources with
// first-seen network sinks, and network sources with execute sinks, per file.
void add_cooccurrence_chains(const std::vector<Detection>& dets,
                             std::vector<FlowChain>& chains) {
  auto first_site = [&](CapabilityId cap) -> const Detection* {
    for (const auto& d : dets)
      if (d.capability == cap) return &d;
    return nullptr;
  };
  static const CapabilityId kSources[] = {
      CapabilityId::EnvAccessSpecific, CapabilityId::EnvAccessBulk,
      CapabilityId::EnvAccessSensitive, CapabilityId::FileReadProject,
      CapabilityId::FileReadSensitive,  CapabilityId::FileReadHome,
  };
  static const CapabilityId kNetSinks[] = {CapabilityId::NetworkOutboundHttp,
                                           CapabilityId::NetworkOutboundSocket};
  static const CapabilityId kExecSinks[] = {
      CapabilityId::ProcessExec, CapabilityId::ProcessExecShell, CapabilityId::CodeEval,
      CapabilityId::CodeEvalDynamic};
  auto push = [&](const Detection* src, const Detection* snk, SourceClass cls) {
    if (!src || !snk) return;
    FlowChain c;
    c.source = src->capability;
    c.sink = snk->capability;
    c.sites = {Site{src->file, src->line}, Site{snk->file, snk->line}};
    c.scope = ChainScope::IntraFileCoOccurrence;
    c.source_class = cls;
    if (std::find(chains.begin(), chains.end(), c) == chains.end() && chains.size() < kMaxChains)
      chains.push_back(std::move(c));
  };
  for (CapabilityId src : kSources) {
    const Detection* s = first_site(src);
    if (!s) continue;
    SourceClass cls = category_of(src) == CapabilityCategory::Environment
                          ? SourceClass::Environment
                          : SourceClass::FileRead;
    for (CapabilityId snk : kNetSinks) push(s, first_site(snk), cls);
  }
  for (CapabilityId net : kNetSinks) {
    const Detection* s = first_site(net);
    if (!s) continue;
    for (CapabilityId ex : kExecSinks) push(s, first_site(ex), SourceClass::NetworkResponse);
  }
}

AnalyzerOutput analyze_python(const std::vector<const SourceDocument*>& files, bool parallel) {
  PyAnalysis a;
  return a.run(files, parallel);
}

std::string python_patterns_manifest_json() {
  nlohmann::ordered_json j;
  j["analyzer"] = "python-ast";
  j["version"] = "py-patterns/v1";
  nlohmann::ordered_json calls = nlohmann::ordered_json::array();
  for (const auto& p : call_table()) {
    nlohmann::ordered_json row;
    row["path"] = p.path;
    switch (p.action) {
      case Action::EnvGet: row["action"] = "env-read"; break;
      case Action::EnvBulk: row["action"] = "env-bulk"; break;
      case Action::Http: row["action"] = "http"; break;
      case Action::UrlRetrieve: row["action"] = "url-retrieve"; break;
      case Action::SocketNew: row["action"] = "socket-new"; break;
      case Action::SocketConnect: row["action"] = "socket-connect"; break;
      case Action::Open: row["action"] = "open"; break;
      case Action::PathNew: row["action"] = "path"; break;
      case Action::PathJoin: row["action"] = "path-join"; break;
      case Action::Expanduser: row["action"] = "expand"; break;
      case Action::ShutilCopy: row["action"] = "copy"; break;
      case Action::Enumerate: row["action"] = "enumerate"; break;
      case Action::Delete: row["action"] = "delete"; break;
      case Action::Subproc: row["action"] = "process-exec"; break;
      case Action::ShellExec: row["action"] = "shell-exec"; break;
      case Action::EvalCall: row["action"] = "eval"; break;
      case Action::ExecCall: row["action"] = "exec"; break;
      case Action::Transform:
        row["action"] = "transform";
        row["capability"] = std::string(format_capability(p.cap));
        break;
      case Action::CredRead: row["action"] = "credential-read"; break;
      case Action::CredCreate: row["action"] = "credential-create"; break;
      case Action::UserInput: row["action"] = "user-input"; break;
      case Action::JsonDump: row["action"] = "json-dump"; break;
    }
    calls.push_back(std::move(row));
  }
  j["calls"] = std::move(calls);
  nlohmann::ordered_json fb = nlohmann::ordered_json::array();
  for (const auto& h : fallback_hits()) {
    nlohmann::ordered_json row;
    row["needle"] = h.needle;
    row["capability"] = std::string(format_capability(h.cap));
    fb.push_back(std::move(row));
  }
  j["fallback"] = std::move(fb);
  return j.dump(2) + "\n";
}

}  // namespace biv
