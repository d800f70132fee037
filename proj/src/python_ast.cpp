#include "biv/python_ast.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>

namespace biv {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct StringPrefix {
  bool raw = false;
  bool fstr = false;
  bool bytes = false;
};

bool parse_string_prefix(const std::string& name, StringPrefix& out) {
  if (name.size() > 3) return false;
  StringPrefix p;
  for (char c : name) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
      case 'r': p.raw = true; break;
      case 'f': p.fstr = true; break;
      case 'b': p.bytes = true; break;
      case 'u': break;
      default: return false;
    }
  }
  out = p;
  return true;
}

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Multi-character operators, longest first so greedy matching is correct.
constexpr std::array<const char*, 21> kOps3 = {"**=", "//=", ">>=", "<<=", "...",
                                              "!=",  "==",  "<=",  ">=",  "->",
                                              ":=",  "+=",  "-=",  "*=",  "/=",
                                              "%=",  "&=",  "|=",  "^=",  "@=",
                                              "**"};
constexpr const char* kOps2b = "//<<>>";  // pairs: //, <<, >>

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  std::vector<PyTok> run() {
    indents_.push_back(0);
    at_line_start_ = true;
    while (pos_ < text_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indent()) continue;  // blank/comment line consumed
      }
      at_line_start_ = false;
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') { ++pos_; ++col_; continue; }
      if (c == '#') { skip_to_eol(); continue; }
      if (c == '\\' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '\n' || text_[pos_ + 1] == '\r')) {
        pos_ += (text_[pos_ + 1] == '\r' && pos_ + 2 < text_.size() && text_[pos_ + 2] == '\n') ? 3 : 2;
        new_line_counters();
        continue;
      }
      if (c == '\n' || c == '\r') {
        consume_newline();
        if (depth_ == 0) {
          if (emitted_on_line_) push(PyTokKind::Newline, "\n");
          at_line_start_ = true;
          emitted_on_line_ = false;
        }
        continue;
      }
      if (is_ident_start(c)) { lex_name_or_string(); continue; }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (c == '"' || c == '\'') { lex_string(StringPrefix{}); continue; }
      lex_op();
    }
    if (emitted_on_line_) push(PyTokKind::Newline, "\n");
    while (indents_.size() > 1) { indents_.pop_back(); push(PyTokKind::Dedent, ""); }
    push(PyTokKind::End, "");
    return std::move(toks_);
  }

 private:
  void push(PyTokKind kind, std::string text) {
    PyTok t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    toks_.push_back(std::move(t));
    if (kind != PyTokKind::Newline && kind != PyTokKind::Indent && kind != PyTokKind::Dedent)
      emitted_on_line_ = true;
  }

  void new_line_counters() { ++line_; col_ = 1; }

  void consume_newline() {
    if (text_[pos_] == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') pos_ += 2;
    else ++pos_;
    new_line_counters();
  }

  void skip_to_eol() {
    while (pos_ < text_.size() && text_[pos_] != '\n' && text_[pos_] != '\r') { ++pos_; ++col_; }
  }

  // Returns false when the line held nothing and was consumed whole.
  bool handle_indent() {
    std::size_t col = 0;
    std::size_t p = pos_;
    while (p < text_.size()) {
      if (text_[p] == ' ') { ++col; ++p; }
      else if (text_[p] == '\t') { col = (col / 8 + 1) * 8; ++p; }
      else if (text_[p] == '\f') { ++p; }
      else break;
    }
    if (p >= text_.size()) { pos_ = p; return false; }
    if (text_[p] == '\n' || text_[p] == '\r' || text_[p] == '#') {
      pos_ = p;
      if (text_[p] == '#') skip_to_eol();
      if (pos_ < text_.size()) consume_newline();
      return false;
    }
    pos_ = p;
    col_ = col + 1;
    if (col > indents_.back()) {
      indents_.push_back(col);
      push(PyTokKind::Indent, "");
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        push(PyTokKind::Dedent, "");
      }
      if (col != indents_.back()) throw PyParseError(line_, "inconsistent dedent");
    }
    emitted_on_line_ = false;
    return true;
  }

  void lex_name_or_string() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) { ++pos_; ++col_; }
    std::string name = text_.substr(start, pos_ - start);
    StringPrefix prefix;
    if (pos_ < text_.size() && (text_[pos_] == '"' || text_[pos_] == '\'') &&
        parse_string_prefix(name, prefix)) {
      lex_string(prefix);
      return;
    }
    push(PyTokKind::Name, std::move(name));
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
            text_[pos_] == '.' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
      ++col_;
    }
    push(PyTokKind::Number, text_.substr(start, pos_ - start));
  }

  void lex_string(StringPrefix prefix) {
    char quote = text_[pos_];
    std::size_t tok_line = line_;
    std::size_t tok_col = col_;
    bool triple = pos_ + 2 < text_.size() && text_[pos_ + 1] == quote && text_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    col_ += triple ? 3 : 1;
    std::string value;
    std::vector<std::string> fields;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == quote) {
        if (!triple) { ++pos_; ++col_; break; }
        if (pos_ + 2 < text_.size() && text_[pos_ + 1] == quote && text_[pos_ + 2] == quote) {
          pos_ += 3;
          col_ += 3;
          break;
        }
        value.push_back(c);
        ++pos_;
        ++col_;
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) throw PyParseError(line_, "unterminated string");
        consume_newline();
        value.push_back('\n');
        continue;
      }
      if (c == '\\' && pos_ + 1 < text_.size()) {
        char next = text_[pos_ + 1];
        if (next == '\n' || next == '\r') {
          pos_ += (next == '\r' && pos_ + 2 < text_.size() && text_[pos_ + 2] == '\n') ? 3 : 2;
          new_line_counters();
          continue;
        }
        if (prefix.raw) {
          value.push_back('\\');
          value.push_back(next);
        } else {
          switch (next) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case 'r': value.push_back('\r'); break;
            case '0': value.push_back('\0'); break;
            case '\\': value.push_back('\\'); break;
            case '\'': value.push_back('\''); break;
            case '"': value.push_back('"'); break;
            case 'x': {
              int hi = pos_ + 3 < text_.size() ? hex_val(text_[pos_ + 2]) : -1;
              int lo = pos_ + 3 < text_.size() ? hex_val(text_[pos_ + 3]) : -1;
              if (hi >= 0 && lo >= 0) {
                value.push_back(static_cast<char>(hi * 16 + lo));
                pos_ += 2;
                col_ += 2;
              } else {
                value.push_back('x');
              }
              break;
            }
            default:
              value.push_back('\\');
              value.push_back(next);
          }
        }
        pos_ += 2;
        col_ += 2;
        continue;
      }
      if (prefix.fstr && c == '{') {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '{') {
          value.push_back('{');
          pos_ += 2;
          col_ += 2;
          continue;
        }
        std::string field = scan_fstring_field(triple);
        fields.push_back(field);
        value.push_back('*');
        continue;
      }
      if (prefix.fstr && c == '}' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '}') {
        value.push_back('}');
        pos_ += 2;
        col_ += 2;
        continue;
      }
      value.push_back(c);
      ++pos_;
      ++col_;
    }
    PyTok t;
    t.kind = PyTokKind::String;
    t.text = std::move(value);
    t.is_fstring = prefix.fstr;
    t.fstring_exprs = std::move(fields);
    t.line = tok_line;
    t.col = tok_col;
    toks_.push_back(std::move(t));
    emitted_on_line_ = true;
  }

  // pos_ is at '{'; consumes through the matching '}' and returns the
  // expression source with any conversion/format-spec suffix removed.
  std::string scan_fstring_field(bool outer_triple) {
    ++pos_;
    ++col_;
    std::string raw;
    int brace = 0, paren = 0, bracket = 0;
    std::size_t spec_cut = std::string::npos;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (!outer_triple && (c == '\n' || c == '\r')) break;
      if (c == '\'' || c == '"') {
        char q = c;
        raw.push_back(c);
        ++pos_;
        ++col_;
        while (pos_ < text_.size() && text_[pos_] != q && text_[pos_] != '\n') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
            raw.push_back(text_[pos_]);
            ++pos_;
            ++col_;
          }
          raw.push_back(text_[pos_]);
          ++pos_;
          ++col_;
        }
        if (pos_ < text_.size() && text_[pos_] == q) {
          raw.push_back(q);
          ++pos_;
          ++col_;
        }
        continue;
      }
      if (c == '{') ++brace;
      if (c == '(') ++paren;
      if (c == '[') ++bracket;
      if (c == ')') --paren;
      if (c == ']') --bracket;
      if (c == '}') {
        if (brace == 0) {
          ++pos_;
          ++col_;
          break;
        }
        --brace;
      }
      if (brace == 0 && paren == 0 && bracket == 0 && spec_cut == std::string::npos &&
          (c == '!' || (c == ':' ))) {
        spec_cut = raw.size();
      }
      if (c == '\n') { consume_newline(); raw.push_back(' '); continue; }
      raw.push_back(c);
      ++pos_;
      ++col_;
    }
    if (spec_cut != std::string::npos) raw.resize(spec_cut);
    while (!raw.empty() && raw.back() == ' ') raw.pop_back();
    if (!raw.empty() && raw.back() == '=' &&
        (raw.size() < 2 || std::strchr("=<>!+-*/%&|^", raw[raw.size() - 2]) == nullptr)) {
      raw.pop_back();  // f"{x=}" debug form
    }
    return raw;
  }

  void lex_op() {
    for (const char* op : kOps3) {
      std::size_t n = std::strlen(op);
      if (text_.compare(pos_, n, op) == 0) {
        push(PyTokKind::Op, op);
        pos_ += n;
        col_ += n;
        adjust_depth(op[0]);
        return;
      }
    }
    char c = text_[pos_];
    if ((c == '/' || c == '<' || c == '>') && pos_ + 1 < text_.size() && text_[pos_ + 1] == c) {
      push(PyTokKind::Op, std::string(2, c));
      pos_ += 2;
      col_ += 2;
      return;
    }
    push(PyTokKind::Op, std::string(1, c));
    adjust_depth(c);
    ++pos_;
    ++col_;
  }

  void adjust_depth(char c) {
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if (c == ')' || c == ']' || c == '}') { if (depth_ > 0) --depth_; }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  bool emitted_on_line_ = false;
  std::vector<std::size_t> indents_;
  std::vector<PyTok> toks_;
};

class Parser {
 public:
  explicit Parser(std::vector<PyTok> toks) : toks_(std::move(toks)) {}

  std::vector<PyStmt> file() {
    std::vector<PyStmt> stmts;
    while (!at(PyTokKind::End)) {
      if (accept(PyTokKind::Newline)) continue;
      append_stmt(stmts);
    }
    return stmts;
  }

  PyExpr single_expression() {
    PyExpr e = test();
    return e;
  }

 private:
  const PyTok& peek(std::size_t ahead = 0) const {
    std::size_t i = idx_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(PyTokKind k) const { return peek().kind == k; }
  bool at_op(const char* t) const { return peek().kind == PyTokKind::Op && peek().text == t; }
  bool at_name(const char* t) const { return peek().kind == PyTokKind::Name && peek().text == t; }
  const PyTok& advance() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }
  bool accept(PyTokKind k) {
    if (at(k)) { advance(); return true; }
    return false;
  }
  bool accept_op(const char* t) {
    if (at_op(t)) { advance(); return true; }
    return false;
  }
  bool accept_name(const char* t) {
    if (at_name(t)) { advance(); return true; }
    return false;
  }
  void expect_op(const char* t) {
    if (!accept_op(t)) throw PyParseError(peek().line, std::string("expected '") + t + "'");
  }
  void expect_newline() {
    if (!accept(PyTokKind::Newline) && !at(PyTokKind::End) && !at(PyTokKind::Dedent))
      throw PyParseError(peek().line, "expected end of statement");
  }
  std::string expect_name() {
    if (!at(PyTokKind::Name)) throw PyParseError(peek().line, "expected identifier");
    return advance().text;
  }

  void append_stmt(std::vector<PyStmt>& out) {
    while (at_op("@")) {  // decorators: evaluate later as plain exprs
      advance();
      PyStmt deco;
      deco.kind = PyStmt::Kind::Other;
      deco.line = peek().line;
      deco.extra_exprs.push_back(test());
      expect_newline();
      out.push_back(std::move(deco));
    }
    accept_name("async");
    if (at_name("def")) { out.push_back(func_def()); return; }
    if (at_name("class")) { out.push_back(class_def()); return; }
    if (at_name("if")) { out.push_back(if_stmt()); return; }
    if (at_name("while")) { out.push_back(while_stmt()); return; }
    if (at_name("for")) { out.push_back(for_stmt()); return; }
    if (at_name("try")) { out.push_back(try_stmt()); return; }
    if (at_name("with")) { out.push_back(with_stmt()); return; }
    simple_line(out);
  }

  void simple_line(std::vector<PyStmt>& out) {
    while (true) {
      out.push_back(simple_stmt());
      if (!accept_op(";")) break;
      if (at(PyTokKind::Newline) || at(PyTokKind::End)) break;
    }
    expect_newline();
  }

  PyStmt simple_stmt() {
    PyStmt s;
    s.line = peek().line;
    if (accept_name("pass") || accept_name("break") || accept_name("continue")) {
      s.kind = PyStmt::Kind::Pass;
      return s;
    }
    if (accept_name("return")) {
      s.kind = PyStmt::Kind::Return;
      if (!at(PyTokKind::Newline) && !at_op(";") && !at(PyTokKind::End)) s.value = testlist();
      return s;
    }
    if (accept_name("global") || accept_name("nonlocal")) {
      s.kind = PyStmt::Kind::Pass;
      expect_name();
      while (accept_op(",")) expect_name();
      return s;
    }
    if (at_name("import")) return import_stmt();
    if (at_name("from")) return from_import_stmt();
    if (accept_name("raise")) {
      s.kind = PyStmt::Kind::Other;
      if (!at(PyTokKind::Newline) && !at(PyTokKind::End)) {
        s.extra_exprs.push_back(test());
        if (accept_name("from")) s.extra_exprs.push_back(test());
      }
      return s;
    }
    if (accept_name("assert")) {
      s.kind = PyStmt::Kind::Other;
      s.extra_exprs.push_back(test());
      if (accept_op(",")) s.extra_exprs.push_back(test());
      return s;
    }
    if (accept_name("del")) {
      s.kind = PyStmt::Kind::Other;
      s.extra_exprs.push_back(testlist());
      return s;
    }
    return expr_stmt();
  }

  PyStmt import_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::Import;
    s.line = peek().line;
    advance();  // import
    while (true) {
      std::string dotted = expect_name();
      while (accept_op(".")) dotted += "." + expect_name();
      PyStmt::ImportBinding b;
      if (accept_name("as")) {
        b.local = expect_name();
        b.target = dotted;
      } else {
        b.local = dotted.substr(0, dotted.find('.'));
        b.target = b.local;
      }
      s.imports.push_back(std::move(b));
      if (!accept_op(",")) break;
    }
    return s;
  }

  PyStmt from_import_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::Import;
    s.line = peek().line;
    advance();  // from
    std::string module;
    while (accept_op(".") || accept_op("...")) continue;  // relative levels
    if (at(PyTokKind::Name) && !at_name("import")) {
      module = expect_name();
      while (accept_op(".")) module += "." + expect_name();
    }
    if (!accept_name("import")) throw PyParseError(peek().line, "expected 'import'");
    if (accept_op("*")) return s;
    bool parens = accept_op("(");
    while (true) {
      if (parens && accept_op(")")) break;
      std::string symbol = expect_name();
      PyStmt::ImportBinding b;
      b.local = symbol;
      b.target = module.empty() ? symbol : module + "." + symbol;
      if (accept_name("as")) b.local = expect_name();
      s.imports.push_back(std::move(b));
      if (!accept_op(",")) {
        if (parens) expect_op(")");
        break;
      }
    }
    return s;
  }

  PyStmt expr_stmt() {
    PyStmt s;
    s.line = peek().line;
    PyExpr first = testlist();
    if (at_op(":")) {  // annotated assignment / declaration
      advance();
      test();  // annotation
      if (accept_op("=")) {
        s.kind = PyStmt::Kind::Assign;
        s.targets.push_back(std::move(first));
        s.value = testlist();
      } else {
        s.kind = PyStmt::Kind::Other;
        s.extra_exprs.push_back(std::move(first));
      }
      return s;
    }
    static const char* kAug[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                 ">>=", "<<=", "&=", "|=", "^=", "@="};
    for (const char* op : kAug) {
      if (at_op(op)) {
        advance();
        s.kind = PyStmt::Kind::AugAssign;
        s.targets.push_back(std::move(first));
        s.value = testlist();
        return s;
      }
    }
    if (at_op("=")) {
      s.kind = PyStmt::Kind::Assign;
      s.targets.push_back(std::move(first));
      while (accept_op("=")) {
        PyExpr next = testlist();
        if (at_op("=")) {
          s.targets.push_back(std::move(next));
        } else {
          s.value = std::move(next);
          break;
        }
      }
      return s;
    }
    s.kind = PyStmt::Kind::ExprStmt;
    s.value = std::move(first);
    return s;
  }

  std::vector<PyStmt> suite() {
    std::vector<PyStmt> body;
    if (accept(PyTokKind::Newline)) {
      if (!accept(PyTokKind::Indent)) throw PyParseError(peek().line, "expected indented block");
      while (!accept(PyTokKind::Dedent)) {
        if (at(PyTokKind::End)) break;
        if (accept(PyTokKind::Newline)) continue;
        append_stmt(body);
      }
    } else {
      simple_line(body);
    }
    return body;
  }

  PyStmt func_def() {
    PyStmt s;
    s.kind = PyStmt::Kind::FunctionDef;
    s.line = peek().line;
    advance();  // def
    s.name = expect_name();
    expect_op("(");
    while (!accept_op(")")) {
      if (accept_op("*")) {
        if (at(PyTokKind::Name)) s.params.push_back(expect_name());
      } else if (accept_op("**")) {
        s.params.push_back(expect_name());
      } else if (accept_op("/")) {
        // positional-only marker
      } else {
        s.params.push_back(expect_name());
        if (accept_op(":")) test();
        if (accept_op("=")) s.extra_exprs.push_back(test());  // defaults run at def time
      }
      if (!accept_op(",")) {
        expect_op(")");
        break;
      }
    }
    if (accept_op("->")) test();
    expect_op(":");
    s.body = suite();
    return s;
  }

  PyStmt class_def() {
    PyStmt s;
    s.kind = PyStmt::Kind::ClassDef;
    s.line = peek().line;
    advance();  // class
    s.name = expect_name();
    if (accept_op("(")) {
      while (!accept_op(")")) {
        if (at(PyTokKind::Name) && peek(1).kind == PyTokKind::Op && peek(1).text == "=") {
          advance();
          advance();
        }
        if (!at_op(")")) s.extra_exprs.push_back(test());
        if (!accept_op(",")) {
          expect_op(")");
          break;
        }
      }
    }
    expect_op(":");
    s.body = suite();
    return s;
  }

  PyStmt if_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::If;
    s.line = peek().line;
    advance();  // if / elif
    s.value = namedexpr();
    expect_op(":");
    s.body = suite();
    if (at_name("elif")) {
      s.orelse.push_back(if_stmt());
    } else if (accept_name("else")) {
      expect_op(":");
      s.orelse = suite();
    }
    return s;
  }

  PyStmt while_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::While;
    s.line = peek().line;
    advance();
    s.value = namedexpr();
    expect_op(":");
    s.body = suite();
    if (accept_name("else")) {
      expect_op(":");
      s.orelse = suite();
    }
    return s;
  }

  PyStmt for_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::For;
    s.line = peek().line;
    advance();
    s.targets.push_back(target_list());
    if (!accept_name("in")) throw PyParseError(peek().line, "expected 'in'");
    s.value = testlist();
    expect_op(":");
    s.body = suite();
    if (accept_name("else")) {
      expect_op(":");
      s.orelse = suite();
    }
    return s;
  }

  PyStmt try_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::Try;
    s.line = peek().line;
    advance();
    expect_op(":");
    s.body = suite();
    while (at_name("except")) {
      advance();
      if (!at_op(":")) {
        test();
        if (accept_name("as")) expect_name();
      }
      expect_op(":");
      auto handler = suite();
      for (auto& st : handler) s.orelse.push_back(std::move(st));
    }
    if (accept_name("else")) {
      expect_op(":");
      auto els = suite();
      for (auto& st : els) s.orelse.push_back(std::move(st));
    }
    if (accept_name("finally")) {
      expect_op(":");
      s.finally_body = suite();
    }
    return s;
  }

  PyStmt with_stmt() {
    PyStmt s;
    s.kind = PyStmt::Kind::With;
    s.line = peek().line;
    advance();
    while (true) {
      s.with_exprs.push_back(test());
      if (accept_name("as")) s.with_targets.push_back(target_atom());
      else s.with_targets.push_back(std::nullopt);
      if (!accept_op(",")) break;
    }
    expect_op(":");
    s.body = suite();
    return s;
  }

  PyExpr target_atom() { return test(); }

  PyExpr target_list() {
    PyExpr first = or_test();
    if (!at_op(",")) return first;
    PyExpr tup;
    tup.kind = PyExpr::Kind::Tuple;
    tup.line = first.line;
    tup.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_name("in")) break;
      tup.children.push_back(or_test());
    }
    return tup;
  }

  PyExpr testlist() {
    PyExpr first = namedexpr();
    if (!at_op(",")) return first;
    PyExpr tup;
    tup.kind = PyExpr::Kind::Tuple;
    tup.line = first.line;
    tup.children.push_back(std::move(first));
    while (accept_op(",")) {
      if (at(PyTokKind::Newline) || at_op("=") || at_op(")") || at_op("]") || at_op("}") ||
          at(PyTokKind::End) || at_op(":"))
        break;
      tup.children.push_back(namedexpr());
    }
    return tup;
  }

  PyExpr namedexpr() {
    PyExpr e = test();
    if (accept_op(":=")) {
      PyExpr value = test();
      // walrus binds e's name; model as BinOp so both sides stay visible
      PyExpr bin;
      bin.kind = PyExpr::Kind::BinOp;
      bin.name = ":=";
      bin.line = e.line;
      bin.children.push_back(std::move(e));
      bin.children.push_back(std::move(value));
      return bin;
    }
    return e;
  }

  PyExpr test() {
    if (at_name("lambda")) return lambda_expr();
    PyExpr body = or_test();
    if (accept_name("if")) {
      PyExpr cond = or_test();
      PyExpr orelse;
      if (accept_name("else")) orelse = test();
      PyExpr e;
      e.kind = PyExpr::Kind::Conditional;
      e.line = body.line;
      e.children.push_back(std::move(body));
      e.children.push_back(std::move(cond));
      e.children.push_back(std::move(orelse));
      return e;
    }
    return body;
  }

  PyExpr lambda_expr() {
    advance();  // lambda
    while (!at_op(":")) {
      advance();
      if (at(PyTokKind::End) || at(PyTokKind::Newline)) throw PyParseError(peek().line, "bad lambda");
    }
    expect_op(":");
    PyExpr e;
    e.kind = PyExpr::Kind::Lambda;
    e.line = peek().line;
    e.children.push_back(test());
    return e;
  }

  PyExpr or_test() {
    PyExpr e = and_test();
    while (at_name("or")) {
      advance();
      PyExpr rhs = and_test();
      e = make_bin("or", std::move(e), std::move(rhs));
    }
    return e;
  }

  PyExpr and_test() {
    PyExpr e = not_test();
    while (at_name("and")) {
      advance();
      PyExpr rhs = not_test();
      e = make_bin("and", std::move(e), std::move(rhs));
    }
    return e;
  }

  PyExpr not_test() {
    if (accept_name("not")) {
      PyExpr inner = not_test();
      PyExpr e;
      e.kind = PyExpr::Kind::BinOp;
      e.name = "not";
      e.line = inner.line;
      e.children.push_back(std::move(inner));
      return e;
    }
    return comparison();
  }

  PyExpr comparison() {
    PyExpr e = bit_or();
    while (true) {
      if (at_op("<") || at_op(">") || at_op("==") || at_op("!=") || at_op("<=") || at_op(">=")) {
        std::string op = advance().text;
        e = make_bin(op, std::move(e), bit_or());
      } else if (at_name("in")) {
        advance();
        e = make_bin("in", std::move(e), bit_or());
      } else if (at_name("not")) {
        advance();
        accept_name("in");
        e = make_bin("not in", std::move(e), bit_or());
      } else if (at_name("is")) {
        advance();
        accept_name("not");
        e = make_bin("is", std::move(e), bit_or());
      } else {
        return e;
      }
    }
  }

  PyExpr bit_or() {
    PyExpr e = bit_xor();
    while (at_op("|")) { advance(); e = make_bin("|", std::move(e), bit_xor()); }
    return e;
  }
  PyExpr bit_xor() {
    PyExpr e = bit_and();
    while (at_op("^")) { advance(); e = make_bin("^", std::move(e), bit_and()); }
    return e;
  }
  PyExpr bit_and() {
    PyExpr e = shift_expr();
    while (at_op("&")) { advance(); e = make_bin("&", std::move(e), shift_expr()); }
    return e;
  }
  PyExpr shift_expr() {
    PyExpr e = arith();
    while (at_op("<<") || at_op(">>")) {
      std::string op = advance().text;
      e = make_bin(op, std::move(e), arith());
    }
    return e;
  }
  PyExpr arith() {
    PyExpr e = term();
    while (at_op("+") || at_op("-")) {
      std::string op = advance().text;
      e = make_bin(op, std::move(e), term());
    }
    return e;
  }
  PyExpr term() {
    PyExpr e = factor();
    while (at_op("*") || at_op("/") || at_op("//") || at_op("%") || at_op("@")) {
      std::string op = advance().text;
      e = make_bin(op, std::move(e), factor());
    }
    return e;
  }
  PyExpr factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      std::string op = advance().text;
      PyExpr inner = factor();
      PyExpr e;
      e.kind = PyExpr::Kind::BinOp;
      e.name = op;
      e.line = inner.line;
      e.children.push_back(std::move(inner));
      return e;
    }
    return power();
  }
  PyExpr power() {
    PyExpr e = atom_with_trailers();
    if (accept_op("**")) e = make_bin("**", std::move(e), factor());
    return e;
  }

  PyExpr make_bin(std::string op, PyExpr lhs, PyExpr rhs) {
    PyExpr e;
    e.kind = PyExpr::Kind::BinOp;
    e.name = std::move(op);
    e.line = lhs.line;
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    return e;
  }

  PyExpr atom_with_trailers() {
    PyExpr e = atom();
    while (true) {
      if (at_op("(")) {
        e = call_trailer(std::move(e));
      } else if (at_op("[")) {
        advance();
        PyExpr sub;
        sub.kind = PyExpr::Kind::Subscript;
        sub.line = e.line;
        sub.children.push_back(std::move(e));
        sub.children.push_back(subscript_index());
        expect_op("]");
        e = std::move(sub);
      } else if (at_op(".")) {
        advance();
        PyExpr attr;
        attr.kind = PyExpr::Kind::Attribute;
        attr.line = e.line;
        attr.name = expect_name();
        attr.children.push_back(std::move(e));
        e = std::move(attr);
      } else {
        return e;
      }
    }
  }

  PyExpr subscript_index() {
    PyExpr slice;
    slice.kind = PyExpr::Kind::Slice;
    slice.line = peek().line;
    bool is_slice = false;
    if (!at_op(":")) slice.children.push_back(testlist());
    while (at_op(":")) {
      advance();
      is_slice = true;
      if (!at_op("]") && !at_op(":")) slice.children.push_back(test());
    }
    if (!is_slice && slice.children.size() == 1) return std::move(slice.children[0]);
    return slice;
  }

  PyExpr call_trailer(PyExpr func) {
    advance();  // (
    PyExpr call;
    call.kind = PyExpr::Kind::Call;
    call.line = func.line;
    call.children.push_back(std::move(func));
    std::vector<std::pair<std::string, PyExpr>> kwargs;
    while (!at_op(")")) {
      if (accept_op("*") || accept_op("**")) {
        call.children.insert(call.children.begin() + 1 + call.pos_arg_count, test());
        ++call.pos_arg_count;
      } else if (at(PyTokKind::Name) && peek(1).kind == PyTokKind::Op && peek(1).text == "=" &&
                 !is_keyword(peek().text)) {
        std::string key = advance().text;
        advance();  // =
        kwargs.emplace_back(std::move(key), test());
      } else {
        PyExpr arg = namedexpr();
        if (at_name("for")) arg = comprehension_tail(std::move(arg));
        call.children.insert(call.children.begin() + 1 + call.pos_arg_count, std::move(arg));
        ++call.pos_arg_count;
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    for (auto& [key, value] : kwargs) {
      call.kwarg_names.push_back(key);
      call.children.push_back(std::move(value));
    }
    return call;
  }

  PyExpr comprehension_tail(PyExpr element) {
    PyExpr comp;
    comp.kind = PyExpr::Kind::Tuple;
    comp.line = element.line;
    comp.children.push_back(std::move(element));
    while (true) {
      accept_name("async");
      if (!accept_name("for")) break;
      target_list();  // loop variable: unbound in our scope model
      if (!accept_name("in")) throw PyParseError(peek().line, "expected 'in'");
      comp.children.push_back(or_test());
      while (accept_name("if")) comp.children.push_back(or_test());
      if (!at_name("for") && !at_name("async")) break;
    }
    return comp;
  }

  static bool is_keyword(const std::string& s) {
    static const char* kw[] = {"if", "else", "for", "in", "not", "and", "or", "is", "lambda"};
    for (const char* k : kw)
      if (s == k) return true;
    return false;
  }

  PyExpr atom() {
    const PyTok& t = peek();
    if (t.kind == PyTokKind::Name) {
      if (t.text == "lambda") return lambda_expr();
      if (t.text == "await") {
        advance();
        return atom_with_trailers();
      }
      if (t.text == "yield") {
        advance();
        accept_name("from");
        if (at(PyTokKind::Newline) || at_op(")") || at(PyTokKind::End)) {
          PyExpr e;
          e.kind = PyExpr::Kind::Tuple;
          e.line = t.line;
          return e;
        }
        return testlist();
      }
      PyExpr e;
      e.kind = PyExpr::Kind::Name;
      e.name = t.text;
      e.line = t.line;
      advance();
      return e;
    }
    if (t.kind == PyTokKind::Number) {
      PyExpr e;
      e.kind = PyExpr::Kind::Num;
      e.literal = t.text;
      e.line = t.line;
      advance();
      return e;
    }
    if (t.kind == PyTokKind::String) return string_atom();
    if (t.kind == PyTokKind::Op) {
      if (t.text == "(") {
        advance();
        if (accept_op(")")) {
          PyExpr e;
          e.kind = PyExpr::Kind::Tuple;
          e.line = t.line;
          return e;
        }
        PyExpr inner = at_op("*") ? starred() : namedexpr();
        if (at_name("for")) {
          inner = comprehension_tail(std::move(inner));
          expect_op(")");
          return inner;
        }
        if (at_op(",")) {
          PyExpr tup;
          tup.kind = PyExpr::Kind::Tuple;
          tup.line = t.line;
          tup.children.push_back(std::move(inner));
          while (accept_op(",")) {
            if (at_op(")")) break;
            tup.children.push_back(at_op("*") ? starred() : namedexpr());
          }
          expect_op(")");
          return tup;
        }
        expect_op(")");
        return inner;
      }
      if (t.text == "[") {
        advance();
        PyExpr list;
        list.kind = PyExpr::Kind::Tuple;
        list.line = t.line;
        if (accept_op("]")) return list;
        PyExpr first = at_op("*") ? starred() : namedexpr();
        if (at_name("for")) {
          first = comprehension_tail(std::move(first));
          expect_op("]");
          return first;
        }
        list.children.push_back(std::move(first));
        while (accept_op(",")) {
          if (at_op("]")) break;
          list.children.push_back(at_op("*") ? starred() : namedexpr());
        }
        expect_op("]");
        return list;
      }
      if (t.text == "{") {
        advance();
        PyExpr coll;
        coll.kind = PyExpr::Kind::Tuple;
        coll.line = t.line;
        if (accept_op("}")) return coll;
        if (accept_op("**")) {
          coll.children.push_back(test());
        } else {
          PyExpr key = namedexpr();
          if (accept_op(":")) {
            PyExpr value = test();
            if (at_name("for")) {
              PyExpr pair = make_bin(":", std::move(key), std::move(value));
              coll = comprehension_tail(std::move(pair));
              expect_op("}");
              return coll;
            }
            coll.children.push_back(std::move(key));
            coll.children.push_back(std::move(value));
          } else {
            if (at_name("for")) {
              coll = comprehension_tail(std::move(key));
              expect_op("}");
              return coll;
            }
            coll.children.push_back(std::move(key));
          }
        }
        while (accept_op(",")) {
          if (at_op("}")) break;
          if (accept_op("**")) {
            coll.children.push_back(test());
            continue;
          }
          PyExpr key = namedexpr();
          if (accept_op(":")) {
            coll.children.push_back(std::move(key));
            coll.children.push_back(test());
          } else {
            coll.children.push_back(std::move(key));
          }
        }
        expect_op("}");
        return coll;
      }
      if (t.text == "...") {
        advance();
        PyExpr e;
        e.kind = PyExpr::Kind::Name;
        e.name = "Ellipsis";
        e.line = t.line;
        return e;
      }
    }
    throw PyParseError(t.line, "unexpected token '" + t.text + "'");
  }

  PyExpr starred() {
    expect_op("*");
    PyExpr e;
    e.kind = PyExpr::Kind::Starred;
    e.line = peek().line;
    e.children.push_back(test());
    return e;
  }

  PyExpr string_atom() {
    const PyTok& t = peek();
    PyExpr e;
    e.kind = PyExpr::Kind::Str;
    e.line = t.line;
    e.literal = t.text;
    e.fstring = t.is_fstring;
    std::vector<std::string> fields = t.fstring_exprs;
    advance();
    while (at(PyTokKind::String)) {  // implicit adjacent-literal concatenation
      const PyTok& next = peek();
      e.literal += next.text;
      e.fstring = e.fstring || next.is_fstring;
      for (const auto& f : next.fstring_exprs) fields.push_back(f);
      advance();
    }
    for (const auto& field : fields) {
      try {
        Parser sub(py_lex(field));
        e.children.push_back(sub.single_expression());
      } catch (const PyParseError&) {
        // Unparseable field: keep the placeholder, drop the expression.
      }
    }
    return e;
  }

  std::vector<PyTok> toks_;
  std::size_t idx_ = 0;
};

}  // namespace

std::vector<PyTok> py_lex(const std::string& text) { return Lexer(text).run(); }

std::vector<PyStmt> py_parse(const std::string& text) {
  Parser p(py_lex(text));
  return p.file();
}

}  // namespace biv
