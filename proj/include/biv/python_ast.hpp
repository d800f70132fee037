#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace biv {

// Hand-written lexer and recursive-descent parser for the Python subset the
// taint pass consumes. Anything outside the subset raises PyParseError and the
// caller falls back to the literal scanner.

struct PyParseError : std::runtime_error {
  std::size_t line;
  PyParseError(std::size_t line_, const std::string& what_)
      : std::runtime_error(what_), line(line_) {}
};

enum class PyTokKind { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct PyTok {
  PyTokKind kind = PyTokKind::End;
  std::string text;          // Name/Op: source text; String: decoded value
  bool is_fstring = false;
  std::vector<std::string> fstring_exprs;  // raw source of {...} fields
  std::size_t line = 1;
  std::size_t col = 1;
};

std::vector<PyTok> py_lex(const std::string& text);

struct PyExpr {
  enum class Kind {
    Name,        // name
    Str,         // literal = decoded value; children = parsed f-string fields
    Num,
    Call,        // children[0] = func, then pos_arg_count positionals, then kwargs
    Attribute,   // children[0] = value, name = attr
    Subscript,   // children[0] = value, children[1] = index
    Tuple,       // also lists/sets/dicts/comprehensions: children = elements
    BinOp,       // children = operands (operator itself is irrelevant to taint)
    Conditional, // children = {body, test, orelse}
    Lambda,      // children[0] = body
    Starred,     // children[0] = value
    Slice        // children = present bounds
  };
  Kind kind = Kind::Name;
  std::string name;                       // Name ident / Attribute attr / BinOp op text
  std::string literal;                    // Str: decoded value
  bool fstring = false;
  std::size_t pos_arg_count = 0;          // Call
  std::vector<std::string> kwarg_names;   // Call: names of trailing kwarg children
  std::vector<PyExpr> children;
  std::size_t line = 1;

  const PyExpr& func() const { return children.front(); }
};

struct PyStmt {
  enum class Kind {
    Assign,       // targets = lvalues, value
    AugAssign,    // targets[0], value
    ExprStmt,     // value
    Return,       // optional value
    FunctionDef,  // name, params, body
    ClassDef,     // name, body
    If,           // value = test, body, orelse
    For,          // targets[0] = loop target, value = iterable, body, orelse
    While,        // value = test, body, orelse
    With,         // with_exprs / with_targets, body
    Try,          // body, handlers in orelse, finally_body
    Import,       // imports
    Pass,
    Other         // raise/assert/del/global/...: extra_exprs still visited
  };
  Kind kind = Kind::Pass;
  std::vector<PyExpr> targets;
  std::optional<PyExpr> value;
  std::string name;
  std::vector<std::string> params;
  std::vector<PyStmt> body;
  std::vector<PyStmt> orelse;
  std::vector<PyStmt> finally_body;
  std::vector<PyExpr> with_exprs;
  std::vector<std::optional<PyExpr>> with_targets;
  struct ImportBinding {
    std::string local;   // name bound in the module namespace
    std::string target;  // dotted path it refers to
  };
  std::vector<ImportBinding> imports;
  std::vector<PyExpr> extra_exprs;
  std::size_t line = 1;
};

std::vector<PyStmt> py_parse(const std::string& text);

}  // namespace biv
