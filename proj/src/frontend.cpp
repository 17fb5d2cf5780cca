#include "irbmc/frontend.h"

#include <cctype>
#include <cstdlib>
#include <map>
#include <vector>

namespace irbmc::minic {

namespace {

enum class Tok : uint8_t {
  End, Ident, Number, TypeName,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Semi, Arrow, DotDot, At,
  Assign, Plus, Minus, Star, Slash, Percent,
  Amp, Pipe, Caret, Tilde, Bang, Shl, Shr,
  AmpAmp, PipePipe, Eq, Ne, Lt, Le, Gt, Ge,
  KwFn, KwIf, KwElse, KwWhile, KwFor, KwIn, KwReturn,
  KwAssert, KwAssume, KwHavoc, KwConst, KwTrue, KwFalse,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  uint64_t num = 0;
  int line = 1;
  int col = 1;
};

struct ParseAbort {};

class Lexer {
 public:
  Lexer(const std::string& src, Diagnostics& diags) : src_(src), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::End) break;
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    diags_.push_back({Severity::Error, line_, col_, msg});
    throw ParseAbort{};
  }

  char peek(int ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (isspace(uint8_t(c))) {
        take();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') take();
      } else if (c == '/' && peek(1) == '*') {
        take();
        take();
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) take();
        if (pos_ >= src_.size()) fail("unterminated comment");
        take();
        take();
      } else {
        break;
      }
    }
  }

  Token next() {
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = peek();
    if (isalpha(uint8_t(c)) || c == '_') {
      std::string name;
      while (isalnum(uint8_t(peek())) || peek() == '_') name += take();
      t.text = name;
      t.kind = keyword(name);
      return t;
    }
    if (isdigit(uint8_t(c))) {
      t.kind = Tok::Number;
      if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
        take();
        take();
        std::string digits;
        while (isxdigit(uint8_t(peek()))) digits += take();
        if (digits.empty()) fail("hex literal needs digits");
        t.num = strtoull(digits.c_str(), nullptr, 16);
        t.text = "0x" + digits;
      } else {
        std::string digits;
        while (isdigit(uint8_t(peek()))) digits += take();
        t.num = strtoull(digits.c_str(), nullptr, 10);
        t.text = digits;
      }
      return t;
    }
    take();
    switch (c) {
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case '{': t.kind = Tok::LBrace; return t;
      case '}': t.kind = Tok::RBrace; return t;
      case '[': t.kind = Tok::LBracket; return t;
      case ']': t.kind = Tok::RBracket; return t;
      case ',': t.kind = Tok::Comma; return t;
      case ';': t.kind = Tok::Semi; return t;
      case '@': t.kind = Tok::At; return t;
      case '~': t.kind = Tok::Tilde; return t;
      case '^': t.kind = Tok::Caret; return t;
      case '+': t.kind = Tok::Plus; return t;
      case '*': t.kind = Tok::Star; return t;
      case '/': t.kind = Tok::Slash; return t;
      case '%': t.kind = Tok::Percent; return t;
      case '-':
        if (peek() == '>') { take(); t.kind = Tok::Arrow; } else { t.kind = Tok::Minus; }
        return t;
      case '.':
        if (peek() == '.') { take(); t.kind = Tok::DotDot; return t; }
        fail("stray '.'");
      case '&':
        if (peek() == '&') { take(); t.kind = Tok::AmpAmp; } else { t.kind = Tok::Amp; }
        return t;
      case '|':
        if (peek() == '|') { take(); t.kind = Tok::PipePipe; } else { t.kind = Tok::Pipe; }
        return t;
      case '=':
        if (peek() == '=') { take(); t.kind = Tok::Eq; } else { t.kind = Tok::Assign; }
        return t;
      case '!':
        if (peek() == '=') { take(); t.kind = Tok::Ne; } else { t.kind = Tok::Bang; }
        return t;
      case '<':
        if (peek() == '=') { take(); t.kind = Tok::Le; }
        else if (peek() == '<') { take(); t.kind = Tok::Shl; }
        else { t.kind = Tok::Lt; }
        return t;
      case '>':
        if (peek() == '=') { take(); t.kind = Tok::Ge; }
        else if (peek() == '>') { take(); t.kind = Tok::Shr; }
        else { t.kind = Tok::Gt; }
        return t;
      default:
        fail(std::string("unexpected character '") + c + "'");
    }
  }

  static Tok keyword(const std::string& s) {
    if (s == "fn") return Tok::KwFn;
    if (s == "if") return Tok::KwIf;
    if (s == "else") return Tok::KwElse;
    if (s == "while") return Tok::KwWhile;
    if (s == "for") return Tok::KwFor;
    if (s == "in") return Tok::KwIn;
    if (s == "return") return Tok::KwReturn;
    if (s == "assert") return Tok::KwAssert;
    if (s == "assume") return Tok::KwAssume;
    if (s == "havoc") return Tok::KwHavoc;
    if (s == "const") return Tok::KwConst;
    if (s == "true") return Tok::KwTrue;
    if (s == "false") return Tok::KwFalse;
    if (s == "bool" || s == "u8" || s == "i8" || s == "u16" || s == "i16" || s == "u32" ||
        s == "i32")
      return Tok::TypeName;
    return Tok::Ident;
  }

  const std::string& src_;
  Diagnostics& diags_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

Ty type_from_name(const std::string& s) {
  if (s == "bool") return Ty::Bool;
  if (s == "u8") return Ty::U8;
  if (s == "i8") return Ty::I8;
  if (s == "u16") return Ty::U16;
  if (s == "i16") return Ty::I16;
  if (s == "u32") return Ty::U32;
  return Ty::I32;
}

// Expression value during parsing. Integer literals stay "pending" until a
// typed context adopts them; arithmetic between pendings folds immediately.
struct PE {
  ExprPtr e;                 // set when typed
  std::optional<int64_t> pending;
  int line = 0;
};

struct FnSig {
  std::vector<Ty> params;
  std::optional<Ty> ret;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, Diagnostics& diags) : toks_(std::move(toks)), diags_(diags) {}

  IrProgram run() {
    prescan();
    while (!at(Tok::End)) top_level();
    finalize();
    return std::move(prog_);
  }

 private:
  // --- token plumbing -------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(int k) const {
    size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok k) const { return cur().kind == k; }

  Token take() { return toks_[pos_++]; }

  Token expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what);
    return take();
  }

  bool accept(Tok k) {
    if (at(k)) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) { fail_at(cur(), msg); }

  [[noreturn]] void fail_at(const Token& t, const std::string& msg) {
    diags_.push_back({Severity::Error, t.line, t.col, msg});
    throw ParseAbort{};
  }

  // The "__" namespace belongs to synthesized code (drivers, temporaries,
  // retry counters); user programs must stay out of it.
  void check_reserved(const Token& name) {
    if (name.text.rfind("__", 0) == 0)
      fail_at(name, "identifiers starting with '__' are reserved");
  }

  // --- prescan: function signatures and global kinds for forward references -

  void prescan() {
    int depth = 0;
    for (size_t i = 0; i + 1 < toks_.size(); ++i) {
      if (toks_[i].kind == Tok::LBrace) ++depth;
      if (toks_[i].kind == Tok::RBrace) --depth;
      if (depth != 0) continue;
      if (toks_[i].kind != Tok::KwFn) continue;
      size_t j = i + 1;
      if (toks_[j].kind != Tok::Ident) continue;
      FnSig sig;
      std::string name = toks_[j].text;
      ++j;
      if (toks_[j].kind != Tok::LParen) continue;
      ++j;
      while (j < toks_.size() && toks_[j].kind != Tok::RParen) {
        if (toks_[j].kind == Tok::TypeName) sig.params.push_back(type_from_name(toks_[j].text));
        ++j;
      }
      if (j + 2 < toks_.size() && toks_[j + 1].kind == Tok::Arrow &&
          toks_[j + 2].kind == Tok::TypeName)
        sig.ret = type_from_name(toks_[j + 2].text);
      sigs_[name] = sig;
    }
  }

  // --- top level -------------------------------------------------------------

  struct Annots {
    bool shared = false, persistent = false, input = false;
    uint32_t address = 0;
    bool mode = false;
    std::string mode_name;
    int mode_order = 0;
    bool isr = false;
    std::string isr_name;
    uint64_t mint = 0;
    int line = 0;
  };

  Annots parse_annotations() {
    Annots a;
    while (at(Tok::At)) {
      a.line = cur().line;
      take();
      Token name = expect(Tok::Ident, "annotation name");
      if (name.text == "shared") {
        a.shared = true;
      } else if (name.text == "persistent") {
        a.persistent = true;
      } else if (name.text == "input") {
        a.input = true;
        expect(Tok::LParen, "'('");
        a.address = uint32_t(expect(Tok::Number, "address literal").num);
        expect(Tok::RParen, "')'");
      } else if (name.text == "mode") {
        a.mode = true;
        expect(Tok::LParen, "'('");
        a.mode_name = expect(Tok::Ident, "mode name").text;
        expect(Tok::Comma, "','");
        a.mode_order = int(expect(Tok::Number, "mode order").num);
        expect(Tok::RParen, "')'");
      } else if (name.text == "interrupt") {
        a.isr = true;
        expect(Tok::LParen, "'('");
        a.isr_name = expect(Tok::Ident, "interrupt name").text;
        expect(Tok::Comma, "','");
        Token k = expect(Tok::Ident, "mint");
        if (k.text != "mint") fail_at(k, "expected 'mint'");
        expect(Tok::Assign, "'='");
        a.mint = expect(Tok::Number, "cycle count").num;
        expect(Tok::RParen, "')'");
      } else {
        fail_at(name, "unknown annotation '@" + name.text + "'");
      }
    }
    return a;
  }

  void top_level() {
    Annots a = parse_annotations();
    if (at(Tok::KwFn)) {
      parse_function(a);
      return;
    }
    if (at(Tok::KwConst) || at(Tok::TypeName)) {
      parse_global(a);
      return;
    }
    fail("expected a global declaration or function");
  }

  void parse_global(const Annots& a) {
    if (a.mode || a.isr) fail("@mode/@interrupt apply to functions");
    Symbol sym;
    sym.is_const = accept(Tok::KwConst);
    Token ty = expect(Tok::TypeName, "type");
    sym.type = type_from_name(ty.text);
    Token name = expect(Tok::Ident, "variable name");
    check_reserved(name);
    sym.name = name.text;
    sym.line = name.line;
    if (a.shared) sym.kind = VarKind::Shared;
    if (a.persistent) sym.kind = VarKind::Persistent;
    if (a.input) {
      sym.kind = VarKind::MmioInput;
      sym.address = a.address;
    }
    if (int(a.shared) + int(a.persistent) + int(a.input) > 1)
      fail_at(name, "conflicting annotations on '" + sym.name + "'");
    if (accept(Tok::LBracket)) {
      Token len = expect(Tok::Number, "array length");
      if (len.num == 0) fail_at(len, "array length must be positive");
      sym.array_len = uint32_t(len.num);
      expect(Tok::RBracket, "']'");
    }
    if (accept(Tok::Assign)) {
      if (accept(Tok::LBrace)) {
        if (!sym.array_len) fail_at(name, "brace initializer on non-array");
        do {
          int64_t v = parse_const_int();
          if (!fits(v, sym.type)) fail_at(name, "initializer does not fit " + std::string(ty_name(sym.type)));
          sym.array_init.push_back(wrap(uint64_t(v), sym.type));
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        if (sym.array_init.size() > *sym.array_len) fail_at(name, "too many initializers");
      } else if (sym.type == Ty::Bool) {
        if (accept(Tok::KwTrue)) sym.init = 1;
        else if (accept(Tok::KwFalse)) sym.init = 0;
        else fail("bool initializer must be true or false");
      } else {
        int64_t v = parse_const_int();
        if (!fits(v, sym.type)) fail_at(name, "initializer does not fit " + std::string(ty_name(sym.type)));
        sym.init = wrap(uint64_t(v), sym.type);
      }
    }
    expect(Tok::Semi, "';'");
    if (!prog_.globals.emplace(sym.name, sym).second)
      fail_at(name, "duplicate global '" + sym.name + "'");
  }

  int64_t parse_const_int() {
    bool negate = accept(Tok::Minus);
    Token n = expect(Tok::Number, "integer literal");
    int64_t v = int64_t(n.num);
    return negate ? -v : v;
  }

  // --- functions -------------------------------------------------------------

  void parse_function(const Annots& a) {
    Token kw = expect(Tok::KwFn, "'fn'");
    Token name = expect(Tok::Ident, "function name");
    check_reserved(name);
    fn_ = Function{};
    fn_.name = name.text;
    fn_.line = kw.line;
    if (a.shared || a.persistent || a.input) fail_at(name, "variable annotation on a function");
    if (a.mode) {
      fn_.is_mode = true;
      fn_.mode_name = a.mode_name;
      fn_.mode_order = a.mode_order;
    }
    if (a.isr) {
      fn_.is_isr = true;
      fn_.isr_name = a.isr_name;
      fn_.mint_cycles = a.mint;
    }
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      do {
        Token ty = expect(Tok::TypeName, "parameter type");
        Token pn = expect(Tok::Ident, "parameter name");
        check_reserved(pn);
        Symbol p;
        p.name = pn.text;
        p.type = type_from_name(ty.text);
        p.line = pn.line;
        if (!fn_.locals.emplace(p.name, p).second) fail_at(pn, "duplicate parameter '" + p.name + "'");
        fn_.params.push_back(p.name);
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    if (accept(Tok::Arrow)) fn_.ret = type_from_name(expect(Tok::TypeName, "return type").text);
    loop_counter_ = 0;
    temp_counter_ = 0;
    parse_block();
    fn_.end_line = cur().line;
    if (!fn_.ret) emit(Instr::ret(nullptr, fn_.end_line));
    if (prog_.functions.count(fn_.name)) fail_at(name, "duplicate function '" + fn_.name + "'");
    if (fn_.is_mode) prog_.mode_functions.push_back(fn_.name);
    if (fn_.is_isr) prog_.isr_functions.push_back(fn_.name);
    prog_.functions.emplace(fn_.name, std::move(fn_));
  }

  // --- statements ------------------------------------------------------------

  int emit(Instr in) {
    fn_.body.push_back(std::move(in));
    return int(fn_.body.size()) - 1;
  }

  void parse_block() {
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) parse_statement();
    take();
  }

  const Symbol* lookup(const std::string& name) const {
    auto it = fn_.locals.find(name);
    if (it != fn_.locals.end()) return &it->second;
    auto git = prog_.globals.find(name);
    if (git != prog_.globals.end()) return &git->second;
    return nullptr;
  }

  std::string fresh_temp(Ty t) {
    Symbol s;
    s.name = "__t" + std::to_string(temp_counter_++);
    s.type = t;
    fn_.locals.emplace(s.name, s);
    return s.name;
  }

  void parse_statement() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::TypeName: parse_local_decl(); return;
      case Tok::KwIf: parse_if(); return;
      case Tok::KwWhile: parse_while(); return;
      case Tok::KwFor: parse_for(); return;
      case Tok::KwReturn: parse_return(); return;
      case Tok::KwAssert:
      case Tok::KwAssume: parse_assert_assume(); return;
      case Tok::KwHavoc: parse_havoc(); return;
      case Tok::LBracket: parse_mmio_write(); return;
      case Tok::Ident: parse_assign_or_call(); return;
      default: fail("expected a statement");
    }
  }

  void parse_local_decl() {
    Token ty = expect(Tok::TypeName, "type");
    Ty t = type_from_name(ty.text);
    Token name = expect(Tok::Ident, "variable name");
    check_reserved(name);
    Symbol sym;
    sym.name = name.text;
    sym.type = t;
    sym.line = name.line;
    if (accept(Tok::LBracket)) {
      Token len = expect(Tok::Number, "array length");
      if (len.num == 0) fail_at(len, "array length must be positive");
      sym.array_len = uint32_t(len.num);
      expect(Tok::RBracket, "']'");
    }
    if (prog_.globals.count(sym.name)) fail_at(name, "local '" + sym.name + "' shadows a global");
    if (!fn_.locals.emplace(sym.name, sym).second)
      fail_at(name, "duplicate local '" + sym.name + "'");
    if (accept(Tok::Assign)) {
      if (sym.array_len) fail_at(name, "array locals cannot have initializers");
      emit_assign_rhs(sym.name, nullptr, t, name.line);
      expect(Tok::Semi, "';'");
      return;
    }
    expect(Tok::Semi, "';'");
    // Locals without initializers start at zero, matching globals.
    if (!sym.array_len) {
      emit(Instr::assign(sym.name, eb::cnst(0, t), name.line));
    } else {
      for (uint32_t i = 0; i < *sym.array_len; ++i)
        emit(Instr::assign_elem(sym.name, eb::cnst(i, Ty::U32), eb::cnst(0, t), name.line));
    }
  }

  // Shared by local-decl initializers and plain assignments: handles the three
  // special right-hand sides (call, [addr] read, @input read) then falls back
  // to a general expression.
  void emit_assign_rhs(const std::string& lhs, ExprPtr lhs_index, Ty lhs_ty, int line) {
    if (at(Tok::LBracket)) {
      if (lhs_index) fail("mmio reads cannot target array elements");
      take();
      ExprPtr addr = parse_typed_expr("mmio address");
      expect(Tok::RBracket, "']'");
      if (!is_integer(addr->type)) fail("mmio address must be an integer");
      if (!is_integer(lhs_ty)) fail("mmio reads produce integers");
      if (!at(Tok::Semi))
        fail("mmio reads ([addr]) are only legal as the sole right-hand side of an assignment");
      emit(Instr::mmio_read(lhs, addr, line));
      return;
    }
    if (at(Tok::Ident) && ahead(1).kind == Tok::LParen && sigs_.count(cur().text)) {
      Token callee = take();
      std::vector<ExprPtr> args = parse_call_args(callee);
      const FnSig& sig = sigs_[callee.text];
      if (!sig.ret) fail_at(callee, "'" + callee.text + "' returns nothing");
      if (*sig.ret != lhs_ty)
        fail_at(callee, "call result type " + std::string(ty_name(*sig.ret)) +
                            " does not match target " + ty_name(lhs_ty));
      if (lhs_index) fail_at(callee, "call results cannot target array elements");
      if (!at(Tok::Semi))
        fail_at(callee,
                "calls may only appear as a statement or the sole right-hand side of an assignment");
      emit(Instr::call(callee.text, std::move(args), lhs, line));
      return;
    }
    if (at(Tok::Ident)) {
      const Symbol* s = lookup(cur().text);
      if (s && s->kind == VarKind::MmioInput && ahead(1).kind == Tok::Semi) {
        Token reg = take();
        if (lhs_index) fail_at(reg, "mmio reads cannot target array elements");
        if (s->type != lhs_ty)
          fail_at(reg, "register '" + reg.text + "' has type " + ty_name(s->type));
        emit(Instr::mmio_read(lhs, eb::cnst(*s->address, Ty::U32), line));
        return;
      }
    }
    PE v = parse_expr();
    ExprPtr e = coerce(v, lhs_ty, "assignment");
    if (lhs_index) {
      emit(Instr::assign_elem(lhs, std::move(lhs_index), std::move(e), line));
    } else {
      emit(Instr::assign(lhs, std::move(e), line));
    }
  }

  std::vector<ExprPtr> parse_call_args(const Token& callee) {
    const FnSig& sig = sigs_[callee.text];
    expect(Tok::LParen, "'('");
    std::vector<ExprPtr> args;
    if (!at(Tok::RParen)) {
      do {
        size_t k = args.size();
        PE v = parse_expr();
        if (k >= sig.params.size()) fail_at(callee, "too many arguments to '" + callee.text + "'");
        args.push_back(coerce(v, sig.params[k], "argument"));
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    if (args.size() != sig.params.size())
      fail_at(callee, "wrong number of arguments to '" + callee.text + "'");
    return args;
  }

  void parse_assign_or_call() {
    Token name = take();
    if (at(Tok::LParen)) {
      if (!sigs_.count(name.text)) fail_at(name, "call to unknown function '" + name.text + "'");
      std::vector<ExprPtr> args = parse_call_args(name);
      expect(Tok::Semi, "';'");
      emit(Instr::call(name.text, std::move(args), {}, name.line));
      return;
    }
    const Symbol* s = lookup(name.text);
    if (!s) fail_at(name, "unknown variable '" + name.text + "'");
    if (s->is_const) fail_at(name, "cannot assign to const '" + name.text + "'");
    if (s->kind == VarKind::MmioInput) fail_at(name, "cannot assign to @input '" + name.text + "'");
    ExprPtr index;
    if (accept(Tok::LBracket)) {
      if (!s->array_len) fail_at(name, "'" + name.text + "' is not an array");
      index = parse_typed_expr("array subscript");
      if (!is_integer(index->type)) fail_at(name, "array subscript must be an integer");
      expect(Tok::RBracket, "']'");
    } else if (s->array_len) {
      fail_at(name, "array '" + name.text + "' needs a subscript");
    }
    expect(Tok::Assign, "'='");
    emit_assign_rhs(name.text, std::move(index), s->type, name.line);
    expect(Tok::Semi, "';'");
  }

  void parse_mmio_write() {
    Token open = take();  // '['
    ExprPtr addr = parse_typed_expr("mmio address");
    if (!is_integer(addr->type)) fail_at(open, "mmio address must be an integer");
    expect(Tok::RBracket, "']'");
    expect(Tok::Assign, "'='");
    PE v = parse_expr();
    ExprPtr val;
    if (v.pending) {
      val = coerce(v, Ty::U32, "mmio write");
    } else {
      if (!is_integer(v.e->type)) fail_at(open, "mmio writes carry integers");
      val = v.e;
    }
    expect(Tok::Semi, "';'");
    emit(Instr::mmio_write(std::move(addr), std::move(val), open.line));
  }

  void parse_if() {
    Token kw = take();
    expect(Tok::LParen, "'('");
    ExprPtr cond = parse_bool_expr("if condition");
    expect(Tok::RParen, "')'");
    int branch = emit(Instr::branch(fb::lnot(cond), -1));
    fn_.body[branch].line = kw.line;
    parse_block();
    if (at(Tok::KwElse)) {
      take();
      int skip = emit(Instr::jump(-1));
      fn_.body[branch].target = int(fn_.body.size());
      if (at(Tok::KwIf)) {
        parse_if();
      } else {
        parse_block();
      }
      fn_.body[skip].target = int(fn_.body.size());
    } else {
      fn_.body[branch].target = int(fn_.body.size());
    }
  }

  void parse_while() {
    Token kw = take();
    std::string loop_id = fn_.name + ".L" + std::to_string(loop_counter_++);
    expect(Tok::LParen, "'('");
    ExprPtr cond = parse_bool_expr("while condition");
    expect(Tok::RParen, "')'");
    int header = emit(Instr::branch(fb::lnot(cond), -1));
    fn_.body[header].line = kw.line;
    parse_block();
    int back = emit(Instr::jump(header));
    fn_.body[header].target = int(fn_.body.size());
    fn_.loops.push_back({loop_id, header, back, std::nullopt});
  }

  void parse_for() {
    Token kw = take();
    std::string loop_id = fn_.name + ".L" + std::to_string(loop_counter_++);
    Ty ivar_ty = Ty::U32;
    if (at(Tok::TypeName)) ivar_ty = type_from_name(take().text);
    if (!is_integer(ivar_ty)) fail_at(kw, "loop variable must be an integer");
    Token name = expect(Tok::Ident, "loop variable");
    check_reserved(name);
    if (lookup(name.text)) fail_at(name, "loop variable '" + name.text + "' already declared");
    Symbol sym;
    sym.name = name.text;
    sym.type = ivar_ty;
    sym.line = name.line;
    fn_.locals.emplace(sym.name, sym);
    expect(Tok::KwIn, "'in'");
    int64_t lo = parse_const_int();
    expect(Tok::DotDot, "'..'");
    int64_t hi = parse_const_int();
    if (!fits(lo, ivar_ty) || !fits(hi, ivar_ty)) fail_at(name, "loop bounds do not fit the loop variable type");
    if (lo > hi) fail_at(name, "loop bounds are reversed");
    emit(Instr::assign(sym.name, eb::cnst(uint64_t(lo), ivar_ty), kw.line));
    ExprPtr cond = eb::lt(eb::var(sym.name, ivar_ty), eb::cnst(uint64_t(hi), ivar_ty));
    int header = emit(Instr::branch(fb::lnot(cond), -1));
    fn_.body[header].line = kw.line;
    parse_block();
    emit(Instr::assign(sym.name,
                       eb::add(eb::var(sym.name, ivar_ty), eb::cnst(1, ivar_ty)), kw.line));
    int back = emit(Instr::jump(header));
    fn_.body[header].target = int(fn_.body.size());
    fn_.loops.push_back({loop_id, header, back, uint64_t(hi - lo)});
  }

  void parse_return() {
    Token kw = take();
    if (accept(Tok::Semi)) {
      if (fn_.ret) fail_at(kw, "'" + fn_.name + "' must return a value");
      emit(Instr::ret(nullptr, kw.line));
      return;
    }
    if (!fn_.ret) fail_at(kw, "'" + fn_.name + "' returns nothing");
    PE v = parse_expr();
    expect(Tok::Semi, "';'");
    emit(Instr::ret(coerce(v, *fn_.ret, "return value"), kw.line));
  }

  void parse_assert_assume() {
    Token kw = take();
    bool is_assert = kw.kind == Tok::KwAssert;
    expect(Tok::LParen, "'('");
    ExprPtr cond = parse_bool_expr(is_assert ? "assert condition" : "assume condition");
    expect(Tok::RParen, "')'");
    expect(Tok::Semi, "';'");
    if (is_assert) {
      emit(Instr::assertion(std::move(cond), PropertyClass::User, {}, kw.line));
    } else {
      emit(Instr::assume(std::move(cond), {}, kw.line));
    }
  }

  void parse_havoc() {
    Token kw = take();
    expect(Tok::LParen, "'('");
    Token name = expect(Tok::Ident, "variable name");
    const Symbol* s = lookup(name.text);
    if (!s) fail_at(name, "unknown variable '" + name.text + "'");
    if (s->is_const || s->kind == VarKind::MmioInput)
      fail_at(name, "cannot havoc '" + name.text + "'");
    expect(Tok::RParen, "')'");
    expect(Tok::Semi, "';'");
    emit(Instr::havoc(name.text, kw.line));
  }

  // --- expressions -----------------------------------------------------------

  ExprPtr parse_bool_expr(const char* what) {
    PE v = parse_expr();
    if (v.pending) fail(std::string(what) + " must be bool");
    if (v.e->type != Ty::Bool) fail(std::string(what) + " must be bool");
    return v.e;
  }

  ExprPtr parse_typed_expr(const char* what) {
    PE v = parse_expr();
    if (v.pending) return coerce(v, Ty::U32, what);
    return v.e;
  }

  ExprPtr coerce(PE& v, Ty target, const std::string& what) {
    if (v.pending) {
      if (target == Ty::Bool) fail_at_line(v.line, what + ": integer literal where bool is needed");
      if (!fits(*v.pending, target))
        fail_at_line(v.line, what + ": literal " + std::to_string(*v.pending) + " does not fit " +
                                  ty_name(target));
      return eb::cnst(uint64_t(*v.pending), target);
    }
    if (v.e->type != target)
      fail_at_line(v.line, what + ": expected " + std::string(ty_name(target)) + ", got " +
                                ty_name(v.e->type) + " (insert an explicit cast)");
    return v.e;
  }

  [[noreturn]] void fail_at_line(int line, const std::string& msg) {
    diags_.push_back({Severity::Error, line, 0, msg});
    throw ParseAbort{};
  }

  // Unifies operand types for a binary operator, materializing pendings.
  void unify(PE& a, PE& b, const char* opname) {
    if (a.pending && b.pending) return;  // both pending: folded by caller
    if (a.pending) {
      a.e = coerce(a, b.e->type, opname);
      a.pending.reset();
      return;
    }
    if (b.pending) {
      b.e = coerce(b, a.e->type, opname);
      b.pending.reset();
      return;
    }
    if (a.e->type != b.e->type)
      fail_at_line(a.line, std::string("operand types of '") + opname + "' differ: " +
                               ty_name(a.e->type) + " vs " + ty_name(b.e->type) +
                               " (insert an explicit cast)");
  }

  PE parse_expr() { return parse_binary(0); }

  struct Level {
    Tok tok;
    BinOp op;
  };

  // Precedence climbing; levels from loosest to tightest.
  PE parse_binary(int level) {
    static const std::vector<std::vector<Level>> levels = {
        {{Tok::PipePipe, BinOp::LogOr}},
        {{Tok::AmpAmp, BinOp::LogAnd}},
        {{Tok::Pipe, BinOp::BitOr}},
        {{Tok::Caret, BinOp::BitXor}},
        {{Tok::Amp, BinOp::BitAnd}},
        {{Tok::Eq, BinOp::Eq}, {Tok::Ne, BinOp::Ne}},
        {{Tok::Lt, BinOp::Lt}, {Tok::Le, BinOp::Le}, {Tok::Gt, BinOp::Gt}, {Tok::Ge, BinOp::Ge}},
        {{Tok::Shl, BinOp::Shl}, {Tok::Shr, BinOp::Shr}},
        {{Tok::Plus, BinOp::Add}, {Tok::Minus, BinOp::Sub}},
        {{Tok::Star, BinOp::Mul}, {Tok::Slash, BinOp::Div}, {Tok::Percent, BinOp::Rem}},
    };
    if (level == int(levels.size())) return parse_unary();
    PE lhs = parse_binary(level + 1);
    while (true) {
      const Level* hit = nullptr;
      for (const Level& cand : levels[level]) {
        if (at(cand.tok)) {
          hit = &cand;
          break;
        }
      }
      if (!hit) return lhs;
      Token op_tok = take();
      PE rhs = parse_binary(level + 1);
      lhs = apply_binop(hit->op, lhs, rhs, op_tok);
    }
  }

  PE apply_binop(BinOp op, PE& a, PE& b, const Token& tok) {
    const char* opname = tok.text.empty() ? "operator" : tok.text.c_str();
    PE out;
    out.line = tok.line;
    if (op == BinOp::LogAnd || op == BinOp::LogOr) {
      if (a.pending || b.pending || a.e->type != Ty::Bool || b.e->type != Ty::Bool)
        fail_at(tok, "'&&'/'||' need bool operands");
      out.e = fb::binary(op, a.e, b.e);
      return out;
    }
    if (a.pending && b.pending) {
      // Constant arithmetic folds immediately at 64-bit signed precision.
      int64_t x = *a.pending, y = *b.pending;
      switch (op) {
        case BinOp::Add: out.pending = x + y; return out;
        case BinOp::Sub: out.pending = x - y; return out;
        case BinOp::Mul: out.pending = x * y; return out;
        case BinOp::Div:
          if (y == 0) fail_at(tok, "constant division by zero");
          out.pending = x / y;
          return out;
        case BinOp::Rem:
          if (y == 0) fail_at(tok, "constant remainder by zero");
          out.pending = x % y;
          return out;
        case BinOp::Eq: out.e = x == y ? eb::tru() : eb::fls(); return out;
        case BinOp::Ne: out.e = x != y ? eb::tru() : eb::fls(); return out;
        case BinOp::Lt: out.e = x < y ? eb::tru() : eb::fls(); return out;
        case BinOp::Le: out.e = x <= y ? eb::tru() : eb::fls(); return out;
        case BinOp::Gt: out.e = x > y ? eb::tru() : eb::fls(); return out;
        case BinOp::Ge: out.e = x >= y ? eb::tru() : eb::fls(); return out;
        default: fail_at(tok, "cannot infer the type of this constant expression");
      }
    }
    if (op == BinOp::Shl || op == BinOp::Shr) {
      if (a.pending) fail_at(tok, "shift of an untyped literal; cast it first");
      if (!is_integer(a.e->type)) fail_at(tok, "shifts need integer operands");
      ExprPtr amount = b.pending ? coerce(b, a.e->type, "shift amount") : b.e;
      if (amount->type != a.e->type)
        fail_at(tok, "shift amount must have the same type as the shifted value");
      out.e = fb::binary(op, a.e, amount);
      return out;
    }
    unify(a, b, opname);
    if (op == BinOp::Eq || op == BinOp::Ne) {
      out.e = fb::binary(op, a.e, b.e);
      return out;
    }
    if (!is_integer(a.e->type)) fail_at(tok, std::string("'") + opname + "' needs integer operands");
    out.e = fb::binary(op, a.e, b.e);
    return out;
  }

  PE parse_unary() {
    if (at(Tok::Minus)) {
      Token tok = take();
      PE v = parse_unary();
      PE out;
      out.line = tok.line;
      if (v.pending) {
        out.pending = -*v.pending;
        return out;
      }
      if (!is_integer(v.e->type)) fail_at(tok, "unary '-' needs an integer operand");
      out.e = fb::unary(UnOp::Neg, v.e);
      return out;
    }
    if (at(Tok::Bang)) {
      Token tok = take();
      PE v = parse_unary();
      if (v.pending || v.e->type != Ty::Bool) fail_at(tok, "'!' needs a bool operand");
      PE out;
      out.line = tok.line;
      out.e = fb::lnot(v.e);
      return out;
    }
    if (at(Tok::Tilde)) {
      Token tok = take();
      PE v = parse_unary();
      if (v.pending) fail_at(tok, "'~' on an untyped literal; cast it first");
      if (!is_integer(v.e->type)) fail_at(tok, "'~' needs an integer operand");
      PE out;
      out.line = tok.line;
      out.e = fb::unary(UnOp::BitNot, v.e);
      return out;
    }
    return parse_primary();
  }

  PE parse_primary() {
    PE out;
    out.line = cur().line;
    if (at(Tok::Number)) {
      Token n = take();
      out.pending = int64_t(n.num);
      return out;
    }
    if (at(Tok::KwTrue)) { take(); out.e = eb::tru(); return out; }
    if (at(Tok::KwFalse)) { take(); out.e = eb::fls(); return out; }
    if (at(Tok::LParen)) {
      take();
      PE v = parse_expr();
      expect(Tok::RParen, "')'");
      return v;
    }
    if (at(Tok::TypeName)) {
      Token ty = take();
      Ty target = type_from_name(ty.text);
      expect(Tok::LParen, "'(' after cast type");
      PE v = parse_expr();
      expect(Tok::RParen, "')'");
      if (target == Ty::Bool) fail_at(ty, "casts to bool are not supported; compare instead");
      if (v.pending) {
        out.e = eb::cnst(wrap(uint64_t(*v.pending), target), target);
        return out;
      }
      if (!is_integer(v.e->type)) fail_at(ty, "casts apply to integers");
      out.e = fb::cast(v.e, target);
      return out;
    }
    if (at(Tok::LBracket))
      fail("mmio reads ([addr]) are only legal as the sole right-hand side of an assignment");
    if (!at(Tok::Ident)) fail("expected an expression");
    Token name = take();
    // nondet_<ty>() hoists to a havocked temporary.
    if (name.text.rfind("nondet_", 0) == 0 && at(Tok::LParen)) {
      std::string suffix = name.text.substr(7);
      static const std::map<std::string, Ty> kinds = {
          {"bool", Ty::Bool}, {"u8", Ty::U8},   {"i8", Ty::I8},  {"u16", Ty::U16},
          {"i16", Ty::I16},   {"u32", Ty::U32}, {"i32", Ty::I32}};
      auto it = kinds.find(suffix);
      if (it == kinds.end()) fail_at(name, "unknown nondet kind '" + name.text + "'");
      take();
      expect(Tok::RParen, "')'");
      std::string tmp = fresh_temp(it->second);
      emit(Instr::havoc(tmp, name.line));
      out.e = eb::var(tmp, it->second);
      return out;
    }
    if (at(Tok::LParen)) {
      if (sigs_.count(name.text))
        fail_at(name, "calls may only appear as a statement or the sole right-hand side of an assignment");
      fail_at(name, "call to unknown function '" + name.text + "'");
    }
    const Symbol* s = lookup(name.text);
    if (!s) fail_at(name, "unknown variable '" + name.text + "'");
    if (s->kind == VarKind::MmioInput)
      fail_at(name, "@input reads are only legal as the sole right-hand side of an assignment");
    if (accept(Tok::LBracket)) {
      if (!s->array_len) fail_at(name, "'" + name.text + "' is not an array");
      ExprPtr idx = parse_typed_expr("array subscript");
      if (!is_integer(idx->type)) fail_at(name, "array subscript must be an integer");
      expect(Tok::RBracket, "']'");
      out.e = eb::index(name.text, s->type, std::move(idx));
      return out;
    }
    if (s->array_len) fail_at(name, "array '" + name.text + "' used without subscript");
    if (s->is_const && s->init) {
      out.e = eb::cnst(*s->init, s->type);  // single-step constant propagation
      return out;
    }
    out.e = eb::var(name.text, s->type);
    return out;
  }

  // --- finalization ----------------------------------------------------------

  void finalize() {
    // Stable property/assumption ids from the pristine lowered program.
    for (auto& [fname, fn] : prog_.functions) {
      for (size_t i = 0; i < fn.body.size(); ++i) {
        Instr& in = fn.body[i];
        if (in.op == Op::Assert && in.prop_id.empty())
          in.prop_id = "user:" + fname + "#" + std::to_string(i);
        if (in.op == Op::Assume && in.prop_id.empty())
          in.prop_id = "assume:" + fname + "#" + std::to_string(i);
      }
    }
    std::sort(prog_.mode_functions.begin(), prog_.mode_functions.end(),
              [&](const std::string& a, const std::string& b) {
                return prog_.functions.at(a).mode_order < prog_.functions.at(b).mode_order;
              });
  }

  std::vector<Token> toks_;
  Diagnostics& diags_;
  size_t pos_ = 0;
  IrProgram prog_;
  Function fn_;
  std::map<std::string, FnSig> sigs_;
  int loop_counter_ = 0;
  int temp_counter_ = 0;
};

}  // namespace

LowerResult lower(const std::string& source) {
  LowerResult out;
  try {
    Lexer lexer(source, out.diagnostics);
    std::vector<Token> toks = lexer.run();
    Parser parser(std::move(toks), out.diagnostics);
    IrProgram prog = parser.run();
    Diagnostics vd = validate(prog);
    out.diagnostics.insert(out.diagnostics.end(), vd.begin(), vd.end());
    if (!has_errors(out.diagnostics)) out.program = std::move(prog);
  } catch (const ParseAbort&) {
    // diagnostics already carry the error
  }
  return out;
}

}  // namespace irbmc::minic
