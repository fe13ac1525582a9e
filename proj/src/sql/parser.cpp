#include "pyrlite/sql/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "pyrlite/errors.hpp"

namespace pyrlite::sql {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

std::vector<Token> tokenize(std::string_view in) {
  std::vector<Token> out;
  int line = 1;
  std::size_t line_start = 0;
  std::size_t i = 0;
  auto make = [&](TokenKind k, std::size_t start) {
    Token t;
    t.kind = k;
    t.line = line;
    t.column = static_cast<int>(start - line_start) + 1;
    t.offset = start;
    return t;
  };
  while (i < in.size()) {
    const char c = in[i];
    if (c == '\n') {
      ++line;
      line_start = ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < in.size() && in[i + 1] == '-') {
      while (i < in.size() && in[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < in.size() && ident_char(in[i])) ++i;
      Token t = make(TokenKind::Identifier, start);
      t.raw = std::string(in.substr(start, i - start));
      t.text = upper(t.raw);
      out.push_back(std::move(t));
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < in.size() && std::isdigit(static_cast<unsigned char>(in[i + 1])))) {
      while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) ++i;
      if (i < in.size() && in[i] == '.') {
        ++i;
        while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) ++i;
      }
      if (i < in.size() && (in[i] == 'e' || in[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < in.size() && (in[j] == '+' || in[j] == '-')) ++j;
        if (j < in.size() && std::isdigit(static_cast<unsigned char>(in[j]))) {
          i = j;
          while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i]))) ++i;
        }
      }
      Token t = make(TokenKind::Number, start);
      t.raw = t.text = std::string(in.substr(start, i - start));
      out.push_back(std::move(t));
    } else if (c == '\'' || c == '"') {
      Token t = make(c == '\'' ? TokenKind::String : TokenKind::Identifier, start);
      std::string body;
      ++i;
      for (;;) {
        if (i >= in.size()) throw SyntaxError("unterminated " + std::string(c == '\'' ? "string" : "identifier"),
                                              t.line, t.column);
        if (in[i] == c) {
          if (i + 1 < in.size() && in[i + 1] == c) {
            body.push_back(c);
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (in[i] == '\n') {
          ++line;
          line_start = i + 1;
        }
        body.push_back(in[i++]);
      }
      t.text = body;
      t.raw = std::string(in.substr(start, i - start));
      t.delimited = c == '"';
      if (t.delimited && body.empty()) throw SyntaxError("empty delimited identifier", t.line, t.column);
      out.push_back(std::move(t));
    } else {
      static const char* const two[] = {"<>", "<=", ">=", "!=", "||"};
      Token t = make(TokenKind::Symbol, start);
      std::string_view rest = in.substr(i);
      for (const char* s : two)
        if (rest.substr(0, 2) == s) t.text = s;
      if (t.text.empty()) {
        if (std::string_view("(),.;*+-/=<>[]").find(c) == std::string_view::npos)
          throw SyntaxError(std::string("unexpected character '") + c + "'", t.line, t.column);
        t.text = std::string(1, c);
      }
      i += t.text.size();
      t.raw = t.text;
      out.push_back(std::move(t));
    }
  }
  Token end;
  end.kind = TokenKind::End;
  end.line = line;
  end.column = static_cast<int>(i - line_start) + 1;
  end.offset = i;
  out.push_back(end);
  return out;
}

const std::vector<std::string>& metadata_words() {
  static const std::vector<std::string> words = {
      "CAPTION", "LEGEND", "X",        "Y",        "HISTOGRAM", "LINE",      "PIE",      "POINTS",
      "URL",     "MIME",   "SQLAGENT", "USER",     "PASSWORD",  "JSON",      "CSV",      "ETAG",
      "MILLI",   "MONOTONIC", "INVERTS", "FORMATS", "ATTRIBUTE", "ENTITY",   "SUFFIX",   "PREFIX"};
  return words;
}

namespace {

// Words that never start an implicit alias or a metadata clause.
const std::set<std::string>& reserved() {
  static const std::set<std::string> r = {
      "SELECT", "FROM",  "WHERE", "ORDER",  "BY",     "AS",     "AND",    "OR",     "NOT",    "NULL",
      "CASE",   "WHEN",  "THEN",  "ELSE",   "END",    "IS",     "ON",     "TO",     "TABLE",  "VIEW",
      "CREATE", "INSERT", "INTO", "VALUES", "UPDATE", "SET",    "DELETE", "GRANT",  "REVOKE", "DROP",
      "ALTER",  "PRIMARY", "KEY", "REFERENCES", "UNIQUE", "CHECK", "DEFAULT", "CAST", "TRUE", "FALSE",
      "ASC",    "DESC",  "GET",   "USING",  "OF",     "DISTINCT", "UNION", "JOIN", "INNER", "LEFT",
      "GROUP",  "HAVING", "FOREIGN", "CONSTRAINT"};
  return r;
}

bool is_aggregate(const std::string& w, AggKind& k) {
  static const std::pair<const char*, AggKind> names[] = {
      {"SUM", AggKind::Sum}, {"COUNT", AggKind::Count}, {"AVG", AggKind::Avg}, {"MIN", AggKind::Min},
      {"MAX", AggKind::Max}};
  for (auto [n, kind] : names)
    if (w == n) {
      k = kind;
      return true;
    }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  std::vector<Statement> script() {
    std::vector<Statement> out;
    while (!at_end()) {
      if (accept_symbol(";")) continue;
      out.push_back(statement());
      if (!at_end()) expect_symbol(";");
    }
    return out;
  }

  Statement single() {
    if (at_end()) fail("empty statement");
    Statement s = statement();
    accept_symbol(";");
    if (!at_end()) fail_unexpected();
    return s;
  }

  ExprPtr lone_expression() {
    ExprPtr e = expression();
    if (!at_end()) fail_unexpected();
    return e;
  }

  Select lone_select() {
    expect_word("SELECT");
    Select s = select_body();
    accept_symbol(";");
    if (!at_end()) fail_unexpected();
    return s;
  }

 private:
  // Token helpers ------------------------------------------------------------
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == TokenKind::End; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool is_word(const char* w, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::Identifier && !t.delimited && t.text == w;
  }
  bool is_symbol(const char* s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::Symbol && t.text == s;
  }
  bool accept_word(const char* w) {
    if (!is_word(w)) return false;
    ++pos_;
    return true;
  }
  bool accept_symbol(const char* s) {
    if (!is_symbol(s)) return false;
    ++pos_;
    return true;
  }
  void expect_word(const char* w) {
    if (!accept_word(w)) fail(std::string("expected ") + w + " but found " + describe(peek()));
  }
  void expect_symbol(const char* s) {
    if (!accept_symbol(s)) fail(std::string("expected '") + s + "' but found " + describe(peek()));
  }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::End) return "end of input";
    return "\"" + t.raw + "\"";
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw SyntaxError(msg, t.line, t.column);
  }
  [[noreturn]] void fail_unexpected() const { fail("syntax error at " + describe(peek())); }

  std::string identifier(const char* what = "identifier") {
    const Token& t = peek();
    if (t.kind != TokenKind::Identifier || (!t.delimited && reserved().count(t.text)))
      fail(std::string("expected ") + what + " but found " + describe(t));
    ++pos_;
    return t.text;
  }
  bool at_identifier() const {
    const Token& t = peek();
    return t.kind == TokenKind::Identifier && (t.delimited || !reserved().count(t.text));
  }
  std::string string_literal(const char* what) {
    if (peek().kind != TokenKind::String) fail(std::string("expected ") + what + " but found " + describe(peek()));
    return next().text;
  }
  std::vector<std::string> identifier_list() {
    expect_symbol("(");
    std::vector<std::string> out;
    do out.push_back(identifier("column name"));
    while (accept_symbol(","));
    expect_symbol(")");
    return out;
  }
  std::int32_t small_integer() {
    if (peek().kind != TokenKind::Number) fail("expected a number but found " + describe(peek()));
    const std::string& s = next().text;
    if (s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9)
      fail("expected a small integer but found " + s);
    return std::stoi(s);
  }

  // Statements ---------------------------------------------------------------
  Statement statement() {
    if (accept_word("CREATE")) return create();
    if (accept_word("GRANT")) return grant(false);
    if (accept_word("REVOKE")) return grant(true);
    if (accept_word("INSERT")) return insert();
    if (accept_word("UPDATE")) return update();
    if (accept_word("DELETE")) return remove();
    if (accept_word("SELECT")) return SelectStatement{select_body()};
    if (accept_word("TABLE")) {
      Select s;
      s.items.push_back(SelectItem{{}, "", true, ""});
      s.from.push_back(TableRef{identifier("table name"), ""});
      return SelectStatement{std::move(s)};
    }
    if (accept_word("SET")) {
      expect_word("ROLE");
      return SetRole{identifier("role name")};
    }
    if (accept_word("DROP")) {
      Drop d;
      d.what = object_word();
      d.name = identifier();
      return d;
    }
    if (accept_word("ALTER")) return alter();
    if (accept_word("BEGIN")) {
      if (!accept_word("TRANSACTION")) accept_word("WORK");
      return Begin{};
    }
    if (accept_word("COMMIT")) {
      accept_word("WORK");
      return Commit{};
    }
    if (accept_word("ROLLBACK")) {
      accept_word("WORK");
      return Rollback{};
    }
    fail_unexpected();
  }

  ObjectWord object_word() {
    static const std::pair<const char*, ObjectWord> words[] = {
        {"TABLE", ObjectWord::Table}, {"VIEW", ObjectWord::View},   {"ROLE", ObjectWord::Role},
        {"USER", ObjectWord::User},   {"INDEX", ObjectWord::Index}, {"DOMAIN", ObjectWord::Domain}};
    for (auto [w, o] : words)
      if (accept_word(w)) return o;
    fail("expected TABLE, VIEW, ROLE, USER, INDEX or DOMAIN but found " + describe(peek()));
  }

  Statement create() {
    if (accept_word("TABLE")) return create_table();
    if (accept_word("VIEW")) return create_view();
    if (accept_word("ROLE")) return CreateRole{identifier("role name")};
    if (accept_word("USER")) {
      CreateUser u{identifier("user name"), std::nullopt};
      if (accept_word("PASSWORD")) u.password = string_literal("password string");
      return u;
    }
    if (accept_word("DOMAIN")) {
      CreateDomain d;
      d.name = identifier("domain name");
      accept_word("AS");
      d.type = type_spec();
      return d;
    }
    bool unique = accept_word("UNIQUE");
    if (accept_word("INDEX")) {
      CreateIndex x;
      x.unique = unique;
      x.name = identifier("index name");
      expect_word("ON");
      x.table = identifier("table name");
      x.columns = identifier_list();
      return x;
    }
    fail("expected TABLE, VIEW, ROLE, USER, DOMAIN or INDEX after CREATE but found " + describe(peek()));
  }

  CreateTable create_table() {
    CreateTable t;
    t.name = identifier("table name");
    expect_symbol("(");
    do {
      if (is_word("CONSTRAINT") || is_word("PRIMARY") || is_word("UNIQUE") || is_word("FOREIGN") ||
          is_word("CHECK")) {
        t.constraints.push_back(table_constraint());
      } else {
        t.columns.push_back(column_def());
      }
    } while (accept_symbol(","));
    expect_symbol(")");
    t.metadata = metadata();
    return t;
  }

  TypeSpec type_spec() {
    TypeSpec t;
    const Token& tok = peek();
    if (tok.kind != TokenKind::Identifier) fail("expected a type but found " + describe(tok));
    t.name = next().text;
    if (accept_word("VARYING")) t.name = "VARCHAR";
    if (accept_symbol("(")) {
      t.precision = small_integer();
      if (accept_symbol(",")) t.scale = small_integer();
      expect_symbol(")");
    }
    return t;
  }

  FkAction fk_action() {
    if (accept_word("CASCADE")) return FkAction::Cascade;
    if (accept_word("RESTRICT")) return FkAction::Restrict;
    if (accept_word("NO")) {
      expect_word("ACTION");
      return FkAction::Restrict;
    }
    if (accept_word("SET")) {
      expect_word("NULL");
      return FkAction::SetNull;
    }
    fail("expected CASCADE, SET NULL, RESTRICT or NO ACTION but found " + describe(peek()));
  }

  ForeignRef references() {
    ForeignRef r;
    r.table = identifier("table name");
    if (is_symbol("(")) r.columns = identifier_list();
    while (is_word("ON")) {
      ++pos_;
      if (accept_word("DELETE")) {
        r.on_delete = fk_action();
      } else {
        expect_word("UPDATE");
        r.on_update = fk_action();
      }
    }
    return r;
  }

  ExprPtr check_body() {
    expect_symbol("(");
    ExprPtr e = expression();
    expect_symbol(")");
    return e;
  }

  ColumnDef column_def() {
    ColumnDef c;
    c.name = identifier("column name");
    c.type = type_spec();
    for (;;) {
      if (accept_word("NOT")) {
        expect_word("NULL");
        c.not_null = true;
      } else if (accept_word("NULL")) {
      } else if (accept_word("DEFAULT")) {
        c.default_value = unary();
      } else if (accept_word("PRIMARY")) {
        expect_word("KEY");
        c.primary = true;
      } else if (accept_word("UNIQUE")) {
        c.unique = true;
      } else if (accept_word("REFERENCES")) {
        c.references = references();
      } else if (accept_word("CHECK")) {
        c.check = check_body();
      } else {
        return c;
      }
    }
  }

  TableConstraint table_constraint() {
    TableConstraint k;
    if (accept_word("CONSTRAINT")) k.name = identifier("constraint name");
    if (accept_word("PRIMARY")) {
      expect_word("KEY");
      k.kind = IndexKind::Primary;
      k.columns = identifier_list();
    } else if (accept_word("UNIQUE")) {
      k.kind = IndexKind::Unique;
      k.columns = identifier_list();
    } else if (accept_word("FOREIGN")) {
      expect_word("KEY");
      k.kind = IndexKind::Foreign;
      k.columns = identifier_list();
      expect_word("REFERENCES");
      k.references = references();
    } else if (accept_word("CHECK")) {
      k.kind = IndexKind::Check;
      k.check = check_body();
    } else {
      fail("expected PRIMARY KEY, UNIQUE, FOREIGN KEY or CHECK but found " + describe(peek()));
    }
    return k;
  }

  Statement create_view() {
    CreateView v;
    v.name = identifier("view name");
    if (is_symbol("(")) v.columns = identifier_list();
    if (accept_word("OF")) {
      expect_symbol("(");
      do {
        std::string n = identifier("column name");
        v.rest_columns.emplace_back(std::move(n), type_spec());
      } while (accept_symbol(","));
      expect_symbol(")");
    }
    expect_word("AS");
    if (accept_word("GET")) {
      if (!v.columns.empty()) fail("a RESTView declares its columns with OF (...)");
      if (v.rest_columns.empty()) fail("a RESTView needs OF (column type, ...)");
      if (peek().kind == TokenKind::String) v.metadata.strings.emplace_back("URL", next().text);
      if (accept_word("USING")) v.using_table = identifier("table name");
      Metadata more = metadata();
      v.metadata = v.metadata.merged(more);
      if (!v.metadata.get("URL") && v.using_table.empty()) fail("AS GET needs a URL or USING table");
      return v;
    }
    if (!v.rest_columns.empty()) fail("OF (...) is only allowed with AS GET");
    if (accept_symbol("(")) {
      expect_word("SELECT");
      v.query = select_body();
      expect_symbol(")");
    } else {
      expect_word("SELECT");
      v.query = select_body();
    }
    v.metadata = metadata();
    return v;
  }

  Metadata metadata() {
    Metadata m;
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::String) {
        m.strings.emplace_back("DESCRIPTION", next().text);
        continue;
      }
      if (t.kind != TokenKind::Identifier) return m;
      const std::string w = t.text;
      const auto& words = metadata_words();
      if (t.delimited || std::find(words.begin(), words.end(), w) == words.end()) {
        std::string list;
        for (const auto& x : words) list += (list.empty() ? "" : ", ") + x;
        fail("unknown metadata word " + t.raw + "; accepted words: " + list);
      }
      ++pos_;
      if (w == "HISTOGRAM" || w == "LINE" || w == "PIE" || w == "POINTS") {
        std::string flag = w;
        if (accept_symbol("(")) {
          std::string a = identifier();
          expect_symbol(",");
          std::string b = identifier();
          expect_symbol(")");
          flag += "(" + a + "," + b + ")";
        }
        m.flags.push_back(flag);
      } else if (w == "URL" || w == "MIME" || w == "SQLAGENT" || w == "USER" || w == "PASSWORD") {
        m.strings.emplace_back(w, string_literal("string after metadata word"));
      } else if (w == "INVERTS" || w == "FORMATS" || w == "SUFFIX" || w == "PREFIX") {
        m.strings.emplace_back(w, identifier());
      } else {
        m.flags.push_back(w);
      }
    }
  }

  Statement grant(bool revoke) {
    Grant g;
    g.revoke = revoke;
    do {
      PrivilegeSpec p;
      const Token& t = peek();
      if (t.kind != TokenKind::Identifier) fail("expected a privilege or role but found " + describe(t));
      p.name = next().text;
      if (!t.delimited && p.name == "ALL") accept_word("PRIVILEGES");
      if (is_symbol("(")) p.columns = identifier_list();
      g.privileges.push_back(std::move(p));
    } while (accept_symbol(","));
    if (accept_word("ON")) {
      if (!accept_word("TABLE")) accept_word("VIEW");
      g.object = identifier("object name");
    }
    if (revoke) {
      expect_word("FROM");
    } else {
      expect_word("TO");
    }
    do {
      if (!accept_word("ROLE")) accept_word("USER");
      const Token& t = peek();
      if (t.kind != TokenKind::Identifier) fail("expected a grantee but found " + describe(t));
      g.grantees.push_back(next().text);
    } while (accept_symbol(","));
    return g;
  }

  Statement insert() {
    expect_word("INTO");
    Insert s;
    s.table = identifier("table name");
    if (is_symbol("(") && !is_word("SELECT", 1)) s.columns = identifier_list();
    if (accept_word("VALUES")) {
      do {
        expect_symbol("(");
        std::vector<ExprPtr> row;
        do row.push_back(expression());
        while (accept_symbol(","));
        expect_symbol(")");
        s.rows.push_back(std::move(row));
      } while (accept_symbol(","));
    } else if (accept_word("SELECT")) {
      s.query = select_body();
    } else {
      fail("expected VALUES or SELECT but found " + describe(peek()));
    }
    return s;
  }

  std::string optional_alias() {
    if (accept_word("AS")) return identifier("alias");
    if (at_identifier()) return identifier();
    return "";
  }

  Statement update() {
    Update u;
    u.table = identifier("table name");
    if (!is_word("SET")) u.alias = optional_alias();
    expect_word("SET");
    do {
      std::string c = identifier("column name");
      expect_symbol("=");
      u.sets.emplace_back(std::move(c), expression());
    } while (accept_symbol(","));
    if (accept_word("WHERE")) u.where = expression();
    return u;
  }

  Statement remove() {
    expect_word("FROM");
    Delete d;
    d.table = identifier("table name");
    d.alias = optional_alias();
    if (accept_word("WHERE")) d.where = expression();
    return d;
  }

  Statement alter() {
    Alter a;
    a.what = object_word();
    a.name = identifier();
    if (a.what == ObjectWord::User) {
      expect_word("PASSWORD");
      a.action = AlterAction::SetPassword;
      a.text = string_literal("password string");
      return a;
    }
    if (accept_word("RENAME")) {
      expect_word("TO");
      a.action = AlterAction::Rename;
      a.text = identifier("new name");
      return a;
    }
    if (a.what == ObjectWord::View && (is_symbol("(") || is_word("AS"))) {
      a.action = AlterAction::RedefineView;
      if (is_symbol("(")) a.columns = identifier_list();
      expect_word("AS");
      expect_word("SELECT");
      a.query = select_body();
      return a;
    }
    if (a.what == ObjectWord::Table && accept_word("ADD")) {
      if (is_word("CONSTRAINT") || is_word("PRIMARY") || is_word("UNIQUE") || is_word("FOREIGN") ||
          is_word("CHECK")) {
        a.action = AlterAction::AddConstraint;
        a.constraint = table_constraint();
      } else {
        accept_word("COLUMN");
        a.action = AlterAction::AddColumn;
        a.column = column_def();
      }
      return a;
    }
    if (a.what == ObjectWord::Table && accept_word("DROP")) {
      if (accept_word("CONSTRAINT")) {
        a.action = AlterAction::DropConstraint;
      } else {
        accept_word("COLUMN");
        a.action = AlterAction::DropColumn;
      }
      a.text = identifier();
      return a;
    }
    a.action = AlterAction::Metadata;
    a.metadata = metadata();
    if (a.metadata.empty()) fail_unexpected();
    return a;
  }

  // Queries ------------------------------------------------------------------
  Select select_body() {
    Select s;
    do {
      SelectItem item;
      if (accept_symbol("*")) {
        item.star = true;
      } else if (peek().kind == TokenKind::Identifier && is_symbol(".", 1) && is_symbol("*", 2)) {
        item.star = true;
        item.qualifier = identifier();
        pos_ += 2;
      } else {
        item.expr = expression();
        item.alias = optional_alias();
      }
      s.items.push_back(std::move(item));
    } while (accept_symbol(","));
    if (accept_word("FROM")) {
      do {
        TableRef r;
        r.name = identifier("table name");
        r.alias = optional_alias();
        s.from.push_back(std::move(r));
      } while (accept_symbol(","));
    }
    if (accept_word("WHERE")) s.where = expression();
    if (accept_word("ORDER")) {
      expect_word("BY");
      do {
        OrderItem o{expression(), false};
        if (accept_word("DESC")) {
          o.desc = true;
        } else {
          accept_word("ASC");
        }
        s.order.push_back(std::move(o));
      } while (accept_symbol(","));
    }
    if (is_word("GROUP")) fail("GROUP BY is not supported");
    return s;
  }

  ExprPtr expression() { return disjunction(); }

  ExprPtr disjunction() {
    ExprPtr e = conjunction();
    while (accept_word("OR")) e = Expr::binary("OR", e, conjunction());
    return e;
  }

  ExprPtr conjunction() {
    ExprPtr e = negation();
    while (accept_word("AND")) e = Expr::binary("AND", e, negation());
    return e;
  }

  ExprPtr negation() {
    if (accept_word("NOT")) return Expr::unary("NOT", negation());
    return comparison();
  }

  ExprPtr comparison() {
    ExprPtr e = additive();
    static const char* const ops[] = {"=", "<>", "!=", "<=", ">=", "<", ">"};
    for (const char* op : ops) {
      if (accept_symbol(op)) {
        std::string o = op;
        if (o == "!=") o = "<>";
        return Expr::binary(o, e, additive());
      }
    }
    if (accept_word("IS")) {
      Expr x;
      x.kind = ExprKind::IsNull;
      x.flag = accept_word("NOT");
      expect_word("NULL");
      x.args.push_back(e);
      return x;
    }
    return e;
  }

  ExprPtr additive() {
    ExprPtr e = multiplicative();
    for (;;) {
      if (accept_symbol("+")) {
        e = Expr::binary("+", e, multiplicative());
      } else if (accept_symbol("-")) {
        e = Expr::binary("-", e, multiplicative());
      } else if (accept_symbol("||")) {
        e = Expr::binary("||", e, multiplicative());
      } else {
        return e;
      }
    }
  }

  ExprPtr multiplicative() {
    ExprPtr e = unary();
    for (;;) {
      if (accept_symbol("*")) {
        e = Expr::binary("*", e, unary());
      } else if (accept_symbol("/")) {
        e = Expr::binary("/", e, unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr unary() {
    if (accept_symbol("-")) return Expr::unary("-", unary());
    if (accept_symbol("+")) return unary();
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number: {
        ++pos_;
        return Expr::literal(parse_number(t.text));
      }
      case TokenKind::String: {
        ++pos_;
        return Expr::literal(Value::text(t.text));
      }
      case TokenKind::Symbol: {
        if (accept_symbol("(")) {
          if (accept_word("SELECT")) {
            Expr x;
            x.kind = ExprKind::Subquery;
            x.query = select_body();
            expect_symbol(")");
            return x;
          }
          ExprPtr e = expression();
          expect_symbol(")");
          return e;
        }
        fail_unexpected();
      }
      case TokenKind::End: fail("unexpected end of input");
      case TokenKind::Identifier: break;
    }
    if (!t.delimited) {
      if (accept_word("NULL")) return Expr::literal(Value{});
      if (accept_word("TRUE")) return Expr::literal(Value::boolean(true));
      if (accept_word("FALSE")) return Expr::literal(Value::boolean(false));
      if (is_word("DATE") && peek(1).kind == TokenKind::String) {
        ++pos_;
        const Token& s = next();
        try {
          return Expr::literal(Value::date(parse_date(s.text)));
        } catch (const Error& e) {
          throw SyntaxError(e.what(), s.line, s.column);
        }
      }
      if (accept_word("CASE")) return case_expression();
      if (accept_word("CAST")) {
        expect_symbol("(");
        Expr x;
        x.kind = ExprKind::Cast;
        x.args.push_back(expression());
        expect_word("AS");
        x.type = type_spec();
        expect_symbol(")");
        return x;
      }
      AggKind k;
      if (is_aggregate(t.text, k) && is_symbol("(", 1)) {
        pos_ += 2;
        Expr x;
        x.kind = ExprKind::Aggregate;
        x.agg = k;
        if (k == AggKind::Count && accept_symbol("*")) {
          x.flag = true;
        } else {
          x.args.push_back(expression());
        }
        expect_symbol(")");
        return x;
      }
    }
    std::vector<std::string> name{identifier()};
    if (accept_symbol(".")) name.push_back(identifier("column name"));
    return Expr::column(std::move(name));
  }

  ExprPtr case_expression() {
    Expr x;
    x.kind = ExprKind::Case;
    ExprPtr operand;
    if (!is_word("WHEN")) operand = expression();
    if (!is_word("WHEN")) fail("expected WHEN but found " + describe(peek()));
    while (accept_word("WHEN")) {
      ExprPtr cond = expression();
      if (operand) cond = Expr::binary("=", operand, cond);
      x.args.push_back(cond);
      expect_word("THEN");
      x.args.push_back(expression());
    }
    if (accept_word("ELSE")) {
      x.flag = true;
      x.args.push_back(expression());
    }
    expect_word("END");
    return x;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Statement parse_statement(std::string_view text) { return Parser(text).single(); }
std::vector<Statement> parse_script(std::string_view text) { return Parser(text).script(); }
ExprPtr parse_expression(std::string_view text) { return Parser(text).lone_expression(); }
Select parse_select(std::string_view text) { return Parser(text).lone_select(); }

}  // namespace pyrlite::sql
