#include "pyrlite/sql/ast.hpp"

#include <cctype>
#include <set>

#include "pyrlite/sql/parser.hpp"

namespace pyrlite::sql {

const char* agg_name(AggKind k) {
  switch (k) {
    case AggKind::Sum: return "SUM";
    case AggKind::Count: return "COUNT";
    case AggKind::Avg: return "AVG";
    case AggKind::Min: return "MIN";
    case AggKind::Max: return "MAX";
  }
  return "?";
}

const char* object_word_name(ObjectWord w) {
  switch (w) {
    case ObjectWord::Table: return "TABLE";
    case ObjectWord::View: return "VIEW";
    case ObjectWord::Role: return "ROLE";
    case ObjectWord::User: return "USER";
    case ObjectWord::Index: return "INDEX";
    case ObjectWord::Domain: return "DOMAIN";
  }
  return "?";
}

ExprPtr Expr::literal(Value v) {
  Expr e;
  e.value = std::move(v);
  return e;
}

ExprPtr Expr::column(std::vector<std::string> name) {
  Expr e;
  e.kind = ExprKind::Column;
  e.name = std::move(name);
  return e;
}

ExprPtr Expr::unary(std::string op, ExprPtr a) {
  Expr e;
  e.kind = ExprKind::Unary;
  e.op = std::move(op);
  e.args.push_back(std::move(a));
  return e;
}

ExprPtr Expr::binary(std::string op, ExprPtr a, ExprPtr b) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.op = std::move(op);
  e.args.push_back(std::move(a));
  e.args.push_back(std::move(b));
  return e;
}

std::string quote_identifier(const std::string& name) {
  // Words the parser treats specially anywhere an identifier may appear.
  static const std::set<std::string> special = {
      "SELECT", "FROM", "WHERE", "ORDER", "BY", "AS", "AND", "OR", "NOT", "NULL", "CASE", "WHEN", "THEN",
      "ELSE", "END", "IS", "ON", "TO", "TABLE", "VIEW", "CREATE", "INSERT", "INTO", "VALUES", "UPDATE",
      "SET", "DELETE", "GRANT", "REVOKE", "DROP", "ALTER", "PRIMARY", "KEY", "REFERENCES", "UNIQUE",
      "CHECK", "DEFAULT", "CAST", "TRUE", "FALSE", "ASC", "DESC", "GET", "USING", "OF", "DISTINCT", "UNION",
      "JOIN", "INNER", "LEFT", "GROUP", "HAVING", "FOREIGN", "CONSTRAINT", "DATE", "SUM", "COUNT", "AVG",
      "MIN", "MAX", "ROLE", "USER", "PUBLIC", "ALL", "PRIVILEGES", "COLUMN", "VARYING"};
  bool bare = !name.empty() && (std::isupper(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
              !special.count(name);
  for (char c : name)
    if (!(std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
      bare = false;
  if (bare) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

namespace {

std::string quote_string(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'";
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + quote_identifier(n);
  return out;
}

std::string action_sql(FkAction a) {
  switch (a) {
    case FkAction::Cascade: return "CASCADE";
    case FkAction::SetNull: return "SET NULL";
    case FkAction::Restrict: return "RESTRICT";
  }
  return "";
}

std::string ref_sql(const ForeignRef& r) {
  std::string s = "REFERENCES " + quote_identifier(r.table);
  if (!r.columns.empty()) s += " (" + join_names(r.columns) + ")";
  if (r.on_delete != FkAction::Restrict) s += " ON DELETE " + action_sql(r.on_delete);
  if (r.on_update != FkAction::Restrict) s += " ON UPDATE " + action_sql(r.on_update);
  return s;
}

std::string column_sql(const ColumnDef& c) {
  std::string s = quote_identifier(c.name) + " " + to_sql(c.type);
  if (c.not_null) s += " NOT NULL";
  if (c.default_value) s += " DEFAULT " + to_sql(*c.default_value);
  if (c.primary) s += " PRIMARY KEY";
  if (c.unique) s += " UNIQUE";
  if (c.references) s += " " + ref_sql(*c.references);
  if (c.check) s += " CHECK (" + to_sql(*c.check) + ")";
  return s;
}

std::string constraint_sql(const TableConstraint& k) {
  std::string s = k.name.empty() ? "" : "CONSTRAINT " + quote_identifier(k.name) + " ";
  switch (k.kind) {
    case IndexKind::Primary: return s + "PRIMARY KEY (" + join_names(k.columns) + ")";
    case IndexKind::Unique: return s + "UNIQUE (" + join_names(k.columns) + ")";
    case IndexKind::Foreign: return s + "FOREIGN KEY (" + join_names(k.columns) + ") " + ref_sql(*k.references);
    case IndexKind::Check: return s + "CHECK (" + to_sql(*k.check) + ")";
    case IndexKind::Plain: break;
  }
  return s;
}

std::string with_metadata(std::string s, const Metadata& m) {
  if (!m.empty()) s += " " + to_sql(m);
  return s;
}

struct StatementPrinter {
  std::string operator()(const CreateTable& t) const {
    std::string s = "CREATE TABLE " + quote_identifier(t.name) + " (";
    bool first = true;
    for (const auto& c : t.columns) {
      s += (first ? "" : ", ") + column_sql(c);
      first = false;
    }
    for (const auto& k : t.constraints) {
      s += (first ? "" : ", ") + constraint_sql(k);
      first = false;
    }
    return with_metadata(s + ")", t.metadata);
  }
  std::string operator()(const CreateView& v) const {
    std::string s = "CREATE VIEW " + quote_identifier(v.name);
    if (v.is_rest()) {
      s += " OF (";
      for (std::size_t i = 0; i < v.rest_columns.size(); ++i)
        s += (i ? ", " : "") + quote_identifier(v.rest_columns[i].first) + " " + to_sql(v.rest_columns[i].second);
      s += ") AS GET";
      if (!v.using_table.empty()) s += " USING " + quote_identifier(v.using_table);
      return with_metadata(s, v.metadata);
    }
    if (!v.columns.empty()) s += " (" + join_names(v.columns) + ")";
    return with_metadata(s + " AS " + to_sql(*v.query), v.metadata);
  }
  std::string operator()(const CreateRole& r) const { return "CREATE ROLE " + quote_identifier(r.name); }
  std::string operator()(const CreateUser& u) const {
    std::string s = "CREATE USER " + quote_identifier(u.name);
    if (u.password) s += " PASSWORD " + quote_string(*u.password);
    return s;
  }
  std::string operator()(const CreateDomain& d) const {
    return "CREATE DOMAIN " + quote_identifier(d.name) + " AS " + to_sql(d.type);
  }
  std::string operator()(const CreateIndex& x) const {
    return std::string("CREATE ") + (x.unique ? "UNIQUE " : "") + "INDEX " + quote_identifier(x.name) + " ON " +
           quote_identifier(x.table) + " (" + join_names(x.columns) + ")";
  }
  std::string operator()(const Grant& g) const {
    std::string s = g.revoke ? "REVOKE " : "GRANT ";
    for (std::size_t i = 0; i < g.privileges.size(); ++i) {
      const std::string& n = g.privileges[i].name;
      const bool word = n == "SELECT" || n == "INSERT" || n == "UPDATE" || n == "DELETE" || n == "USAGE" || n == "ALL";
      s += (i ? ", " : "") + (word ? n : quote_identifier(n));
      if (!g.privileges[i].columns.empty()) s += " (" + join_names(g.privileges[i].columns) + ")";
    }
    if (!g.object.empty()) s += " ON " + quote_identifier(g.object);
    s += g.revoke ? " FROM " : " TO ";
    for (std::size_t i = 0; i < g.grantees.size(); ++i)
      s += (i ? ", " : "") + (g.grantees[i] == "PUBLIC" ? g.grantees[i] : quote_identifier(g.grantees[i]));
    return s;
  }
  std::string operator()(const Insert& i) const {
    std::string s = "INSERT INTO " + quote_identifier(i.table);
    if (!i.columns.empty()) s += " (" + join_names(i.columns) + ")";
    if (i.query) return s + " " + to_sql(*i.query);
    s += " VALUES ";
    for (std::size_t r = 0; r < i.rows.size(); ++r) {
      s += r ? ", (" : "(";
      for (std::size_t c = 0; c < i.rows[r].size(); ++c) s += (c ? ", " : "") + to_sql(*i.rows[r][c]);
      s += ")";
    }
    return s;
  }
  std::string operator()(const Update& u) const {
    std::string s = "UPDATE " + quote_identifier(u.table);
    if (!u.alias.empty()) s += " AS " + quote_identifier(u.alias);
    s += " SET ";
    for (std::size_t i = 0; i < u.sets.size(); ++i)
      s += (i ? ", " : "") + quote_identifier(u.sets[i].first) + " = " + to_sql(*u.sets[i].second);
    if (u.where) s += " WHERE " + to_sql(*u.where);
    return s;
  }
  std::string operator()(const Delete& d) const {
    std::string s = "DELETE FROM " + quote_identifier(d.table);
    if (!d.alias.empty()) s += " AS " + quote_identifier(d.alias);
    if (d.where) s += " WHERE " + to_sql(*d.where);
    return s;
  }
  std::string operator()(const SelectStatement& s) const { return to_sql(*s.query); }
  std::string operator()(const SetRole& r) const { return "SET ROLE " + quote_identifier(r.name); }
  std::string operator()(const Drop& d) const {
    return std::string("DROP ") + object_word_name(d.what) + " " + quote_identifier(d.name);
  }
  std::string operator()(const Alter& a) const {
    std::string s = std::string("ALTER ") + object_word_name(a.what) + " " + quote_identifier(a.name);
    switch (a.action) {
      case AlterAction::AddColumn: return s + " ADD COLUMN " + column_sql(*a.column);
      case AlterAction::AddConstraint: return s + " ADD " + constraint_sql(*a.constraint);
      case AlterAction::DropColumn: return s + " DROP COLUMN " + quote_identifier(a.text);
      case AlterAction::DropConstraint: return s + " DROP CONSTRAINT " + quote_identifier(a.text);
      case AlterAction::Rename: return s + " RENAME TO " + quote_identifier(a.text);
      case AlterAction::Metadata: return with_metadata(s, a.metadata);
      case AlterAction::SetPassword: return s + " PASSWORD " + quote_string(a.text);
      case AlterAction::RedefineView:
        if (!a.columns.empty()) s += " (" + join_names(a.columns) + ")";
        return s + " AS " + to_sql(*a.query);
    }
    return s;
  }
  std::string operator()(const Begin&) const { return "BEGIN"; }
  std::string operator()(const Commit&) const { return "COMMIT"; }
  std::string operator()(const Rollback&) const { return "ROLLBACK"; }
};

}  // namespace

std::string to_sql(const TypeSpec& t) {
  std::string s = t.name;
  if (t.precision || t.scale) {
    s += "(" + std::to_string(t.precision);
    if (t.scale) s += "," + std::to_string(t.scale);
    s += ")";
  }
  return s;
}

std::string to_sql(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Literal: return e.value.to_sql();
    case ExprKind::Column: {
      std::string s;
      for (const auto& part : e.name) s += (s.empty() ? "" : ".") + quote_identifier(part);
      return s;
    }
    case ExprKind::Unary:
      return "(" + e.op + (e.op == "NOT" ? " " : "") + to_sql(*e.args[0]) + ")";
    case ExprKind::Binary: return "(" + to_sql(*e.args[0]) + " " + e.op + " " + to_sql(*e.args[1]) + ")";
    case ExprKind::Case: {
      std::string s = "CASE";
      std::size_t pairs = (e.args.size() - (e.flag ? 1 : 0)) / 2;
      for (std::size_t i = 0; i < pairs; ++i)
        s += " WHEN " + to_sql(*e.args[2 * i]) + " THEN " + to_sql(*e.args[2 * i + 1]);
      if (e.flag) s += " ELSE " + to_sql(*e.args.back());
      return s + " END";
    }
    case ExprKind::Cast: return "CAST(" + to_sql(*e.args[0]) + " AS " + to_sql(e.type) + ")";
    case ExprKind::Aggregate:
      return std::string(agg_name(e.agg)) + "(" + (e.flag ? std::string("*") : to_sql(*e.args[0])) + ")";
    case ExprKind::Subquery: return "(" + to_sql(*e.query) + ")";
    case ExprKind::IsNull: return "(" + to_sql(*e.args[0]) + (e.flag ? " IS NOT NULL)" : " IS NULL)");
  }
  return "?";
}

std::string to_sql(const Select& s) {
  std::string out = "SELECT ";
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& it = s.items[i];
    if (i) out += ", ";
    if (it.star) {
      out += it.qualifier.empty() ? "*" : quote_identifier(it.qualifier) + ".*";
    } else {
      out += to_sql(*it.expr);
      if (!it.alias.empty()) out += " AS " + quote_identifier(it.alias);
    }
  }
  if (!s.from.empty()) {
    out += " FROM ";
    for (std::size_t i = 0; i < s.from.size(); ++i) {
      out += (i ? ", " : "") + quote_identifier(s.from[i].name);
      if (!s.from[i].alias.empty()) out += " AS " + quote_identifier(s.from[i].alias);
    }
  }
  if (s.where) out += " WHERE " + to_sql(*s.where);
  if (!s.order.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < s.order.size(); ++i)
      out += (i ? ", " : "") + to_sql(*s.order[i].expr) + (s.order[i].desc ? " DESC" : "");
  }
  return out;
}

std::string to_sql(const Metadata& m) {
  std::string out;
  auto add = [&](const std::string& s) { out += (out.empty() ? "" : " ") + s; };
  for (const auto& f : m.flags) add(f);
  for (const auto& [k, v] : m.strings) {
    if (k == "DESCRIPTION") {
      add(quote_string(v));
    } else if (k == "INVERTS" || k == "FORMATS" || k == "SUFFIX" || k == "PREFIX") {
      add(k + " " + quote_identifier(v));
    } else {
      add(k + " " + quote_string(v));
    }
  }
  return out;
}

std::string to_sql(const Statement& s) { return std::visit(StatementPrinter{}, s); }

}  // namespace pyrlite::sql
