#include "pyrlite/cli/shell.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "pyrlite/sql/json.hpp"
#include "pyrlite/sql/parser.hpp"

namespace pyrlite::cli {

using sql::Json;

std::string render_table(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());

  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string& c = i < cells.size() ? cells[i] : std::string();
      s += c + std::string(width[i] - c.size(), ' ') + "|";
    }
    return s + "\n";
  };
  std::size_t total = 1;
  for (auto w : width) total += w + 1;
  const std::string rule = std::string(total, '-') + "\n";

  std::string out = rule + line(columns) + rule;
  for (const auto& r : rows) out += line(r);
  if (!rows.empty()) out += rule;
  return out;
}

namespace {

std::string affected(std::int64_t n) {
  return std::to_string(n) + (n == 1 ? " record affected\n" : " records affected\n");
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n;");
  return e < b ? std::string() : s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

std::string render(const sql::StatementResult& r) {
  std::string out;
  if (r.has_rows) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : r.rows.to_vector()) {
      std::vector<std::string> cells;
      for (const auto& v : t) cells.push_back(v.to_string());
      rows.push_back(std::move(cells));
    }
    out += render_table(r.rows.columns, rows);
  }
  if (r.affected >= 0) out += affected(r.affected);
  if (!r.message.empty()) out += r.message + "\n";
  return out;
}

LocalShell::LocalShell(std::shared_ptr<Database> db, const std::string& user, const std::string& password,
                       const std::string& role, rest::Transport& net)
    : db_(std::move(db)), remote_(net) {
  sql::install_check_evaluator(*db_);
  db_->bootstrap(user, password);
  Uid u = db_->authenticate(user, password);
  std::optional<Uid> r = role.empty() ? db_->default_role(u) : db_->role_named(role);
  if (!r && !role.empty()) r = db_->role_named(upper(role));
  if (!r) throw AuthorizationError(role.empty() ? "user " + user + " has no role in " + db_->name()
                                                : "unknown role " + role);
  session_ = std::make_unique<sql::Session>(db_, u, *r);
  session_->set_remote(&remote_);
  session_->set_remote_writer(rest::remote_writer(net));
}

std::string LocalShell::eval(const std::string& line) {
  if (trim(line).empty()) return {};
  const bool open = session_->in_transaction();
  std::string out;
  try {
    for (const auto& st : sql::parse_script(line)) out += render(session_->execute(st));
  } catch (const ConflictError& e) {
    out += std::string(e.what()) + "\n";
    if (open) out += "the transaction was rolled back\n";
  } catch (const std::exception& e) {
    out += std::string(e.what()) + "\n";
  }
  return out;
}

RemoteShell::RemoteShell(rest::Transport& net, const std::string& url, const std::string& user,
                         const std::string& password, const std::string& role)
    : net_(net) {
  std::string base = url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const std::string db = base.substr(base.find_last_of('/') + 1);
  url_ = base + "/" + rest::encode_component(role.empty() ? db : role);
  auth_["Authorization"] = rest::basic_credentials(user, password);
  rest::Response r = net_.send_url("GET", url_, auth_);
  if (r.status != 200) rest::throw_for(r, url_);
}

std::string RemoteShell::eval(const std::string& line) {
  const std::string text = trim(line);
  if (text.empty()) return {};
  try {
    for (const auto& st : sql::parse_script(text)) {
      if (const auto* sr = std::get_if<sql::SetRole>(&st)) {
        std::string next = url_.substr(0, url_.find_last_of('/') + 1) + rest::encode_component(sr->name);
        rest::Response r = net_.send_url("GET", next, auth_);
        if (r.status != 200) rest::throw_for(r, "SET ROLE " + sr->name);
        url_ = next;
        return {};
      }
      if (std::holds_alternative<sql::Begin>(st) || std::holds_alternative<sql::Commit>(st) ||
          std::holds_alternative<sql::Rollback>(st))
        return "warning: each statement sent to a server commits on its own; transaction control is ignored\n";
    }
    rest::Headers h = auth_;
    h["Content-Type"] = "text/plain";
    rest::Response r = net_.send_url("POST", url_, h, text);
    if (r.status != 200) {
      std::string out = rest::error_text(r) + "\n";
      return out;
    }
    const Json j = Json::parse(r.body);
    std::string out;
    if (j.contains("rows")) {
      std::vector<std::vector<std::string>> rows;
      for (const auto& row : j["rows"]) {
        std::vector<std::string> cells;
        for (const auto& v : row) cells.push_back(v.is_null() ? "NULL" : v.is_string() ? v.get<std::string>() : v.dump());
        rows.push_back(std::move(cells));
      }
      out += render_table(j["columns"].get<std::vector<std::string>>(), rows);
    }
    if (j.contains("affected")) out += affected(j["affected"].get<std::int64_t>());
    if (j.contains("message")) out += j["message"].get<std::string>() + "\n";
    return out;
  } catch (const std::exception& e) {
    return std::string(e.what()) + "\n";
  }
}

void repl(Shell& shell, std::istream& in, std::ostream& out) {
  std::string line;
  while (true) {
    out << "SQL> " << std::flush;
    if (!std::getline(in, line)) break;
    const std::string word = upper(trim(line));
    if (word == "QUIT" || word == "EXIT") break;
    out << shell.eval(line);
  }
  out << "\n";
}

}  // namespace pyrlite::cli
