#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "pyrlite/cli/shell.hpp"
#include "pyrlite/rest/service.hpp"

namespace {

std::string os_user() {
  const char* u = std::getenv("USER");
  return u && *u ? u : "user";
}

pyrlite::rest::HttpServer* running = nullptr;

}  // namespace

int main(int argc, char** argv) {
  using namespace pyrlite;
  CLI::App app{"pyrlite: an append-only relational database with a REST interface"};
  app.require_subcommand(1);

  std::string target, user = os_user(), password, role;
  auto* shell = app.add_subcommand("shell", "interactive SQL against a database file or a server url");
  shell->add_option("target", target, "database file (created when missing) or http://host:port/db")->required();
  shell->add_option("--user", user, "user name, default $USER");
  shell->add_option("--password", password, "password, default empty");
  shell->add_option("--role", role, "declared role, default the user's first granted role");

  int port = 8180;
  std::string host = "127.0.0.1", data_dir = ".";
  bool no_sync = false;
  auto* serve = app.add_subcommand("serve", "serve the databases in a directory over HTTP");
  serve->add_option("--port", port, "port to listen on")->capture_default_str();
  serve->add_option("--host", host, "address to bind")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "directory of <name>.pyl files")->capture_default_str();
  serve->add_flag("--no-sync", no_sync, "skip fsync on commit");

  CLI11_PARSE(app, argc, argv);

  rest::HttpTransport net;
  if (*shell) {
    std::unique_ptr<cli::Shell> sh;
    try {
      if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) {
        sh = std::make_unique<cli::RemoteShell>(net, target, user, password, role);
      } else {
        std::filesystem::path file = target;
        if (!file.has_extension()) file += ".pyl";
        sh = std::make_unique<cli::LocalShell>(Database::open(file), user, password, role, net);
      }
    } catch (const std::exception& e) {
      std::cerr << "pyrlite: " << e.what() << "\n";
      return 1;
    }
    cli::repl(*sh, std::cin, std::cout);
    return 0;
  }

  try {
    rest::Service service(rest::ServiceOptions{data_dir, {.sync = !no_sync}});
    service.set_transport(&net);
    rest::HttpServer server(service);
    const int bound = server.bind(host, port);
    if (bound <= 0) {
      std::cerr << "pyrlite: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
    running = &server;
    std::signal(SIGINT, [](int) { running->stop(); });
    std::signal(SIGTERM, [](int) { running->stop(); });
    std::cout << "serving " << std::filesystem::absolute(data_dir).string() << " on http://" << host << ":" << bound
              << std::endl;
    server.run();
  } catch (const std::exception& e) {
    std::cerr << "pyrlite: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
