// Serves elicitation sessions over HTTP; see chance/service.hpp for routes.

#include "chance/service.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"HTTP service for utility elicitation sessions", "chance-service"};
  std::string listen = "127.0.0.1:8080";
  std::string store = "sessions";
  app.add_option("--listen", listen, "host:port to listen on");
  app.add_option("--store", store, "Directory holding session documents");
  CLI11_PARSE(app, argc, argv);

  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "error: --listen must be host:port\n";
    return 2;
  }
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "error: bad port in --listen\n";
    return 2;
  }

  chance::service::Service service(store);
  httplib::Server svr;
  chance::service::bind_routes(svr, service);
  std::cerr << "listening on " << host << ':' << port << ", sessions in " << store << '\n';
  if (!svr.listen(host, port)) {
    std::cerr << "error: cannot listen on " << listen << '\n';
    return 1;
  }
  return 0;
}
