// Stand-alone mock prover server for external pool mode and integration
// tests. Runs until SIGINT or SIGTERM.

#include <pthread.h>

#include <csignal>
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "proofbuddy.h"

int main(int argc, char** argv) {
  CLI::App app{"mock prover server speaking the line-delimited JSON protocol"};
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string mode = "structural";
  std::string fixtures;
  std::int64_t fail_after = -1;
  app.add_option("--host", host, "Listen address");
  app.add_option("--port", port, "Listen port, 0 picks a free one");
  app.add_option("--mode", mode, "structural or fixture")
      ->check(CLI::IsMember({"structural", "fixture"}));
  app.add_option("--fixtures", fixtures, "Fixture file for fixture mode");
  app.add_option("--fail-after", fail_after, "Stop replying after this many requests");
  CLI11_PARSE(app, argc, argv);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  pb_mock_prover* prover = nullptr;
  pb_status st = pb_mock_prover_start(mode.c_str(), fixtures.empty() ? nullptr : fixtures.c_str(),
                                      host.c_str(), port, fail_after, &prover);
  if (st != PB_OK) {
    std::cerr << "error: " << pb_status_name(st) << ": " << pb_last_error() << "\n";
    return 1;
  }
  // The port line is the readiness signal for scripts.
  std::cout << "port " << pb_mock_prover_port(prover) << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  pb_mock_prover_free(prover);
  return 0;
}
