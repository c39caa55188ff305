#pragma once

#include <memory>
#include <string>

#include "irnav/session.hpp"

namespace irnav {

/// JSON API over a session, under /api/v1 with /api aliases.
class Service {
 public:
  explicit Service(std::shared_ptr<Session> session);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to an ephemeral port and returns it; call run() afterwards.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  bool run();
  void stop();
  /// Waits for a running background job.
  void wait_for_job();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace irnav
