#pragma once

#include <memory>
#include <string>

#include "orchestrator.hpp"
#include "world.hpp"

namespace prodcell {

struct GatewayConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 = any free port
  std::string default_backend = "rule_oracle";
};

// HTTP+JSON front door. Each session owns its plant and runs on its own worker
// thread; event reads only touch the thread-safe log.
class Gateway {
 public:
  Gateway(const World& world, GatewayConfig config);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Returns the bound port. Throws Io when binding fails.
  int bind();
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prodcell
