#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sitemt/evalsvc.hpp"

namespace sitemt::evalsvc {

// HTTP+JSON front end for EvalService.
class HttpServer {
 public:
  explicit HttpServer(EvalService& service,
                      std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sitemt::evalsvc
