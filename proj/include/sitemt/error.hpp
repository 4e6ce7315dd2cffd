#pragma once

#include <stdexcept>
#include <string>

namespace sitemt {

// Every failure the toolkit reports carries a short machine-readable code
// ("line-count-mismatch", "malformed-arpa", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace sitemt
