#pragma once

#include <stdexcept>
#include <string>

namespace hopir {

/// Malformed or inconsistent input data (bad lines, duplicate ids, bad spans).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Failure talking to the remote embedding service.
class RemoteError : public std::runtime_error {
  public:
    RemoteError(std::string endpoint, const std::string& cause)
        : std::runtime_error("remote encoder " + endpoint + ": " + cause), endpoint_(std::move(endpoint))
    {}

    [[nodiscard]] const std::string& endpoint() const noexcept { return endpoint_; }

  private:
    std::string endpoint_;
};

}  // namespace hopir
