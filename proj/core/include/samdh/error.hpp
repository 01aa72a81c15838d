#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace samdh {

enum class ErrorCode {
  // catalog
  duplicate_name,
  unknown_parent,
  invalid_size,
  unknown_file,
  duplicate_replica,
  unknown_replica,
  replica_pinned,
  unknown_dataset,
  no_replica,
  // cache
  already_cached,
  too_large,
  not_cached,
  pin_underflow,
  unknown_group,
  // routing
  unknown_station,
  unknown_domain,
  would_create_loop,
  no_route,
  // fabric
  no_link,
  stage_failed,
  // mss
  already_archived,
  not_archived,
  // station
  unknown_project,
  unknown_consumer,
  too_many_consumers,
  not_held,
  consumer_busy,
  // kernel / metrics / workload
  negative_delay,
  negative_amount,
  empty_dataset,
  unknown_entity,
  // configuration and io
  config_invalid,
  io_error,
  parse_error,
  invalid_argument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Every failure raised by the
/// library is one of these.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Configuration error that remembers which field was at fault, e.g.
/// `routes[3].next_hop`.
class ConfigError : public Error {
public:
  ConfigError(std::string field_path, const std::string& message)
      : Error(ErrorCode::config_invalid, field_path + ": " + message),
        field_path_(std::move(field_path)),
        detail_(message) {}

  const std::string& field_path() const noexcept { return field_path_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string field_path_;
  std::string detail_;
};

}  // namespace samdh
