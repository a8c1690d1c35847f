#pragma once

#include <set>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "uavinspect/error.hpp"

namespace uavinspect::detail {

// Reads members of one JSON object and rejects any key that was never asked for.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::ConfigError, where_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer() || (std::is_unsigned_v<T> && !it->is_number_unsigned())) {
        fail(ErrorCode::ConfigError, where_ + "." + key + ": expected " +
                                         (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
      }
    }
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::ConfigError, where_ + "." + key + ": wrong type");
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) fail(ErrorCode::ConfigError, where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace uavinspect::detail
