#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace taskred {

class Value;

/// Ordered collection produced by parallel composites (see spawn_n).
using ValueList = std::vector<Value>;

/// Type-erased reference to shared data living in the common address space.
using Handle = std::shared_ptr<void>;

/// Opaque value passed between tiles: nothing, an integer, a real, a list of
/// values, or a handle to shared data. Handles compare by identity.
class Value {
 public:
  using Storage = std::variant<std::monostate, std::int64_t, double, ValueList, Handle>;

  Value() = default;
  Value(std::int64_t v) : storage_(v) {}                  // NOLINT(google-explicit-constructor)
  Value(int v) : storage_(static_cast<std::int64_t>(v)) {}  // NOLINT(google-explicit-constructor)
  Value(double v) : storage_(v) {}                        // NOLINT(google-explicit-constructor)
  Value(ValueList v) : storage_(std::move(v)) {}          // NOLINT(google-explicit-constructor)
  Value(Handle v) : storage_(std::move(v)) {}             // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool is_none() const { return std::holds_alternative<std::monostate>(storage_); }
  [[nodiscard]] bool is_int() const { return std::holds_alternative<std::int64_t>(storage_); }
  [[nodiscard]] bool is_real() const { return std::holds_alternative<double>(storage_); }
  [[nodiscard]] bool is_list() const { return std::holds_alternative<ValueList>(storage_); }
  [[nodiscard]] bool is_handle() const { return std::holds_alternative<Handle>(storage_); }

  [[nodiscard]] std::int64_t as_int() const { return get<std::int64_t>(); }
  [[nodiscard]] double as_real() const { return get<double>(); }
  [[nodiscard]] const ValueList& as_list() const { return get<ValueList>(); }
  [[nodiscard]] const Handle& as_handle() const { return get<Handle>(); }

  template <typename T>
  [[nodiscard]] std::shared_ptr<T> handle_as() const {
    return std::static_pointer_cast<T>(as_handle());
  }

  [[nodiscard]] const Storage& storage() const { return storage_; }

  friend bool operator==(const Value& a, const Value& b) { return a.storage_ == b.storage_; }

 private:
  template <typename T>
  const T& get() const {
    return std::get<T>(storage_);
  }

  Storage storage_;
};

std::string to_string(const Value& v);

}  // namespace taskred
