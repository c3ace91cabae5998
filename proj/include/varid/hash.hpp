#pragma once

#include <string>
#include <string_view>

namespace varid {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// Incremental SHA-256, for fingerprinting whole corpora.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  /// Length-prefixed update, so ("ab","c") and ("a","bc") differ.
  void update_field(std::string_view bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

}  // namespace varid
