#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace varid {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class Domain { Journalistic, Literature, Legal, Politics, Web, SocialMedia, Unknown };

/// Domains that carry training data, in canonical order.
inline constexpr std::array<Domain, 6> kKnownDomains = {
    Domain::Journalistic, Domain::Literature, Domain::Legal,
    Domain::Politics,     Domain::Web,        Domain::SocialMedia};

enum class Label { EP, BP, Undetermined, Unlabeled };

std::string_view to_string(Domain d);
std::string_view to_string(Label l);

/// Exact enum spelling ("Journalistic", "SocialMedia", ...).
std::optional<Domain> parse_domain(std::string_view s);
/// Case-insensitive, also accepts "social-media" / "social_media". For CLI flags.
std::optional<Domain> parse_domain_loose(std::string_view s);
std::optional<Label> parse_label(std::string_view s);

inline bool is_variety(Label l) { return l == Label::EP || l == Label::BP; }

/// Index of EP/BP in per-class arrays.
inline std::size_t class_index(Label l) { return l == Label::EP ? 0 : 1; }
inline Label class_label(std::size_t i) { return i == 0 ? Label::EP : Label::BP; }

enum class ErrorKind {
  Usage,      // bad flag values, invalid arguments
  Io,         // missing / unreadable / unwritable file
  Schema,     // malformed input record or file layout
  Data,       // data violates a precondition (duplicates, empty cells, ...)
  Version,    // model artifact format version mismatch
  Integrity,  // artifact hash mismatch or truncation, inconsistent tag spans
  Protocol,   // cross-domain protocol violation
};

std::string_view to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Error raised while reading a line-oriented file; carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t line, const std::string& message)
      : Error(kind, "line " + std::to_string(line) + ": " + message), line_(line), detail_(message) {}
  std::size_t line() const noexcept { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

}  // namespace varid
