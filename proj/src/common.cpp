#include "varid/common.hpp"

#include <algorithm>
#include <cctype>

namespace varid {

namespace {

constexpr std::array<std::pair<Domain, std::string_view>, 7> kDomainNames = {{
    {Domain::Journalistic, "Journalistic"},
    {Domain::Literature, "Literature"},
    {Domain::Legal, "Legal"},
    {Domain::Politics, "Politics"},
    {Domain::Web, "Web"},
    {Domain::SocialMedia, "SocialMedia"},
    {Domain::Unknown, "Unknown"},
}};

constexpr std::array<std::pair<Label, std::string_view>, 4> kLabelNames = {{
    {Label::EP, "EP"},
    {Label::BP, "BP"},
    {Label::Undetermined, "Undetermined"},
    {Label::Unlabeled, "Unlabeled"},
}};

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Domain d) {
  for (const auto& [value, name] : kDomainNames)
    if (value == d) return name;
  return "Unknown";
}

std::string_view to_string(Label l) {
  for (const auto& [value, name] : kLabelNames)
    if (value == l) return name;
  return "Unlabeled";
}

std::optional<Domain> parse_domain(std::string_view s) {
  for (const auto& [value, name] : kDomainNames)
    if (name == s) return value;
  return std::nullopt;
}

std::optional<Domain> parse_domain_loose(std::string_view s) {
  const auto key = fold(s);
  for (const auto& [value, name] : kDomainNames)
    if (fold(name) == key) return value;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view s) {
  for (const auto& [value, name] : kLabelNames)
    if (name == s) return value;
  return std::nullopt;
}

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Data: return "data";
    case ErrorKind::Version: return "version";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Protocol: return "protocol";
  }
  return "unknown";
}

}  // namespace varid
