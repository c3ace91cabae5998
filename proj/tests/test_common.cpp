#include <doctest.h>

#include <algorithm>
#include <set>

#include "varid/common.hpp"
#include "varid/hash.hpp"
#include "varid/json_util.hpp"
#include "varid/rng.hpp"
#include "varid/unicode.hpp"

using namespace varid;

TEST_CASE("splitmix64 matches the reference stream") {
  // Reference outputs of SplitMix64 seeded with 0.
  SplitMix64 rng(0);
  CHECK(rng() == 0xe220a8397b1dcdafULL);
  CHECK(rng() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng() == 0x06c45d188009454fULL);
}

TEST_CASE("bounded draws and sampling") {
  SplitMix64 rng(42);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  const auto idx = sample_indices(50, 20, rng);
  CHECK(idx.size() == 20);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 20);
  CHECK(std::ranges::all_of(idx, [](std::size_t i) { return i < 50; }));
  CHECK(sample_indices(5, 5, rng).size() == 5);
}

TEST_CASE("keyed streams are independent of call order") {
  CHECK(keyed_hash(1, "a", 0) == keyed_hash(1, "a", 0));
  CHECK(keyed_hash(1, "a", 0) != keyed_hash(1, "b", 0));
  CHECK(keyed_hash(1, "a", 0) != keyed_hash(2, "a", 0));
  CHECK(keyed_hash(1, "a", 0) != keyed_hash(1, "a", 1));
  const double u = keyed_uniform(3, "doc", 5);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 a, b;
  a.update_field("ab");
  a.update_field("c");
  b.update_field("a");
  b.update_field("bc");
  CHECK(a.hex_digest() != b.hex_digest());
}

TEST_CASE("canonical json keeps 17 significant digits") {
  ordered_json j;
  j["x"] = 0.1;
  j["n"] = 3;
  j["s"] = "é";
  const auto text = dump_canonical(j);
  CHECK(text == "{\"x\":1.0000000000000001e-01,\"n\":3,\"s\":\"é\"}");
  CHECK(ordered_json::parse(text)["x"].get<double>() == 0.1);
  CHECK_THROWS_AS(format_double(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("domain and label names") {
  for (auto d : kKnownDomains) CHECK(parse_domain(to_string(d)) == d);
  CHECK(parse_domain_loose("web") == Domain::Web);
  CHECK(parse_domain_loose("social-media") == Domain::SocialMedia);
  CHECK(!parse_domain("web"));
  CHECK(parse_label("Undetermined") == Label::Undetermined);
  CHECK(!parse_label("PT"));
}

TEST_CASE("unicode helpers") {
  CHECK(unicode::code_point_count("Olá") == 3);
  CHECK(unicode::to_lower("ÁGUA Ü") == "água ü");
  CHECK(unicode::is_mark(0x0301));
  CHECK(unicode::is_letter(U'ç'));
  CHECK(unicode::nfkd("é") == "e\xCC\x81");
  CHECK(unicode::code_point_offsets("aé") == std::vector<std::size_t>{0, 1, 3});
}
