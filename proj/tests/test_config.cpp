#include <doctest.h>

#include <sstream>
#include <string>

#include "catsoft/config.hpp"
#include "catsoft/errors.hpp"

using namespace catsoft;

TEST_CASE("parse_key_values reads key=value pairs") {
  std::istringstream in("tau=0.1\nrule=catsoft\nseed=42\n");
  const auto kv = parse_key_values(in);
  CHECK(kv.size() == 3);
  CHECK(kv.at("tau") == "0.1");
  CHECK(kv.at("rule") == "catsoft");
  CHECK(kv.at("seed") == "42");
}

TEST_CASE("parse_key_values strips whitespace around keys and values") {
  const auto kv = parse_key_values("  tau =  0.25  \n\thidden\t=\t32,32\n");
  CHECK(kv.at("tau") == "0.25");
  CHECK(kv.at("hidden") == "32,32");
}

TEST_CASE("parse_key_values skips blank lines and # comments") {
  const auto kv = parse_key_values(
      "# run configuration\n"
      "\n"
      "tau=0.1\n"
      "   # indented comment\n"
      "nu=1\n"
      "\n");
  CHECK(kv.size() == 2);
  CHECK(kv.count("tau") == 1);
  CHECK(kv.count("nu") == 1);
}

TEST_CASE("parse_key_values keeps the last occurrence of a repeated key") {
  const auto kv = parse_key_values("tau=0.1\ntau=0.3\ntau=0.7\n");
  CHECK(kv.size() == 1);
  CHECK(kv.at("tau") == "0.7");
}

TEST_CASE("parse_key_values keeps '=' inside values") {
  const auto kv = parse_key_values("note=a=b=c\n");
  CHECK(kv.at("note") == "a=b=c");
}

TEST_CASE("parse_key_values allows empty values") {
  const auto kv = parse_key_values("out=\n");
  CHECK(kv.at("out").empty());
}

TEST_CASE("parse_key_values reports the line number of a malformed line") {
  try {
    parse_key_values("tau=0.1\nnonsense\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
  }
  try {
    parse_key_values("a=1\nb=2\nc=3\n=value\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 4") != std::string::npos);
  }
}

TEST_CASE("parse_key_values rejects empty keys") {
  CHECK_THROWS_AS(parse_key_values("=0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("   =0.1\n"), ConfigError);
}

TEST_CASE("to_double parses and round-trips") {
  CHECK(to_double("tau", "0.1") == doctest::Approx(0.1));
  CHECK(to_double("lr", "-2.5e-3") == doctest::Approx(-2.5e-3));
  CHECK(to_double("nu", "1e9") == 1e9);
}

TEST_CASE("to_double rejects trailing garbage and names the key") {
  try {
    to_double("tau", "0.1x");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("tau") != std::string::npos);
  }
  CHECK_THROWS_AS(to_double("tau", ""), ConfigError);
  CHECK_THROWS_AS(to_double("tau", "abc"), ConfigError);
}

TEST_CASE("to_long parses integers strictly") {
  CHECK(to_long("dim", "42") == 42);
  CHECK(to_long("offset", "-7") == -7);
  CHECK_THROWS_AS(to_long("dim", "4.5"), ConfigError);
  CHECK_THROWS_AS(to_long("dim", "42abc"), ConfigError);
  CHECK_THROWS_AS(to_long("dim", ""), ConfigError);
}

TEST_CASE("to_u64 parses unsigned seeds") {
  CHECK(to_u64("seed", "0") == 0u);
  CHECK(to_u64("seed", "18446744073709551615") == 0xffffffffffffffffull);
  CHECK_THROWS_AS(to_u64("seed", "-1"), ConfigError);
  CHECK_THROWS_AS(to_u64("seed", "1.5"), ConfigError);
}

TEST_CASE("to_bool accepts canonical spellings") {
  CHECK(to_bool("flag", "true"));
  CHECK(to_bool("flag", "1"));
  CHECK(to_bool("flag", "yes"));
  CHECK(to_bool("flag", "on"));
  CHECK_FALSE(to_bool("flag", "false"));
  CHECK_FALSE(to_bool("flag", "0"));
  CHECK_FALSE(to_bool("flag", "no"));
  CHECK_FALSE(to_bool("flag", "off"));
  try {
    to_bool("flag", "maybe");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("flag") != std::string::npos);
  }
}
