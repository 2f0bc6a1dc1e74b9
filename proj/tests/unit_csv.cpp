#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crrr/csv.hpp"
#include "crrr/jsonio.hpp"
#include "crrr/rng.hpp"

namespace {

double reparse(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
}

std::filesystem::path temp_file(const char* stem) {
  return std::filesystem::temp_directory_path() / stem;
}

}  // namespace

TEST_CASE("double formatting is shortest round-trip text") {
  CHECK(crrr::format_double(0.5) == "0.5");
  CHECK(crrr::format_double(1.0) == "1");
  CHECK(crrr::format_double(-0.0) == "-0");
  CHECK(crrr::format_double(0.1) == "0.1");

  // Bit-exact round trip across magnitudes, including awkward fractions.
  crrr::RngStream rng(2024);
  std::vector<double> values{1.0 / 3.0, 6.02e23, 1e-300, 4.9406564584124654e-324,
                             123456789.123456789};
  for (int i = 0; i < 1000; ++i)
    values.push_back(std::ldexp(rng.normal(), static_cast<int>(rng.uniform_int(80)) - 40));
  for (double v : values) {
    const std::string s = crrr::format_double(v);
    CHECK(reparse(s) == v);
  }
}

TEST_CASE("field escaping follows the quoting rules") {
  CHECK(crrr::csv_escape("plain") == "plain");
  CHECK(crrr::csv_escape("a,b") == "\"a,b\"");
  CHECK(crrr::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(crrr::csv_escape("line\nbreak") == "\"line\nbreak\"");
  CHECK(crrr::csv_escape("") == "");
}

TEST_CASE("csv write and read round-trip awkward cells") {
  crrr::CsvTable table;
  table.header = {"id", "label", "value"};
  table.rows.push_back(crrr::csv_cells(1, "plain", 0.5));
  table.rows.push_back(crrr::csv_cells(2, "comma, inside", -1.25));
  table.rows.push_back(crrr::csv_cells(3, "quote \" and\nnewline", 1e-9));
  table.rows.push_back(crrr::csv_cells(4, "", 42));

  std::ostringstream os;
  crrr::write_csv(os, table);
  const std::string text = os.str();
  CHECK(text.find("\r") == std::string::npos);
  CHECK(text.back() == '\n');

  std::istringstream is(text);
  const crrr::CsvTable back = crrr::read_csv(is);
  CHECK(back.header == table.header);
  REQUIRE(back.rows == table.rows);
}

TEST_CASE("csv reader handles foreign input conventions") {
  std::istringstream is("\xEF\xBB\xBF" "a,b\r\n1,2\r\n\r\n3,4");
  const crrr::CsvTable t = crrr::read_csv(is);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.n_rows() == 2);  // blank interior line skipped
  CHECK(t.rows[0] == std::vector<std::string>{"1", "2"});
  CHECK(t.rows[1] == std::vector<std::string>{"3", "4"});
  CHECK(t.col("b") == 1);
  CHECK(t.has_col("a"));
  CHECK_FALSE(t.has_col("c"));
  CHECK_THROWS_AS(t.col("c"), std::invalid_argument);

  std::istringstream ragged("a,b\n1,2,3\n");
  CHECK_THROWS_WITH(crrr::read_csv(ragged), Catch::Matchers::ContainsSubstring("row 1"));

  std::istringstream open_quote("a\n\"unterminated\n");
  CHECK_THROWS_AS(crrr::read_csv(open_quote), std::runtime_error);

  std::istringstream empty("");
  CHECK_THROWS_AS(crrr::read_csv(empty), std::runtime_error);
}

TEST_CASE("cell parsing separates missing from malformed") {
  CHECK(crrr::csv_missing(""));
  CHECK(crrr::csv_missing("NA"));
  CHECK(crrr::csv_missing("nan"));
  CHECK(crrr::csv_missing("."));
  CHECK_FALSE(crrr::csv_missing("0"));

  CHECK(crrr::parse_double("1.25") == 1.25);
  CHECK(crrr::parse_double("-3e2") == -300.0);
  CHECK_THROWS_AS(crrr::parse_double("x12"), std::runtime_error);
  CHECK_THROWS_AS(crrr::parse_double("12mm"), std::runtime_error);
  CHECK_THROWS_AS(crrr::parse_double(""), std::runtime_error);
}

TEST_CASE("file round trips are byte-identical across reruns") {
  crrr::CsvTable table;
  table.header = {"x", "y"};
  for (int i = 0; i < 50; ++i)
    table.rows.push_back(crrr::csv_cells(i, std::sqrt(static_cast<double>(i))));

  const auto p1 = temp_file("crrr_csv_a.csv");
  const auto p2 = temp_file("crrr_csv_b.csv");
  crrr::write_csv_file(p1, table);
  crrr::write_csv_file(p2, table);
  CHECK(slurp(p1) == slurp(p2));
  const crrr::CsvTable back = crrr::read_csv_file(p1);
  CHECK(back.rows == table.rows);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);

  crrr::ordered_json doc;
  doc["format_version"] = crrr::kFormatVersion;
  doc["zeta"] = 1.0;  // insertion order must survive, not alphabetical order
  doc["alpha"] = crrr::format_double(0.3);
  const auto j1 = temp_file("crrr_json_a.json");
  const auto j2 = temp_file("crrr_json_b.json");
  crrr::write_json_file(j1, doc);
  crrr::write_json_file(j2, doc);
  const std::string text = slurp(j1);
  CHECK(text == slurp(j2));
  CHECK(text.back() == '\n');
  CHECK(text.find("format_version") < text.find("zeta"));
  CHECK(text.find("zeta") < text.find("alpha"));
  const crrr::ordered_json parsed = crrr::read_json_file(j1);
  CHECK(parsed["zeta"] == 1.0);
  std::filesystem::remove(j1);
  std::filesystem::remove(j2);

  CHECK_THROWS_AS(crrr::read_json_file("/nonexistent/nope.json"), std::runtime_error);
  CHECK_THROWS_AS(crrr::read_csv_file("/nonexistent/nope.csv"), std::runtime_error);
}
