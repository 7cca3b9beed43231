#include "ftckit/csv.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

namespace {

std::string tmp_path(const char* name) {
  return std::string(::testing::TempDir()) + name;
}

TEST(Csv, RoundTripExact) {
  ftc::CsvTable t;
  t.columns = {"a", "b", "c"};
  t.rows.push_back({1.0 / 3.0, -0.0, 1e-300});
  t.rows.push_back({12345.678901234567, 9.81, -2.5e17});
  std::string p = tmp_path("roundtrip.csv");
  ftc::write_csv(p, t);
  ftc::CsvTable r = ftc::read_csv(p);
  ASSERT_EQ(r.columns, t.columns);
  ASSERT_EQ(r.rows.size(), t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i)
    for (size_t j = 0; j < t.rows[i].size(); ++j)
      EXPECT_EQ(r.rows[i][j], t.rows[i][j]) << i << "," << j;
}

TEST(Csv, DeterministicBytes) {
  ftc::CsvTable t;
  t.columns = {"x"};
  t.rows.push_back({0.1});
  t.rows.push_back({3.0000000000000004});
  std::string p1 = tmp_path("det1.csv"), p2 = tmp_path("det2.csv");
  ftc::write_csv(p1, t);
  ftc::write_csv(p2, t);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(s1, s2);
  EXPECT_FALSE(s1.empty());
}

TEST(Csv, ColumnAccess) {
  ftc::CsvTable t;
  t.columns = {"time", "value"};
  t.rows.push_back({0.0, 5.0});
  t.rows.push_back({0.1, 6.0});
  EXPECT_EQ(t.col("value"), 1);
  EXPECT_TRUE(t.has_col("time"));
  EXPECT_FALSE(t.has_col("missing"));
  EXPECT_EQ(t.at(1, "value"), 6.0);
  auto v = t.column("value");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1], 6.0);
  EXPECT_THROW(t.col("missing"), std::runtime_error);
}

TEST(Csv, Errors) {
  EXPECT_THROW(ftc::read_csv("/nonexistent/nope.csv"), std::runtime_error);

  std::string p = tmp_path("bad.csv");
  {
    std::ofstream f(p);
    f << "a,b\n1.0,oops\n";
  }
  try {
    ftc::read_csv(p);
    FAIL() << "expected parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }

  {
    std::ofstream f(p);
    f << "a,b\n1.0\n";
  }
  EXPECT_THROW(ftc::read_csv(p), std::runtime_error);
}

TEST(Csv, CrlfAndBlankLines) {
  std::string p = tmp_path("crlf.csv");
  {
    std::ofstream f(p, std::ios::binary);
    f << "a,b\r\n1,2\r\n\r\n3,4\r\n";
  }
  ftc::CsvTable t = ftc::read_csv(p);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.at(1, "b"), 4.0);
}

}  // namespace
