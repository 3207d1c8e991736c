#include <gtest/gtest.h>

#include "storyweave/common.hpp"
#include "test_support.hpp"

using namespace storyweave;

TEST(Rfc3339, ParsesUtcAndOffsets) {
  using namespace std::chrono;
  const auto base = sys_days{2016y / July / 5} + 12h;
  EXPECT_EQ(parse_rfc3339("2016-07-05T12:00:00Z"), base);
  EXPECT_EQ(parse_rfc3339("2016-07-05T14:00:00+02:00"), base);
  EXPECT_EQ(parse_rfc3339("2016-07-05T07:30:00-04:30"), base);
  EXPECT_EQ(parse_rfc3339("2016-07-05T12:00:00.250Z"), base);
}

TEST(Rfc3339, RejectsMalformed) {
  EXPECT_THROW(parse_rfc3339(""), ValidationError);
  EXPECT_THROW(parse_rfc3339("2016-07-05"), ValidationError);
  EXPECT_THROW(parse_rfc3339("2016-13-05T12:00:00Z"), ValidationError);
  EXPECT_THROW(parse_rfc3339("2016-02-30T12:00:00Z"), ValidationError);
  EXPECT_THROW(parse_rfc3339("2016-07-05T12:00:00"), ValidationError);
  EXPECT_THROW(parse_rfc3339("2016-07-05T25:00:00Z"), ValidationError);
}

TEST(Rfc3339, FormatRoundTrips) {
  const auto t = parse_rfc3339("2017-01-01T00:00:59Z");
  EXPECT_EQ(format_rfc3339(t), "2017-01-01T00:00:59Z");
  EXPECT_EQ(parse_rfc3339(format_rfc3339(t)), t);
}

TEST(Dates, ParseAndFormat) {
  EXPECT_EQ(format_date(parse_date("2016-06-01")), "2016-06-01");
  EXPECT_THROW(parse_date("2016-6-1"), ValidationError);
  EXPECT_THROW(parse_date("2016-06-31"), ValidationError);
}

TEST(Text, SplitLinesHandlesCrlfAndTrailingNewline) {
  EXPECT_EQ(split_lines("a\nb\r\nc\n"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_lines("").empty());
  EXPECT_EQ(split_lines("\n\n"), (std::vector<std::string>{"", ""}));
}

TEST(Text, FormatRealTrimsTrailingZeros) {
  EXPECT_EQ(format_real(0.875), "0.875");
  EXPECT_EQ(format_real(2.36), "2.36");
  EXPECT_EQ(format_real(0.0), "0");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333");
  EXPECT_EQ(format_real(-1e-9), "0");
}

TEST(Files, AtomicWriteReplacesContents) {
  testing_support::TempDir dir;
  const auto path = dir / "sub/out.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++entries;
  EXPECT_EQ(entries, 1u) << "temporary file left behind";
}

TEST(Files, ReadMissingFileIsIoError) {
  testing_support::TempDir dir;
  EXPECT_THROW(read_file(dir / "absent"), IoError);
}
