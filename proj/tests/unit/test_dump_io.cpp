#include "mint/dump_io.hpp"
#include "mint/rng.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace mint;
namespace fs = std::filesystem;

namespace {

class DumpIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mint_dump_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }
  static void spit(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  static std::string error_of(const fs::path& p) {
    try {
      read_dump(p);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  }

  static EmbeddingSet sample_set(std::size_t n, std::size_t d, int c, bool labels) {
    RandomStream rng(7);
    EmbeddingSet set;
    set.n_classes = c;
    set.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < set.data.size(); ++i) set.data.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < set.data.rows(); ++i) set.data.row(i).normalize();
    if (labels) {
      std::vector<int> y(n);
      for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      set.labels = y;
    }
    return set;
  }

  static TextEmbeddings sample_text(int c, std::size_t d) {
    RandomStream rng(8);
    TextEmbeddings t;
    t.rows.resize(c, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < t.rows.size(); ++i) t.rows.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < t.rows.rows(); ++i) t.rows.row(i).normalize();
    return t;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(DumpIo, MinimalFileLength) {
  EmbeddingSet set;
  set.data.resize(2, 2);
  set.data << 1, 0, 0, 1;
  write_dump(path("a.mintdump"), set);
  EXPECT_EQ(fs::file_size(path("a.mintdump")), 48u);
}

TEST_F(DumpIo, HeaderLayoutIsLittleEndian) {
  const EmbeddingSet set = sample_set(3, 5, 4, true);
  const auto bytes = encode_dump(set, sample_text(4, 5));
  ASSERT_EQ(bytes.size(), 32u + 4 * 15 + 4 * 3 + 4 * 20);
  EXPECT_EQ(std::memcmp(bytes.data(), "MINTDMP1", 8), 0);
  const std::vector<std::uint8_t> header(bytes.begin() + 8, bytes.begin() + 32);
  const std::vector<std::uint8_t> expected{1, 0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 4, 0, 0, 0, 3, 0, 0, 0};
  EXPECT_EQ(header, expected);
  // First embedding value as an IEEE single, little-endian.
  const float first = static_cast<float>(set.data(0, 0));
  std::uint32_t bits;
  std::memcpy(&bits, &first, 4);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(bytes[32 + static_cast<std::size_t>(k)], (bits >> (8 * k)) & 0xffu);
}

TEST_F(DumpIo, RoundTripIsByteIdentical) {
  const EmbeddingSet set = sample_set(40, 16, 3, true);
  write_dump(path("a.mintdump"), set, sample_text(3, 16));
  const DumpContents back = read_dump(path("a.mintdump"));
  ASSERT_TRUE(back.text.has_value());
  EXPECT_TRUE(back.warnings.empty());
  EXPECT_EQ(back.embeddings.labels, set.labels);
  EXPECT_LT((back.embeddings.data - set.data).cwiseAbs().maxCoeff(), 1e-7);
  write_dump(path("b.mintdump"), back.embeddings, back.text);
  EXPECT_EQ(slurp(path("a.mintdump")), slurp(path("b.mintdump")));
}

TEST_F(DumpIo, NoLabelsNoText) {
  const EmbeddingSet set = sample_set(5, 3, 2, false);
  write_dump(path("a.mintdump"), set);
  const DumpContents back = read_dump(path("a.mintdump"));
  EXPECT_FALSE(back.embeddings.labels.has_value());
  EXPECT_FALSE(back.text.has_value());
}

TEST_F(DumpIo, WrongMagic) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  bytes[0] = 'X';
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("not a mint dump"), std::string::npos);
  spit(path("tiny.mintdump"), {'M', 'I'});
  EXPECT_NE(error_of(path("tiny.mintdump")).find("not a mint dump"), std::string::npos);
}

TEST_F(DumpIo, TruncatedPayload) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  bytes.resize(32 + 20);
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("truncated at byte 52"), std::string::npos);
}

TEST_F(DumpIo, TruncatedHeader) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  bytes.resize(20);
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("truncated at byte 20"), std::string::npos);
}

TEST_F(DumpIo, TrailingBytes) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  bytes.push_back(0);
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("trailing bytes"), std::string::npos);
}

TEST_F(DumpIo, VersionMismatch) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  bytes[8] = 2;
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("version"), std::string::npos);
}

TEST_F(DumpIo, UnknownFlagsAndBadHeaderCounts) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, false));
  const auto good = slurp(path("a.mintdump"));
  auto bytes = good;
  bytes[28] = 0x04;
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("flags"), std::string::npos);
  bytes = good;
  bytes[24] = 1;  // one class
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("class count"), std::string::npos);
  bytes = good;
  std::fill(bytes.begin() + 12, bytes.begin() + 20, 0xff);  // absurd sample count
  spit(path("a.mintdump"), bytes);
  EXPECT_FALSE(error_of(path("a.mintdump")).empty());
}

TEST_F(DumpIo, LabelOutOfRange) {
  write_dump(path("a.mintdump"), sample_set(4, 3, 2, true));
  auto bytes = slurp(path("a.mintdump"));
  const std::size_t labels_at = 32 + 4 * 12;
  bytes[labels_at] = 2;  // value == n_classes
  bytes[labels_at + 1] = bytes[labels_at + 2] = bytes[labels_at + 3] = 0;
  spit(path("a.mintdump"), bytes);
  EXPECT_NE(error_of(path("a.mintdump")).find("label out of range"), std::string::npos);
}

TEST_F(DumpIo, NormChecks) {
  EmbeddingSet set = sample_set(3, 4, 2, false);
  set.data.row(1) *= 1.01;
  write_dump(path("warn.mintdump"), set);
  const DumpContents back = read_dump(path("warn.mintdump"));
  ASSERT_EQ(back.warnings.size(), 1u);
  EXPECT_NE(back.warnings[0].find("row 1"), std::string::npos);

  set.data.row(2) *= 1.5;
  write_dump(path("bad.mintdump"), set);
  EXPECT_NE(error_of(path("bad.mintdump")).find("not normalized"), std::string::npos);
}

TEST_F(DumpIo, WriterRejectsInvalidSets) {
  EmbeddingSet set = sample_set(3, 4, 2, true);
  (*set.labels)[0] = 5;
  EXPECT_THROW(write_dump(path("x.mintdump"), set), Error);
  EXPECT_THROW(write_dump(path("y.mintdump"), sample_set(3, 4, 2, true), sample_text(2, 5)), Error);
  EXPECT_THROW(write_dump(dir_ / "missing" / "z.mintdump", sample_set(3, 4, 2, true)), Error);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(format_csv_field(0.25), "0.25");
  EXPECT_EQ(format_csv_field(0.1), "0.10000000000000001");
  EXPECT_EQ(format_csv_field(std::int64_t{-3}), "-3");
  EXPECT_EQ(format_csv_field(CsvField{}), "");
  EXPECT_EQ(format_csv_field(std::string("a,b")), "\"a,b\"");
  EXPECT_EQ(format_csv_field(std::string("say \"hi\"")), "\"say \"\"hi\"\"\"");
}

TEST(Csv, Lines) {
  const std::string text = format_csv({"a", "b"}, {{1.0, std::string("x")}, {CsvField{}, 0.5}});
  EXPECT_EQ(text, "a,b\n1,x\n,0.5\n");
  EXPECT_EQ(format_csv({"a"}, {}), "a\n");
  EXPECT_THROW(format_csv({"a", "b"}, {{1.0}}), Error);
}
