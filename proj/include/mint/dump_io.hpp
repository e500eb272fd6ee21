#pragma once

#include "mint/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mint {

inline constexpr char kDumpMagic[8] = {'M', 'I', 'N', 'T', 'D', 'M', 'P', '1'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderSize = 32;
inline constexpr std::uint32_t kFlagLabels = 1u << 0;
inline constexpr std::uint32_t kFlagText = 1u << 1;

struct DumpHeader {
  std::uint32_t version = kDumpVersion;
  std::uint64_t n_samples = 0;
  std::uint32_t dim = 0;
  std::uint32_t n_classes = 0;
  std::uint32_t flags = 0;

  /// Exact file length implied by the header; throws if it overflows.
  std::uint64_t expected_length() const;
};

struct DumpContents {
  EmbeddingSet embeddings;
  std::optional<TextEmbeddings> text;
  std::vector<std::string> warnings;  // rows whose norm is off by more than 1e-3
};

/// Row norms may drift from 1 by this much before a warning is recorded...
inline constexpr double kNormWarnTolerance = 1e-3;
/// ...and by this much before reading fails.
inline constexpr double kNormErrorTolerance = 1e-1;

std::vector<std::uint8_t> encode_dump(const EmbeddingSet& embeddings, const std::optional<TextEmbeddings>& text);
DumpContents decode_dump(const std::vector<std::uint8_t>& bytes);

void write_dump(const std::filesystem::path& path, const EmbeddingSet& embeddings,
                const std::optional<TextEmbeddings>& text = std::nullopt);
DumpContents read_dump(const std::filesystem::path& path);

using CsvField = std::variant<std::monostate, std::int64_t, double, std::string>;
using CsvRow = std::vector<CsvField>;

/// Reals use 17 significant digits; empty fields stand for missing values.
std::string format_csv_field(const CsvField& field);
std::string format_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows);

/// Writes text to a file, replacing it; errors carry the path.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace mint
