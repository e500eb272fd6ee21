#include "mint/dump_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace mint {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

double get_f32(const std::uint8_t* p) { return static_cast<double>(std::bit_cast<float>(get_u32(p))); }

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) throw Error("dump header sizes overflow");
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) throw Error("dump header sizes overflow");
  return a + b;
}

void check_rows(const Matrix& rows, const char* what, std::vector<std::string>& warnings) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    const double drift = std::abs(norm - 1.0);
    if (!(drift <= kNormErrorTolerance)) {
      throw Error(std::string(what) + " row " + std::to_string(i) + " is not normalized (norm " +
                  std::to_string(norm) + ")");
    }
    if (drift > kNormWarnTolerance) {
      warnings.push_back(std::string(what) + " row " + std::to_string(i) + " norm " + std::to_string(norm) +
                         " deviates from 1 by more than 1e-3");
    }
  }
}

DumpHeader parse_header(const std::vector<std::uint8_t>& bytes, std::uint64_t total_size) {
  if (bytes.size() < sizeof(kDumpMagic) || std::memcmp(bytes.data(), kDumpMagic, sizeof(kDumpMagic)) != 0) {
    throw Error("not a mint dump");
  }
  if (bytes.size() < kDumpHeaderSize) throw Error("truncated at byte " + std::to_string(bytes.size()));

  DumpHeader header;
  const std::uint8_t* p = bytes.data();
  header.version = get_u32(p + 8);
  header.n_samples = get_u64(p + 12);
  header.dim = get_u32(p + 20);
  header.n_classes = get_u32(p + 24);
  header.flags = get_u32(p + 28);

  if (header.version != kDumpVersion) {
    throw Error("unsupported dump version " + std::to_string(header.version));
  }
  if (header.flags & ~(kFlagLabels | kFlagText)) throw Error("unknown dump flags " + std::to_string(header.flags));
  if (header.n_samples < 1) throw Error("dump declares no samples");
  if (header.dim < 1) throw Error("dump declares zero dimension");
  if (header.n_classes < 2 || header.n_classes > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw Error("dump declares invalid class count " + std::to_string(header.n_classes));
  }
  const std::uint64_t expected = header.expected_length();
  if (total_size < expected) throw Error("truncated at byte " + std::to_string(total_size));
  if (total_size > expected) throw Error("trailing bytes after byte " + std::to_string(expected));
  return header;
}

}  // namespace

std::uint64_t DumpHeader::expected_length() const {
  const std::uint64_t nd = checked_mul(n_samples, dim);
  std::uint64_t length = checked_add(kDumpHeaderSize, checked_mul(4, nd));
  if (flags & kFlagLabels) length = checked_add(length, checked_mul(4, n_samples));
  if (flags & kFlagText) length = checked_add(length, checked_mul(4, checked_mul(n_classes, dim)));
  return length;
}

std::vector<std::uint8_t> encode_dump(const EmbeddingSet& embeddings, const std::optional<TextEmbeddings>& text) {
  const std::size_t n = embeddings.size();
  const std::size_t d = embeddings.dim();
  if (n < 1) throw Error("dump needs at least one sample");
  if (d < 1 || d > std::numeric_limits<std::uint32_t>::max()) throw Error("invalid embedding dimension");
  if (embeddings.n_classes < 2) throw Error("dump needs at least two classes");
  if (embeddings.labels) {
    if (embeddings.labels->size() != n) throw Error("label count does not match sample count");
    for (int y : *embeddings.labels) {
      if (y < 0 || y >= embeddings.n_classes) throw Error("label out of range");
    }
  }
  if (text && (text->dim() != d || text->n_classes() != embeddings.n_classes)) {
    throw Error("text embeddings do not match the embedding set");
  }

  DumpHeader header;
  header.n_samples = n;
  header.dim = static_cast<std::uint32_t>(d);
  header.n_classes = static_cast<std::uint32_t>(embeddings.n_classes);
  header.flags = (embeddings.labels ? kFlagLabels : 0u) | (text ? kFlagText : 0u);

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(header.expected_length()));
  out.insert(out.end(), std::begin(kDumpMagic), std::end(kDumpMagic));
  put_u32(out, header.version);
  put_u64(out, header.n_samples);
  put_u32(out, header.dim);
  put_u32(out, header.n_classes);
  put_u32(out, header.flags);
  for (Eigen::Index i = 0; i < embeddings.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < embeddings.data.cols(); ++j) put_f32(out, embeddings.data(i, j));
  }
  if (embeddings.labels) {
    for (int y : *embeddings.labels) put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(y)));
  }
  if (text) {
    for (Eigen::Index i = 0; i < text->rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < text->rows.cols(); ++j) put_f32(out, text->rows(i, j));
    }
  }
  return out;
}

DumpContents decode_dump(const std::vector<std::uint8_t>& bytes) {
  const DumpHeader header = parse_header(bytes, bytes.size());
  const std::uint8_t* p = bytes.data();

  DumpContents out;
  const auto n = static_cast<Eigen::Index>(header.n_samples);
  const auto d = static_cast<Eigen::Index>(header.dim);
  out.embeddings.n_classes = static_cast<int>(header.n_classes);
  out.embeddings.data.resize(n, d);
  std::size_t offset = kDumpHeaderSize;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j, offset += 4) out.embeddings.data(i, j) = get_f32(p + offset);
  }
  if (header.flags & kFlagLabels) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) {
      y = static_cast<std::int32_t>(get_u32(p + offset));
      offset += 4;
      if (y < 0 || y >= out.embeddings.n_classes) throw Error("label out of range");
    }
    out.embeddings.labels = std::move(labels);
  }
  if (header.flags & kFlagText) {
    TextEmbeddings text;
    text.rows.resize(static_cast<Eigen::Index>(header.n_classes), d);
    for (Eigen::Index i = 0; i < text.rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j, offset += 4) text.rows(i, j) = get_f32(p + offset);
    }
    out.text = std::move(text);
  }
  check_rows(out.embeddings.data, "embedding", out.warnings);
  if (out.text) check_rows(out.text->rows, "text", out.warnings);
  return out;
}

void write_dump(const std::filesystem::path& path, const EmbeddingSet& embeddings,
                const std::optional<TextEmbeddings>& text) {
  const auto bytes = encode_dump(embeddings, text);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed for " + path.string());
}

DumpContents read_dump(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot read " + path.string() + ": " + ec.message());
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  try {
    // The header is validated against the real file size before the payload is allocated.
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(std::min<std::uintmax_t>(size, kDumpHeaderSize)));
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    parse_header(bytes, size);
    bytes.resize(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()) + kDumpHeaderSize,
           static_cast<std::streamsize>(bytes.size() - kDumpHeaderSize));
    if (!f) throw Error("read failed");
    return decode_dump(bytes);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what(), e.kind());
  }
}

std::string format_csv_field(const CsvField& field) {
  std::string text;
  if (std::holds_alternative<std::monostate>(field)) return text;
  if (const auto* i = std::get_if<std::int64_t>(&field)) return std::to_string(*i);
  if (const auto* r = std::get_if<double>(&field)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *r);
    return buf;
  }
  text = std::get<std::string>(field);
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  quoted += '"';
  return quoted;
}

std::string format_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += format_csv_field(header[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw Error("CSV row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<CsvRow>& rows) {
  write_text_file(path, format_csv(header, rows));
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << contents;
  if (!f) throw Error("write failed for " + path.string());
}

}  // namespace mint
