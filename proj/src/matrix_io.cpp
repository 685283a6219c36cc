#include "smoa/matrix_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smoa/errors.hpp"

namespace smoa::io {

namespace {

constexpr std::size_t kHeaderSize = 8 + 1 + 8 + 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

double parse_double(std::string_view token, std::size_t line) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw IoError("csv line " + std::to_string(line) + ": cannot parse '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string encode_binary(const Matrix& m) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::string out;
  out.reserve(kHeaderSize + 8 * m.size());
  out.append(kMatrixMagic);
  out.push_back(static_cast<char>(kMatrixVersion));
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Matrix decode_binary(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, kMatrixMagic.size()) != kMatrixMagic) {
    throw IoError("not a SMOA-MAT stream");
  }
  if (static_cast<unsigned char>(bytes[8]) != kMatrixVersion) {
    throw IoError("unsupported SMOA-MAT version " + std::to_string(static_cast<unsigned char>(bytes[8])));
  }
  const std::uint64_t rows = get_u64(bytes, 9);
  const std::uint64_t cols = get_u64(bytes, 17);
  if (rows == 0 || cols == 0 || rows > (bytes.size() / 8) || cols > (bytes.size() / 8) ||
      bytes.size() != kHeaderSize + 8 * rows * cols) {
    throw IoError("SMOA-MAT payload size does not match header " + shape_string(rows, cols));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = std::bit_cast<double>(get_u64(bytes, kHeaderSize + 8 * k));
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const NumericalError& e) {
    throw IoError(std::string("SMOA-MAT: ") + e.what());
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string encode_csv(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix decode_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw IoError("csv matrix: empty input");
  const auto header = split(lines[0], ',');
  if (header.size() != 2) throw IoError("csv matrix: header must be 'rows,cols'");
  const double r = parse_double(header[0], 1);
  const double c = parse_double(header[1], 1);
  if (r < 1 || c < 1 || r != static_cast<double>(static_cast<std::size_t>(r)) ||
      c != static_cast<double>(static_cast<std::size_t>(c))) {
    throw IoError("csv matrix: invalid header");
  }
  const auto rows = static_cast<std::size_t>(r);
  const auto cols = static_cast<std::size_t>(c);
  if (lines.size() != rows + 1) {
    throw IoError("csv matrix: expected " + std::to_string(rows) + " data rows, found " +
                  std::to_string(lines.size() - 1));
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto fields = split(lines[i + 1], ',');
    if (fields.size() != cols) {
      throw IoError("csv line " + std::to_string(i + 2) + ": expected " + std::to_string(cols) + " fields");
    }
    for (auto f : fields) data.push_back(parse_double(f, i + 2));
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const NumericalError& e) {
    throw IoError(std::string("csv matrix: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.starts_with(kMatrixMagic)) return decode_binary(bytes);
  return decode_csv(bytes);
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_file_atomic(path, path.extension() == ".csv" ? encode_csv(m) : encode_binary(m));
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string matrix_hash(const Matrix& m) { return sha256_hex(encode_binary(m)); }

}  // namespace smoa::io
