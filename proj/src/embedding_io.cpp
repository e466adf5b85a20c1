#include "complat/embedding_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "complat/errors.hpp"

namespace complat {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'F'};

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float narrow_checked(double v, const std::string& path) {
  const float f = static_cast<float>(v);
  if (!std::isfinite(f))
    throw DataError("embedding matrix contains a non-finite value (writing " + path + ")");
  return f;
}

}  // namespace

void save_embeddings(const Matrix& m, const std::string& path, EmbFormat format) {
  if (format == EmbFormat::Binary) {
    std::string buf;
    buf.reserve(12 + 4 * m.rows * m.cols);
    buf.append(kMagic, 4);
    put_u32le(buf, static_cast<std::uint32_t>(m.rows));
    put_u32le(buf, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) {
      const float f = narrow_checked(v, path);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32le(buf, bits);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embeddings: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("short write: " + path);
    return;
  }

  std::ofstream out(path);
  if (!out) throw DataError("cannot write embeddings: " + path);
  out << "emb v1 " << m.rows << " " << m.cols << "\n";
  char num[64];
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) {
      // %.9g round-trips any float32 exactly
      std::snprintf(num, sizeof(num), "%.9g", static_cast<double>(narrow_checked(row[j], path)));
      if (j > 0) out << ' ';
      out << num;
    }
    out << '\n';
  }
  if (!out) throw DataError("short write: " + path);
}

Matrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.size() >= 4 && std::memcmp(content.data(), kMagic, 4) == 0) {
    if (content.size() < 12) throw DataError("truncated embedding header: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(content.data());
    const std::uint64_t n = get_u32le(p + 4);
    const std::uint64_t d = get_u32le(p + 8);
    if (content.size() != 12 + 4 * n * d)
      throw DataError("embedding payload does not match header shape: " + path);
    Matrix m(n, d);
    for (std::uint64_t k = 0; k < n * d; ++k) {
      const std::uint32_t bits = get_u32le(p + 12 + 4 * k);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) throw DataError("non-finite embedding value in " + path);
      m.data[k] = static_cast<double>(f);
    }
    return m;
  }

  std::istringstream text(content);
  std::string tag, version;
  std::uint64_t n = 0, d = 0;
  if (!(text >> tag >> version >> n >> d) || tag != "emb" || version != "v1")
    throw DataError("unrecognized embedding format: " + path);
  Matrix m(n, d);
  for (std::uint64_t k = 0; k < n * d; ++k) {
    float f;
    if (!(text >> f)) throw DataError("embedding payload does not match header shape: " + path);
    if (!std::isfinite(f)) throw DataError("non-finite embedding value in " + path);
    m.data[k] = static_cast<double>(f);
  }
  float extra;
  if (text >> extra) throw DataError("embedding payload does not match header shape: " + path);
  return m;
}

}  // namespace complat
