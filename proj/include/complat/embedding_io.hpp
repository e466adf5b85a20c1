#pragma once

#include <string>

#include "complat/matrix.hpp"

namespace complat {

enum class EmbFormat { Binary, Text };

// Binary layout: magic "EMBF", u32le n, u32le d, then n*d IEEE-754 f32le
// row-major (12 + 4nd bytes total).
// Text layout: "emb v1 <n> <d>" then n lines of d space-separated floats.
// Values narrow to 32-bit on write; a load/save round trip is bit-exact at
// that precision in either format.
void save_embeddings(const Matrix& m, const std::string& path, EmbFormat format = EmbFormat::Binary);
Matrix load_embeddings(const std::string& path);

}  // namespace complat
