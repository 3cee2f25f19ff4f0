#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>

#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"

namespace graphtp {

/// Incremental SHA-1, hex digest.
class Sha1 {
public:
  Sha1() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha1(), nullptr) != 1)
      throw Error("sha1: digest init failed");
  }

  Sha1& update(const void* data, std::size_t n) {
    EVP_DigestUpdate(ctx_.get(), data, n);
    return *this;
  }
  Sha1& update(std::string_view s) { return update(s.data(), s.size()); }

  template <typename T>
  Sha1& update_pod(const T& v) {
    return update(&v, sizeof(T));
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 0xf]);
    }
    return out;
  }

private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

/// Same digest `git hash-object` reports for the file.
inline std::string git_blob_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MalformedInput("cannot open " + p.string());
  const auto size = std::filesystem::file_size(p);
  Sha1 h;
  const std::string header = "blob " + std::to_string(size);
  h.update(header.data(), header.size() + 1);  // includes the NUL
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

/// Content hash of topology plus features (labels excluded).
inline std::string graph_hash(const Graph& g) {
  Sha1 h;
  h.update_pod(static_cast<std::uint64_t>(g.num_nodes()));
  h.update_pod(static_cast<std::uint64_t>(g.feature_dim()));
  for (const auto& e : g.edge_list()) {
    h.update_pod(e.u);
    h.update_pod(e.v);
    h.update_pod(e.weight);
  }
  const auto& x = g.features().data();
  h.update(x.data(), x.size() * sizeof(double));
  return h.hex();
}

}  // namespace graphtp
