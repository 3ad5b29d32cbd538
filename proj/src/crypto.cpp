#include "tmano/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <vector>

namespace tmano::crypto {

namespace {

const EVP_MD* md_for(const std::string& algorithm) {
  std::string a = algorithm;
  std::transform(a.begin(), a.end(), a.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (a == "sha256" || a == "sha2") return EVP_sha256();
  if (a == "sha1") return EVP_sha1();
  return nullptr;
}

std::string to_hex(const unsigned char* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

std::vector<unsigned char> from_hex(std::string_view s) {
  if (s.size() % 2 != 0) throw CryptoError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw CryptoError("non-hex character");
  };
  std::vector<unsigned char> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<unsigned char>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  return out;
}

using PkeyPtr = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;

}  // namespace

std::string digest_hex(std::string_view data, const std::string& algorithm) {
  const EVP_MD* md = md_for(algorithm);
  if (!md) throw CryptoError("unsupported digest algorithm: " + algorithm);
  unsigned char buf[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), buf, &len, md, nullptr) != 1)
    throw CryptoError("digest computation failed");
  return to_hex(buf, len);
}

std::size_t digest_hex_length(const std::string& algorithm) {
  const EVP_MD* md = md_for(algorithm);
  if (!md) throw CryptoError("unsupported digest algorithm: " + algorithm);
  return static_cast<std::size_t>(EVP_MD_size(md)) * 2;
}

bool is_hex(std::string_view s) {
  // Digests are canonically lowercase; uppercase hex is rejected.
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(data.data()),
                          static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view data) {
  if (data.size() % 4 != 0) throw CryptoError("base64 length not a multiple of 4");
  std::string out(3 * (data.size() / 4) + 1, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(data.data()),
                          static_cast<int>(data.size()));
  if (n < 0) throw CryptoError("invalid base64 input");
  // EVP_DecodeBlock ignores '=' padding in its length accounting.
  std::size_t pad = 0;
  if (!data.empty() && data.back() == '=') pad = data[data.size() - 2] == '=' ? 2 : 1;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

struct KeyPair::Impl {
  PkeyPtr key{nullptr, EVP_PKEY_free};
};

KeyPair KeyPair::generate() {
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(
      EVP_PKEY_CTX_new_id(EVP_PKEY_EC, nullptr), EVP_PKEY_CTX_free);
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_ec_paramgen_curve_nid(ctx.get(), NID_X9_62_prime256v1) != 1)
    throw CryptoError("key generation setup failed");
  EVP_PKEY* raw = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &raw) != 1) throw CryptoError("key generation failed");
  KeyPair kp;
  kp.impl_ = std::make_shared<Impl>();
  kp.impl_->key = PkeyPtr(raw, EVP_PKEY_free);
  return kp;
}

KeyPair KeyPair::load_pem(const std::string& path) {
  std::unique_ptr<FILE, decltype(&fclose)> f(std::fopen(path.c_str(), "r"), fclose);
  if (!f) throw CryptoError("cannot open key file: " + path);
  EVP_PKEY* raw = PEM_read_PrivateKey(f.get(), nullptr, nullptr, nullptr);
  if (!raw) throw CryptoError("cannot parse PEM private key: " + path);
  KeyPair kp;
  kp.impl_ = std::make_shared<Impl>();
  kp.impl_->key = PkeyPtr(raw, EVP_PKEY_free);
  return kp;
}

void KeyPair::save_pem(const std::string& path) const {
  std::unique_ptr<FILE, decltype(&fclose)> f(std::fopen(path.c_str(), "w"), fclose);
  if (!f) throw CryptoError("cannot write key file: " + path);
  if (PEM_write_PrivateKey(f.get(), impl_->key.get(), nullptr, nullptr, 0, nullptr, nullptr) != 1)
    throw CryptoError("cannot serialize private key");
}

std::string KeyPair::public_key_base64() const {
  unsigned char* der = nullptr;
  int len = i2d_PUBKEY(impl_->key.get(), &der);
  if (len <= 0) throw CryptoError("cannot encode public key");
  std::string out = base64_encode(std::string_view(reinterpret_cast<char*>(der),
                                                   static_cast<std::size_t>(len)));
  OPENSSL_free(der);
  return out;
}

std::string KeyPair::sign_hex(std::string_view data) const {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, impl_->key.get()) != 1)
    throw CryptoError("signing setup failed");
  std::size_t len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &len,
                     reinterpret_cast<const unsigned char*>(data.data()), data.size()) != 1)
    throw CryptoError("signing failed");
  std::vector<unsigned char> sig(len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &len,
                     reinterpret_cast<const unsigned char*>(data.data()), data.size()) != 1)
    throw CryptoError("signing failed");
  return to_hex(sig.data(), len);
}

bool verify_hex(std::string_view data, const std::string& signature_hex,
                const std::string& public_key_base64) {
  try {
    std::string der = base64_decode(public_key_base64);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(der.data());
    PkeyPtr key(d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size())), EVP_PKEY_free);
    if (!key) return false;
    std::vector<unsigned char> sig = from_hex(signature_hex);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                EVP_MD_CTX_free);
    if (!ctx ||
        EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1)
      return false;
    return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(),
                            reinterpret_cast<const unsigned char*>(data.data()),
                            data.size()) == 1;
  } catch (const CryptoError&) {
    return false;
  }
}

}  // namespace tmano::crypto
