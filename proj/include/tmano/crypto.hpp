// Thin wrappers over OpenSSL: message digests and ECDSA P-256 signatures.

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tmano::crypto {

class CryptoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lowercase hex digest. Supported algorithms: "sha256", "sha1" (also accepts
// the certificate labels "SHA2" and "SHA1").
std::string digest_hex(std::string_view data, const std::string& algorithm);

std::size_t digest_hex_length(const std::string& algorithm);
bool is_hex(std::string_view s);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view data);  // throws on bad input

// An ECDSA P-256 key pair. Copyable handle; the underlying key is shared.
class KeyPair {
 public:
  static KeyPair generate();
  static KeyPair load_pem(const std::string& path);
  void save_pem(const std::string& path) const;  // private key, unencrypted

  // SubjectPublicKeyInfo DER, base64-encoded (the certificate issuerKey form).
  std::string public_key_base64() const;

  // ECDSA-with-SHA256 over data; DER signature, hex-encoded.
  std::string sign_hex(std::string_view data) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Verifies a hex DER signature against a base64 SubjectPublicKeyInfo key.
// Malformed keys or signatures verify false rather than throwing.
bool verify_hex(std::string_view data, const std::string& signature_hex,
                const std::string& public_key_base64);

}  // namespace tmano::crypto
