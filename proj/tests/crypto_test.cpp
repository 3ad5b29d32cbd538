#include <cstdio>
#include <random>
#include <string>

#include "doctest.h"
#include "tmano/crypto.hpp"

using namespace tmano::crypto;

TEST_CASE("sha256 matches published test vectors") {
  // FIPS 180-2 examples.
  CHECK(digest_hex("", "sha256") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(digest_hex("abc", "sha256") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(digest_hex("abc", "SHA2") == digest_hex("abc", "sha256"));
  CHECK(digest_hex_length("sha256") == 64);
}

TEST_CASE("sha1 matches published test vectors") {
  CHECK(digest_hex("abc", "sha1") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(digest_hex("abc", "SHA1") == digest_hex("abc", "sha1"));
  CHECK(digest_hex_length("sha1") == 40);
}

TEST_CASE("unsupported algorithms are rejected") {
  CHECK_THROWS_AS(digest_hex("abc", "md5"), CryptoError);
  CHECK_THROWS_AS(digest_hex_length("whirlpool"), CryptoError);
}

TEST_CASE("is_hex accepts lowercase hex only") {
  CHECK(is_hex("0123456789abcdef"));
  CHECK_FALSE(is_hex("ABCDEF"));
  CHECK_FALSE(is_hex("xyz"));
  CHECK_FALSE(is_hex("0 1"));
}

TEST_CASE("base64 matches RFC 4648 test vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foob") == "Zm9vYg==");
  CHECK(base64_encode("fooba") == "Zm9vYmE=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYmFy") == "foobar");
  CHECK_THROWS_AS(base64_decode("not base64!!"), CryptoError);
}

TEST_CASE("base64 round-trips random binary data") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 200);
  for (int i = 0; i < 100; ++i) {
    std::string data;
    for (int j = 0, n = len(rng); j < n; ++j) data.push_back(static_cast<char>(byte(rng)));
    CHECK(base64_decode(base64_encode(data)) == data);
  }
}

TEST_CASE("sign/verify round trip and tamper detection") {
  auto key = KeyPair::generate();
  std::string message = "the quick brown fox";
  std::string signature = key.sign_hex(message);
  std::string pub = key.public_key_base64();
  CHECK(verify_hex(message, signature, pub));
  CHECK_FALSE(verify_hex("the quick brown fax", signature, pub));
  CHECK_FALSE(verify_hex(message, key.sign_hex("something else"), pub));

  auto other = KeyPair::generate();
  CHECK_FALSE(verify_hex(message, signature, other.public_key_base64()));
}

TEST_CASE("verification never throws on malformed inputs") {
  auto key = KeyPair::generate();
  std::string signature = key.sign_hex("m");
  CHECK_FALSE(verify_hex("m", "zz-not-hex", key.public_key_base64()));
  CHECK_FALSE(verify_hex("m", "abcd", key.public_key_base64()));
  CHECK_FALSE(verify_hex("m", signature, "!!!not a key!!!"));
  CHECK_FALSE(verify_hex("m", signature, ""));
}

TEST_CASE("key pairs persist through PEM files") {
  auto key = KeyPair::generate();
  std::string path = "crypto_test_key.pem";
  key.save_pem(path);
  auto loaded = KeyPair::load_pem(path);
  CHECK(loaded.public_key_base64() == key.public_key_base64());
  // A signature from the reloaded key verifies under the original public key.
  CHECK(verify_hex("payload", loaded.sign_hex("payload"), key.public_key_base64()));
  std::remove(path.c_str());
  CHECK_THROWS(KeyPair::load_pem("does_not_exist.pem"));
}

TEST_CASE("ECDSA signatures are distinct per signing but all verify") {
  auto key = KeyPair::generate();
  std::string a = key.sign_hex("m");
  std::string b = key.sign_hex("m");
  CHECK(verify_hex("m", a, key.public_key_base64()));
  CHECK(verify_hex("m", b, key.public_key_base64()));
}
