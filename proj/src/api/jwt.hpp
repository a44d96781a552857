#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pb::api {

struct IssuerKey {
  std::string issuer;          // exact "iss" value
  std::string public_key_pem;  // RSA public key
};

struct AuthConfig {
  std::vector<IssuerKey> issuers;  // the allow-list
  // Dotted path to the roles array inside the claims, e.g.
  // "realm_access.roles".
  std::string roles_claim = "roles";
  std::int64_t leeway_seconds = 30;
};

struct Claims {
  std::string issuer;
  std::string subject;
  std::string username;  // preferred_username, else sub
  std::set<std::string> roles;
  std::int64_t expires_at = 0;
};

// RS256 verification against configured issuer keys. Throws
// pb::Error(unauthenticated) for malformed, unsigned, expired or foreign
// tokens.
class TokenVerifier {
 public:
  explicit TokenVerifier(AuthConfig config);
  ~TokenVerifier();
  TokenVerifier(TokenVerifier&&) noexcept;
  TokenVerifier& operator=(TokenVerifier&&) noexcept;

  Claims verify(std::string_view token, std::int64_t now_seconds) const;
  const AuthConfig& config() const { return config_; }

 private:
  struct Keys;
  AuthConfig config_;
  std::unique_ptr<Keys> keys_;
};

struct KeyPair {
  std::string private_pem;
  std::string public_pem;
};

// Fresh 2048-bit RSA key pair. Throws pb::Error(internal).
KeyPair generate_rsa_keypair();

// Signs `claims` with RS256. Throws pb::Error(invalid_argument) for a bad key.
std::string sign_token(const nlohmann::json& claims, std::string_view private_key_pem);

std::string base64url_encode(std::string_view bytes);
// Throws pb::Error(invalid_argument).
std::string base64url_decode(std::string_view text);

}  // namespace pb::api
