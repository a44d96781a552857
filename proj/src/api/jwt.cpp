#include "api/jwt.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>

#include <map>
#include <memory>

#include "common/error.hpp"

namespace pb::api {
namespace {

using nlohmann::json;

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;

struct BioFree {
  void operator()(BIO* b) const { BIO_free(b); }
};
using BioPtr = std::unique_ptr<BIO, BioFree>;

struct MdCtxFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;

[[noreturn]] void reject(const std::string& why) {
  throw Error(Errc::unauthenticated, "invalid token: " + why);
}

PkeyPtr read_public_key(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) throw Error(Errc::internal, "BIO allocation failed");
  PkeyPtr key(PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr));
  if (!key) throw Error(Errc::invalid_argument, "not a PEM public key");
  return key;
}

PkeyPtr read_private_key(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) throw Error(Errc::internal, "BIO allocation failed");
  PkeyPtr key(PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr));
  if (!key) throw Error(Errc::invalid_argument, "not a PEM private key");
  return key;
}

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  long n = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(n));
}

const json* claim_at(const json& claims, std::string_view path) {
  const json* node = &claims;
  while (!path.empty()) {
    std::size_t dot = path.find('.');
    std::string key(path.substr(0, dot));
    if (!node->is_object()) return nullptr;
    auto it = node->find(key);
    if (it == node->end()) return nullptr;
    node = &*it;
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
  }
  return node;
}

}  // namespace

std::string base64url_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  while (!out.empty() && out.back() == '=') out.pop_back();
  for (char& c : out) {
    if (c == '+') c = '-';
    if (c == '/') c = '_';
  }
  return out;
}

std::string base64url_decode(std::string_view text) {
  std::string in(text);
  for (char& c : in) {
    if (c == '-') {
      c = '+';
    } else if (c == '_') {
      c = '/';
    } else if (c == '+' || c == '/' || c == '=') {
      throw Error(Errc::invalid_argument, "not base64url");
    }
  }
  if (in.size() % 4 == 1) throw Error(Errc::invalid_argument, "bad base64url length");
  std::size_t padding = (4 - in.size() % 4) % 4;
  in.append(padding, '=');
  std::string out(3 * in.size() / 4 + 1, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(in.data()),
                          static_cast<int>(in.size()));
  if (n < 0) throw Error(Errc::invalid_argument, "not base64url");
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

struct TokenVerifier::Keys {
  std::map<std::string, PkeyPtr, std::less<>> by_issuer;
};

TokenVerifier::TokenVerifier(AuthConfig config)
    : config_(std::move(config)), keys_(std::make_unique<Keys>()) {
  for (const IssuerKey& k : config_.issuers) {
    keys_->by_issuer[k.issuer] = read_public_key(k.public_key_pem);
  }
}

TokenVerifier::~TokenVerifier() = default;
TokenVerifier::TokenVerifier(TokenVerifier&&) noexcept = default;
TokenVerifier& TokenVerifier::operator=(TokenVerifier&&) noexcept = default;

Claims TokenVerifier::verify(std::string_view token, std::int64_t now) const {
  std::size_t dot1 = token.find('.');
  std::size_t dot2 = dot1 == std::string_view::npos ? dot1 : token.find('.', dot1 + 1);
  if (dot2 == std::string_view::npos || token.find('.', dot2 + 1) != std::string_view::npos) {
    reject("expected three segments");
  }
  json header;
  json claims;
  std::string signature;
  try {
    header = json::parse(base64url_decode(token.substr(0, dot1)));
    claims = json::parse(base64url_decode(token.substr(dot1 + 1, dot2 - dot1 - 1)));
    signature = base64url_decode(token.substr(dot2 + 1));
  } catch (const std::exception&) {
    reject("malformed encoding");
  }
  if (!header.is_object() || header.value("alg", "") != "RS256") {
    reject("algorithm must be RS256");
  }
  if (!claims.is_object()) reject("claims must be an object");
  auto iss = claims.find("iss");
  if (iss == claims.end() || !iss->is_string()) reject("missing issuer");
  auto key = keys_->by_issuer.find(iss->get<std::string>());
  if (key == keys_->by_issuer.end()) reject("issuer not allowed");

  std::string_view signed_part = token.substr(0, dot2);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr,
                                   key->second.get()) != 1) {
    throw Error(Errc::internal, "signature context setup failed");
  }
  if (EVP_DigestVerify(ctx.get(), reinterpret_cast<const unsigned char*>(signature.data()),
                       signature.size(),
                       reinterpret_cast<const unsigned char*>(signed_part.data()),
                       signed_part.size()) != 1) {
    reject("bad signature");
  }

  Claims out;
  out.issuer = iss->get<std::string>();
  auto exp = claims.find("exp");
  if (exp == claims.end() || !exp->is_number_integer()) reject("missing expiry");
  out.expires_at = exp->get<std::int64_t>();
  if (now > out.expires_at + config_.leeway_seconds) reject("expired");
  if (auto nbf = claims.find("nbf"); nbf != claims.end() && nbf->is_number_integer() &&
                                     now + config_.leeway_seconds < nbf->get<std::int64_t>()) {
    reject("not yet valid");
  }
  out.subject = claims.value("sub", "");
  out.username = claims.value("preferred_username", out.subject);
  if (out.username.empty()) reject("missing username");
  if (const json* roles = claim_at(claims, config_.roles_claim);
      roles != nullptr && roles->is_array()) {
    for (const json& r : *roles) {
      if (r.is_string()) out.roles.insert(r.get<std::string>());
    }
  }
  return out;
}

KeyPair generate_rsa_keypair() {
  PkeyPtr key(EVP_RSA_gen(2048));
  if (!key) throw Error(Errc::internal, "RSA key generation failed");
  BioPtr priv(BIO_new(BIO_s_mem()));
  BioPtr pub(BIO_new(BIO_s_mem()));
  if (!priv || !pub ||
      PEM_write_bio_PrivateKey(priv.get(), key.get(), nullptr, nullptr, 0, nullptr,
                               nullptr) != 1 ||
      PEM_write_bio_PUBKEY(pub.get(), key.get()) != 1) {
    throw Error(Errc::internal, "PEM encoding failed");
  }
  return {bio_to_string(priv.get()), bio_to_string(pub.get())};
}

std::string sign_token(const json& claims, std::string_view private_key_pem) {
  PkeyPtr key = read_private_key(private_key_pem);
  std::string signing_input = base64url_encode(json{{"alg", "RS256"}, {"typ", "JWT"}}.dump()) +
                              "." + base64url_encode(claims.dump());
  MdCtxPtr ctx(EVP_MD_CTX_new());
  std::size_t len = 0;
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key.get()) != 1 ||
      EVP_DigestSign(ctx.get(), nullptr, &len,
                     reinterpret_cast<const unsigned char*>(signing_input.data()),
                     signing_input.size()) != 1) {
    throw Error(Errc::internal, "signing failed");
  }
  std::string sig(len, '\0');
  if (EVP_DigestSign(ctx.get(), reinterpret_cast<unsigned char*>(sig.data()), &len,
                     reinterpret_cast<const unsigned char*>(signing_input.data()),
                     signing_input.size()) != 1) {
    throw Error(Errc::internal, "signing failed");
  }
  sig.resize(len);
  return signing_input + "." + base64url_encode(sig);
}

}  // namespace pb::api
