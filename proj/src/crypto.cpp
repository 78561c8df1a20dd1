#define OPENSSL_SUPPRESS_DEPRECATED 1

#include "drainguard/crypto.hpp"

#include "drainguard/error.hpp"

#include <openssl/aes.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

namespace drainguard {

namespace {

std::string read_trimmed(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::ConfigError, "cannot open key file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::erase_if(text, [](char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; });
    return text;
}

struct PkeyDeleter {
    void operator()(void* p) const { EVP_PKEY_free(static_cast<EVP_PKEY*>(p)); }
};

struct MdCtx {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    ~MdCtx() { EVP_MD_CTX_free(ctx); }
    MdCtx() = default;
    MdCtx(const MdCtx&) = delete;
    MdCtx& operator=(const MdCtx&) = delete;
};

} // namespace

std::string to_hex(ByteView bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw Error(Errc::ConfigError, "hex string has odd length");
    }
    const auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error(Errc::ConfigError, std::string("invalid hex digit '") + c + "'");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// AES-128

struct Aes128::Schedule {
    AES_KEY key;
};

Aes128::Aes128(std::span<const std::uint8_t, 16> key) : schedule_(std::make_unique<Schedule>()) {
    if (AES_set_encrypt_key(key.data(), 128, &schedule_->key) != 0) {
        throw Error(Errc::CryptoFailure, "AES key schedule");
    }
}

Aes128::~Aes128() = default;

Aes128::Aes128(const Aes128& other) : schedule_(std::make_unique<Schedule>(*other.schedule_)) {}

Aes128& Aes128::operator=(const Aes128& other) {
    if (this != &other) {
        *schedule_ = *other.schedule_;
    }
    return *this;
}

Block Aes128::encrypt(const Block& in) const {
    Block out;
    AES_encrypt(in.data(), out.data(), &schedule_->key);
    return out;
}

SymKey::SymKey(const Block& bytes) : bytes_(bytes), cipher_(bytes_) {}

SymKey SymKey::from_hex(std::string_view hex) {
    const auto raw = drainguard::from_hex(hex);
    if (raw.size() != 16) {
        throw Error(Errc::ConfigError, "symmetric key must be 16 bytes");
    }
    Block b;
    std::copy(raw.begin(), raw.end(), b.begin());
    return SymKey(b);
}

SymKey SymKey::load(const std::filesystem::path& path) { return from_hex(read_trimmed(path)); }

// ---------------------------------------------------------------------------
// CBC-MAC and Davies-Meyer

void secure_random(std::span<std::uint8_t> out) {
    if (!out.empty() && RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
        throw Error(Errc::CryptoFailure, "RAND_bytes");
    }
}

Mac8 mac_tag(const SymKey& key, ByteView message) {
    Block state{};
    std::size_t pos = 0;
    do {
        const auto n = std::min<std::size_t>(16, message.size() - pos);
        for (std::size_t j = 0; j < n; ++j) {
            state[j] ^= message[pos + j];
        }
        state = key.cipher().encrypt(state);
        pos += n;
    } while (pos < message.size());
    Mac8 tag;
    std::copy_n(state.begin(), tag.size(), tag.begin());
    return tag;
}

bool mac_verify(const SymKey& key, ByteView message, const Mac8& tag) {
    const auto expected = mac_tag(key, message);
    return CRYPTO_memcmp(expected.data(), tag.data(), tag.size()) == 0;
}

namespace detail {

Block dm_compress(const Block& chain, const Block& message_block) {
    const Aes128 cipher(message_block);
    Block out = cipher.encrypt(chain);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] ^= chain[i];
    }
    return out;
}

Bytes dm_pad(ByteView message) {
    Bytes padded(message.begin(), message.end());
    padded.push_back(0x80);
    while (padded.size() % 16 != 8) {
        padded.push_back(0x00);
    }
    const std::uint64_t bits = static_cast<std::uint64_t>(message.size()) * 8;
    for (int shift = 56; shift >= 0; shift -= 8) {
        padded.push_back(static_cast<std::uint8_t>(bits >> shift));
    }
    return padded;
}

} // namespace detail

Digest dm_hash(ByteView message) {
    const auto padded = detail::dm_pad(message);
    Block chain{};
    for (std::size_t pos = 0; pos < padded.size(); pos += 16) {
        Block m;
        std::copy_n(padded.begin() + static_cast<std::ptrdiff_t>(pos), 16, m.begin());
        chain = detail::dm_compress(chain, m);
    }
    return chain;
}

// ---------------------------------------------------------------------------
// Ed25519

PublicKey::PublicKey(const RawPublicKey& raw) : raw_(raw) {
    // A key OpenSSL refuses keeps its raw bytes and never verifies.
    if (EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, raw.data(), raw.size())) {
        pkey_.reset(pkey, PkeyDeleter{});
    }
}

bool PublicKey::verify(ByteView message, ByteView signature) const {
    if (signature.size() != std::tuple_size_v<Signature>) {
        throw Error(Errc::MalformedSignature, "expected 64 bytes, got " + std::to_string(signature.size()));
    }
    if (!pkey_) {
        return false;
    }
    MdCtx md;
    if (EVP_DigestVerifyInit(md.ctx, nullptr, nullptr, nullptr, static_cast<EVP_PKEY*>(pkey_.get())) != 1) {
        throw Error(Errc::CryptoFailure, "EVP_DigestVerifyInit");
    }
    return EVP_DigestVerify(md.ctx, signature.data(), signature.size(), message.data(), message.size()) == 1;
}

SigningKey SigningKey::from_seed(const Seed& seed) {
    SigningKey key;
    key.seed_ = seed;
    EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
    if (pkey == nullptr) {
        throw Error(Errc::CryptoFailure, "Ed25519 key from seed");
    }
    key.pkey_.reset(pkey, PkeyDeleter{});
    RawPublicKey raw{};
    std::size_t len = raw.size();
    if (EVP_PKEY_get_raw_public_key(pkey, raw.data(), &len) != 1 || len != raw.size()) {
        throw Error(Errc::CryptoFailure, "Ed25519 public key extraction");
    }
    key.public_ = PublicKey(raw);
    return key;
}

SigningKey SigningKey::load(const std::filesystem::path& path) {
    const auto raw = from_hex(read_trimmed(path));
    if (raw.size() != 32) {
        throw Error(Errc::ConfigError, "signing key seed must be 32 bytes");
    }
    Seed seed;
    std::copy(raw.begin(), raw.end(), seed.begin());
    return from_seed(seed);
}

Signature SigningKey::sign(ByteView message) const {
    MdCtx md;
    if (EVP_DigestSignInit(md.ctx, nullptr, nullptr, nullptr, static_cast<EVP_PKEY*>(pkey_.get())) != 1) {
        throw Error(Errc::CryptoFailure, "EVP_DigestSignInit");
    }
    Signature sig{};
    std::size_t len = sig.size();
    if (EVP_DigestSign(md.ctx, sig.data(), &len, message.data(), message.size()) != 1 || len != sig.size()) {
        throw Error(Errc::CryptoFailure, "EVP_DigestSign");
    }
    return sig;
}

Signature sign(const SigningKey& key, ByteView message) { return key.sign(message); }

bool sig_verify(const PublicKey& key, ByteView message, ByteView signature) { return key.verify(message, signature); }

// ---------------------------------------------------------------------------
// Certificates

Bytes Certificate::signed_part() const {
    Bytes out;
    out.reserve(4 + 32);
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(subject >> shift));
    }
    out.insert(out.end(), key.raw().begin(), key.raw().end());
    return out;
}

Bytes Certificate::encode() const {
    auto out = signed_part();
    out.insert(out.end(), ca_signature.begin(), ca_signature.end());
    return out;
}

Certificate Certificate::decode(ByteView bytes) {
    if (bytes.size() != kEncodedSize) {
        throw Error(Errc::WrongLength, "certificate must be " + std::to_string(kEncodedSize) + " bytes");
    }
    Certificate cert;
    cert.subject = static_cast<std::uint32_t>(bytes[0]) << 24 | static_cast<std::uint32_t>(bytes[1]) << 16 |
                   static_cast<std::uint32_t>(bytes[2]) << 8 | static_cast<std::uint32_t>(bytes[3]);
    RawPublicKey raw;
    std::copy_n(bytes.begin() + 4, raw.size(), raw.begin());
    cert.key = PublicKey(raw);
    std::copy_n(bytes.begin() + 36, cert.ca_signature.size(), cert.ca_signature.begin());
    return cert;
}

bool cert_verify(const PublicKey& ca_key, const Certificate& cert) {
    return ca_key.verify(cert.signed_part(), cert.ca_signature);
}

Certificate CertificateAuthority::issue(std::uint32_t subject, const PublicKey& key) const {
    Certificate cert;
    cert.subject = subject;
    cert.key = key;
    cert.ca_signature = key_.sign(cert.signed_part());
    return cert;
}

Identity CertificateAuthority::enroll(std::uint32_t subject, const Seed& seed) const {
    auto key = SigningKey::from_seed(seed);
    auto cert = issue(subject, key.public_key());
    return {std::move(key), std::move(cert)};
}

// ---------------------------------------------------------------------------
// Randomness

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

void Rng::fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        auto word = engine_();
        for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
            out[i] = static_cast<std::uint8_t>(word);
            word >>= 8;
        }
    }
}

Commitment new_commitment(Rng& rng) {
    Commitment c;
    c.r = rng.bytes<4>();
    c.h = dm_hash(c.r);
    return c;
}

} // namespace drainguard
