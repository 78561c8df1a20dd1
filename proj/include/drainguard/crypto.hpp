#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drainguard {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

using Block = std::array<std::uint8_t, 16>;
using Mac8 = std::array<std::uint8_t, 8>;
using Digest = std::array<std::uint8_t, 16>;
using Nonce = std::array<std::uint8_t, 16>;
using Signature = std::array<std::uint8_t, 64>;
using RawPublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView bytes);
/// Throws Errc::ConfigError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// AES-128 block encryption with an expanded key schedule.
class Aes128 {
public:
    explicit Aes128(std::span<const std::uint8_t, 16> key);
    ~Aes128();
    Aes128(const Aes128&);
    Aes128& operator=(const Aes128&);

    Block encrypt(const Block& in) const;

private:
    struct Schedule;
    std::unique_ptr<Schedule> schedule_;
};

/// 128-bit secret shared by one Provider and the Backend. It deliberately has
/// no serialisation; only key files written by the provisioning tool hold it.
class SymKey {
public:
    explicit SymKey(const Block& bytes);

    static SymKey from_hex(std::string_view hex);
    static SymKey load(const std::filesystem::path& path);

    const Aes128& cipher() const { return cipher_; }

    /// Raw key bytes, for provisioning files and test scans only.
    const Block& expose_secret() const { return bytes_; }

private:
    Block bytes_;
    Aes128 cipher_;
};

/// CBC-MAC with a zero IV, truncated to its first 8 bytes. The message is
/// zero-padded to a whole number of blocks, so every call site must MAC a
/// fixed-length encoding.
Mac8 mac_tag(const SymKey& key, ByteView message);

/// Constant-time comparison against a freshly computed tag.
bool mac_verify(const SymKey& key, ByteView message, const Mac8& tag);

/// Davies-Meyer over AES-128: H_i = E_{m_i}(H_{i-1}) xor H_{i-1}, H_0 = 0,
/// with 0x80 padding and a 64-bit big-endian bit length in the last block.
Digest dm_hash(ByteView message);

namespace detail {
Block dm_compress(const Block& chain, const Block& message_block);
Bytes dm_pad(ByteView message);
} // namespace detail

class PublicKey {
public:
    PublicKey() = default;
    explicit PublicKey(const RawPublicKey& raw);

    const RawPublicKey& raw() const { return raw_; }

    /// Throws Errc::MalformedSignature when `signature` is not 64 bytes.
    bool verify(ByteView message, ByteView signature) const;

    friend bool operator==(const PublicKey& a, const PublicKey& b) { return a.raw_ == b.raw_; }

private:
    RawPublicKey raw_{};
    std::shared_ptr<void> pkey_;
};

/// Ed25519 signing key.
class SigningKey {
public:
    static SigningKey from_seed(const Seed& seed);
    static SigningKey load(const std::filesystem::path& path);

    Signature sign(ByteView message) const;
    const PublicKey& public_key() const { return public_; }

    /// Seed bytes, for key files and test scans only.
    const Seed& expose_secret() const { return seed_; }

private:
    Seed seed_{};
    PublicKey public_;
    std::shared_ptr<void> pkey_;
};

Signature sign(const SigningKey& key, ByteView message);
bool sig_verify(const PublicKey& key, ByteView message, ByteView signature);

/// Single-level certificate: the CA signs (subject id, public key).
struct Certificate {
    std::uint32_t subject = 0;
    PublicKey key;
    Signature ca_signature{};

    static constexpr std::size_t kEncodedSize = 4 + 32 + 64;

    Bytes signed_part() const;
    Bytes encode() const;
    static Certificate decode(ByteView bytes);

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

bool cert_verify(const PublicKey& ca_key, const Certificate& cert);

struct Identity {
    SigningKey key;
    Certificate cert;
};

class CertificateAuthority {
public:
    explicit CertificateAuthority(SigningKey key) : key_(std::move(key)) {}

    Certificate issue(std::uint32_t subject, const PublicKey& key) const;
    Identity enroll(std::uint32_t subject, const Seed& seed) const;
    const PublicKey& public_key() const { return key_.public_key(); }
    const SigningKey& signing_key() const { return key_; }

private:
    SigningKey key_;
};

/// Explicitly seeded byte source; one per actor keeps runs reproducible.
/// Operating-system randomness, for key material that must not be
/// reproducible.
void secure_random(std::span<std::uint8_t> out);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream);

    void fill(std::span<std::uint8_t> out);

    template <std::size_t N>
    std::array<std::uint8_t, N> bytes() {
        std::array<std::uint8_t, N> out{};
        fill(out);
        return out;
    }

    Nonce nonce() { return bytes<16>(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Requester-chosen r and h = dm_hash(r) binding a ticket to its holder.
struct Commitment {
    std::array<std::uint8_t, 4> r{};
    Digest h{};
};

Commitment new_commitment(Rng& rng);

} // namespace drainguard
