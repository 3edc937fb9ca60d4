#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <string_view>

#include "amlsim/core.hpp"

namespace amlsim {

using Digest256 = std::array<std::uint8_t, 32>;

// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw SimError("sha256 init failed");
    }

    Sha256& update(const void* data, std::size_t n) {
        EVP_DigestUpdate(ctx_.get(), data, n);
        return *this;
    }
    Sha256& update(std::string_view s) { return update(s.data(), s.size()); }

    // Fixed-width little-endian encoding so digests are platform independent.
    Sha256& update_u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        return update(b, 8);
    }
    Sha256& update_i64(std::int64_t v) { return update_u64(static_cast<std::uint64_t>(v)); }
    Sha256& update_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        return update_u64(bits);
    }
    // Length-prefixed so concatenations cannot collide.
    Sha256& update_field(std::string_view s) {
        update_u64(s.size());
        return update(s);
    }

    Digest256 finish() {
        Digest256 out{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string to_hex(const Digest256& d) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

inline std::string sha256_hex(std::string_view data) { return to_hex(Sha256{}.update(data).finish()); }

// Bitcoin base58 alphabet encoding of a big-endian byte string.
inline std::string base58_encode(const std::uint8_t* data, std::size_t n) {
    static constexpr char alphabet[] = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
    std::string digits;  // little-endian base58 digits
    for (std::size_t i = 0; i < n; ++i) {
        unsigned carry = data[i];
        for (auto& d : digits) {
            carry += static_cast<unsigned>(d) << 8;
            d = static_cast<char>(carry % 58);
            carry /= 58;
        }
        while (carry) {
            digits.push_back(static_cast<char>(carry % 58));
            carry /= 58;
        }
    }
    std::string out;
    for (std::size_t i = 0; i < n && data[i] == 0; ++i) out.push_back('1');
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) out.push_back(alphabet[static_cast<int>(*it)]);
    return out;
}

}  // namespace amlsim
