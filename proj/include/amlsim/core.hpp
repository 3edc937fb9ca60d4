#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amlsim {

// Value unit. Fees are fractional, so satoshis are real-valued throughout.
using Satoshi = double;

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Satoshi kDustThreshold = 5460.0;
inline constexpr Satoshi kAvailabilityThreshold = 8000.0;
inline constexpr Satoshi kFeePerInput = 1810.0;
inline constexpr Satoshi kFeeBase = 100.0;
inline constexpr double kFeeValueRate = 0.0008;
inline constexpr Timestamp kSecondsPerDay = 86400;

// Index of an account inside a ledger. Stable for the lifetime of the ledger.
enum class AccountRef : std::uint32_t {};

constexpr std::size_t index_of(AccountRef r) noexcept { return static_cast<std::size_t>(r); }
constexpr AccountRef make_ref(std::size_t i) noexcept { return static_cast<AccountRef>(i); }

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientFunds : public SimError {
public:
    using SimError::SimError;
};

class DustViolation : public SimError {
public:
    using SimError::SimError;
};

class PoolExhausted : public SimError {
public:
    using SimError::SimError;
};

class ScheduleError : public SimError {
public:
    using SimError::SimError;
};

class UnknownAccount : public SimError {
public:
    using SimError::SimError;
};

class ConfigError : public SimError {
public:
    using SimError::SimError;
};

class CompileError : public SimError {
public:
    using SimError::SimError;
};

class InvariantViolation : public SimError {
public:
    using SimError::SimError;
};

class ParseError : public SimError {
public:
    ParseError(const std::string& what, std::size_t row = 0)
        : SimError(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// ---------------------------------------------------------------------------
// Entity kinds
// ---------------------------------------------------------------------------

enum class EntityKind : std::uint8_t {
    Licit,
    Exchange,
    DecentralizedExchange,
    NestedExchange,
    Escrow,
    Mixer,
    Mule,
    Funds,
    Business,
    CryptoLending,
    ServiceAddress,
    NestedServiceAddress,
    InterimAddress,
    SingleUse,
    OuterLayer,
};

inline constexpr std::size_t kEntityKindCount = 15;

inline constexpr std::array<EntityKind, kEntityKindCount> kAllEntityKinds = {
    EntityKind::Licit,          EntityKind::Exchange,       EntityKind::DecentralizedExchange,
    EntityKind::NestedExchange, EntityKind::Escrow,         EntityKind::Mixer,
    EntityKind::Mule,           EntityKind::Funds,          EntityKind::Business,
    EntityKind::CryptoLending,  EntityKind::ServiceAddress, EntityKind::NestedServiceAddress,
    EntityKind::InterimAddress, EntityKind::SingleUse,      EntityKind::OuterLayer,
};

constexpr std::string_view to_string(EntityKind k) noexcept {
    switch (k) {
        case EntityKind::Licit: return "Licit";
        case EntityKind::Exchange: return "Exchange";
        case EntityKind::DecentralizedExchange: return "DecentralizedExchange";
        case EntityKind::NestedExchange: return "NestedExchange";
        case EntityKind::Escrow: return "Escrow";
        case EntityKind::Mixer: return "Mixer";
        case EntityKind::Mule: return "Mule";
        case EntityKind::Funds: return "Funds";
        case EntityKind::Business: return "Business";
        case EntityKind::CryptoLending: return "CryptoLending";
        case EntityKind::ServiceAddress: return "ServiceAddress";
        case EntityKind::NestedServiceAddress: return "NestedServiceAddress";
        case EntityKind::InterimAddress: return "InterimAddress";
        case EntityKind::SingleUse: return "SingleUse";
        case EntityKind::OuterLayer: return "OuterLayer";
    }
    return "?";
}

namespace detail {

inline std::string normalize_name(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == ' ' || c == '_' || c == '-' || c == '\t') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace detail

// Accepts canonical names case-insensitively (spaces/underscores ignored) and
// the short forms used in hand-written schemas ("service add", "sgl", ...).
inline std::optional<EntityKind> parse_entity_kind(std::string_view text) {
    const std::string n = detail::normalize_name(text);
    for (EntityKind k : kAllEntityKinds) {
        if (detail::normalize_name(to_string(k)) == n) return k;
    }
    struct Alias {
        std::string_view name;
        EntityKind kind;
    };
    static constexpr std::array<Alias, 22> aliases = {{
        {"serviceadd", EntityKind::ServiceAddress},
        {"serviceaddr", EntityKind::ServiceAddress},
        {"service", EntityKind::ServiceAddress},
        {"nestedserviceadd", EntityKind::NestedServiceAddress},
        {"nestedserviceaddr", EntityKind::NestedServiceAddress},
        {"nestedservice", EntityKind::NestedServiceAddress},
        {"interimadd", EntityKind::InterimAddress},
        {"interimaddr", EntityKind::InterimAddress},
        {"interim", EntityKind::InterimAddress},
        {"singleuseaddress", EntityKind::SingleUse},
        {"singleuseadd", EntityKind::SingleUse},
        {"sgl", EntityKind::SingleUse},
        {"dex", EntityKind::DecentralizedExchange},
        {"decentralisedexchange", EntityKind::DecentralizedExchange},
        {"lending", EntityKind::CryptoLending},
        {"cryptolender", EntityKind::CryptoLending},
        {"moneymule", EntityKind::Mule},
        {"fund", EntityKind::Funds},
        {"outerlayeraccount", EntityKind::OuterLayer},
        {"outer", EntityKind::OuterLayer},
        {"genuine", EntityKind::Licit},
        {"tumbler", EntityKind::Mixer},
    }};
    for (const auto& a : aliases) {
        if (a.name == n) return a.kind;
    }
    return std::nullopt;
}

// Default category map: true for kinds labelled illicit.
inline bool default_illicit_kind(EntityKind k) {
    switch (k) {
        case EntityKind::Mixer:
        case EntityKind::NestedExchange:
        case EntityKind::NestedServiceAddress:
        case EntityKind::InterimAddress:
        case EntityKind::Funds:
        case EntityKind::Business:
        case EntityKind::CryptoLending: return true;
        default: return false;
    }
}

// ---------------------------------------------------------------------------
// Time helpers (proleptic Gregorian, UTC)
// ---------------------------------------------------------------------------

inline Timestamp make_timestamp(int year, unsigned month, unsigned day, int hh = 0, int mm = 0,
                                int ss = 0) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                             std::chrono::day{day}};
    if (!ymd.ok()) throw ParseError("invalid calendar date");
    const sys_days d{ymd};
    return static_cast<Timestamp>(d.time_since_epoch().count()) * kSecondsPerDay + hh * 3600 +
           mm * 60 + ss;
}

inline std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    Timestamp days = t / kSecondsPerDay;
    Timestamp rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS[Z]" and "dd/mm/yy[yy]".
inline Timestamp parse_timestamp(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
    char tail[8] = {0};
    if (s.find('/') != std::string::npos) {
        int n = std::sscanf(s.c_str(), "%d/%d/%d%1s", &d, &mo, &y, tail);
        if (n != 3) throw ParseError("unparseable date '" + s + "'");
        if (y < 100) y += 2000;
    } else {
        int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%1s", &y, &mo, &d, &hh, &mi, &ss, tail);
        if (n == 3 && s.size() != 10) throw ParseError("unparseable date '" + s + "'");
        if (n != 3 && n != 6 && !(n == 7 && tail[0] == 'Z'))
            throw ParseError("unparseable date '" + s + "'");
        if (hh < 0 || hh > 23 || mi < 0 || mi > 59 || ss < 0 || ss > 60)
            throw ParseError("invalid time of day in '" + s + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31) throw ParseError("invalid date '" + s + "'");
    return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), hh, mi, ss);
}

// Relative closeness used by the conservation checks.
inline bool conserved(Satoshi in_sum, Satoshi out_sum, Satoshi fee, double rel_tol = 1e-6) {
    return std::abs(in_sum - out_sum - fee) <= rel_tol * std::max(in_sum, 1.0);
}

}  // namespace amlsim
