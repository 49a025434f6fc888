#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "xom/mpu.hpp"

namespace xom::dwt {

enum class Arch { v7m, v8m };

/// Access kinds a comparator's function register can watch for.
enum class WatchKind { read, write, read_write, disabled };

std::string to_string(Arch a);
std::string to_string(WatchKind k);
std::optional<Arch> arch_from_string(std::string_view s);
std::optional<WatchKind> watch_kind_from_string(std::string_view s);

/// v7-M comparator: DWT_COMP<n> plus DWT_MASK<n> select a power-of-two
/// range [comp, comp + 2^mask); comp must be 2^mask-aligned.
struct ComparatorV7 {
    int index = 0;
    std::uint32_t comp = 0;
    unsigned mask = 0;
    WatchKind function = WatchKind::disabled;

    std::uint64_t span() const { return 1ull << mask; }
    bool matches_address(std::uint32_t address) const {
        // Register semantics: compare with the low mask bits ignored.
        std::uint64_t low = span() - 1;
        return (address & ~static_cast<std::uint32_t>(low)) == comp;
    }

    bool operator==(const ComparatorV7&) const = default;
};

/// v8-M pair: DWT_COMP<n> holds the lower bound, DWT_COMP<n+1> the upper
/// bound (inclusive); <n> is even.
struct ComparatorPairV8 {
    int index = 0;
    std::uint32_t lower = 0;
    std::uint32_t upper = 0;
    WatchKind function = WatchKind::disabled;

    bool matches_address(std::uint32_t address) const {
        return address >= lower && address <= upper;
    }

    bool operator==(const ComparatorPairV8&) const = default;
};

using Comparator = std::variant<ComparatorV7, ComparatorPairV8>;

/// Debug Exception and Monitor Control Register; only MON_EN (bit 16)
/// matters here.
struct Demcr {
    bool mon_en = false;
    bool operator==(const Demcr&) const = default;
};

inline constexpr unsigned kDemcrMonEnBit = 16;

struct DwtConfig {
    Arch arch = Arch::v7m;
    std::vector<Comparator> comparators;
    Demcr demcr;
    unsigned max_mask = 15; // device property, v7-M only

    bool operator==(const DwtConfig&) const = default;
};

enum class DwtViolation {
    arch_mismatch,       // comparator form does not match config arch
    mask_exceeds_max,
    comp_misaligned,     // comp not a multiple of 2^mask
    bounds_reversed,     // v8 pair with lower > upper
    index_not_even,      // v8 pair on an odd index
    budget_exceeded,     // more units than the device provides
};

std::string to_string(DwtViolation v);

/// Validate a config against a device comparator budget (v8 pairs consume
/// two units each).
std::vector<DwtViolation> validate_config(const DwtConfig& config, int comparator_budget);

struct DebugMonitorException {
    int comparator = 0;
    std::uint32_t address = 0;
    bool operator==(const DebugMonitorException&) const = default;
};

struct MatchResult {
    std::optional<DebugMonitorException> exception;
    std::vector<std::string> lints;
};

/// Lowest-index comparator whose function covers the kind and whose range
/// contains the address; fetches never match. Ignores DEMCR.
std::optional<int> match_address(const DwtConfig& config, mpu::AccessKind kind,
                                 std::uint32_t address);

/// Full match semantics: first-byte matching, lowest index wins. A match
/// with MON_EN clear produces no exception, only a lint diagnostic.
MatchResult dwt_match(const DwtConfig& config, const mpu::AccessEvent& event);

/// Smallest mask m with 2^m >= size and m <= max_mask; nullopt when the
/// size exceeds the device's largest watchable range.
std::optional<unsigned> mask_for_size(std::uint64_t size, unsigned max_mask);

} // namespace xom::dwt
