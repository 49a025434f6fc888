#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xom::mpu {

enum class Mode { privileged, unprivileged };
enum class AccessKind { read, write, fetch };

/// One memory access as seen by the protection hardware. Matching uses the
/// first byte only; the simulator lints straddles instead of splitting them.
struct AccessEvent {
    Mode mode = Mode::privileged;
    AccessKind kind = AccessKind::read;
    std::uint32_t address = 0;
    std::uint32_t width = 4; // 1, 2 or 4 bytes

    bool operator==(const AccessEvent&) const = default;
};

/// R/W/X grant triple for one execution mode.
struct Permission {
    bool read = false;
    bool write = false;
    bool execute = false;

    static constexpr Permission none() { return {false, false, false}; }
    static constexpr Permission r() { return {true, false, false}; }
    static constexpr Permission rw() { return {true, true, false}; }
    static constexpr Permission rx() { return {true, false, true}; }
    static constexpr Permission rwx() { return {true, true, true}; }

    bool operator==(const Permission&) const = default;
};

/// "rw-" / "r-x" style rendering, used by configs and boot sequences.
std::string to_string(const Permission& p);
std::optional<Permission> permission_from_string(std::string_view s);

/// One MPU region. Size must be a power of two between 32 bytes and 4 GB
/// with a size-aligned base; privileged permissions may not be more
/// restrictive than unprivileged ones, and execute requires read.
struct MpuRegion {
    int number = 0;
    std::uint32_t base = 0;
    std::uint64_t size = 0;
    bool enabled = true;
    Permission privileged;
    Permission unprivileged;

    bool contains(std::uint32_t address) const {
        return address >= base && std::uint64_t(address) - base < size;
    }

    bool operator==(const MpuRegion&) const = default;
};

// Private Peripheral Bus span. Accesses here follow a fixed architectural
// rule no matter what the region list says: privileged loads/stores are
// allowed, unprivileged accesses are denied, and nothing is executable.
inline constexpr std::uint32_t kPpbBase = 0xE0000000u;
inline constexpr std::uint32_t kPpbEnd = 0xE000FFFFu; // inclusive

inline constexpr bool in_ppb(std::uint32_t address) {
    return address >= kPpbBase && address <= kPpbEnd;
}

enum class RegionViolation {
    size_not_power_of_two,
    size_out_of_range,
    base_misaligned,
    privileged_more_restrictive,
    execute_without_read,
};

std::string to_string(RegionViolation v);

/// Returns every violated region invariant; an empty list means valid.
std::vector<RegionViolation> validate_region(const MpuRegion& region);

enum class DecisionReason {
    region_permission,
    background, // reserved for decisions sourced from an implicit default
                // map; evaluate_mpu itself never produces it (planners
                // express the background as an ordinary lowest region)
    ppb_fixed_rule,
    no_region,
};

std::string to_string(DecisionReason r);

struct MpuDecision {
    bool allowed = false;
    std::optional<int> matched_region; // set iff reason == region_permission
    DecisionReason reason = DecisionReason::no_region;

    bool operator==(const MpuDecision&) const = default;
};

/// Adjudicate one access against a region set. PPB addresses are decided by
/// the fixed rule first; otherwise the enabled region with the highest
/// number containing the first byte decides, and no match means denial.
/// Throws InvalidRegionSetError if any region fails validate_region.
MpuDecision evaluate_mpu(std::span<const MpuRegion> regions, const AccessEvent& event);

/// Effective permission at an address: the deciding region's grants for the
/// given mode, or nothing when no enabled region contains the address.
/// The PPB fixed rule is not applied here; this is the region-set view.
std::optional<Permission> effective_permission(std::span<const MpuRegion> regions,
                                               std::uint32_t address, Mode mode);

struct WxViolation {
    enum class Kind {
        region_grants_w_and_x,  // a single region grants W and X in one mode
        overlap_grants_w_and_x, // effective perms at an overlap sample point
    };
    Kind kind;
    int region = -1;
    int other_region = -1;       // set for overlap findings
    std::uint32_t address = 0;   // sample point for overlap findings
    Mode mode = Mode::privileged;
};

/// W^X check over a region set: per-region grants plus effective
/// permissions at the boundary sample points of every overlapping pair.
std::vector<WxViolation> validate_wx(std::span<const MpuRegion> regions);

} // namespace xom::mpu
