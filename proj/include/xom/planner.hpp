#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xom/dwt.hpp"
#include "xom/mpu.hpp"

namespace xom::planner {

struct AddressRange {
    std::uint32_t base = 0;
    std::uint64_t size = 0;

    std::uint64_t end() const { return std::uint64_t(base) + size; } // exclusive
    bool contains(const AddressRange& inner) const {
        return inner.base >= base && inner.end() <= end();
    }
    bool overlaps(const AddressRange& other) const {
        return base < other.end() && other.base < end();
    }

    bool operator==(const AddressRange&) const = default;
};

struct DeviceProfile {
    dwt::Arch arch = dwt::Arch::v7m;
    int mpu_regions = 8;
    int dwt_comparators = 4;
    unsigned max_mask = 15; // meaningful for v7m only
    AddressRange flash;
    AddressRange sram;

    bool operator==(const DeviceProfile&) const = default;
};

struct FirmwareLayout {
    AddressRange code;
    AddressRange rodata;
    AddressRange ram;
    bool uses_privileged_ops = false;

    bool operator==(const FirmwareLayout&) const = default;
};

std::vector<std::string> validate_profile(const DeviceProfile& profile);
std::vector<std::string> validate_layout(const FirmwareLayout& layout,
                                         const DeviceProfile& profile);

enum class GuardName { dwt_registers, scb_and_demcr };

/// System-register range that must be write-watched when the application
/// keeps running privileged.
struct GuardRange {
    GuardName name;
    AddressRange range;
    dwt::WatchKind function = dwt::WatchKind::write;
};

// DWT register block and the SCB block; the latter deliberately spans
// 256 bytes so it also covers DEMCR at 0xe000edfc.
inline constexpr GuardRange kDwtRegistersGuard{GuardName::dwt_registers,
                                               {0xE0001000u, 0x1000},
                                               dwt::WatchKind::write};
inline constexpr GuardRange kScbDemcrGuard{GuardName::scb_and_demcr,
                                           {0xE000ED00u, 0x100},
                                           dwt::WatchKind::write};

enum class PlanOption { unprivileged_full_budget, privileged_with_guards };

std::string to_string(PlanOption o);
std::optional<PlanOption> plan_option_from_string(std::string_view s);

// Region numbers the planner assigns. Code gets the highest number so the
// power-of-two rounded regions of other segments can never shadow it.
inline constexpr int kRegionBackground = 0;
inline constexpr int kRegionRam = 1;
inline constexpr int kRegionRodata = 2;
inline constexpr int kRegionCode = 3;

struct ProtectionPlan {
    PlanOption option = PlanOption::privileged_with_guards;
    mpu::Mode execution_mode = mpu::Mode::privileged;
    std::vector<mpu::MpuRegion> mpu_regions;
    dwt::DwtConfig dwt_config;
    std::uint64_t required_code_alignment = 0;
    std::vector<AddressRange> code_chunks;

    bool operator==(const ProtectionPlan&) const = default;
};

/// Produce the full device configuration for a firmware layout.
/// Throws RejectError when the code exceeds the comparator budget,
/// InfeasibleError when a plan exists arithmetically but cannot be used
/// (privileged ops with only the unprivileged option left, misaligned code
/// that needs more comparators than available, rodata/ram inside the
/// watched span, or not enough MPU regions), and std::invalid_argument on
/// invalid profile/layout.
ProtectionPlan plan(const DeviceProfile& profile, const FirmwareLayout& layout);

/// Aligned power-of-two chunks covering [base, base+size), each no larger
/// than 2^max_mask, greedy largest-aligned-first; the final chunk may
/// extend past the end (the linker must pad that region).
std::vector<AddressRange> tile_code(std::uint32_t base, std::uint64_t size,
                                    unsigned max_mask);

struct RegisterAssignment {
    std::string reg;
    std::string value;
    std::string comment;

    bool operator==(const RegisterAssignment&) const = default;
};

/// Ordered boot-time register writes: per comparator COMP then MASK (v7m)
/// or the paired COMP (v8m) then FUNC, then DEMCR.MON_EN, then the MPU
/// regions in ascending number.
std::vector<RegisterAssignment> emit_boot_sequence(const ProtectionPlan& plan);

/// Model constant for the boot configuration code a plan implies, used by
/// size-overhead accounting: 12 bytes per register assignment plus 8 bytes
/// of enable glue.
std::uint64_t boot_sequence_size_bytes(const ProtectionPlan& plan);

/// Cross-checks a finished plan against its inputs; empty means sound.
std::vector<std::string> validate_plan(const ProtectionPlan& plan,
                                       const DeviceProfile& profile,
                                       const FirmwareLayout& layout);

} // namespace xom::planner
