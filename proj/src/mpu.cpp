#include "xom/mpu.hpp"

#include <algorithm>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::mpu {

std::string to_string(const Permission& p) {
    std::string s;
    s += p.read ? 'r' : '-';
    s += p.write ? 'w' : '-';
    s += p.execute ? 'x' : '-';
    return s;
}

std::optional<Permission> permission_from_string(std::string_view s) {
    if (s.size() != 3)
        return std::nullopt;
    Permission p;
    if (s[0] == 'r')
        p.read = true;
    else if (s[0] != '-')
        return std::nullopt;
    if (s[1] == 'w')
        p.write = true;
    else if (s[1] != '-')
        return std::nullopt;
    if (s[2] == 'x')
        p.execute = true;
    else if (s[2] != '-')
        return std::nullopt;
    return p;
}

std::string to_string(RegionViolation v) {
    switch (v) {
    case RegionViolation::size_not_power_of_two: return "size is not a power of two";
    case RegionViolation::size_out_of_range: return "size outside 32 B .. 4 GB";
    case RegionViolation::base_misaligned: return "base is not a multiple of size";
    case RegionViolation::privileged_more_restrictive:
        return "privileged permission more restrictive than unprivileged";
    case RegionViolation::execute_without_read: return "execute granted without read";
    }
    return "?";
}

std::string to_string(DecisionReason r) {
    switch (r) {
    case DecisionReason::region_permission: return "region-permission";
    case DecisionReason::background: return "background";
    case DecisionReason::ppb_fixed_rule: return "ppb-fixed-rule";
    case DecisionReason::no_region: return "no-region";
    }
    return "?";
}

std::vector<RegionViolation> validate_region(const MpuRegion& region) {
    std::vector<RegionViolation> out;
    constexpr std::uint64_t kMinSize = 32;
    constexpr std::uint64_t kMaxSize = 1ull << 32;

    if (!is_power_of_two(region.size))
        out.push_back(RegionViolation::size_not_power_of_two);
    if (region.size < kMinSize || region.size > kMaxSize)
        out.push_back(RegionViolation::size_out_of_range);
    if (is_power_of_two(region.size) && region.base % region.size != 0)
        out.push_back(RegionViolation::base_misaligned);

    const Permission& p = region.privileged;
    const Permission& u = region.unprivileged;
    if ((u.read && !p.read) || (u.write && !p.write) || (u.execute && !p.execute))
        out.push_back(RegionViolation::privileged_more_restrictive);
    if ((p.execute && !p.read) || (u.execute && !u.read))
        out.push_back(RegionViolation::execute_without_read);
    return out;
}

namespace {

const MpuRegion* deciding_region(std::span<const MpuRegion> regions, std::uint32_t address) {
    const MpuRegion* best = nullptr;
    for (const MpuRegion& r : regions) {
        if (!r.enabled || !r.contains(address))
            continue;
        if (best == nullptr || r.number > best->number)
            best = &r;
    }
    return best;
}

bool permits(const Permission& p, AccessKind kind) {
    switch (kind) {
    case AccessKind::read: return p.read;
    case AccessKind::write: return p.write;
    case AccessKind::fetch: return p.execute;
    }
    return false;
}

} // namespace

MpuDecision evaluate_mpu(std::span<const MpuRegion> regions, const AccessEvent& event) {
    for (const MpuRegion& r : regions)
        if (!validate_region(r).empty())
            throw InvalidRegionSetError("invalid-region-set: region " +
                                        std::to_string(r.number) + " fails validation");

    if (in_ppb(event.address)) {
        bool allowed = event.mode == Mode::privileged && event.kind != AccessKind::fetch;
        return {allowed, std::nullopt, DecisionReason::ppb_fixed_rule};
    }

    if (const MpuRegion* r = deciding_region(regions, event.address)) {
        const Permission& p =
            event.mode == Mode::privileged ? r->privileged : r->unprivileged;
        return {permits(p, event.kind), r->number, DecisionReason::region_permission};
    }
    return {false, std::nullopt, DecisionReason::no_region};
}

std::optional<Permission> effective_permission(std::span<const MpuRegion> regions,
                                               std::uint32_t address, Mode mode) {
    const MpuRegion* r = deciding_region(regions, address);
    if (!r)
        return std::nullopt;
    return mode == Mode::privileged ? r->privileged : r->unprivileged;
}

std::vector<WxViolation> validate_wx(std::span<const MpuRegion> regions) {
    std::vector<WxViolation> out;

    for (const MpuRegion& r : regions) {
        if (!r.enabled)
            continue;
        for (Mode m : {Mode::privileged, Mode::unprivileged}) {
            const Permission& p = m == Mode::privileged ? r.privileged : r.unprivileged;
            if (p.write && p.execute)
                out.push_back({WxViolation::Kind::region_grants_w_and_x, r.number, -1,
                               r.base, m});
        }
    }

    // Overlapping pairs: probe effective permissions at the regions'
    // boundary addresses clipped to the overlap.
    for (std::size_t i = 0; i < regions.size(); ++i) {
        for (std::size_t j = i + 1; j < regions.size(); ++j) {
            const MpuRegion& a = regions[i];
            const MpuRegion& b = regions[j];
            if (!a.enabled || !b.enabled)
                continue;
            std::uint64_t lo = std::max<std::uint64_t>(a.base, b.base);
            std::uint64_t hi = std::min<std::uint64_t>(a.base + a.size, b.base + b.size);
            if (lo >= hi)
                continue;
            const std::uint64_t samples[] = {lo, hi - 1, a.base, a.base + a.size - 1,
                                             b.base, b.base + b.size - 1};
            for (std::uint64_t s : samples) {
                if (s < lo || s >= hi)
                    continue;
                auto addr = static_cast<std::uint32_t>(s);
                for (Mode m : {Mode::privileged, Mode::unprivileged}) {
                    auto p = effective_permission(regions, addr, m);
                    if (p && p->write && p->execute)
                        out.push_back({WxViolation::Kind::overlap_grants_w_and_x,
                                       a.number, b.number, addr, m});
                }
            }
        }
    }
    return out;
}

} // namespace xom::mpu
