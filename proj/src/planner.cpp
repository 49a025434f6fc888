#include "xom/planner.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::planner {

std::string to_string(PlanOption o) {
    return o == PlanOption::unprivileged_full_budget ? "unprivileged_full_budget"
                                                     : "privileged_with_guards";
}

std::optional<PlanOption> plan_option_from_string(std::string_view s) {
    if (s == "unprivileged_full_budget")
        return PlanOption::unprivileged_full_budget;
    if (s == "privileged_with_guards")
        return PlanOption::privileged_with_guards;
    return std::nullopt;
}

std::vector<std::string> validate_profile(const DeviceProfile& profile) {
    std::vector<std::string> out;
    if (profile.mpu_regions < 1)
        out.push_back("mpu_regions must be >= 1");
    if (profile.dwt_comparators < 1)
        out.push_back("dwt_comparators must be >= 1");
    if (profile.flash.size == 0)
        out.push_back("flash range is empty");
    if (profile.sram.size == 0)
        out.push_back("sram range is empty");
    if (profile.flash.overlaps(profile.sram))
        out.push_back("flash and sram ranges overlap");
    if (profile.arch == dwt::Arch::v7m && profile.max_mask > 31)
        out.push_back("max_mask must be <= 31");
    return out;
}

std::vector<std::string> validate_layout(const FirmwareLayout& layout,
                                         const DeviceProfile& profile) {
    std::vector<std::string> out;
    if (layout.code.size == 0)
        out.push_back("code segment is empty");
    if (layout.rodata.size == 0)
        out.push_back("rodata segment is empty");
    if (layout.ram.size == 0)
        out.push_back("ram segment is empty");
    if (!profile.flash.contains(layout.code))
        out.push_back("code segment not within flash");
    if (!profile.flash.contains(layout.rodata))
        out.push_back("rodata segment not within flash");
    if (!profile.sram.contains(layout.ram))
        out.push_back("ram segment not within sram");
    if (layout.code.overlaps(layout.rodata) || layout.code.overlaps(layout.ram) ||
        layout.rodata.overlaps(layout.ram))
        out.push_back("code/rodata/ram segments overlap");
    return out;
}

std::vector<AddressRange> tile_code(std::uint32_t base, std::uint64_t size,
                                    unsigned max_mask) {
    std::vector<AddressRange> chunks;
    const std::uint64_t max_span = 1ull << max_mask;
    std::uint64_t pos = base;
    const std::uint64_t end = std::uint64_t(base) + size;
    while (pos < end) {
        std::uint64_t need = end - pos;
        std::uint64_t align = pos == 0 ? max_span : pos & ~(pos - 1);
        std::uint64_t cover = std::bit_ceil(need);
        std::uint64_t chunk;
        if (cover <= max_span && cover <= align) {
            chunk = cover; // final chunk; may over-watch past the code end
        } else {
            chunk = std::min({max_span, align, std::bit_floor(need)});
        }
        chunks.push_back({static_cast<std::uint32_t>(pos), chunk});
        pos += chunk;
    }
    return chunks;
}

namespace {

// Smallest power-of-two region (>= 32 bytes) whose aligned base covers the
// whole segment. May extend past the segment; callers order regions so the
// spill can never shadow a more specific one.
mpu::MpuRegion cover_region(int number, const AddressRange& seg, mpu::Permission priv,
                            mpu::Permission unpriv) {
    std::uint64_t p = std::max<std::uint64_t>(std::bit_ceil(seg.size), 32);
    for (;; p <<= 1) {
        std::uint64_t abase = seg.base & ~(p - 1);
        if (abase + p >= seg.end() || p == (1ull << 32))
            return {number, static_cast<std::uint32_t>(abase), p, true, priv, unpriv};
    }
}

dwt::ComparatorV7 guard_comparator_v7(int index, const GuardRange& guard,
                                      unsigned max_mask) {
    auto mask = dwt::mask_for_size(guard.range.size, max_mask);
    if (!mask)
        throw InfeasibleError("guard range " + hex32(guard.range.base) +
                              " exceeds the device's largest watchable range");
    return {index, guard.range.base, *mask, guard.function};
}

dwt::ComparatorPairV8 guard_pair_v8(int index, const GuardRange& guard) {
    return {index, guard.range.base,
            static_cast<std::uint32_t>(guard.range.end() - 1), guard.function};
}

std::string format_assignment_value(const mpu::MpuRegion& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "base=0x%08x size=%llu priv=%s unpriv=%s", r.base,
                  (unsigned long long)r.size, mpu::to_string(r.privileged).c_str(),
                  mpu::to_string(r.unprivileged).c_str());
    return buf;
}

std::string region_role(int number) {
    switch (number) {
    case kRegionBackground: return "background (peripherals and remaining space)";
    case kRegionRam: return "ram";
    case kRegionRodata: return "read-only data";
    case kRegionCode: return "code";
    }
    return "region";
}

} // namespace

ProtectionPlan plan(const DeviceProfile& profile, const FirmwareLayout& layout) {
    {
        auto v = validate_profile(profile);
        auto w = validate_layout(layout, profile);
        v.insert(v.end(), w.begin(), w.end());
        if (!v.empty()) {
            std::string msg = "invalid plan input:";
            for (const auto& s : v)
                msg += " " + s + ";";
            throw std::invalid_argument(msg);
        }
    }
    if (profile.mpu_regions < 4)
        throw InfeasibleError("plan needs 4 MPU regions, device has " +
                              std::to_string(profile.mpu_regions));

    ProtectionPlan out;
    out.dwt_config.arch = profile.arch;
    out.dwt_config.max_mask = profile.max_mask;
    out.dwt_config.demcr.mon_en = true;

    const int total = profile.dwt_comparators;

    if (profile.arch == dwt::Arch::v7m) {
        const std::uint64_t span = 1ull << profile.max_mask;
        const std::uint64_t guarded_limit = total >= 2 ? (total - 2) * span : 0;
        const std::uint64_t full_limit = std::uint64_t(total) * span;

        int code_budget;
        if (layout.code.size <= guarded_limit) {
            out.option = PlanOption::privileged_with_guards;
            out.execution_mode = mpu::Mode::privileged;
            code_budget = total - 2;
        } else if (layout.code.size <= full_limit) {
            if (layout.uses_privileged_ops)
                throw InfeasibleError(
                    "code size " + human_size(layout.code.size) +
                    " only fits the unprivileged option, but the application "
                    "performs privileged operations");
            out.option = PlanOption::unprivileged_full_budget;
            out.execution_mode = mpu::Mode::unprivileged;
            code_budget = total;
        } else {
            throw RejectError(layout.code.size, full_limit,
                              "code size " + human_size(layout.code.size) +
                                  " exceeds the " + human_size(full_limit) +
                                  " limit of this device");
        }

        out.code_chunks = tile_code(layout.code.base, layout.code.size, profile.max_mask);
        if (static_cast<int>(out.code_chunks.size()) > code_budget)
            throw InfeasibleError("code base alignment requires " +
                                  std::to_string(out.code_chunks.size()) +
                                  " comparators but only " + std::to_string(code_budget) +
                                  " are available; align the code base");

        int index = 0;
        for (const AddressRange& chunk : out.code_chunks) {
            auto mask = dwt::mask_for_size(chunk.size, profile.max_mask);
            out.dwt_config.comparators.push_back(
                dwt::ComparatorV7{index++, chunk.base, *mask, dwt::WatchKind::read});
        }
        if (out.option == PlanOption::privileged_with_guards) {
            out.dwt_config.comparators.push_back(
                guard_comparator_v7(index++, kDwtRegistersGuard, profile.max_mask));
            out.dwt_config.comparators.push_back(
                guard_comparator_v7(index++, kScbDemcrGuard, profile.max_mask));
        }
    } else {
        const int pairs = total / 2;
        if (pairs < 1)
            throw RejectError(layout.code.size, 0,
                              "device has no usable comparator pair");
        if (pairs >= 3) {
            out.option = PlanOption::privileged_with_guards;
            out.execution_mode = mpu::Mode::privileged;
        } else {
            if (layout.uses_privileged_ops)
                throw InfeasibleError(
                    "guard pairs do not fit the comparator budget and the "
                    "application performs privileged operations");
            out.option = PlanOption::unprivileged_full_budget;
            out.execution_mode = mpu::Mode::unprivileged;
        }
        out.code_chunks = {layout.code};
        out.dwt_config.comparators.push_back(dwt::ComparatorPairV8{
            0, layout.code.base, static_cast<std::uint32_t>(layout.code.end() - 1),
            dwt::WatchKind::read});
        if (out.option == PlanOption::privileged_with_guards) {
            out.dwt_config.comparators.push_back(guard_pair_v8(2, kDwtRegistersGuard));
            out.dwt_config.comparators.push_back(guard_pair_v8(4, kScbDemcrGuard));
        }
    }

    std::uint64_t align = 4;
    if (profile.arch == dwt::Arch::v7m) {
        align = 0;
        for (const AddressRange& c : out.code_chunks)
            align = std::max(align, c.size);
    }
    out.required_code_alignment = align;

    // Reads of rodata (and ram) must succeed, so neither may fall inside the
    // watched span, which can extend past the code end by over-watch padding.
    const AddressRange& last = out.code_chunks.back();
    AddressRange watched{layout.code.base, last.end() - layout.code.base};
    if (watched.overlaps(layout.rodata))
        throw InfeasibleError("rodata overlaps the watched code span " +
                              hex32(watched.base) + "+" + std::to_string(watched.size) +
                              "; move rodata past the padded code region");
    if (watched.overlaps(layout.ram))
        throw InfeasibleError("ram overlaps the watched code span");
    if (watched.end() > profile.flash.end())
        throw InfeasibleError("watched code span extends past flash");

    const bool both_modes = out.option == PlanOption::unprivileged_full_budget;
    auto unpriv = [&](mpu::Permission p) {
        return both_modes ? p : mpu::Permission::none();
    };
    out.mpu_regions.push_back(cover_region(kRegionBackground, {0, 1ull << 32},
                                           mpu::Permission::rw(),
                                           unpriv(mpu::Permission::rw())));
    out.mpu_regions.push_back(cover_region(kRegionRam, layout.ram, mpu::Permission::rw(),
                                           unpriv(mpu::Permission::rw())));
    out.mpu_regions.push_back(cover_region(kRegionRodata, layout.rodata,
                                           mpu::Permission::r(),
                                           unpriv(mpu::Permission::r())));
    out.mpu_regions.push_back(cover_region(kRegionCode, watched, mpu::Permission::rx(),
                                           unpriv(mpu::Permission::rx())));
    return out;
}

std::vector<RegisterAssignment> emit_boot_sequence(const ProtectionPlan& plan) {
    std::vector<RegisterAssignment> out;
    char buf[160];

    for (const dwt::Comparator& c : plan.dwt_config.comparators) {
        if (const auto* v7 = std::get_if<dwt::ComparatorV7>(&c)) {
            std::string n = std::to_string(v7->index);
            std::snprintf(buf, sizeof buf, "watch range %s+%llu", hex32(v7->comp).c_str(),
                          (unsigned long long)v7->span());
            out.push_back({"DWT_COMP" + n, hex32(v7->comp), "range base"});
            out.push_back({"DWT_MASK" + n, std::to_string(v7->mask), buf});
            out.push_back({"DWT_FUNC" + n, dwt::to_string(v7->function),
                           v7->function == dwt::WatchKind::read
                               ? "trap data reads of the code range"
                               : "trap writes to guarded system registers"});
        } else {
            const auto& pair = std::get<dwt::ComparatorPairV8>(c);
            std::string n = std::to_string(pair.index);
            std::string n1 = std::to_string(pair.index + 1);
            out.push_back({"DWT_COMP" + n, hex32(pair.lower), "range lower bound"});
            out.push_back({"DWT_COMP" + n1, hex32(pair.upper),
                           "range upper bound (inclusive)"});
            out.push_back({"DWT_FUNC" + n, dwt::to_string(pair.function),
                           "match kind for the pair's lower half"});
            out.push_back({"DWT_FUNC" + n1, dwt::to_string(pair.function),
                           "completes the address-range pair"});
        }
    }

    out.push_back({"DEMCR.MON_EN", plan.dwt_config.demcr.mon_en ? "1" : "0",
                   "enable the debug monitor exception"});

    std::vector<mpu::MpuRegion> regions = plan.mpu_regions;
    std::sort(regions.begin(), regions.end(),
              [](const auto& a, const auto& b) { return a.number < b.number; });
    for (const mpu::MpuRegion& r : regions)
        out.push_back({"MPU_REGION" + std::to_string(r.number),
                       format_assignment_value(r), region_role(r.number)});
    return out;
}

std::uint64_t boot_sequence_size_bytes(const ProtectionPlan& plan) {
    return 12 * emit_boot_sequence(plan).size() + 8;
}

std::vector<std::string> validate_plan(const ProtectionPlan& plan,
                                       const DeviceProfile& profile,
                                       const FirmwareLayout& layout) {
    std::vector<std::string> out;

    for (const mpu::MpuRegion& r : plan.mpu_regions)
        for (auto v : mpu::validate_region(r))
            out.push_back("region " + std::to_string(r.number) + ": " + mpu::to_string(v));
    if (!mpu::validate_wx(plan.mpu_regions).empty())
        out.push_back("region set violates W^X");
    for (auto v : dwt::validate_config(plan.dwt_config, profile.dwt_comparators))
        out.push_back("dwt: " + dwt::to_string(v));
    if (static_cast<int>(plan.mpu_regions.size()) > profile.mpu_regions)
        out.push_back("more MPU regions than the device provides");

    // Every code byte must be covered by a read-watching comparator.
    for (std::uint64_t a = layout.code.base; a < layout.code.end(); a += 32)
        if (!dwt::match_address(plan.dwt_config, mpu::AccessKind::read,
                                static_cast<std::uint32_t>(a)))
            out.push_back("code byte " + hex32(static_cast<std::uint32_t>(a)) +
                          " is not read-watched");

    const bool guards = plan.option == PlanOption::privileged_with_guards;
    if (guards != (plan.execution_mode == mpu::Mode::privileged))
        out.push_back("execution mode does not match option");
    if (guards) {
        for (const GuardRange& g : {kDwtRegistersGuard, kScbDemcrGuard}) {
            bool covered =
                dwt::match_address(plan.dwt_config, mpu::AccessKind::write,
                                   g.range.base) &&
                dwt::match_address(plan.dwt_config, mpu::AccessKind::write,
                                   static_cast<std::uint32_t>(g.range.end() - 1));
            if (!covered)
                out.push_back("guard range " + hex32(g.range.base) +
                              " is not write-watched");
        }
    }
    return out;
}

} // namespace xom::planner
