#include "xom/dwt.hpp"

#include <bit>

#include "xom/util.hpp"

namespace xom::dwt {

std::string to_string(Arch a) {
    return a == Arch::v7m ? "v7m" : "v8m";
}

std::string to_string(WatchKind k) {
    switch (k) {
    case WatchKind::read: return "read";
    case WatchKind::write: return "write";
    case WatchKind::read_write: return "read_write";
    case WatchKind::disabled: return "disabled";
    }
    return "?";
}

std::optional<Arch> arch_from_string(std::string_view s) {
    if (s == "v7m")
        return Arch::v7m;
    if (s == "v8m")
        return Arch::v8m;
    return std::nullopt;
}

std::optional<WatchKind> watch_kind_from_string(std::string_view s) {
    if (s == "read")
        return WatchKind::read;
    if (s == "write")
        return WatchKind::write;
    if (s == "read_write")
        return WatchKind::read_write;
    if (s == "disabled")
        return WatchKind::disabled;
    return std::nullopt;
}

std::string to_string(DwtViolation v) {
    switch (v) {
    case DwtViolation::arch_mismatch: return "comparator form does not match arch";
    case DwtViolation::mask_exceeds_max: return "mask exceeds device max_mask";
    case DwtViolation::comp_misaligned: return "comp not aligned to 2^mask";
    case DwtViolation::bounds_reversed: return "pair lower bound above upper bound";
    case DwtViolation::index_not_even: return "pair index not even";
    case DwtViolation::budget_exceeded: return "comparator budget exceeded";
    }
    return "?";
}

std::vector<DwtViolation> validate_config(const DwtConfig& config, int comparator_budget) {
    std::vector<DwtViolation> out;
    int units = 0;
    for (const Comparator& c : config.comparators) {
        if (const auto* v7 = std::get_if<ComparatorV7>(&c)) {
            units += 1;
            if (config.arch != Arch::v7m)
                out.push_back(DwtViolation::arch_mismatch);
            if (v7->mask > config.max_mask)
                out.push_back(DwtViolation::mask_exceeds_max);
            if (v7->comp % v7->span() != 0)
                out.push_back(DwtViolation::comp_misaligned);
        } else {
            const auto& pair = std::get<ComparatorPairV8>(c);
            units += 2;
            if (config.arch != Arch::v8m)
                out.push_back(DwtViolation::arch_mismatch);
            if (pair.lower > pair.upper)
                out.push_back(DwtViolation::bounds_reversed);
            if (pair.index % 2 != 0)
                out.push_back(DwtViolation::index_not_even);
        }
    }
    if (units > comparator_budget)
        out.push_back(DwtViolation::budget_exceeded);
    return out;
}

namespace {

bool function_covers(WatchKind f, mpu::AccessKind kind) {
    switch (f) {
    case WatchKind::read: return kind == mpu::AccessKind::read;
    case WatchKind::write: return kind == mpu::AccessKind::write;
    case WatchKind::read_write:
        return kind == mpu::AccessKind::read || kind == mpu::AccessKind::write;
    case WatchKind::disabled: return false;
    }
    return false;
}

} // namespace

std::optional<int> match_address(const DwtConfig& config, mpu::AccessKind kind,
                                 std::uint32_t address) {
    if (kind == mpu::AccessKind::fetch)
        return std::nullopt; // data-address matching only
    std::optional<int> best;
    for (const Comparator& c : config.comparators) {
        int index;
        bool hit;
        if (const auto* v7 = std::get_if<ComparatorV7>(&c)) {
            index = v7->index;
            hit = function_covers(v7->function, kind) && v7->matches_address(address);
        } else {
            const auto& pair = std::get<ComparatorPairV8>(c);
            index = pair.index;
            hit = function_covers(pair.function, kind) && pair.matches_address(address);
        }
        if (hit && (!best || index < *best))
            best = index;
    }
    return best;
}

MatchResult dwt_match(const DwtConfig& config, const mpu::AccessEvent& event) {
    MatchResult result;
    auto hit = match_address(config, event.kind, event.address);
    if (!hit)
        return result;
    if (!config.demcr.mon_en) {
        result.lints.push_back("dwt comparator " + std::to_string(*hit) + " matches " +
                               hex32(event.address) +
                               " but DEMCR.MON_EN is clear; no exception raised");
        return result;
    }
    result.exception = DebugMonitorException{*hit, event.address};
    return result;
}

std::optional<unsigned> mask_for_size(std::uint64_t size, unsigned max_mask) {
    if (size == 0)
        return std::nullopt;
    unsigned m = size == 1 ? 0 : static_cast<unsigned>(std::bit_width(size - 1));
    if (m > max_mask)
        return std::nullopt;
    return m;
}

} // namespace xom::dwt
