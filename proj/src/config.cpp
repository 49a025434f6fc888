#include "xom/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xom/errors.hpp"
#include "xom/util.hpp"

namespace xom::config {

using json = nlohmann::ordered_json;

namespace {

json hex_addr(std::uint32_t a) {
    return hex32(a);
}

std::uint32_t addr_from(const json& j, const std::string& what) {
    if (j.is_number_unsigned()) {
        auto v = j.get<std::uint64_t>();
        if (v > 0xFFFFFFFFull)
            throw ConfigError(what + ": address out of range");
        return static_cast<std::uint32_t>(v);
    }
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        try {
            std::size_t pos = 0;
            unsigned long long v = std::stoull(s, &pos, 16);
            if (pos != s.size() || v > 0xFFFFFFFFull)
                throw std::invalid_argument("");
            return static_cast<std::uint32_t>(v);
        } catch (const std::exception&) {
            throw ConfigError(what + ": bad address '" + s + "'");
        }
    }
    throw ConfigError(what + ": address must be a hex string or number");
}

const json& field(const json& j, const std::string& key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(ctx + ": missing field '" + key + "'");
    return *it;
}

json range_to_json(const planner::AddressRange& r) {
    return {{"base", hex_addr(r.base)}, {"size", r.size}};
}

planner::AddressRange range_from_json(const json& j, const std::string& ctx) {
    planner::AddressRange r;
    r.base = addr_from(field(j, "base", ctx), ctx + ".base");
    r.size = field(j, "size", ctx).get<std::uint64_t>();
    return r;
}

json profile_to_json(const planner::DeviceProfile& p) {
    json j;
    j["arch"] = dwt::to_string(p.arch);
    j["mpu_regions"] = p.mpu_regions;
    j["dwt_comparators"] = p.dwt_comparators;
    if (p.arch == dwt::Arch::v7m)
        j["max_mask"] = p.max_mask;
    j["flash"] = range_to_json(p.flash);
    j["sram"] = range_to_json(p.sram);
    return j;
}

planner::DeviceProfile profile_from_json(const json& j) {
    planner::DeviceProfile p;
    auto arch = dwt::arch_from_string(field(j, "arch", "profile").get<std::string>());
    if (!arch)
        throw ConfigError("profile.arch: expected v7m or v8m");
    p.arch = *arch;
    p.mpu_regions = field(j, "mpu_regions", "profile").get<int>();
    p.dwt_comparators = field(j, "dwt_comparators", "profile").get<int>();
    if (p.arch == dwt::Arch::v7m)
        p.max_mask = field(j, "max_mask", "profile").get<unsigned>();
    p.flash = range_from_json(field(j, "flash", "profile"), "profile.flash");
    p.sram = range_from_json(field(j, "sram", "profile"), "profile.sram");
    return p;
}

json layout_to_json(const planner::FirmwareLayout& l) {
    json j;
    j["code"] = range_to_json(l.code);
    j["rodata"] = range_to_json(l.rodata);
    j["ram"] = range_to_json(l.ram);
    j["uses_privileged_ops"] = l.uses_privileged_ops;
    return j;
}

planner::FirmwareLayout layout_from_json(const json& j) {
    planner::FirmwareLayout l;
    l.code = range_from_json(field(j, "code", "layout"), "layout.code");
    l.rodata = range_from_json(field(j, "rodata", "layout"), "layout.rodata");
    l.ram = range_from_json(field(j, "ram", "layout"), "layout.ram");
    l.uses_privileged_ops = field(j, "uses_privileged_ops", "layout").get<bool>();
    return l;
}

json region_to_json(const mpu::MpuRegion& r) {
    json j;
    j["number"] = r.number;
    j["base"] = hex_addr(r.base);
    j["size"] = r.size;
    j["enabled"] = r.enabled;
    j["privileged"] = mpu::to_string(r.privileged);
    j["unprivileged"] = mpu::to_string(r.unprivileged);
    return j;
}

mpu::MpuRegion region_from_json(const json& j) {
    mpu::MpuRegion r;
    r.number = field(j, "number", "mpu region").get<int>();
    r.base = addr_from(field(j, "base", "mpu region"), "mpu region.base");
    r.size = field(j, "size", "mpu region").get<std::uint64_t>();
    r.enabled = field(j, "enabled", "mpu region").get<bool>();
    auto priv =
        mpu::permission_from_string(field(j, "privileged", "mpu region").get<std::string>());
    auto unpriv = mpu::permission_from_string(
        field(j, "unprivileged", "mpu region").get<std::string>());
    if (!priv || !unpriv)
        throw ConfigError("mpu region: bad permission string");
    r.privileged = *priv;
    r.unprivileged = *unpriv;
    return r;
}

// Comparators carry explicit register-style keys so emitted plans read like
// the registers they program.
json comparator_to_json(const dwt::Comparator& c) {
    json j;
    if (const auto* v7 = std::get_if<dwt::ComparatorV7>(&c)) {
        std::string n = std::to_string(v7->index);
        j["DWT_COMP" + n] = hex_addr(v7->comp);
        j["DWT_MASK" + n] = v7->mask;
        j["DWT_FUNC" + n] = dwt::to_string(v7->function);
    } else {
        const auto& pair = std::get<dwt::ComparatorPairV8>(c);
        std::string n = std::to_string(pair.index);
        std::string n1 = std::to_string(pair.index + 1);
        j["DWT_COMP" + n] = hex_addr(pair.lower);
        j["DWT_COMP" + n1] = hex_addr(pair.upper);
        j["DWT_FUNC" + n] = dwt::to_string(pair.function);
        j["DWT_FUNC" + n1] = dwt::to_string(pair.function);
    }
    return j;
}

dwt::Comparator comparator_from_json(const json& j, dwt::Arch arch) {
    auto func_of = [&](const std::string& key) {
        auto f = dwt::watch_kind_from_string(field(j, key, "comparator").get<std::string>());
        if (!f)
            throw ConfigError("comparator." + key + ": bad watch kind");
        return *f;
    };
    int index = -1;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key.rfind("DWT_COMP", 0) == 0) {
            index = std::stoi(key.substr(8));
            break;
        }
    }
    if (index < 0)
        throw ConfigError("comparator: no DWT_COMP<n> key");
    std::string n = std::to_string(index);
    if (arch == dwt::Arch::v7m) {
        dwt::ComparatorV7 c;
        c.index = index;
        c.comp = addr_from(field(j, "DWT_COMP" + n, "comparator"), "DWT_COMP" + n);
        c.mask = field(j, "DWT_MASK" + n, "comparator").get<unsigned>();
        c.function = func_of("DWT_FUNC" + n);
        return c;
    }
    std::string n1 = std::to_string(index + 1);
    dwt::ComparatorPairV8 c;
    c.index = index;
    c.lower = addr_from(field(j, "DWT_COMP" + n, "comparator"), "DWT_COMP" + n);
    c.upper = addr_from(field(j, "DWT_COMP" + n1, "comparator"), "DWT_COMP" + n1);
    c.function = func_of("DWT_FUNC" + n);
    return c;
}

json plan_to_json(const planner::ProtectionPlan& p) {
    json j;
    j["option"] = planner::to_string(p.option);
    j["execution_mode"] =
        p.execution_mode == mpu::Mode::privileged ? "privileged" : "unprivileged";
    j["required_code_alignment"] = p.required_code_alignment;
    json chunks = json::array();
    for (const auto& c : p.code_chunks)
        chunks.push_back(range_to_json(c));
    j["code_chunks"] = chunks;
    json regions = json::array();
    for (const auto& r : p.mpu_regions)
        regions.push_back(region_to_json(r));
    j["mpu_regions"] = regions;
    json dwt_j;
    dwt_j["arch"] = dwt::to_string(p.dwt_config.arch);
    if (p.dwt_config.arch == dwt::Arch::v7m)
        dwt_j["max_mask"] = p.dwt_config.max_mask;
    json comps = json::array();
    for (const auto& c : p.dwt_config.comparators)
        comps.push_back(comparator_to_json(c));
    dwt_j["comparators"] = comps;
    dwt_j["demcr"] = {{"DEMCR.MON_EN", p.dwt_config.demcr.mon_en}};
    j["dwt"] = dwt_j;
    return j;
}

planner::ProtectionPlan plan_from_json(const json& j) {
    planner::ProtectionPlan p;
    auto opt =
        planner::plan_option_from_string(field(j, "option", "plan").get<std::string>());
    if (!opt)
        throw ConfigError("plan.option: unknown option string '" +
                          field(j, "option", "plan").get<std::string>() + "'");
    p.option = *opt;
    const std::string mode = field(j, "execution_mode", "plan").get<std::string>();
    if (mode == "privileged")
        p.execution_mode = mpu::Mode::privileged;
    else if (mode == "unprivileged")
        p.execution_mode = mpu::Mode::unprivileged;
    else
        throw ConfigError("plan.execution_mode: bad mode '" + mode + "'");
    p.required_code_alignment =
        field(j, "required_code_alignment", "plan").get<std::uint64_t>();
    for (const json& c : field(j, "code_chunks", "plan"))
        p.code_chunks.push_back(range_from_json(c, "plan.code_chunks"));
    for (const json& r : field(j, "mpu_regions", "plan"))
        p.mpu_regions.push_back(region_from_json(r));
    const json& dwt_j = field(j, "dwt", "plan");
    auto arch = dwt::arch_from_string(field(dwt_j, "arch", "plan.dwt").get<std::string>());
    if (!arch)
        throw ConfigError("plan.dwt.arch: expected v7m or v8m");
    p.dwt_config.arch = *arch;
    if (*arch == dwt::Arch::v7m)
        p.dwt_config.max_mask = field(dwt_j, "max_mask", "plan.dwt").get<unsigned>();
    for (const json& c : field(dwt_j, "comparators", "plan.dwt"))
        p.dwt_config.comparators.push_back(comparator_from_json(c, *arch));
    p.dwt_config.demcr.mon_en =
        field(field(dwt_j, "demcr", "plan.dwt"), "DEMCR.MON_EN", "plan.dwt.demcr")
            .get<bool>();
    return p;
}

json boot_to_json(const std::vector<planner::RegisterAssignment>& seq) {
    json out = json::array();
    for (const auto& a : seq)
        out.push_back({{"register", a.reg}, {"value", a.value}, {"comment", a.comment}});
    return out;
}

std::vector<planner::RegisterAssignment> boot_from_json(const json& j) {
    std::vector<planner::RegisterAssignment> out;
    for (const json& e : j)
        out.push_back({field(e, "register", "boot_sequence").get<std::string>(),
                       field(e, "value", "boot_sequence").get<std::string>(),
                       field(e, "comment", "boot_sequence").get<std::string>()});
    return out;
}

} // namespace

std::string serialize(const ConfigDocument& doc) {
    json j;
    if (doc.profile)
        j["profile"] = profile_to_json(*doc.profile);
    if (doc.layout)
        j["layout"] = layout_to_json(*doc.layout);
    if (doc.plan)
        j["plan"] = plan_to_json(*doc.plan);
    if (doc.boot_sequence)
        j["boot_sequence"] = boot_to_json(*doc.boot_sequence);
    return j.dump(2) + "\n";
}

ConfigDocument parse_document(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what()); // message carries line and column
    }
    try {
        ConfigDocument doc;
        if (j.contains("profile"))
            doc.profile = profile_from_json(j["profile"]);
        if (j.contains("layout"))
            doc.layout = layout_from_json(j["layout"]);
        if (j.contains("plan"))
            doc.plan = plan_from_json(j["plan"]);
        if (j.contains("boot_sequence"))
            doc.boot_sequence = boot_from_json(j["boot_sequence"]);
        return doc;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
}

ConfigDocument load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_document(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void save_file(const std::string& path, const ConfigDocument& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path + "'");
    out << serialize(doc);
}

} // namespace xom::config
