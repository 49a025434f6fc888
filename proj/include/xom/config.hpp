#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xom/planner.hpp"

namespace xom::config {

/// One structured config file. Profile and layout sections describe inputs;
/// the plan section (plus its boot sequence) is what `plan` emits and
/// `check`/`attack` consume. Serialization is canonical: two-space indent,
/// fixed key order, addresses as 0x-prefixed 8-digit hex strings.
struct ConfigDocument {
    std::optional<planner::DeviceProfile> profile;
    std::optional<planner::FirmwareLayout> layout;
    std::optional<planner::ProtectionPlan> plan;
    std::optional<std::vector<planner::RegisterAssignment>> boot_sequence;

    bool operator==(const ConfigDocument&) const = default;
};

std::string serialize(const ConfigDocument& doc);

/// Throws ConfigError with the offending location or field in the message.
ConfigDocument parse_document(const std::string& text);

ConfigDocument load_file(const std::string& path);   // throws ConfigError
void save_file(const std::string& path, const ConfigDocument& doc);

} // namespace xom::config
