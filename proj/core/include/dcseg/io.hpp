#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dcseg/segmentation.hpp"
#include "dcseg/simcore.hpp"

namespace dcseg {

using Json = nlohmann::json;

Json to_json(const SystemModel& model);
SystemModel system_from_json(const Json& j);

Json to_json(const VscStation& st);
VscStation station_from_json(const Json& j);
Json to_json(const HvdcLink& link);
HvdcLink link_from_json(const Json& j);

Json to_json(const StationControl& c);
StationControl control_from_json(const Json& j);

Json to_json(const SegmentationPlan& plan);
SegmentationPlan plan_from_json(const Json& j);

Json to_json(const Event& e);
Event event_from_json(const Json& j);

Json to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const Json& j, SimConfig defaults = {});

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

SystemModel load_system(const std::filesystem::path& path);
void save_system(const SystemModel& model, const std::filesystem::path& path);

}  // namespace dcseg
