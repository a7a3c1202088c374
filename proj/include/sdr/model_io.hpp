#pragma once

#include <string>

#include "sdr/driver.hpp"
#include "sdr/io.hpp"

namespace sdr {

inline constexpr const char* kModelMagic = "SDRMODEL/1";

Json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const Json& j);

Json config_to_json(const SDRConfig& cfg);
SDRConfig config_from_json(const Json& j);

Json model_to_json(const SDRModel& model);
SDRModel model_from_json(const Json& j);

Json bottleneck_to_json(const BottleneckReport& report);
BottleneckReport bottleneck_from_json(const Json& j);

/// Versioned model container; refuses files whose magic string does not
/// match kModelMagic.
void save_model(const std::string& path, const SDRModel& model);
SDRModel load_model(const std::string& path);

}  // namespace sdr
