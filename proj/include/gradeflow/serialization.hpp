#pragma once

#include <string>

#include "gradeflow/homogenize.hpp"
#include "gradeflow/surrogate.hpp"

namespace gradeflow {

/// JSON files; every load checks the format tag and version and throws
/// ConfigError naming the first missing or malformed field.
///
/// The dataset file also carries the polynomial surrogate fitted to it, so a
/// run can load the fit without refitting.
void save_dataset(const HomogenizationDataset& dataset, const std::string& path);
HomogenizationDataset load_dataset(const std::string& path);
PermeabilitySurrogate load_surrogate(const std::string& dataset_path);

/// Shape catalog with id, parameters, gamma_max and v_max.
void save_catalog(const std::string& path);

}  // namespace gradeflow
