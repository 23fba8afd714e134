#pragma once

#include <filesystem>
#include <optional>

#include "fabl/skeleton.hpp"

namespace fabl {

/// Built-in body models.
///
/// generic15 is the 15-part reduced model every supported device model can
/// be downsampled to. msr20 mirrors the Kinect SDK 20-joint ordering used by
/// MSR-Action3D-style skeleton files; cad60 mirrors the 15-joint ordering of
/// CAD-60 skeleton files. The *_from_* variants are generic15 carrying the
/// downsample map for the named source.
namespace body_models {

BodyModel generic15();
BodyModel msr20();
BodyModel cad60();
BodyModel generic15_from_msr20();
BodyModel generic15_from_cad60();

/// Looks a model up by its registered name ("generic15", "msr20", "cad60",
/// "generic15-from-msr20", "generic15-from-cad60").
std::optional<BodyModel> find_builtin(const std::string& name);

} // namespace body_models

/// Validates the structural invariants of a model: non-empty unique joint
/// names, torso index in range, and a total/injective downsample map when
/// one is present. Throws fabl::Error(invalid_body_model).
void validate_body_model(const BodyModel& model);

/// Body model definition file (see docs/formats.md for the grammar).
BodyModel load_body_model(const std::filesystem::path& path);
void save_body_model(const BodyModel& model, const std::filesystem::path& path);

/// Resolves a model reference: a built-in name first, a file path otherwise.
BodyModel resolve_body_model(const std::string& reference,
                             const std::filesystem::path& base_dir = {});

} // namespace fabl
