#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "ndfem/coefficients.hpp"
#include "ndfem/hjb.hpp"
#include "ndfem/norms.hpp"

namespace ndfem {

using Json = nlohmann::json;

/// %.17g formatting used by every CSV and text payload.
std::string fmt17(double v);

Json to_json(const CordesReport& rep);
Json to_json(const ErrorReport& rep);
Json to_json(const ValidationReport& rep);
Json to_json(const IterationRecord& rec);
Json to_json(const HjbReport& rep, bool include_history = true);

/// FeFunction export: space descriptor plus the raw coefficient vector.
Json to_json(const FeFunction& u);

/// Convergence table CSV: one row per level plus per-step EOC of the broken
/// second-order error (empty on the first row).
std::string convergence_csv(const std::vector<ErrorReport>& rows);

/// HJB iteration log CSV with one active-control histogram column per label.
std::string iteration_csv(const std::vector<IterationRecord>& history,
                          const std::vector<std::string>& control_labels);

/// Legacy ASCII VTK export of a scalar FE function sampled at mesh vertices.
std::string vtk_scalar(const FeFunction& u, const std::string& name);

/// Coordinate text format (row col value per line, 17 significant digits).
std::string coordinate_format(const SparseMat& m);

void write_text_file(const std::string& path, const std::string& payload);

}  // namespace ndfem
