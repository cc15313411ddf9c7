#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hgc/metafeatures.hpp"
#include "hgc/solver.hpp"

namespace hgc {

// Which predictor blocks a model uses.
//   multilevel     screened variant indicators + all meta-feature burdens
//   gene_only      gene burdens only
//   recorded_only  screened variant indicators only
enum class Method { multilevel, gene_only, recorded_only };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

struct FitDiagnostics {
    int iterations = 0;
    double objective = 0.0;
    double kkt_active_residual = 0.0;
    double kkt_inactive_ratio = 0.0;
    double kkt_intercept_residual = 0.0;
    std::size_t n_active_groups = 0;
    bool converged = false;

    friend bool operator==(const FitDiagnostics&, const FitDiagnostics&) = default;
};

// A fitted classifier. All coefficients are on the original (unscaled)
// predictor scale, so eta = alpha + sum of raw indicators/counts times coefficients.
struct ModelFit {
    static constexpr int kSchemaVersion = 1;

    Method method = Method::multilevel;
    std::vector<std::string> class_names;
    std::vector<double> alpha;
    std::map<std::string, std::vector<double>> beta0;  // nonzero residual effects only
    std::vector<std::vector<double>> omega;            // p rows in meta_space order
    std::map<std::string, double> variant_scales;      // variant columns that entered the fit
    std::vector<double> meta_scales;                   // p; 0 = not part of the fit
    std::vector<std::string> dropped_columns;          // "kind:name"
    MetaFeatureSpace meta_space;
    double lambda = 0.0;
    std::vector<std::string> screening_roster;   // retained variant ids, rank order
    std::vector<std::string> recorded_variants;  // sorted training variant ids
    FitDiagnostics diagnostics;

    std::size_t n_classes() const noexcept { return class_names.size(); }
    bool is_recorded(std::string_view variant_id) const;
    std::optional<int> class_index(std::string_view name) const;

    friend bool operator==(const ModelFit&, const ModelFit&) = default;
};

/// Converts a scaled-problem fit into a model on the original predictor scale.
ModelFit make_model_fit(const FitProblem& problem, const FitResult& result,
                        const MetaFeatureSpace& space, Method method,
                        std::vector<std::string> screening_roster,
                        std::vector<std::string> recorded_variants);

nlohmann::ordered_json model_to_json(const ModelFit& model);
ModelFit model_from_json(const nlohmann::ordered_json& j);

void save_model(std::ostream& out, const ModelFit& model);
ModelFit load_model(std::istream& in);

}  // namespace hgc
