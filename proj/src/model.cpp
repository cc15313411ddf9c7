#include "hgc/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "hgc/error.hpp"

namespace hgc {

using json = nlohmann::ordered_json;

std::string_view to_string(Method method) {
    switch (method) {
        case Method::multilevel: return "multilevel";
        case Method::gene_only: return "gene_only";
        case Method::recorded_only: return "recorded_only";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view text) {
    for (auto m : {Method::multilevel, Method::gene_only, Method::recorded_only})
        if (to_string(m) == text) return m;
    return std::nullopt;
}

bool ModelFit::is_recorded(std::string_view variant_id) const {
    return std::binary_search(recorded_variants.begin(), recorded_variants.end(), variant_id);
}

std::optional<int> ModelFit::class_index(std::string_view name) const {
    for (std::size_t k = 0; k < class_names.size(); ++k)
        if (class_names[k] == name) return static_cast<int>(k);
    return std::nullopt;
}

ModelFit make_model_fit(const FitProblem& problem, const FitResult& result,
                        const MetaFeatureSpace& space, Method method,
                        std::vector<std::string> screening_roster,
                        std::vector<std::string> recorded_variants) {
    const auto K = static_cast<std::size_t>(problem.n_classes());
    ModelFit model;
    model.method = method;
    model.class_names = problem.class_names;
    model.alpha.assign(result.coef.intercept.data(), result.coef.intercept.data() + K);
    model.omega.assign(space.p(), std::vector<double>(K, 0.0));
    model.meta_scales.assign(space.p(), 0.0);
    model.meta_space = space;
    model.lambda = result.lambda;
    model.screening_roster = std::move(screening_roster);
    model.recorded_variants = std::move(recorded_variants);
    std::sort(model.recorded_variants.begin(), model.recorded_variants.end());

    std::unordered_map<std::string_view, std::size_t> sbs_index;
    for (std::size_t t = 0; t < space.sbs_categories.size(); ++t)
        sbs_index.emplace(space.sbs_categories[t], t);
    auto meta_index = [&](const PredictorColumn& col) -> std::size_t {
        if (col.kind == PredictorKind::sbs) {
            const auto it = sbs_index.find(col.name);
            if (it == sbs_index.end()) throw InputError("unknown SBS column '" + col.name + "'");
            return it->second;
        }
        const auto g = space.gene_index(col.name);
        if (!g) throw InputError("gene column '" + col.name + "' not on roster");
        return space.sbs_categories.size() + *g;
    };

    for (std::size_t j = 0; j < problem.q(); ++j) {
        const auto& col = problem.columns[j];
        std::vector<double> theta(K);
        bool nonzero = false;
        for (std::size_t k = 0; k < K; ++k) {
            theta[k] = result.coef.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) /
                       col.scale;
            nonzero = nonzero || theta[k] != 0.0;
        }
        if (col.kind == PredictorKind::variant) {
            model.variant_scales[col.name] = col.scale;
            if (nonzero) model.beta0[col.name] = std::move(theta);
        } else {
            const auto l = meta_index(col);
            model.omega[l] = std::move(theta);
            model.meta_scales[l] = col.scale;
        }
    }
    for (const auto& d : problem.dropped)
        model.dropped_columns.push_back(std::string(to_string(d.kind)) + ":" + d.name);

    model.diagnostics.iterations = result.iterations;
    model.diagnostics.objective = result.objective;
    model.diagnostics.kkt_active_residual = result.kkt.active_residual;
    model.diagnostics.kkt_inactive_ratio = result.kkt.inactive_ratio;
    model.diagnostics.kkt_intercept_residual = result.kkt.intercept_residual;
    model.diagnostics.n_active_groups = result.n_active;
    model.diagnostics.converged = result.converged;
    return model;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

json model_to_json(const ModelFit& model) {
    json j;
    j["schema_version"] = ModelFit::kSchemaVersion;
    j["method"] = to_string(model.method);
    j["class_names"] = model.class_names;
    j["alpha"] = model.alpha;
    j["lambda"] = model.lambda;
    j["beta0"] = json::object();
    for (const auto& [id, theta] : model.beta0) j["beta0"][id] = theta;
    j["omega"] = json::object();
    for (std::size_t l = 0; l < model.omega.size(); ++l)
        j["omega"][std::string(model.meta_space.feature_name(l))] = model.omega[l];
    json scales;
    scales["variant"] = json::object();
    for (const auto& [id, s] : model.variant_scales) scales["variant"][id] = s;
    scales["meta"] = json::object();
    for (std::size_t l = 0; l < model.meta_scales.size(); ++l)
        if (model.meta_scales[l] > 0)
            scales["meta"][std::string(model.meta_space.feature_name(l))] = model.meta_scales[l];
    j["column_scales"] = scales;
    j["dropped_columns"] = model.dropped_columns;
    j["meta_space"] = {{"sbs_categories", model.meta_space.sbs_categories},
                       {"gene_roster", model.meta_space.gene_roster}};
    j["screening_roster"] = model.screening_roster;
    j["recorded_variants"] = model.recorded_variants;
    const auto& d = model.diagnostics;
    j["diagnostics"] = {{"iterations", d.iterations},
                        {"objective", finite_or_null(d.objective)},
                        {"kkt_active_residual", finite_or_null(d.kkt_active_residual)},
                        {"kkt_inactive_ratio", finite_or_null(d.kkt_inactive_ratio)},
                        {"kkt_intercept_residual", finite_or_null(d.kkt_intercept_residual)},
                        {"n_active_groups", d.n_active_groups},
                        {"converged", d.converged}};
    return j;
}

ModelFit model_from_json(const json& j) {
    try {
        if (j.at("schema_version").get<int>() != ModelFit::kSchemaVersion)
            throw FormatError("unsupported model schema_version");
        ModelFit model;
        const auto method = parse_method(j.at("method").get<std::string>());
        if (!method) throw FormatError("unknown model method");
        model.method = *method;
        model.class_names = j.at("class_names").get<std::vector<std::string>>();
        model.alpha = j.at("alpha").get<std::vector<double>>();
        model.lambda = j.at("lambda").get<double>();
        const auto K = model.class_names.size();
        if (model.alpha.size() != K) throw FormatError("alpha length differs from class count");
        model.meta_space.sbs_categories =
            j.at("meta_space").at("sbs_categories").get<std::vector<std::string>>();
        model.meta_space.gene_roster =
            j.at("meta_space").at("gene_roster").get<std::vector<std::string>>();
        const auto p = model.meta_space.p();
        for (const auto& [id, theta] : j.at("beta0").items()) {
            auto v = theta.get<std::vector<double>>();
            if (v.size() != K) throw FormatError("beta0 row '" + id + "' has wrong length");
            model.beta0[id] = std::move(v);
        }
        std::unordered_map<std::string, std::size_t> feature;
        for (std::size_t l = 0; l < p; ++l) feature.emplace(model.meta_space.feature_name(l), l);
        model.omega.assign(p, std::vector<double>(K, 0.0));
        for (const auto& [name, theta] : j.at("omega").items()) {
            const auto it = feature.find(name);
            if (it == feature.end()) throw FormatError("omega row '" + name + "' not in meta space");
            auto v = theta.get<std::vector<double>>();
            if (v.size() != K) throw FormatError("omega row '" + name + "' has wrong length");
            model.omega[it->second] = std::move(v);
        }
        for (const auto& [id, s] : j.at("column_scales").at("variant").items())
            model.variant_scales[id] = s.get<double>();
        model.meta_scales.assign(p, 0.0);
        for (const auto& [name, s] : j.at("column_scales").at("meta").items()) {
            const auto it = feature.find(name);
            if (it == feature.end()) throw FormatError("scale '" + name + "' not in meta space");
            model.meta_scales[it->second] = s.get<double>();
        }
        model.dropped_columns = j.at("dropped_columns").get<std::vector<std::string>>();
        model.screening_roster = j.at("screening_roster").get<std::vector<std::string>>();
        model.recorded_variants = j.at("recorded_variants").get<std::vector<std::string>>();
        if (!std::is_sorted(model.recorded_variants.begin(), model.recorded_variants.end()))
            throw FormatError("recorded_variants must be sorted");
        const auto& d = j.at("diagnostics");
        model.diagnostics.iterations = d.at("iterations").get<int>();
        model.diagnostics.objective = number_or_inf(d.at("objective"));
        model.diagnostics.kkt_active_residual = number_or_inf(d.at("kkt_active_residual"));
        model.diagnostics.kkt_inactive_ratio = number_or_inf(d.at("kkt_inactive_ratio"));
        model.diagnostics.kkt_intercept_residual = number_or_inf(d.at("kkt_intercept_residual"));
        model.diagnostics.n_active_groups = d.at("n_active_groups").get<std::size_t>();
        model.diagnostics.converged = d.at("converged").get<bool>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

void save_model(std::ostream& out, const ModelFit& model) { out << model_to_json(model).dump(1) << '\n'; }

ModelFit load_model(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace hgc
