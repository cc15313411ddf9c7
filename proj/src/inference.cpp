#include "hgc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "hgc/error.hpp"

namespace hgc {

namespace {

void check_meta(const ModelFit& model, const VariantDesign& design, const MetaDesign& meta) {
    if (meta.rows.size() != design.d())
        throw InputError("meta design does not cover the design's variants");
    const auto p = static_cast<std::int32_t>(model.meta_space.p());
    for (const auto& u : meta.rows)
        if (u.sbs >= p || u.gene >= p) throw InputError("meta row outside the model's meta space");
}

const std::vector<double>* residual_of(const ModelFit& model, const std::string& variant_id) {
    const auto it = model.beta0.find(variant_id);
    return it == model.beta0.end() ? nullptr : &it->second;
}

}  // namespace

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

std::vector<double> linear_predictor_burden(const ModelFit& model, const VariantDesign& design,
                                            const MetaDesign& meta, std::size_t row) {
    const auto K = model.n_classes();
    std::vector<double> eta = model.alpha;
    std::vector<std::int32_t> counts(model.meta_space.p(), 0);
    for (auto j : design.row(row)) {
        if (const auto* b = residual_of(model, design.variant_ids[j]))
            for (std::size_t k = 0; k < K; ++k) eta[k] += (*b)[k];
        const auto& u = meta.rows[j];
        if (u.sbs >= 0) ++counts[static_cast<std::size_t>(u.sbs)];
        if (u.gene >= 0) ++counts[static_cast<std::size_t>(u.gene)];
    }
    for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] == 0) continue;
        for (std::size_t k = 0; k < K; ++k) eta[k] += counts[l] * model.omega[l][k];
    }
    return eta;
}

std::vector<std::vector<double>> variant_effects(const ModelFit& model, const VariantDesign& design,
                                                 const MetaDesign& meta) {
    check_meta(model, design, meta);
    const auto K = model.n_classes();
    std::vector<std::vector<double>> effects(design.d(), std::vector<double>(K, 0.0));
    for (std::size_t j = 0; j < design.d(); ++j) {
        auto& e = effects[j];
        if (const auto* b = residual_of(model, design.variant_ids[j])) e = *b;
        const auto& u = meta.rows[j];
        for (auto l : {u.sbs, u.gene})
            if (l >= 0)
                for (std::size_t k = 0; k < K; ++k) e[k] += model.omega[static_cast<std::size_t>(l)][k];
    }
    return effects;
}

std::vector<double> linear_predictor_variant(const ModelFit& model, const VariantDesign& design,
                                             const MetaDesign& meta, std::size_t row) {
    const auto effects = variant_effects(model, design, meta);
    std::vector<double> eta = model.alpha;
    for (auto j : design.row(row))
        for (std::size_t k = 0; k < eta.size(); ++k) eta[k] += effects[j][k];
    return eta;
}

PredictionSet predict(const ModelFit& model, const VariantDesign& design,
                      const CohortLabels& labels, const MetaDesign& meta,
                      std::span<const std::size_t> rows) {
    check_meta(model, design, meta);
    std::vector<char> unseen(design.d());
    for (std::size_t j = 0; j < design.d(); ++j) unseen[j] = !model.is_recorded(design.variant_ids[j]);

    PredictionSet out;
    out.class_names = model.class_names;
    for (auto i : rows) {
        const auto eta = linear_predictor_burden(model, design, meta, i);
        auto probs = softmax_probs(eta);
        out.tumor_ids.push_back(labels.tumor_ids.at(i));
        out.predicted.push_back(argmax_lowest(probs));
        out.probabilities.push_back(std::move(probs));
        std::size_t count = 0;
        for (auto j : design.row(i)) count += unseen[j] ? 1 : 0;
        out.n_unseen.push_back(count);
    }
    return out;
}

PredictionSet predict(const ModelFit& model, const VariantDesign& design,
                      const CohortLabels& labels, const MetaDesign& meta) {
    std::vector<std::size_t> rows(design.n_tumors);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return predict(model, design, labels, meta, rows);
}

void write_predictions_csv(std::ostream& out, const PredictionSet& predictions) {
    out << "tumor_id";
    for (const auto& c : predictions.class_names) out << ',' << c;
    out << ",predicted_class,n_unseen_variants\n";
    out << std::setprecision(12);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out << predictions.tumor_ids[i];
        for (double p : predictions.probabilities[i]) out << ',' << p;
        out << ',' << predictions.class_names[static_cast<std::size_t>(predictions.predicted[i])]
            << ',' << predictions.n_unseen[i] << '\n';
    }
}

namespace {

void append_rows(std::vector<OddsRatioRow>& out, const ModelFit& model, const std::string& name,
                 PredictorKind kind, const std::vector<double>& theta, double scale, int reference) {
    const auto ref = static_cast<std::size_t>(reference);
    for (std::size_t k = 0; k < model.n_classes(); ++k) {
        const double log_or = k == ref ? 0.0 : scale * (theta[k] - theta[ref]);
        out.push_back({name, kind, model.class_names[k], std::exp(log_or)});
    }
}

void check_reference(const ModelFit& model, int reference) {
    if (reference < 0 || static_cast<std::size_t>(reference) >= model.n_classes())
        throw InputError("reference class out of range");
}

}  // namespace

std::vector<OddsRatioRow> odds_ratios(const ModelFit& model, int reference) {
    check_reference(model, reference);
    std::vector<OddsRatioRow> out;
    const std::vector<double> zero(model.n_classes(), 0.0);
    for (const auto& [id, scale] : model.variant_scales) {
        const auto it = model.beta0.find(id);
        append_rows(out, model, id, PredictorKind::variant, it == model.beta0.end() ? zero : it->second,
                    scale, reference);
    }
    for (std::size_t l = 0; l < model.meta_space.p(); ++l) {
        if (!(model.meta_scales[l] > 0)) continue;
        append_rows(out, model, std::string(model.meta_space.feature_name(l)),
                    model.meta_space.is_sbs(l) ? PredictorKind::sbs : PredictorKind::gene,
                    model.omega[l], model.meta_scales[l], reference);
    }
    return out;
}

std::vector<SignatureGroupSpec> read_signature_groups(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    std::unordered_map<std::string, std::size_t> category_index;
    for (std::size_t t = 0; t < kSbsCount; ++t) category_index.emplace(sbs_name(t), t);
    std::vector<SignatureGroupSpec> groups;
    std::vector<char> seen(kSbsCount, 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
        if (header.empty()) {
            header = fields;
            if (header.size() < 2 || header[0] != "category")
                throw ConfigError("signature groups: header must be 'category' then group names");
            for (std::size_t g = 1; g < header.size(); ++g)
                groups.push_back({header[g], std::vector<double>(kSbsCount, 0.0)});
            continue;
        }
        if (fields.size() != header.size())
            throw ConfigError("signature groups: row '" + line + "' has wrong width");
        const auto it = category_index.find(fields[0]);
        if (it == category_index.end())
            throw ConfigError("signature groups: unknown category '" + fields[0] + "'");
        if (seen[it->second]) throw ConfigError("signature groups: duplicate category " + fields[0]);
        seen[it->second] = 1;
        ++rows;
        for (std::size_t g = 1; g < fields.size(); ++g) {
            double w = 0.0;
            try {
                std::size_t used = 0;
                w = std::stod(fields[g], &used);
                if (used != fields[g].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ConfigError("signature groups: bad weight '" + fields[g] + "'");
            }
            if (!std::isfinite(w)) throw ConfigError("signature groups: non-finite weight");
            groups[g - 1].weights[it->second] = w;
        }
    }
    if (header.empty()) throw ConfigError("signature groups: empty file");
    if (rows != kSbsCount)
        throw ConfigError("signature groups: expected 96 category rows, found " + std::to_string(rows));
    return groups;
}

std::vector<OddsRatioRow> aggregate_signature_groups(const ModelFit& model,
                                                     const BurdenMatrix& burden,
                                                     std::span<const std::size_t> rows,
                                                     std::span<const SignatureGroupSpec> groups,
                                                     int reference) {
    check_reference(model, reference);
    const auto K = model.n_classes();
    if (burden.p != model.meta_space.p()) throw InputError("burden matrix does not match meta space");
    std::vector<OddsRatioRow> out;
    for (const auto& group : groups) {
        if (group.weights.size() != kSbsCount)
            throw ConfigError("signature group '" + group.name + "' needs 96 weights");
        std::vector<double> coef(K, 0.0);
        for (std::size_t t = 0; t < kSbsCount; ++t)
            for (std::size_t k = 0; k < K; ++k) coef[k] += group.weights[t] * model.omega[t][k];
        RawColumn column;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            double v = 0.0;
            for (std::size_t t = 0; t < kSbsCount; ++t) v += burden(rows[r], t) * group.weights[t];
            if (v != 0.0) column.entries.emplace_back(static_cast<std::uint32_t>(r), v);
        }
        const double scale = column_sd(rows.size(), column.entries);
        append_rows(out, model, group.name, PredictorKind::signature_group, coef, scale, reference);
    }
    return out;
}

void write_odds_ratios(std::ostream& out, std::span<const OddsRatioRow> rows) {
    out << "predictor\tpredictor_kind\tclass\todds_ratio\n";
    out << std::setprecision(12);
    for (const auto& r : rows)
        out << r.predictor << '\t' << to_string(r.kind) << '\t' << r.class_name << '\t'
            << r.odds_ratio << '\n';
}

}  // namespace hgc
