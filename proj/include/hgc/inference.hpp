#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hgc/ingest.hpp"
#include "hgc/metafeatures.hpp"
#include "hgc/model.hpp"

namespace hgc {

struct PredictionSet {
    std::vector<std::string> tumor_ids;
    std::vector<std::string> class_names;
    std::vector<std::vector<double>> probabilities;  // per tumor, K entries
    std::vector<int> predicted;                      // argmax, lowest index on ties
    std::vector<std::size_t> n_unseen;               // variants absent from the training cohort

    std::size_t size() const noexcept { return tumor_ids.size(); }
};

int argmax_lowest(std::span<const double> values);

/// Scores the given rows of a design. Meta rows must come from the model's
/// own meta space. Residual effects apply to screened recorded variants;
/// every variant, seen or not, contributes through its meta-features.
PredictionSet predict(const ModelFit& model, const VariantDesign& design,
                      const CohortLabels& labels, const MetaDesign& meta,
                      std::span<const std::size_t> rows);

/// All rows of the design.
PredictionSet predict(const ModelFit& model, const VariantDesign& design,
                      const CohortLabels& labels, const MetaDesign& meta);

/// Linear predictor through the burden route: alpha + x beta0 + (x U) omega.
std::vector<double> linear_predictor_burden(const ModelFit& model, const VariantDesign& design,
                                            const MetaDesign& meta, std::size_t row);

/// Linear predictor through per-variant effects: alpha + x (beta0 + U omega).
std::vector<double> linear_predictor_variant(const ModelFit& model, const VariantDesign& design,
                                             const MetaDesign& meta, std::size_t row);

/// Per-variant total effect beta_j = beta0_j + u_j^T omega (K entries each).
std::vector<std::vector<double>> variant_effects(const ModelFit& model, const VariantDesign& design,
                                                 const MetaDesign& meta);

/// tumor_id, one probability column per class, predicted_class, n_unseen_variants
void write_predictions_csv(std::ostream& out, const PredictionSet& predictions);

struct OddsRatioRow {
    std::string predictor;
    PredictorKind kind = PredictorKind::variant;
    std::string class_name;
    double odds_ratio = 1.0;
};

/// Odds ratios for a one-standard-deviation change of each fitted predictor,
/// relative to the reference class: exp(s * (theta_k - theta_ref)).
std::vector<OddsRatioRow> odds_ratios(const ModelFit& model, int reference);

struct SignatureGroupSpec {
    std::string name;
    std::vector<double> weights;  // 96, canonical SBS order
};

/// TSV: "category" column then one weight column per group; rows may come in
/// any order but must cover all 96 categories exactly once.
std::vector<SignatureGroupSpec> read_signature_groups(std::istream& in);

/// Odds ratios for weighted SBS groups: coefficient v^T omega_SBS, scaled by
/// the standard deviation of the group burden (X U_SBS v) over `rows`.
std::vector<OddsRatioRow> aggregate_signature_groups(const ModelFit& model,
                                                     const BurdenMatrix& burden,
                                                     std::span<const std::size_t> rows,
                                                     std::span<const SignatureGroupSpec> groups,
                                                     int reference);

/// predictor, predictor_kind, class, odds_ratio
void write_odds_ratios(std::ostream& out, std::span<const OddsRatioRow> rows);

}  // namespace hgc
