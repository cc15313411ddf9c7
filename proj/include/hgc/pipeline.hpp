#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hgc/ingest.hpp"
#include "hgc/metafeatures.hpp"
#include "hgc/model.hpp"
#include "hgc/screening.hpp"
#include "hgc/solver.hpp"

namespace hgc {

// Everything a training run needs about one cohort. Rows index design/burden.
struct CohortData {
    const VariantDesign& design;
    const CohortLabels& labels;
    const MetaDesign& meta;
    const BurdenMatrix& burden;
    const MetaFeatureSpace& space;
};

struct TrainOptions {
    Method method = Method::multilevel;
    std::size_t nmi_top = kDefaultNmiTop;
    CvOptions cv;
    std::optional<double> fixed_lambda;  // skip cross-validation
};

struct TrainedModel {
    ModelFit model;
    NmiRanking screening;
    std::optional<CvResult> cv;
};

/// Raw predictor columns for `rows`: retained variant indicators and/or
/// burden columns, as the method prescribes.
FitProblem build_fit_problem(const CohortData& data, std::span<const std::size_t> rows,
                             std::span<const std::uint32_t> variant_columns, Method method);

/// Screens, scales, selects lambda, and fits using only `rows` of the cohort.
TrainedModel train_model(const CohortData& data, std::span<const std::size_t> rows,
                         const TrainOptions& options);

}  // namespace hgc
