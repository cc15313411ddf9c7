#include "hgc/pipeline.hpp"

#include <algorithm>

#include "hgc/error.hpp"

namespace hgc {

namespace {

std::vector<int> labels_for(const CohortLabels& labels, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto i : rows) {
        const auto& c = labels.labels.at(i);
        if (!c) throw DataError("training tumor '" + labels.tumor_ids[i] + "' has no label");
        out.push_back(*c);
    }
    return out;
}

}  // namespace

FitProblem build_fit_problem(const CohortData& data, std::span<const std::size_t> rows,
                             std::span<const std::uint32_t> variant_columns, Method method) {
    const auto row_labels = labels_for(data.labels, rows);
    std::vector<RawColumn> raw;

    if (method != Method::gene_only) {
        std::vector<std::int32_t> slot(data.design.d(), -1);
        for (std::size_t c = 0; c < variant_columns.size(); ++c) {
            slot[variant_columns[c]] = static_cast<std::int32_t>(c);
            raw.push_back({PredictorKind::variant, data.design.variant_ids[variant_columns[c]], {}});
        }
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (auto j : data.design.row(rows[r]))
                if (slot[j] >= 0) raw[static_cast<std::size_t>(slot[j])].entries.emplace_back(
                    static_cast<std::uint32_t>(r), 1.0);
    }

    if (method != Method::recorded_only) {
        const std::size_t first = method == Method::gene_only ? data.space.sbs_categories.size() : 0;
        const std::size_t base = raw.size();
        for (std::size_t l = first; l < data.space.p(); ++l)
            raw.push_back({data.space.is_sbs(l) ? PredictorKind::sbs : PredictorKind::gene,
                           std::string(data.space.feature_name(l)),
                           {}});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto counts = data.burden.row(rows[r]);
            for (std::size_t l = first; l < data.space.p(); ++l)
                if (counts[l] != 0)
                    raw[base + l - first].entries.emplace_back(static_cast<std::uint32_t>(r),
                                                               static_cast<double>(counts[l]));
        }
    }
    return FitProblem::from_columns(rows.size(), std::move(raw), row_labels, data.labels.class_names);
}

TrainedModel train_model(const CohortData& data, std::span<const std::size_t> rows,
                         const TrainOptions& options) {
    if (data.burden.n != data.design.n_tumors || data.burden.p != data.space.p())
        throw InputError("burden matrix does not match the cohort");
    const auto row_labels = labels_for(data.labels, rows);
    const int K = static_cast<int>(data.labels.n_classes());

    TrainedModel trained;
    std::vector<std::uint32_t> variant_columns;
    std::vector<std::string> roster;
    if (options.method != Method::gene_only) {
        trained.screening = screen_columns(data.design, rows, row_labels, K, options.nmi_top);
        variant_columns = trained.screening.retained_columns();
        for (const auto& e : trained.screening.entries)
            if (e.retained) roster.push_back(e.variant_id);
    }

    std::vector<char> seen(data.design.d(), 0);
    for (auto i : rows)
        for (auto j : data.design.row(i)) seen[j] = 1;
    std::vector<std::string> recorded;
    for (std::size_t j = 0; j < data.design.d(); ++j)
        if (seen[j]) recorded.push_back(data.design.variant_ids[j]);

    const auto problem = build_fit_problem(data, rows, variant_columns, options.method);

    FitResult chosen;
    if (options.fixed_lambda) {
        // descend from lambda_max so the final fit is warm-started
        const double top = lambda_max(problem);
        const double target = *options.fixed_lambda;
        if (target >= top || top <= 0) {
            chosen = fit(problem, target, options.cv.solver);
        } else {
            auto grid = lambda_grid(top, std::max<std::size_t>(options.cv.n_lambda, 2), target / top);
            chosen = fit_path(problem, grid, options.cv.solver).fits.back();
        }
    } else {
        trained.cv = cross_validate_lambda(problem, options.cv);
        chosen = trained.cv->full_path.fits[trained.cv->chosen_index];
    }
    trained.model = make_model_fit(problem, chosen, data.space, options.method, std::move(roster),
                                   std::move(recorded));
    return trained;
}

}  // namespace hgc
