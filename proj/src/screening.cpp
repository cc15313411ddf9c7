#include "hgc/screening.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "hgc/error.hpp"

namespace hgc {

namespace {

double entropy_term(double count, double total) {
    if (count <= 0.0) return 0.0;
    const double q = count / total;
    return -q * std::log(q);
}

}  // namespace

double nmi_from_counts(std::span<const std::size_t> ones_per_class,
                       std::span<const std::size_t> class_sizes) {
    double m = 0.0;
    double ones = 0.0;
    for (std::size_t k = 0; k < class_sizes.size(); ++k) {
        m += static_cast<double>(class_sizes[k]);
        ones += static_cast<double>(ones_per_class[k]);
    }
    if (m <= 0.0) return 0.0;
    const double zeros = m - ones;
    const double h_x = entropy_term(ones, m) + entropy_term(zeros, m);
    double h_c = 0.0;
    for (auto size : class_sizes) h_c += entropy_term(static_cast<double>(size), m);
    if (h_x <= 0.0 || h_c <= 0.0) return 0.0;

    // I = H(X) + H(C) - H(X,C)
    double h_joint = 0.0;
    for (std::size_t k = 0; k < class_sizes.size(); ++k) {
        const double n1 = static_cast<double>(ones_per_class[k]);
        const double n0 = static_cast<double>(class_sizes[k]) - n1;
        h_joint += entropy_term(n1, m) + entropy_term(n0, m);
    }
    const double info = h_x + h_c - h_joint;
    return std::clamp(info / std::sqrt(h_x * h_c), 0.0, 1.0);
}

double nmi(std::span<const std::uint8_t> x, std::span<const int> labels, int n_classes) {
    if (x.size() != labels.size()) throw InputError("nmi: length mismatch");
    if (x.empty()) throw InputError("nmi: empty input");
    std::vector<std::size_t> ones(static_cast<std::size_t>(n_classes), 0);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes) throw InputError("nmi: label out of range");
        ++sizes[labels[i]];
        if (x[i]) ++ones[labels[i]];
    }
    return nmi_from_counts(ones, sizes);
}

std::vector<std::uint32_t> NmiRanking::retained_columns() const {
    std::vector<std::uint32_t> cols;
    for (const auto& e : entries)
        if (e.retained) cols.push_back(e.column);
    std::sort(cols.begin(), cols.end());
    return cols;
}

NmiRanking screen_columns(const VariantDesign& design, std::span<const std::size_t> rows,
                          std::span<const int> row_labels, int n_classes, std::size_t top) {
    if (top < 1) throw ConfigError("screening size must be at least 1");
    if (rows.size() != row_labels.size()) throw InputError("screening: rows/labels mismatch");
    const auto K = static_cast<std::size_t>(n_classes);
    std::vector<std::size_t> class_sizes(K, 0);
    // ones[j * K + k]
    std::vector<std::size_t> ones(design.d() * K, 0);
    std::vector<std::uint8_t> seen(design.d(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto k = static_cast<std::size_t>(row_labels[r]);
        ++class_sizes[k];
        for (auto j : design.row(rows[r])) {
            ++ones[j * K + k];
            seen[j] = 1;
        }
    }

    NmiRanking ranking;
    ranking.top = top;
    for (std::uint32_t j = 0; j < design.d(); ++j) {
        if (!seen[j]) continue;
        NmiEntry e;
        e.variant_id = design.variant_ids[j];
        e.column = j;
        e.score = nmi_from_counts({ones.data() + j * K, K}, class_sizes);
        ranking.entries.push_back(std::move(e));
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const NmiEntry& a, const NmiEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.variant_id < b.variant_id;
              });
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
        ranking.entries[r].rank = r + 1;
        ranking.entries[r].retained = r + 1 < top;
    }
    return ranking;
}

NmiRanking screen_variants(const VariantDesign& design, const CohortLabels& labels,
                           std::size_t top) {
    std::vector<std::size_t> rows(design.n_train);
    std::vector<int> row_labels(design.n_train);
    for (std::size_t i = 0; i < design.n_train; ++i) {
        rows[i] = i;
        if (!labels.labels[i]) throw DataError("training tumor without label");
        row_labels[i] = *labels.labels[i];
    }
    return screen_columns(design, rows, row_labels, static_cast<int>(labels.n_classes()), top);
}

void write_screening_report(std::ostream& out, const NmiRanking& ranking) {
    out << "variant_id\tnmi\trank\tretained\n";
    out << std::setprecision(10);
    for (const auto& e : ranking.entries)
        out << e.variant_id << '\t' << e.score << '\t' << e.rank << '\t'
            << (e.retained ? "true" : "false") << '\n';
}

}  // namespace hgc
