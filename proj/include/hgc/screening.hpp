#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hgc/ingest.hpp"

namespace hgc {

/// Plug-in normalized mutual information I(X;C) / sqrt(H(X) H(C)) between a
/// binary presence vector and class labels (0-based, < n_classes), natural log.
/// Zero when either marginal entropy vanishes.
double nmi(std::span<const std::uint8_t> x, std::span<const int> labels, int n_classes);

/// Same score from a contingency summary: ones_per_class[k] = #{x=1, c=k},
/// class_sizes[k] = #{c=k}.
double nmi_from_counts(std::span<const std::size_t> ones_per_class,
                       std::span<const std::size_t> class_sizes);

struct NmiEntry {
    std::string variant_id;
    std::uint32_t column = 0;
    double score = 0.0;
    std::size_t rank = 0;  // 1 = highest; ties ordered by variant_id
    bool retained = false;
};

// Entries are in rank order.
struct NmiRanking {
    std::vector<NmiEntry> entries;
    std::size_t top = 0;

    /// Design columns of retained variants, ascending column order.
    std::vector<std::uint32_t> retained_columns() const;
};

inline constexpr std::size_t kDefaultNmiTop = 250;

/// Scores every variant present in at least one of `rows`, using those rows'
/// labels, and retains the variants with rank < top.
NmiRanking screen_columns(const VariantDesign& design, std::span<const std::size_t> rows,
                          std::span<const int> row_labels, int n_classes, std::size_t top);

/// Screening over the training block (first n_train rows, first d1 columns).
NmiRanking screen_variants(const VariantDesign& design, const CohortLabels& labels,
                           std::size_t top);

/// variant_id, nmi, rank, retained
void write_screening_report(std::ostream& out, const NmiRanking& ranking);

}  // namespace hgc
