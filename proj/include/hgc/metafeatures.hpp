#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgc/ingest.hpp"

namespace hgc {

inline constexpr std::size_t kSbsCount = 96;

/// Canonical name of an SBS-96 category, e.g. "A[C>T]G". Categories are
/// ordered by substitution class (C>A, C>G, C>T, T>A, T>C, T>G), then 5'
/// base, then 3' base, each in A,C,G,T order.
std::string sbs_name(std::size_t category);

/// Maps a single-base substitution in trinucleotide context to its SBS-96
/// category, reverse-complementing purine-reference mutations first.
/// Throws InputError for a malformed context, ref/context mismatch, or ref == alt.
std::size_t classify_sbs96(std::string_view tri_context, char ref, char alt);

/// Record overload: nullopt for anything that is not an SNV.
std::optional<std::size_t> classify_sbs96(const MutationRecord& record);

// The p meta-features: 96 SBS categories first, then genes in sorted order.
struct MetaFeatureSpace {
    std::vector<std::string> sbs_categories;
    std::vector<std::string> gene_roster;

    std::size_t p() const noexcept { return sbs_categories.size() + gene_roster.size(); }
    std::optional<std::size_t> gene_index(std::string_view gene) const;  // into gene_roster
    std::string_view feature_name(std::size_t l) const;
    bool is_sbs(std::size_t l) const noexcept { return l < sbs_categories.size(); }

    friend bool operator==(const MetaFeatureSpace&, const MetaFeatureSpace&) = default;
};

/// Builds the space for a gene roster; the roster is sorted and deduplicated.
MetaFeatureSpace make_meta_space(std::vector<std::string> genes);

/// One gene symbol per line; blank and '#' lines ignored.
std::vector<std::string> read_gene_roster(std::istream& in);

// u_j: at most one SBS feature and at most one gene feature per variant.
struct MetaRow {
    std::int32_t sbs = -1;   // feature index l in [0, 96)
    std::int32_t gene = -1;  // feature index l in [96, p)

    bool empty() const noexcept { return sbs < 0 && gene < 0; }
    friend bool operator==(const MetaRow&, const MetaRow&) = default;
};

struct MetaDesign {
    std::vector<std::string> variant_ids;
    std::vector<MetaRow> rows;
};

/// Meta rows for every variant column of the design. Throws DataError when a
/// variant has no originating record, or its records disagree on gene or
/// substitution.
MetaDesign build_meta_design(const VariantDesign& design, std::span<const MutationRecord> records,
                             const MetaFeatureSpace& space);

// n x p integer counts XU, row-major.
struct BurdenMatrix {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::int32_t> counts;

    std::int32_t operator()(std::size_t i, std::size_t l) const { return counts[i * p + l]; }
    std::span<const std::int32_t> row(std::size_t i) const { return {counts.data() + i * p, p}; }

    friend bool operator==(const BurdenMatrix&, const BurdenMatrix&) = default;
};

/// XU by streaming presence entries; U is never densified.
BurdenMatrix burden_matrix(const VariantDesign& design, const MetaDesign& meta, std::size_t p);

}  // namespace hgc
