#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace hgc {

// One somatic mutation observed in one tumor.
//
// ref/alt are single bases for SNVs. Indels and multi-nucleotide variants are
// accepted with longer (or "-") alleles; they carry no substitution context.
// A row with an empty variant_id registers a tumor that has no mutations.
struct MutationRecord {
    std::string tumor_id;
    std::string variant_id;
    std::string gene;
    std::string tri_context;
    std::string ref_allele;
    std::string alt_allele;
    std::optional<std::string> cancer_type;

    bool has_variant() const noexcept { return !variant_id.empty(); }
    bool is_snv() const noexcept;
};

bool is_dna_base(char c) noexcept;

/// Parses a tab-separated mutation table. Columns are located by header name;
/// '#' lines and blank lines are skipped. Throws FormatError on a missing
/// column or an invalid row (the message carries the 1-based line number).
std::vector<MutationRecord> parse_mutations(std::istream& in);

/// Writes records in the format parse_mutations reads.
void write_mutations(std::ostream& out, std::span<const MutationRecord> records);

/// Reads a plain list of tumor ids, one per line ('#' comments allowed).
std::unordered_set<std::string> read_id_list(std::istream& in);

// Sparse binary tumor x variant presence matrix in compressed-row form.
// Rows 0..n_train-1 are training tumors; columns 0..d1-1 are variants seen in
// at least one training tumor, the rest appear only in test tumors.
struct VariantDesign {
    std::size_t n_tumors = 0;
    std::size_t n_train = 0;
    std::size_t d1 = 0;
    std::vector<std::string> variant_ids;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> cols;  // sorted within each row

    std::size_t d() const noexcept { return variant_ids.size(); }
    std::size_t nnz() const noexcept { return cols.size(); }
    std::span<const std::uint32_t> row(std::size_t i) const {
        return {cols.data() + row_ptr[i], cols.data() + row_ptr[i + 1]};
    }
    /// Number of tumors carrying each variant.
    std::vector<std::size_t> column_counts() const;

    friend bool operator==(const VariantDesign&, const VariantDesign&) = default;
};

struct CohortLabels {
    std::vector<std::string> tumor_ids;
    std::vector<std::string> class_names;
    std::vector<std::optional<int>> labels;  // 0-based class index

    std::size_t n_classes() const noexcept { return class_names.size(); }
    std::optional<int> class_index(const std::string& name) const;

    friend bool operator==(const CohortLabels&, const CohortLabels&) = default;
};

struct Cohort {
    VariantDesign design;
    CohortLabels labels;
};

/// Assembles training and test tumors into a sparse design. Training tumors
/// (all tumors not named in test_tumor_ids) come first, each block sorted by
/// tumor id; variant columns are ordered training-observed first, then
/// test-only, each block lexicographic. Class names are the sorted distinct
/// training cancer types. Test tumors keep a label when their record carries
/// a known cancer type.
Cohort build_cohort(std::span<const MutationRecord> records,
                    const std::unordered_set<std::string>& test_tumor_ids);

// r -> number of variants present in exactly r tumors (N_r), zero counts omitted.
using RecurrenceTable = std::map<std::size_t, std::size_t>;

RecurrenceTable recurrence_table(const VariantDesign& design);

}  // namespace hgc
