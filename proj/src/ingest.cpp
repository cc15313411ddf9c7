#include "hgc/ingest.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "hgc/error.hpp"

namespace hgc {

namespace {

constexpr std::array<const char*, 7> kRequiredColumns = {
    "tumor_id", "cancer_type", "variant_id", "gene", "tri_context", "ref", "alt"};

enum Column { kTumor, kCancer, kVariant, kGene, kContext, kRef, kAlt };

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

bool is_allele(const std::string& s) {
    if (s.empty()) return false;
    if (s == "-") return true;
    return std::all_of(s.begin(), s.end(), [](char c) { return is_dna_base(c) || c == 'N'; });
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& line, const std::string& why) {
    std::ostringstream msg;
    msg << "line " << line_no << ": " << why << ": '" << line << "'";
    throw FormatError(msg.str());
}

void validate(const MutationRecord& r, std::size_t line_no, const std::string& line) {
    if (r.tumor_id.empty()) row_error(line_no, line, "empty tumor_id");
    if (!r.has_variant()) {
        if (!r.gene.empty() || !r.tri_context.empty() || !r.ref_allele.empty() ||
            !r.alt_allele.empty())
            row_error(line_no, line, "variant fields given without variant_id");
        return;
    }
    if (!is_allele(r.ref_allele) || !is_allele(r.alt_allele))
        row_error(line_no, line, "ref/alt must be uppercase DNA alleles");
    if (r.ref_allele == r.alt_allele) row_error(line_no, line, "ref equals alt");
    if (r.is_snv()) {
        const auto& ctx = r.tri_context;
        if (ctx.size() != 3 || !std::all_of(ctx.begin(), ctx.end(), is_dna_base))
            row_error(line_no, line, "tri_context must be three of A,C,G,T");
        if (ctx[1] != r.ref_allele[0])
            row_error(line_no, line, "tri_context middle base differs from ref");
    } else if (!r.tri_context.empty() && r.tri_context != ".") {
        const auto& ctx = r.tri_context;
        if (ctx.size() != 3 || !std::all_of(ctx.begin(), ctx.end(), is_dna_base))
            row_error(line_no, line, "tri_context must be empty, '.', or three bases");
    }
}

}  // namespace

bool is_dna_base(char c) noexcept { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

bool MutationRecord::is_snv() const noexcept {
    return ref_allele.size() == 1 && alt_allele.size() == 1 && is_dna_base(ref_allele[0]) &&
           is_dna_base(alt_allele[0]);
}

std::vector<MutationRecord> parse_mutations(std::istream& in) {
    std::vector<MutationRecord> records;
    std::array<std::size_t, kRequiredColumns.size()> pos{};
    bool have_header = false;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_tabs(line);
        if (!have_header) {
            for (std::size_t c = 0; c < kRequiredColumns.size(); ++c) {
                const auto it = std::find(fields.begin(), fields.end(), kRequiredColumns[c]);
                if (it == fields.end())
                    throw FormatError(std::string("missing required column '") +
                                      kRequiredColumns[c] + "'");
                pos[c] = static_cast<std::size_t>(it - fields.begin());
            }
            width = fields.size();
            have_header = true;
            continue;
        }
        if (fields.size() < width) row_error(line_no, line, "too few fields");
        MutationRecord r;
        r.tumor_id = fields[pos[kTumor]];
        if (!fields[pos[kCancer]].empty()) r.cancer_type = fields[pos[kCancer]];
        r.variant_id = fields[pos[kVariant]];
        r.gene = fields[pos[kGene]];
        r.tri_context = fields[pos[kContext]];
        r.ref_allele = fields[pos[kRef]];
        r.alt_allele = fields[pos[kAlt]];
        validate(r, line_no, line);
        records.push_back(std::move(r));
    }
    if (!have_header) throw FormatError("missing header row");
    return records;
}

void write_mutations(std::ostream& out, std::span<const MutationRecord> records) {
    out << "tumor_id\tcancer_type\tvariant_id\tgene\ttri_context\tref\talt\n";
    for (const auto& r : records) {
        out << r.tumor_id << '\t' << r.cancer_type.value_or("") << '\t' << r.variant_id << '\t'
            << r.gene << '\t' << r.tri_context << '\t' << r.ref_allele << '\t' << r.alt_allele
            << '\n';
    }
}

std::unordered_set<std::string> read_id_list(std::istream& in) {
    std::unordered_set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t");
        ids.insert(line.substr(first, last - first + 1));
    }
    return ids;
}

std::vector<std::size_t> VariantDesign::column_counts() const {
    std::vector<std::size_t> counts(d(), 0);
    for (auto c : cols) ++counts[c];
    return counts;
}

std::optional<int> CohortLabels::class_index(const std::string& name) const {
    const auto it = std::lower_bound(class_names.begin(), class_names.end(), name);
    if (it == class_names.end() || *it != name) return std::nullopt;
    return static_cast<int>(it - class_names.begin());
}

Cohort build_cohort(std::span<const MutationRecord> records,
                    const std::unordered_set<std::string>& test_tumor_ids) {
    // tumor -> cancer type seen so far (empty optional = none yet)
    std::unordered_map<std::string, std::optional<std::string>> tumor_type;
    std::unordered_set<std::string> train_variants;
    std::unordered_set<std::string> all_variants;
    for (const auto& r : records) {
        const bool is_test = test_tumor_ids.contains(r.tumor_id);
        auto [it, inserted] = tumor_type.try_emplace(r.tumor_id, r.cancer_type);
        if (!inserted && r.cancer_type) {
            if (it->second && *it->second != *r.cancer_type)
                throw DataError("tumor '" + r.tumor_id + "' has conflicting cancer types '" +
                                *it->second + "' and '" + *r.cancer_type + "'");
            it->second = r.cancer_type;
        }
        if (!r.has_variant()) continue;
        all_variants.insert(r.variant_id);
        if (!is_test) train_variants.insert(r.variant_id);
    }
    for (const auto& id : test_tumor_ids) {
        if (!tumor_type.contains(id))
            throw DataError("test tumor '" + id + "' has no records");
    }

    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    for (const auto& [id, type] : tumor_type) {
        if (test_tumor_ids.contains(id)) {
            test_ids.push_back(id);
        } else {
            if (!type) throw DataError("training tumor '" + id + "' lacks a cancer_type");
            train_ids.push_back(id);
        }
    }
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(test_ids.begin(), test_ids.end());

    Cohort cohort;
    auto& labels = cohort.labels;
    for (const auto& id : train_ids) labels.class_names.push_back(*tumor_type[id]);
    std::sort(labels.class_names.begin(), labels.class_names.end());
    labels.class_names.erase(std::unique(labels.class_names.begin(), labels.class_names.end()),
                             labels.class_names.end());

    labels.tumor_ids = train_ids;
    labels.tumor_ids.insert(labels.tumor_ids.end(), test_ids.begin(), test_ids.end());
    for (const auto& id : labels.tumor_ids) {
        const auto& type = tumor_type[id];
        labels.labels.push_back(type ? labels.class_index(*type) : std::nullopt);
    }

    auto& design = cohort.design;
    design.n_tumors = labels.tumor_ids.size();
    design.n_train = train_ids.size();
    design.variant_ids.assign(train_variants.begin(), train_variants.end());
    std::sort(design.variant_ids.begin(), design.variant_ids.end());
    design.d1 = design.variant_ids.size();
    std::vector<std::string> unseen;
    for (const auto& v : all_variants)
        if (!train_variants.contains(v)) unseen.push_back(v);
    std::sort(unseen.begin(), unseen.end());
    design.variant_ids.insert(design.variant_ids.end(), unseen.begin(), unseen.end());

    std::unordered_map<std::string, std::uint32_t> variant_index;
    variant_index.reserve(design.d());
    for (std::size_t j = 0; j < design.d(); ++j)
        variant_index.emplace(design.variant_ids[j], static_cast<std::uint32_t>(j));
    std::unordered_map<std::string, std::size_t> tumor_index;
    tumor_index.reserve(design.n_tumors);
    for (std::size_t i = 0; i < design.n_tumors; ++i) tumor_index.emplace(labels.tumor_ids[i], i);

    std::vector<std::vector<std::uint32_t>> rows(design.n_tumors);
    for (const auto& r : records) {
        if (!r.has_variant()) continue;
        rows[tumor_index.at(r.tumor_id)].push_back(variant_index.at(r.variant_id));
    }
    design.row_ptr.assign(1, 0);
    for (auto& row : rows) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        design.cols.insert(design.cols.end(), row.begin(), row.end());
        design.row_ptr.push_back(design.cols.size());
    }
    return cohort;
}

RecurrenceTable recurrence_table(const VariantDesign& design) {
    RecurrenceTable table;
    for (auto count : design.column_counts())
        if (count > 0) ++table[count];
    return table;
}

}  // namespace hgc
