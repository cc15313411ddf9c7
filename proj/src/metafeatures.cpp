#include "hgc/metafeatures.hpp"

#include <algorithm>
#include <istream>
#include <unordered_map>

#include "hgc/error.hpp"

namespace hgc {

namespace {

constexpr char kBases[] = {'A', 'C', 'G', 'T'};

int base_code(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: return -1;
    }
}

char complement(char c) {
    switch (c) {
        case 'A': return 'T';
        case 'C': return 'G';
        case 'G': return 'C';
        case 'T': return 'A';
        default: return 'N';
    }
}

// Substitution class index on the pyrimidine strand; -1 if not a valid pair.
int substitution_class(char ref, char alt) {
    if (ref == 'C') {
        if (alt == 'A') return 0;
        if (alt == 'G') return 1;
        if (alt == 'T') return 2;
    } else if (ref == 'T') {
        if (alt == 'A') return 3;
        if (alt == 'C') return 4;
        if (alt == 'G') return 5;
    }
    return -1;
}

}  // namespace

std::string sbs_name(std::size_t category) {
    static constexpr const char* kClasses[] = {"C>A", "C>G", "C>T", "T>A", "T>C", "T>G"};
    if (category >= kSbsCount) throw InputError("SBS category out of range");
    std::string name;
    name += kBases[(category / 4) % 4];
    name += '[';
    name += kClasses[category / 16];
    name += ']';
    name += kBases[category % 4];
    return name;
}

std::size_t classify_sbs96(std::string_view tri_context, char ref, char alt) {
    if (tri_context.size() != 3 || base_code(tri_context[0]) < 0 ||
        base_code(tri_context[1]) < 0 || base_code(tri_context[2]) < 0)
        throw InputError("malformed trinucleotide context '" + std::string(tri_context) + "'");
    if (base_code(ref) < 0 || base_code(alt) < 0 || ref == alt)
        throw InputError("invalid substitution " + std::string(1, ref) + ">" + std::string(1, alt));
    if (tri_context[1] != ref)
        throw InputError("context '" + std::string(tri_context) + "' does not match ref " +
                         std::string(1, ref));
    char five = tri_context[0];
    char three = tri_context[2];
    if (ref == 'A' || ref == 'G') {
        const char new_five = complement(three);
        three = complement(five);
        five = new_five;
        ref = complement(ref);
        alt = complement(alt);
    }
    const int sub = substitution_class(ref, alt);
    return static_cast<std::size_t>(sub * 16 + base_code(five) * 4 + base_code(three));
}

std::optional<std::size_t> classify_sbs96(const MutationRecord& record) {
    if (!record.has_variant() || !record.is_snv()) return std::nullopt;
    return classify_sbs96(record.tri_context, record.ref_allele[0], record.alt_allele[0]);
}

std::optional<std::size_t> MetaFeatureSpace::gene_index(std::string_view gene) const {
    const auto it = std::lower_bound(gene_roster.begin(), gene_roster.end(), gene);
    if (it == gene_roster.end() || *it != gene) return std::nullopt;
    return static_cast<std::size_t>(it - gene_roster.begin());
}

std::string_view MetaFeatureSpace::feature_name(std::size_t l) const {
    if (l < sbs_categories.size()) return sbs_categories[l];
    return gene_roster.at(l - sbs_categories.size());
}

MetaFeatureSpace make_meta_space(std::vector<std::string> genes) {
    MetaFeatureSpace space;
    space.sbs_categories.reserve(kSbsCount);
    for (std::size_t t = 0; t < kSbsCount; ++t) space.sbs_categories.push_back(sbs_name(t));
    std::sort(genes.begin(), genes.end());
    genes.erase(std::unique(genes.begin(), genes.end()), genes.end());
    genes.erase(std::remove(genes.begin(), genes.end(), std::string()), genes.end());
    space.gene_roster = std::move(genes);
    return space;
}

std::vector<std::string> read_gene_roster(std::istream& in) {
    std::vector<std::string> genes;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t");
        genes.push_back(line.substr(first, last - first + 1));
    }
    return genes;
}

MetaDesign build_meta_design(const VariantDesign& design, std::span<const MutationRecord> records,
                             const MetaFeatureSpace& space) {
    struct Annotation {
        const MutationRecord* first = nullptr;
        std::optional<std::size_t> sbs;
    };
    std::unordered_map<std::string_view, Annotation> annotations;
    annotations.reserve(design.d());
    for (const auto& r : records) {
        if (!r.has_variant()) continue;
        const auto sbs = classify_sbs96(r);
        auto [it, inserted] = annotations.try_emplace(r.variant_id, Annotation{&r, sbs});
        if (inserted) continue;
        const auto& seen = *it->second.first;
        if (seen.gene != r.gene)
            throw DataError("variant '" + r.variant_id + "' annotated with genes '" + seen.gene +
                            "' and '" + r.gene + "'");
        if (it->second.sbs != sbs)
            throw DataError("variant '" + r.variant_id + "' has conflicting substitutions");
    }

    MetaDesign meta;
    meta.variant_ids = design.variant_ids;
    meta.rows.resize(design.d());
    const auto n_sbs = static_cast<std::int32_t>(space.sbs_categories.size());
    for (std::size_t j = 0; j < design.d(); ++j) {
        const auto it = annotations.find(design.variant_ids[j]);
        if (it == annotations.end())
            throw DataError("variant '" + design.variant_ids[j] + "' has no originating record");
        MetaRow row;
        if (it->second.sbs) row.sbs = static_cast<std::int32_t>(*it->second.sbs);
        if (const auto g = space.gene_index(it->second.first->gene))
            row.gene = n_sbs + static_cast<std::int32_t>(*g);
        meta.rows[j] = row;
    }
    return meta;
}

BurdenMatrix burden_matrix(const VariantDesign& design, const MetaDesign& meta, std::size_t p) {
    if (meta.rows.size() != design.d())
        throw InputError("meta design does not cover every variant column");
    BurdenMatrix burden;
    burden.n = design.n_tumors;
    burden.p = p;
    burden.counts.assign(burden.n * p, 0);
    for (std::size_t i = 0; i < design.n_tumors; ++i) {
        auto* out = burden.counts.data() + i * p;
        for (auto j : design.row(i)) {
            const auto& u = meta.rows[j];
            if (u.sbs >= 0) ++out[u.sbs];
            if (u.gene >= 0) ++out[u.gene];
        }
    }
    return burden;
}

}  // namespace hgc
