#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hgc/error.hpp"
#include "hgc/metafeatures.hpp"
#include "support.hpp"

using namespace hgc;
using hgc::test::snv;

namespace {

char comp(char b) {
    switch (b) {
        case 'A': return 'T';
        case 'C': return 'G';
        case 'G': return 'C';
        default: return 'A';
    }
}

std::int32_t sbs_index(const std::string& name) {
    for (std::size_t t = 0; t < kSbsCount; ++t)
        if (sbs_name(t) == name) return static_cast<std::int32_t>(t);
    return -1;
}

}  // namespace

TEST_SUITE("metafeatures") {

TEST_CASE("pyrimidine and purine strands") {
    CHECK(sbs_name(classify_sbs96("ACA", 'C', 'T')) == "A[C>T]A");
    CHECK(sbs_name(classify_sbs96("TGT", 'G', 'A')) == "A[C>T]A");
    CHECK(sbs_name(0) == "A[C>A]A");
    CHECK(sbs_name(95) == "T[T>G]T");
}

TEST_CASE("all 192 substitutions hit each of 96 categories twice") {
    const std::string bases = "ACGT";
    const std::vector<std::pair<char, char>> subs{{'C', 'A'}, {'C', 'G'}, {'C', 'T'},
                                                  {'T', 'A'}, {'T', 'C'}, {'T', 'G'}};
    std::map<std::size_t, int> hits;
    for (char l : bases)
        for (auto [ref, alt] : subs)
            for (char r : bases) {
                const std::string ctx{l, ref, r};
                const std::string mirror{comp(r), comp(ref), comp(l)};
                const auto a = classify_sbs96(ctx, ref, alt);
                const auto b = classify_sbs96(mirror, comp(ref), comp(alt));
                CHECK(a == b);
                CHECK(sbs_name(a) == std::string{l} + "[" + ref + ">" + alt + "]" + r);
                ++hits[a];
                ++hits[b];
            }
    CHECK(hits.size() == 96);
    for (auto [cat, n] : hits) CHECK(n == 2);
}

TEST_CASE("malformed substitutions are input errors") {
    CHECK_THROWS_AS(classify_sbs96("AC", 'C', 'T'), InputError);
    CHECK_THROWS_AS(classify_sbs96("ANA", 'N', 'T'), InputError);
    CHECK_THROWS_AS(classify_sbs96("ACA", 'G', 'T'), InputError);
    CHECK_THROWS_AS(classify_sbs96("ACA", 'C', 'C'), InputError);
}

TEST_CASE("non-SNV records have no category") {
    auto r = snv("A", "v", "G", "", 'A', 'T');
    r.alt_allele = "-";
    CHECK_FALSE(classify_sbs96(r).has_value());
    CHECK(classify_sbs96(snv("A", "v", "G", "TGT", 'G', 'A')) == classify_sbs96("ACA", 'C', 'T'));
}

TEST_CASE("meta space sorts and deduplicates the roster") {
    const auto space = make_meta_space({"TP53", "KRAS", "TP53", "APC"});
    CHECK(space.gene_roster == std::vector<std::string>{"APC", "KRAS", "TP53"});
    CHECK(space.p() == 99);
    CHECK(space.feature_name(97) == "KRAS");
    CHECK(space.gene_index("TP53") == std::optional<std::size_t>(2));
    CHECK_FALSE(space.gene_index("BRAF").has_value());
    std::istringstream in("# panel\nKRAS\n\nAPC\n");
    CHECK(read_gene_roster(in) == std::vector<std::string>{"KRAS", "APC"});
}

TEST_CASE("five hand-built variants") {
    const auto space = make_meta_space({"APC", "KRAS"});
    auto indel = snv("t1", "v3", "KRAS", "", 'A', 'T', "X");
    indel.alt_allele = "-";
    auto offpanel_indel = snv("t2", "v4", "OFF1", "", 'C', 'A', "X");
    offpanel_indel.ref_allele = "CA";
    offpanel_indel.alt_allele = "C";
    const std::vector<MutationRecord> recs{
        snv("t1", "v1", "KRAS", "TGT", 'G', 'A', "X"),   // A[C>T]A + KRAS
        snv("t1", "v2", "OFF1", "ACG", 'C', 'G', "X"),   // A[C>G]G only
        indel,                                          // KRAS only
        offpanel_indel,                                 // nothing
        snv("t2", "v5", "APC", "GAA", 'A', 'C', "X"),    // T[T>G]C + APC
    };
    const auto design = build_cohort(recs, {}).design;
    const auto meta = build_meta_design(design, recs, space);
    REQUIRE(meta.variant_ids == std::vector<std::string>{"v1", "v2", "v3", "v4", "v5"});
    CHECK(meta.rows[0] == MetaRow{sbs_index("A[C>T]A"), 97});
    CHECK(meta.rows[1] == MetaRow{sbs_index("A[C>G]G"), -1});
    CHECK(meta.rows[2] == MetaRow{-1, 97});
    CHECK(meta.rows[3].empty());
    CHECK(meta.rows[4] == MetaRow{sbs_index("T[T>G]C"), 96});
}

TEST_CASE("conflicting annotations are data errors") {
    const auto space = make_meta_space({"APC", "KRAS"});
    const std::vector<MutationRecord> recs{snv("t1", "v1", "KRAS", "ACA", 'C', 'T', "X"),
                                           snv("t2", "v1", "APC", "ACA", 'C', 'T', "X")};
    const auto design = build_cohort(recs, {}).design;
    try {
        build_meta_design(design, recs, space);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find("KRAS") != std::string::npos);
        CHECK(what.find("APC") != std::string::npos);
    }
}

TEST_CASE("burden counts mutations per gene") {
    const auto space = make_meta_space({"G"});
    MutationRecord empty;
    empty.tumor_id = "t2";
    empty.cancer_type = "X";
    const std::vector<MutationRecord> recs{
        snv("t1", "a", "G", "ACA", 'C', 'T', "X"), snv("t1", "b", "G", "ACA", 'C', 'A', "X"),
        snv("t1", "c", "G", "ACA", 'C', 'G', "X"), snv("t1", "d", "H", "ACA", 'C', 'T', "X"),
        empty};
    const auto design = build_cohort(recs, {}).design;
    const auto meta = build_meta_design(design, recs, space);
    const auto burden = burden_matrix(design, meta, space.p());
    CHECK(burden(0, 96) == 3);
    CHECK(burden(0, static_cast<std::size_t>(sbs_index("A[C>T]A"))) == 2);
    for (auto v : burden.row(1)) CHECK(v == 0);
}

TEST_CASE("streamed burden equals the dense product") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 20 + rep, d = 30 + rep, p = 10;
        std::bernoulli_distribution present(0.2);
        std::uniform_int_distribution<int> pick(-1, static_cast<int>(p) - 1);
        VariantDesign design;
        design.n_tumors = n;
        design.n_train = n;
        design.d1 = d;
        for (std::size_t j = 0; j < d; ++j) design.variant_ids.push_back("v" + std::to_string(j));
        std::vector<std::vector<int>> x(n, std::vector<int>(d, 0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                if (present(rng)) {
                    x[i][j] = 1;
                    design.cols.push_back(static_cast<std::uint32_t>(j));
                }
            design.row_ptr.push_back(design.cols.size());
        }
        MetaDesign meta;
        meta.variant_ids = design.variant_ids;
        std::vector<std::vector<int>> u(d, std::vector<int>(p, 0));
        for (std::size_t j = 0; j < d; ++j) {
            MetaRow row;
            const int a = pick(rng) % 5;  // "sbs" half: 0..4
            const int b = pick(rng);
            if (a >= 0) row.sbs = a;
            if (b >= 5) row.gene = b;
            if (row.sbs >= 0) u[j][static_cast<std::size_t>(row.sbs)] = 1;
            if (row.gene >= 0) u[j][static_cast<std::size_t>(row.gene)] = 1;
            meta.rows.push_back(row);
        }
        const auto burden = burden_matrix(design, meta, p);
        std::vector<std::int64_t> colsum(p, 0), occurrences(p, 0);
        for (std::size_t i = 0; i < n; ++i) {
            long row_total = 0;
            for (std::size_t l = 0; l < p; ++l) {
                int dense = 0;
                for (std::size_t j = 0; j < d; ++j) dense += x[i][j] * u[j][l];
                CHECK(burden(i, l) == dense);
                colsum[l] += burden(i, l);
                row_total += burden(i, l);
            }
            CHECK(row_total <= 2 * static_cast<long>(design.row(i).size()));
            for (auto j : design.row(i))
                for (std::size_t l = 0; l < p; ++l) occurrences[l] += u[j][l];
        }
        CHECK(colsum == occurrences);
    }
}

}
