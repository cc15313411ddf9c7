#include "hgc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "hgc/error.hpp"
#include "hgc/random.hpp"
#include "hgc/solver.hpp"

namespace hgc {

namespace {

constexpr char kBases[] = "ACGT";

char complement(char b) {
    switch (b) {
        case 'A': return 'T';
        case 'C': return 'G';
        case 'G': return 'C';
        default: return 'A';
    }
}

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

void check_fraction(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

// c such that sum_r min(cap, c r^-a) over ranks 1..m equals target.
double zipf_constant(std::size_t m, double a, double cap, double target) {
    auto total = [&](double c) {
        double s = 0.0;
        for (std::size_t r = 1; r <= m; ++r) s += std::min(cap, c * std::pow(double(r), -a));
        return s;
    };
    if (total(1e12) <= target) return 1e12;  // every variant at the cap
    double lo = 0.0, hi = 1.0;
    while (total(hi) < target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void SimConfig::validate() const {
    if (n_classes < 2) throw ConfigError("simulate: need at least 2 classes");
    if (n_train < 1 || d1 < 1 || p_genes < 1)
        throw ConfigError("simulate: n_train, d1 and p_genes must be positive");
    if (d2 > 0 && n_test < 1) throw ConfigError("simulate: unseen variants need test tumors");
    if (!(mutation_rate > 0)) throw ConfigError("simulate: mutation_rate must be positive");
    if (!(tau >= 0) || !(xi >= 0)) throw ConfigError("simulate: tau and xi must be nonnegative");
    if (!(zipf_exponent >= 0)) throw ConfigError("simulate: zipf_exponent must be nonnegative");
    if (!(max_frequency > 0 && max_frequency <= 1))
        throw ConfigError("simulate: max_frequency must lie in (0, 1]");
    check_fraction(omega_zero_fraction, "omega_zero_fraction");
    check_fraction(beta0_zero_fraction, "beta0_zero_fraction");
    check_fraction(off_panel_fraction, "off_panel_fraction");
    check_fraction(indel_fraction, "indel_fraction");
}

void SimTruth::refresh_beta() {
    beta = beta0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        for (auto l : {u[j].sbs, u[j].gene})
            if (l >= 0)
                for (std::size_t k = 0; k < beta[j].size(); ++k)
                    beta[j][k] += omega[static_cast<std::size_t>(l)][k];
}

SimTruth generate_truth(const SimConfig& config) {
    config.validate();
    const auto K = static_cast<std::size_t>(config.n_classes);
    const std::size_t d = config.d1 + config.d2;
    std::mt19937_64 rng(derive_seed(config.seed, {0u}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SimTruth truth;
    truth.config = config;
    for (std::size_t k = 0; k < K; ++k) truth.class_names.push_back("C" + std::to_string(k + 1));
    std::vector<std::string> roster;
    for (std::size_t g = 0; g < config.p_genes; ++g) roster.push_back(numbered("G", g + 1, 4));
    truth.space = make_meta_space(roster);
    const std::size_t n_off = std::max<std::size_t>(1, config.p_genes / 4);
    truth.alpha.assign(K, 0.0);

    truth.omega.assign(truth.space.p(), std::vector<double>(K, 0.0));
    for (auto& row : truth.omega) {
        const bool zero = unif(rng) < config.omega_zero_fraction;
        for (auto& w : row) w = config.xi * normal(rng);
        if (zero) std::fill(row.begin(), row.end(), 0.0);
    }

    // recorded variants take the first d1 frequency ranks in random order;
    // unseen variants take the rarer tail ranks
    std::vector<std::size_t> rank(config.d1);
    std::iota(rank.begin(), rank.end(), std::size_t{1});
    std::shuffle(rank.begin(), rank.end(), rng);
    const double c = zipf_constant(config.d1, config.zipf_exponent, config.max_frequency,
                                   config.mutation_rate);

    truth.variants.resize(d);
    truth.u.resize(d);
    truth.beta0.assign(d, std::vector<double>(K, 0.0));
    for (std::size_t j = 0; j < d; ++j) {
        auto& v = truth.variants[j];
        v.unseen = j >= config.d1;
        const double r = v.unseen ? static_cast<double>(j + 1) : static_cast<double>(rank[j]);
        v.frequency = std::min(config.max_frequency, c * std::pow(r, -config.zipf_exponent));

        if (unif(rng) < config.off_panel_fraction) {
            v.gene = numbered("OFF", std::uniform_int_distribution<std::size_t>(1, n_off)(rng), 3);
        } else {
            const auto g = std::uniform_int_distribution<std::size_t>(0, config.p_genes - 1)(rng);
            v.gene = roster[g];
            truth.u[j].gene = static_cast<std::int32_t>(kSbsCount + g);
        }
        if (unif(rng) < config.indel_fraction) {
            v.ref = std::string(1, kBases[std::uniform_int_distribution<int>(0, 3)(rng)]);
            v.alt = "-";
        } else {
            const auto t = std::uniform_int_distribution<std::size_t>(0, kSbsCount - 1)(rng);
            static constexpr char kRef[] = "CCCTTT";
            static constexpr char kAlt[] = "AGTACG";
            char ref = kRef[t / 16], alt = kAlt[t / 16];
            std::string ctx{kBases[(t / 4) % 4], ref, kBases[t % 4]};
            if (unif(rng) < 0.5) {  // report on the purine strand
                ctx = {complement(ctx[2]), complement(ctx[1]), complement(ctx[0])};
                ref = complement(ref);
                alt = complement(alt);
            }
            v.tri_context = ctx;
            v.ref = std::string(1, ref);
            v.alt = std::string(1, alt);
            truth.u[j].sbs = static_cast<std::int32_t>(t);
        }
        v.variant_id = v.gene + ":" + std::to_string(100000 + 37 * j) + ":" + v.ref + ">" + v.alt;

        const bool zero = unif(rng) < config.beta0_zero_fraction;
        for (auto& b : truth.beta0[j]) b = config.tau * normal(rng);
        if (zero) std::fill(truth.beta0[j].begin(), truth.beta0[j].end(), 0.0);
    }
    truth.refresh_beta();
    return truth;
}

SimCohort generate_cohort(const SimTruth& truth) {
    const auto& config = truth.config;
    config.validate();
    const std::size_t n = config.n_train + config.n_test;
    const std::size_t d = truth.variants.size();
    if (d != config.d1 + config.d2 || truth.beta.size() != d)
        throw ConfigError("simulate: truth does not match its configuration");

    SimCohort cohort;
    std::vector<std::vector<std::uint32_t>> present(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool test = i >= config.n_train;
        cohort.tumor_ids.push_back(test ? numbered("test_", i - config.n_train + 1, 5)
                                        : numbered("train_", i + 1, 5));
        std::mt19937_64 rng(derive_seed(config.seed, {1u, static_cast<std::uint32_t>(i)}));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::size_t limit = test ? d : config.d1;
        for (std::size_t j = 0; j < limit; ++j)
            if (unif(rng) < truth.variants[j].frequency) present[i].push_back(static_cast<std::uint32_t>(j));
    }

    std::vector<char> hit(d, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (auto j : present[i])
            if (i < config.n_train || truth.variants[j].unseen) hit[j] = 1;
    std::mt19937_64 plant(derive_seed(config.seed, {2u}));
    for (std::size_t j = 0; j < d; ++j) {
        if (hit[j]) continue;
        const bool unseen = truth.variants[j].unseen;
        const std::size_t i =
            unseen ? config.n_train +
                         std::uniform_int_distribution<std::size_t>(0, config.n_test - 1)(plant)
                   : std::uniform_int_distribution<std::size_t>(0, config.n_train - 1)(plant);
        auto& row = present[i];
        row.insert(std::lower_bound(row.begin(), row.end(), j), static_cast<std::uint32_t>(j));
    }

    const auto K = truth.class_names.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> eta = truth.alpha;
        for (auto j : present[i])
            for (std::size_t k = 0; k < K; ++k) eta[k] += truth.beta[j][k];
        auto probs = softmax_probs(eta);
        std::mt19937_64 rng(derive_seed(config.seed, {3u, static_cast<std::uint32_t>(i)}));
        const int label = std::discrete_distribution<int>(probs.begin(), probs.end())(rng);
        cohort.labels.push_back(label);
        cohort.bayes_probabilities.push_back(std::move(probs));

        const auto& id = cohort.tumor_ids[i];
        if (i >= config.n_train) cohort.test_ids.push_back(id);
        const auto& type = truth.class_names[static_cast<std::size_t>(label)];
        if (present[i].empty()) {
            MutationRecord r;
            r.tumor_id = id;
            r.cancer_type = type;
            cohort.records.push_back(std::move(r));
        }
        for (auto j : present[i]) {
            const auto& v = truth.variants[j];
            cohort.records.push_back({id, v.variant_id, v.gene, v.tri_context, v.ref, v.alt, type});
        }
    }
    return cohort;
}

nlohmann::ordered_json truth_to_json(const SimTruth& truth, const SimCohort& cohort) {
    using nlohmann::ordered_json;
    const auto& c = truth.config;
    ordered_json j;
    j["config"] = {{"n_classes", c.n_classes},
                   {"n_train", c.n_train},
                   {"n_test", c.n_test},
                   {"d1", c.d1},
                   {"d2", c.d2},
                   {"p_genes", c.p_genes},
                   {"mutation_rate", c.mutation_rate},
                   {"tau", c.tau},
                   {"xi", c.xi},
                   {"omega_zero_fraction", c.omega_zero_fraction},
                   {"beta0_zero_fraction", c.beta0_zero_fraction},
                   {"zipf_exponent", c.zipf_exponent},
                   {"max_frequency", c.max_frequency},
                   {"off_panel_fraction", c.off_panel_fraction},
                   {"indel_fraction", c.indel_fraction},
                   {"seed", c.seed}};
    j["class_names"] = truth.class_names;
    j["alpha"] = truth.alpha;
    j["gene_roster"] = truth.space.gene_roster;
    ordered_json omega = ordered_json::object();
    for (std::size_t l = 0; l < truth.space.p(); ++l)
        omega[std::string(truth.space.feature_name(l))] = truth.omega[l];
    j["omega"] = std::move(omega);
    ordered_json variants = ordered_json::array();
    for (std::size_t v = 0; v < truth.variants.size(); ++v) {
        const auto& x = truth.variants[v];
        ordered_json e = {{"variant_id", x.variant_id},
                          {"frequency", x.frequency},
                          {"unseen", x.unseen},
                          {"beta0", truth.beta0[v]}};
        variants.push_back(std::move(e));
    }
    j["variants"] = std::move(variants);
    ordered_json tumors = ordered_json::array();
    for (std::size_t i = 0; i < cohort.tumor_ids.size(); ++i)
        tumors.push_back({{"tumor_id", cohort.tumor_ids[i]},
                          {"label", truth.class_names[static_cast<std::size_t>(cohort.labels[i])]},
                          {"bayes_probabilities", cohort.bayes_probabilities[i]}});
    j["tumors"] = std::move(tumors);
    return j;
}

}  // namespace hgc
