#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgc/ingest.hpp"
#include "hgc/metafeatures.hpp"

namespace hgc {

struct SimConfig {
    int n_classes = 4;
    std::size_t n_train = 1200;
    std::size_t n_test = 300;
    std::size_t d1 = 5000;  // recorded variants
    std::size_t d2 = 1000;  // variants that only occur in test tumors
    std::size_t p_genes = 50;
    double mutation_rate = 30.0;  // expected mutations per tumor
    double tau = 0.25;            // residual-effect scale
    double xi = 0.5;              // meta-effect scale
    double omega_zero_fraction = 0.3;
    double beta0_zero_fraction = 0.9;
    double zipf_exponent = 0.8;   // variant frequency ~ rank^-exponent
    double max_frequency = 0.5;
    double off_panel_fraction = 0.2;  // variants in genes outside the roster
    double indel_fraction = 0.05;     // variants with no substitution category
    std::uint64_t seed = 1;

    /// Throws ConfigError for non-positive counts or invalid scales/fractions.
    void validate() const;
};

struct SimVariant {
    std::string variant_id;
    std::string gene;
    std::string tri_context;
    std::string ref;
    std::string alt;
    double frequency = 0.0;
    bool unseen = false;  // occurs only in test tumors
};

// True parameters. Rows of beta0/beta follow `variants`; rows of omega follow
// the meta space (SBS first, then the roster). u holds each variant's meta row.
struct SimTruth {
    SimConfig config;
    std::vector<std::string> class_names;
    MetaFeatureSpace space;
    std::vector<SimVariant> variants;
    std::vector<MetaRow> u;
    std::vector<double> alpha;
    std::vector<std::vector<double>> omega;
    std::vector<std::vector<double>> beta0;
    std::vector<std::vector<double>> beta;  // beta0 + U omega

    /// Recomputes beta from beta0, u and omega.
    void refresh_beta();
};

SimTruth generate_truth(const SimConfig& config);

struct SimCohort {
    std::vector<MutationRecord> records;  // every record carries its tumor's true label
    std::vector<std::string> tumor_ids;   // train_00001.. then test_00001..
    std::vector<int> labels;
    std::vector<std::vector<double>> bayes_probabilities;  // softmax of the true eta
    std::vector<std::string> test_ids;
};

/// Samples presences and labels from the truth. Recorded variants that no
/// training draw hit are planted in one random training tumor, and unseen
/// variants missed by every test tumor are planted in one test tumor, so the
/// realized cohort has exactly d1 recorded and d2 unseen variants.
SimCohort generate_cohort(const SimTruth& truth);

nlohmann::ordered_json truth_to_json(const SimTruth& truth, const SimCohort& cohort);

}  // namespace hgc
