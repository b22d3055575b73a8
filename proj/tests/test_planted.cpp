#include <algorithm>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "subguard/errors.hpp"
#include "subguard/planted.hpp"

using namespace subguard;

namespace {

// With d == k and no noise the dictionary is invertible, so the true codes can be read back exactly.
PlantedConfig square_config() {
    PlantedConfig c;
    c.d = 24;
    c.k = 24;
    c.planted = {3, 9, 17};
    c.density = 2;
    c.tokens_per_sample = 4;
    c.noise_sigma = 0.0;
    c.seed = 6;
    return c;
}

}  // namespace

TEST(Planted, CodesRespectTheCorpusSplit) {
    const auto cfg = square_config();
    const auto data = generate_planted(cfg, 20, 20);
    const Eigen::MatrixXd inv = data.dictionary.inverse();
    for (const auto& rec : data.dataset.records) {
        const Eigen::MatrixXd codes = rec.vectors.cast<double>() * inv.transpose();  // tokens x k
        for (int p : cfg.planted) {
            const double peak = codes.col(p).cwiseAbs().maxCoeff();
            if (rec.label == CorpusLabel::General) {
                EXPECT_LT(peak, 1e-2);
            } else {
                EXPECT_GE(peak, cfg.scale_min - 1e-2);
                EXPECT_LE(peak, cfg.scale_max + 1e-2);
            }
        }
        for (Eigen::Index t = 0; t < codes.rows(); ++t) {
            int background = 0;
            for (int j = 0; j < cfg.k; ++j)
                if (std::find(cfg.planted.begin(), cfg.planted.end(), j) == cfg.planted.end() &&
                    std::abs(codes(t, j)) > 1e-2)
                    ++background;
            EXPECT_EQ(background, cfg.density);
        }
    }
}

TEST(Planted, DeterministicAndUnitAtoms) {
    PlantedConfig cfg;
    cfg.seed = 12;
    const auto a = generate_planted(cfg, 5, 5);
    const auto b = generate_planted(cfg, 5, 5);
    EXPECT_EQ(a.dataset, b.dataset);
    EXPECT_EQ(a.ground_truth, PlantedConfig::default_planted(16));
    for (int j = 0; j < cfg.k; ++j) EXPECT_NEAR(a.dictionary.col(j).norm(), 1.0, 1e-12);
    EXPECT_EQ(a.dataset.count(CorpusLabel::Copyrighted), 5u);
    cfg.seed = 13;
    EXPECT_FALSE(generate_planted(cfg, 5, 5).dataset == a.dataset);
}

TEST(Planted, Validation) {
    PlantedConfig c;
    c.planted = {1, 1};
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.planted = {512};
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.scale_max = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(generate_planted(PlantedConfig{}, 0, 3), DomainError);
}

TEST(PlantedRecall, MatchesAtomsByCosine) {
    const auto cfg = square_config();
    const Eigen::MatrixXd dict = planted_dictionary(cfg);
    // A decoder equal to the dictionary recovers exactly the selected planted atoms.
    EXPECT_EQ(planted_recall(dict, {3, 9, 17}, dict, cfg.planted), 1.0);
    EXPECT_DOUBLE_EQ(planted_recall(dict, {3, 4, 5}, dict, cfg.planted), 1.0 / 3.0);
    // Column permutation: feature 0 carries atom 17.
    Eigen::MatrixXd perm = dict;
    perm.col(0) = -2.0 * dict.col(17);
    EXPECT_DOUBLE_EQ(planted_recall(perm, {0}, dict, cfg.planted), 0.0);
    perm.col(0) = 2.0 * dict.col(17);
    EXPECT_DOUBLE_EQ(planted_recall(perm, {0}, dict, cfg.planted), 1.0 / 3.0);
    EXPECT_THROW(planted_recall(dict, {99}, dict, cfg.planted), DomainError);
}
