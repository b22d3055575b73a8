#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subguard/alignment.hpp"
#include "subguard/errors.hpp"

using namespace subguard;

TEST(Alignment, HandExamples) {
    const std::vector<double> cr{3, 2}, gen{1, 2, 5};
    // pairs: 3>1, 3>2, 2>1 win; 3<5, 2=2, 2<5 lose
    EXPECT_DOUBLE_EQ(score_dimension(cr, gen), 0.5);
    EXPECT_DOUBLE_EQ(score_dimension_fast(cr, gen), 0.5);
    const std::vector<double> zeros_a(4, 0.0), zeros_b(7, 0.0);
    EXPECT_EQ(score_dimension(zeros_a, zeros_b), 0.0);
    EXPECT_EQ(score_dimension_fast(zeros_a, zeros_b), 0.0);
    EXPECT_EQ(score_dimension_fast(std::vector<double>{1}, std::vector<double>{0}), 1.0);
}

TEST(Alignment, FastMatchesBruteForceWithTies) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> size(1, 40), level(0, trial % 2 ? 3 : 1000);
        std::vector<double> cr(size(rng)), gen(size(rng));
        for (auto& v : cr) v = level(rng) * 0.25;
        for (auto& v : gen) v = level(rng) * 0.25;
        const double expect = oracle::pair_fraction(cr, gen);
        EXPECT_DOUBLE_EQ(score_dimension(cr, gen), expect);
        EXPECT_DOUBLE_EQ(score_dimension_fast(cr, gen), expect);
    }
}

TEST(Alignment, RejectsEmptyOrNonFinite) {
    EXPECT_THROW(score_dimension_fast(std::vector<double>{}, std::vector<double>{1}), DomainError);
    EXPECT_THROW(score_dimension(std::vector<double>{NAN}, std::vector<double>{1}), DomainError);
}

TEST(Alignment, ReportAndSubspaceBound) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<PooledVector> pooled;
    for (int i = 0; i < 30; ++i) {
        PooledVector p;
        p.label = i % 3 ? CorpusLabel::General : CorpusLabel::Copyrighted;
        p.values = Eigen::VectorXd::NullaryExpr(12, [&] { return u(rng); });
        pooled.push_back(p);
    }
    const AlignmentReport rep = score_report(pooled);
    EXPECT_EQ(rep.n_cr, 10u);
    EXPECT_EQ(rep.n_gen, 20u);
    ASSERT_EQ(rep.scores.size(), 12u);
    for (std::size_t d = 0; d < 12; ++d) {
        std::vector<double> cr, gen;
        for (const auto& p : pooled)
            (p.label == CorpusLabel::Copyrighted ? cr : gen).push_back(p.values[static_cast<Eigen::Index>(d)]);
        EXPECT_DOUBLE_EQ(rep.scores[d], oracle::pair_fraction(cr, gen));
    }
    const std::vector<std::size_t> dims{1, 4, 9};
    const double mean = (rep.scores[1] + rep.scores[4] + rep.scores[9]) / 3;
    EXPECT_NEAR(subspace_score(rep, dims), mean, 1e-15);
    EXPECT_LE(subspace_score(rep, dims), std::max({rep.scores[1], rep.scores[4], rep.scores[9]}));
    EXPECT_THROW(subspace_score(rep, std::vector<std::size_t>{12}), DomainError);
    EXPECT_THROW(subspace_score(rep, std::vector<std::size_t>{}), DomainError);
}

TEST(Alignment, NeedsBothLabels) {
    std::vector<PooledVector> pooled(3);
    for (auto& p : pooled) {
        p.label = CorpusLabel::General;
        p.values = Eigen::VectorXd::Zero(2);
    }
    EXPECT_THROW(score_report(pooled), DomainError);
}

TEST(Alignment, CsvRoundTrip) {
    AlignmentReport rep;
    rep.k = 3;
    rep.scores = {0.125, 1.0, 0.333333333333};
    rep.n_cr = 4;
    rep.n_gen = 6;
    const auto path = std::filesystem::temp_directory_path() / "subguard_test_align" / "a.csv";
    std::filesystem::remove_all(path.parent_path());
    write_report_csv(rep, path);
    const auto back = read_report_csv(path);
    EXPECT_EQ(back.k, 3u);
    EXPECT_EQ(back.n_cr, 4u);
    EXPECT_EQ(back.scores[0], 0.125);
    EXPECT_NEAR(back.scores[2], rep.scores[2], 1e-12);
    std::filesystem::remove_all(path.parent_path());
}

TEST(Alignment, DimensionStats) {
    std::vector<PooledVector> pooled{{CorpusLabel::Copyrighted, Eigen::Vector2d(6, 0)},
                                     {CorpusLabel::Copyrighted, Eigen::Vector2d(2, 0)},
                                     {CorpusLabel::General, Eigen::Vector2d(0, 7)}};
    const auto s = dimension_stats(pooled, 5.0);
    EXPECT_DOUBLE_EQ(s.mean_cr[0], 4.0);
    EXPECT_DOUBLE_EQ(s.active_rate_cr[0], 0.5);
    EXPECT_DOUBLE_EQ(s.active_rate_gen[1], 1.0);
    EXPECT_DOUBLE_EQ(s.silent_rate_gen[0], 1.0);
}
