#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mvclust/metrics.hpp"
#include "oracles.hpp"

using namespace mvclust;

namespace {

Labeling random_labeling(std::size_t n, std::size_t k, std::uint64_t seed) {
    Labeling l(n);
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> dist(0, k - 1);
    for (auto& v : l) v = dist(gen);
    return l;
}

} // namespace

TEST(Accuracy, IdenticalIsOne) {
    const Labeling l = {0, 1, 2, 1, 0, 2};
    EXPECT_DOUBLE_EQ(accuracy(l, l), 1.0);
}

TEST(Accuracy, PermutationInvariant) {
    const Labeling truth = {0, 0, 1, 1, 2, 2, 2};
    const Labeling pred = {2, 2, 0, 0, 1, 1, 1}; // relabeled by a bijection
    EXPECT_DOUBLE_EQ(accuracy(pred, truth), 1.0);
}

TEST(Accuracy, MatchesExhaustivePermutationOracle) {
    const Labeling pred = {0, 0, 1, 1, 2, 2};
    const Labeling truth = {1, 1, 0, 0, 2, 1};
    EXPECT_NEAR(accuracy(pred, truth), oracle::brute_force_accuracy(pred, truth), 1e-12);
}

TEST(Accuracy, MatchesOracleOnSmallRandomInstances) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const std::size_t n = 4 + seed % 5;              // n <= 8
        const std::size_t k = 2 + seed % 3;              // k <= 4
        const Labeling pred = random_labeling(n, k, 2 * seed);
        const Labeling truth = random_labeling(n, k, 2 * seed + 1);
        EXPECT_NEAR(accuracy(pred, truth), oracle::brute_force_accuracy(pred, truth), 1e-12)
            << "seed " << seed;
    }
}

TEST(Accuracy, UnequalClusterCountsPadded) {
    const Labeling pred = {0, 1, 2, 3};
    const Labeling truth = {0, 1, 1, 1};
    EXPECT_NEAR(accuracy(pred, truth), 0.5, 1e-12); // best: 0->0 plus one of {1,2,3}
}

TEST(Accuracy, RandomRelabelingInvariance) {
    std::mt19937_64 gen(99);
    const Labeling truth = random_labeling(40, 4, 1);
    const Labeling pred = random_labeling(40, 4, 2);
    const double base = accuracy(pred, truth);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> perm(4);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        Labeling relabeled(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) relabeled[i] = perm[pred[i]];
        EXPECT_NEAR(accuracy(relabeled, truth), base, 1e-12);
    }
}

TEST(Accuracy, LengthMismatchThrows) {
    EXPECT_THROW(accuracy({0, 1}, {0, 1, 2}), InputError);
}

TEST(Nmi, IdenticalIsOne) {
    const Labeling l = {0, 1, 2, 1, 0, 2, 2, 1};
    EXPECT_NEAR(nmi(l, l), 1.0, 1e-12);
}

TEST(Nmi, IndependentNearZero) {
    // independent labelings of large n: NMI should be near zero
    const std::size_t n = 20000;
    const Labeling a = random_labeling(n, 4, 7);
    const Labeling b = random_labeling(n, 4, 8);
    EXPECT_LT(nmi(a, b), 0.01);
}

TEST(Nmi, MatchesContingencyOracle) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Labeling a = random_labeling(12, 3, 70 + seed);
        const Labeling b = random_labeling(12, 4, 170 + seed);
        EXPECT_NEAR(nmi(a, b), oracle::contingency_nmi(a, b), 1e-12);
    }
}

TEST(Nmi, SingleClusterDegenerateIsZero) {
    const Labeling flat(10, 0);
    const Labeling other = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    EXPECT_DOUBLE_EQ(nmi(flat, other), 0.0);
}

TEST(Ari, IdenticalIsOne) {
    const Labeling l = {0, 0, 1, 2, 2, 1};
    EXPECT_DOUBLE_EQ(ari(l, l), 1.0);
}

TEST(Ari, RandomNullMeanNearZero) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const Labeling a = random_labeling(60, 3, 3 * seed);
        const Labeling b = random_labeling(60, 3, 3 * seed + 1);
        mean += ari(a, b);
    }
    mean /= 1000.0;
    EXPECT_LT(std::fabs(mean), 0.02);
}

TEST(Ari, MatchesPairCountingOracle) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Labeling a = random_labeling(8, 3, 500 + seed);
        const Labeling b = random_labeling(8, 3, 600 + seed);
        EXPECT_NEAR(ari(a, b), oracle::pair_counting_ari(a, b), 1e-12) << "seed " << seed;
    }
}

TEST(Metrics, AllInvariantToBijectiveRelabeling) {
    const Labeling truth = random_labeling(30, 3, 41);
    const Labeling pred = random_labeling(30, 3, 42);
    Labeling relabeled(pred.size());
    const std::size_t perm[3] = {2, 0, 1};
    for (std::size_t i = 0; i < pred.size(); ++i) relabeled[i] = perm[pred[i]];
    EXPECT_NEAR(accuracy(pred, truth), accuracy(relabeled, truth), 1e-12);
    EXPECT_NEAR(nmi(pred, truth), nmi(relabeled, truth), 1e-12);
    EXPECT_NEAR(ari(pred, truth), ari(relabeled, truth), 1e-12);
}

TEST(Metrics, AccuracyAtLeastChanceOnBalancedTruth) {
    Labeling truth(40);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = i % 4;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Labeling pred = random_labeling(40, 4, 900 + seed);
        EXPECT_GE(accuracy(pred, truth), 0.25 - 1e-12);
    }
}

TEST(Hungarian, MatchesBruteForceOnSmallCosts) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (std::size_t k = 2; k <= 7; ++k) {
        std::vector<std::vector<double>> cost(k, std::vector<double>(k));
        for (auto& row : cost)
            for (double& v : row) v = dist(gen);
        const auto assign = mvclust::detail::hungarian(cost);
        double got = 0.0;
        for (std::size_t i = 0; i < k; ++i) got += cost[i][assign[i]];

        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (std::size_t i = 0; i < k; ++i) c += cost[i][perm[i]];
            best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(got, best, 1e-10) << "k=" << k;
    }
}

TEST(Metrics, ReportFields) {
    const Labeling truth = {0, 0, 1, 1, 2, 2};
    const Labeling pred = {1, 1, 0, 0, 2, 2};
    const MetricsReport r = evaluate(pred, truth);
    EXPECT_DOUBLE_EQ(r.acc, 1.0);
    EXPECT_EQ(r.n, 6u);
    EXPECT_EQ(r.k_pred, 3u);
    EXPECT_EQ(r.k_true, 3u);
}
