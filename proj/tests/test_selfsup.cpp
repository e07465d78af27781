#include <gtest/gtest.h>

#include <cmath>

#include "mvclust/kmeans.hpp"
#include "mvclust/selfsup.hpp"
#include "oracles.hpp"

using namespace mvclust;

namespace {

Matrix random_stochastic(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    Matrix m(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            m(i, j) = dist(gen);
            sum += m(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) m(i, j) /= sum;
    }
    return m;
}

double kl_scalar(const Matrix& z, const Matrix& mu, const Matrix& p) {
    return kl_loss(p, soft_assign(z, mu));
}

} // namespace

TEST(SoftAssign, EquidistantUniformRow) {
    Matrix z(1, 2, 0.0);
    Matrix mu = Matrix::from_rows({{2, 0}, {-2, 0}, {0, 2}, {0, -2}});
    const Matrix q = soft_assign(z, mu);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(q(0, j), 0.25, 1e-12);
}

TEST(SoftAssign, AtCentroidHandCase) {
    // z at centroid 0, all other squared distances 1:
    // kernels {1, 1/2, ..., 1/2} -> q_0 = 1 / (1 + (k-1)/2)
    const std::size_t k = 4;
    Matrix z(1, 3, 0.0);
    Matrix mu(k, 3, 0.0);
    mu(1, 0) = 1.0;
    mu(2, 1) = 1.0;
    mu(3, 2) = 1.0;
    const Matrix q = soft_assign(z, mu);
    EXPECT_NEAR(q(0, 0), 1.0 / (1.0 + (k - 1) * 0.5), 1e-12);
    for (std::size_t j = 1; j < k; ++j)
        EXPECT_NEAR(q(0, j), 0.5 / (1.0 + (k - 1) * 0.5), 1e-12);
}

TEST(SoftAssign, MatchesDirectFormulaOracle) {
    const Matrix z = oracle::random_matrix(10, 4, 1);
    const Matrix mu = oracle::random_matrix(3, 4, 2);
    const Matrix q = soft_assign(z, mu);
    for (std::size_t i = 0; i < 10; ++i) {
        double denom = 0.0;
        std::vector<double> kern(3);
        for (std::size_t j = 0; j < 3; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double diff = z(i, c) - mu(j, c);
                d2 += diff * diff;
            }
            kern[j] = 1.0 / (1.0 + d2);
            denom += kern[j];
        }
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(q(i, j), kern[j] / denom, 1e-12);
    }
}

TEST(SoftAssign, RowsSumToOneProperty) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix z = oracle::random_matrix(15, 3, 100 + seed, 5.0);
        const Matrix mu = oracle::random_matrix(4, 3, 200 + seed, 5.0);
        const Matrix q = soft_assign(z, mu);
        for (std::size_t i = 0; i < q.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < q.cols(); ++j) {
                sum += q(i, j);
                EXPECT_GT(q(i, j), 0.0);
                EXPECT_LT(q(i, j), 1.0);
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(SoftAssign, ShapeMismatchThrows) {
    EXPECT_THROW(soft_assign(Matrix(3, 2), Matrix(2, 3)), ShapeError);
}

TEST(KlLoss, IdenticalIsZero) {
    const Matrix p = random_stochastic(8, 3, 3);
    EXPECT_NEAR(kl_loss(p, p), 0.0, 1e-14);
}

TEST(KlLoss, OneHotAgainstUniformClosedForm) {
    const std::size_t n = 6, k = 4;
    Matrix p(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) p(i, i % k) = 1.0;
    Matrix q(n, k, 1.0 / k);
    EXPECT_NEAR(kl_loss(p, q), n * std::log(static_cast<double>(k)), 1e-12);
}

TEST(KlLoss, MatchesSummationOracleAndNonNegative) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Matrix p = random_stochastic(7, 4, 300 + seed);
        const Matrix q = random_stochastic(7, 4, 400 + seed);
        double want = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p.data()[i] > 0.0) want += p.data()[i] * std::log(p.data()[i] / q.data()[i]);
        const double got = kl_loss(p, q);
        EXPECT_NEAR(got, want, 1e-12);
        EXPECT_GE(got, -1e-15); // Gibbs inequality
    }
}

TEST(KlLoss, ZeroTargetEntriesContributeNothing) {
    Matrix p = Matrix::from_rows({{0.0, 1.0}});
    Matrix q = Matrix::from_rows({{0.5, 0.5}});
    EXPECT_NEAR(kl_loss(p, q), std::log(2.0), 1e-12);
}

TEST(KlLoss, ZeroAssignmentUnderPositiveTargetThrows) {
    Matrix p = Matrix::from_rows({{0.5, 0.5}});
    Matrix q = Matrix::from_rows({{1.0, 0.0}});
    EXPECT_THROW(kl_loss(p, q), NumericError);
}

TEST(SelfsupGradients, ZeroAtMatchingDistributions) {
    // P = Q is a stationary point of KL(P || Q(z, mu))
    const Matrix z = oracle::random_matrix(6, 3, 5);
    const Matrix mu = oracle::random_matrix(2, 3, 6);
    const Matrix p = soft_assign(z, mu);
    const SoftAssignGrads g = selfsup_gradients(z, mu, p);
    for (double v : g.z_grad.data()) EXPECT_NEAR(v, 0.0, 1e-12);
    for (double v : g.mu_grad.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(SelfsupGradients, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Matrix z = oracle::random_matrix(5, 3, 700 + seed);
        Matrix mu = oracle::random_matrix(3, 3, 800 + seed);
        const Matrix p = random_stochastic(5, 3, 900 + seed);
        const SoftAssignGrads g = selfsup_gradients(z, mu, p);
        auto eval = [&] { return kl_scalar(z, mu, p); };
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double fd = oracle::central_diff(eval, &z.data()[i]);
            EXPECT_LT(oracle::rel_err(fd, g.z_grad.data()[i]), 1e-4)
                << "z coord " << i << " seed " << seed;
        }
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double fd = oracle::central_diff(eval, &mu.data()[i]);
            EXPECT_LT(oracle::rel_err(fd, g.mu_grad.data()[i]), 1e-4)
                << "mu coord " << i << " seed " << seed;
        }
    }
}

TEST(SelfsupGradients, MirroredSamplesGiveMirroredGradients) {
    // two samples placed symmetrically around a centroid produce mirrored
    // z-gradients when the target is symmetric as well
    Matrix z = Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}});
    Matrix mu = Matrix::from_rows({{0.0, 0.0}, {0.0, 3.0}});
    Matrix p = Matrix::from_rows({{0.7, 0.3}, {0.7, 0.3}});
    const SoftAssignGrads g = selfsup_gradients(z, mu, p);
    EXPECT_NEAR(g.z_grad(0, 0), -g.z_grad(1, 0), 1e-12);
    EXPECT_NEAR(g.z_grad(0, 1), g.z_grad(1, 1), 1e-12);
}

TEST(TrainSelfsup, LrZeroLeavesParametersUnchanged) {
    std::vector<MlpAutoencoder> models;
    models.push_back(make_autoencoder({4, 3, 2}, 1));
    const MlpAutoencoder before = models[0];
    std::vector<Matrix> views{oracle::random_matrix(6, 4, 2)};
    std::vector<Matrix> mu{oracle::random_matrix(2, 2, 3)};
    const Matrix mu_before = mu[0];
    const Matrix p = random_stochastic(6, 2, 4);
    SelfsupConfig cfg;
    cfg.epochs = 1;
    cfg.adam.lr = 0.0;
    cfg.label_change_tol = 0.0;
    train_selfsup(models, views, p, mu, cfg);
    for (std::size_t l = 0; l < before.encoder.size(); ++l)
        EXPECT_EQ(models[0].encoder[l].w, before.encoder[l].w);
    EXPECT_EQ(mu[0], mu_before);
}

TEST(TrainSelfsup, KlWeightZeroBitIdenticalToReconstructionOnly) {
    const Matrix x = oracle::random_matrix(10, 4, 7);
    std::vector<MlpAutoencoder> models;
    models.push_back(make_autoencoder({4, 5, 2}, 8));
    MlpAutoencoder ref = make_autoencoder({4, 5, 2}, 8);

    std::vector<Matrix> views{x};
    std::vector<Matrix> mu{oracle::random_matrix(2, 2, 9)};
    const Matrix p = random_stochastic(10, 2, 10);
    SelfsupConfig cfg;
    cfg.epochs = 25;
    cfg.kl_weight = 0.0;
    cfg.label_change_tol = 0.0;
    train_selfsup(models, views, p, mu, cfg);
    pretrain_autoencoder(ref, x, 25, cfg.adam);

    for (std::size_t l = 0; l < ref.encoder.size(); ++l) {
        EXPECT_EQ(models[0].encoder[l].w, ref.encoder[l].w);
        EXPECT_EQ(models[0].encoder[l].b, ref.encoder[l].b);
        EXPECT_EQ(models[0].decoder[l].w, ref.decoder[l].w);
        EXPECT_EQ(models[0].decoder[l].b, ref.decoder[l].b);
    }
}

TEST(TrainSelfsup, TotalLossTrendsDownOnBlobs) {
    // synthetic blobs, 2 views; allow brief Adam transients (<= 2% of epochs
    // may increase beyond tolerance)
    std::mt19937_64 gen(11);
    std::normal_distribution<double> noise(0.0, 0.4);
    const std::size_t n = 30;
    Matrix x1(n, 5), x2(n, 5);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double center = (i % 2) ? 3.0 : -3.0;
            x1(i, j) = center + noise(gen);
            x2(i, j) = -center + noise(gen);
        }
    std::vector<MlpAutoencoder> models;
    models.push_back(make_autoencoder({5, 6, 2}, 12));
    models.push_back(make_autoencoder({5, 6, 2}, 13));
    std::vector<Matrix> views{x1, x2};
    for (auto v : {0, 1}) pretrain_autoencoder(models[v], views[v], 100);

    std::vector<Matrix> mu;
    mu.push_back(kmeans_fit(encode(models[0], x1), 2, 1).centroids);
    mu.push_back(kmeans_fit(encode(models[1], x2), 2, 2).centroids);

    Matrix p(n, 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) p(i, i % 2) = 1.0;
    // soften the one-hot target slightly so KL stays finite-friendly
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 2; ++j) p(i, j) = 0.9 * p(i, j) + 0.05;

    SelfsupConfig cfg;
    cfg.epochs = 60;
    cfg.label_change_tol = 0.0;
    SelfsupResult r = train_selfsup(models, views, p, mu, cfg);

    std::vector<double> totals(cfg.epochs, 0.0);
    for (const SelfsupTraceRow& row : r.trace) totals[row.epoch] += row.rec_loss + row.kl;
    std::size_t increases = 0;
    for (std::size_t e = 1; e < totals.size(); ++e)
        if (totals[e] > totals[e - 1] * 1.001) ++increases;
    EXPECT_LE(increases, totals.size() / 50 + 1); // <= ~2%
    EXPECT_LT(totals.back(), totals.front());
}

TEST(TrainSelfsup, DivergenceReportsEpoch) {
    std::vector<MlpAutoencoder> models;
    models.push_back(make_autoencoder({3, 2}, 20));
    std::vector<Matrix> views{oracle::random_matrix(5, 3, 21, 10.0)};
    std::vector<Matrix> mu{oracle::random_matrix(2, 2, 22)};
    const Matrix p = random_stochastic(5, 2, 23);
    SelfsupConfig cfg;
    cfg.epochs = 400;
    cfg.adam.lr = 1e280; // guaranteed blow-up
    cfg.label_change_tol = 0.0;
    EXPECT_THROW(train_selfsup(models, views, p, mu, cfg), TrainingError);
}
