#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "siphi/errors.hpp"
#include "siphi/metrics.hpp"
#include "siphi/rng.hpp"

using namespace siphi;

TEST_SUITE("metrics") {

TEST_CASE("rmse and ncc on a small example") {
    const std::vector<double> pred{10, 20, 30, 40}, target{12, 18, 35, 37};
    // squared errors 4, 4, 25, 9 -> mean 10.5
    CHECK(metrics::rmse(pred, target) == doctest::Approx(std::sqrt(10.5)).epsilon(1e-15));
    CHECK(metrics::ncc(pred, target) == doctest::Approx(oracle::pearson(pred, target)).epsilon(1e-13));
    const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 9};
    CHECK(metrics::rmse(a, b) == doctest::Approx(2.5));
}

TEST_CASE("constant or mismatched inputs are domain errors") {
    const std::vector<double> flat{3, 3, 3}, v{1, 2, 3}, two{1, 2};
    CHECK_THROWS_AS(metrics::ncc(flat, v), DomainError);
    CHECK_THROWS_AS(metrics::ncc(v, flat), DomainError);
    CHECK_THROWS_AS(metrics::rmse(v, two), ShapeError);
    CHECK_THROWS_AS(metrics::rmse(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST_CASE("ranks and spearman") {
    const std::vector<double> v{10, 30, 20, 30, 5};
    CHECK(metrics::average_ranks(v) == std::vector<double>{2, 4.5, 3, 4.5, 1});
    // one adjacent swap out of five: rho = 1 - 6*2/(5*24) = 0.9
    const std::vector<double> x{1, 2, 3, 4, 5}, y{1, 3, 2, 4, 5};
    CHECK(metrics::spearman(x, y) == doctest::Approx(0.9).epsilon(1e-14));
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p, q;
        for (int i = 0; i < 12; ++i) {
            p.push_back(std::round(rng.uniform(0, 6)));
            q.push_back(rng.uniform(0, 1));
        }
        CHECK(metrics::average_ranks(p) == oracle::ranks(p));
        CHECK(metrics::spearman(p, q) == doctest::Approx(oracle::pearson(oracle::ranks(p), oracle::ranks(q))).epsilon(1e-12));
    }
}

TEST_CASE("ncc is invariant to positive affine maps of the predictions") {
    Rng rng(4);
    std::vector<double> p, t;
    for (int i = 0; i < 40; ++i) {
        p.push_back(rng.uniform(0, 100));
        t.push_back(rng.uniform(0, 100));
    }
    auto q = p;
    for (auto& v : q) v = 0.25 * v + 7;
    CHECK(metrics::ncc(q, t) == doctest::Approx(metrics::ncc(p, t)).epsilon(1e-12));
    for (auto& v : q) v = -v;
    CHECK(metrics::ncc(q, t) == doctest::Approx(-metrics::ncc(p, t)).epsilon(1e-12));
}

TEST_CASE("fold report means and json round trip") {
    std::vector<metrics::FoldPredictions> folds{
        {{1, 2, 3}, {1, 2, 6}},        // rmse sqrt(3)
        {{0, 5, 10}, {5, 10, 15}},      // rmse 5
        {{2, 4}, {2, 5}},               // rmse sqrt(0.5)
    };
    const auto r = metrics::fold_report(folds, "toy/wa-tgp/all/8");
    REQUIRE(r.folds.size() == 3);
    CHECK(r.folds[1].rmse == 5.0);
    CHECK(r.folds[1].ncc == doctest::Approx(1.0));
    CHECK(r.mean_rmse == doctest::Approx((std::sqrt(3.0) + 5 + std::sqrt(0.5)) / 3).epsilon(1e-14));
    double ncc_sum = 0;
    for (const auto& f : folds) ncc_sum += oracle::pearson(f.pred, f.target);
    CHECK(r.mean_ncc == doctest::Approx(ncc_sum / 3).epsilon(1e-13));
    CHECK(metrics::metric_report_from_json(metrics::to_json(r)) == r);

    folds[2].pred = {4, 4};
    CHECK_THROWS_WITH_AS(metrics::fold_report(folds), doctest::Contains("fold 2"), DomainError);
}

}
