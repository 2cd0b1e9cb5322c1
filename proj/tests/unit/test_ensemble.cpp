#include <doctest.h>

#include <cmath>

#include "siphi/ensemble.hpp"
#include "siphi/errors.hpp"
#include "siphi/rng.hpp"

using namespace siphi;

namespace {

ensemble::MemberPredictions preds(std::vector<std::vector<double>> rows) {
    ensemble::MemberPredictions p;
    for (std::size_t m = 0; m < rows.size(); ++m) p.members.push_back("m" + std::to_string(m));
    for (std::size_t i = 0; i < rows[0].size(); ++i) p.sample_ids.push_back("s" + std::to_string(i));
    p.pred = std::move(rows);
    return p;
}

ensemble::EnsembleModel pair_with_weight(const std::string& other, double w) {
    return {{"a", other}, {std::log(w / (1 - w)), 0.0}};
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("identical members share the weight equally") {
    Rng rng(2);
    std::vector<double> m, y;
    for (int i = 0; i < 30; ++i) {
        m.push_back(rng.uniform(0, 100));
        y.push_back(rng.uniform(0, 100));
    }
    const auto model = ensemble::fit_ensemble(preds({m, m}), y);
    const auto w = model.weights();
    CHECK(w[0] == w[1]);
    CHECK(w[0] == doctest::Approx(0.5));
}

TEST_CASE("an exact member takes the weight") {
    Rng rng(3);
    std::vector<double> exact, noisy;
    for (int i = 0; i < 40; ++i) {
        exact.push_back(rng.uniform(0, 100));
        noisy.push_back(exact.back() + 15 * rng.normal());
    }
    const auto w = ensemble::fit_ensemble(preds({noisy, exact}), exact).weights();
    CHECK(w[1] > 0.9);
    CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a single member gets weight one") {
    const std::vector<double> y{1, 2, 3};
    const auto model = ensemble::fit_ensemble(preds({{4, 5, 6}}), y);
    CHECK(model.logits == std::vector<double>{0.0});
    CHECK(model.weights() == std::vector<double>{1.0});
}

TEST_CASE("prediction is the weighted average") {
    const auto two = preds({{10, 0}, {30, 100}});
    const ensemble::EnsembleModel uniform{two.members, {0.0, 0.0}};
    const auto p = ensemble::ensemble_predict(uniform, two);
    CHECK(p[0] == 20.0);
    CHECK(p[1] == 50.0);
    const auto three = preds({{40}, {20}, {20}});
    const ensemble::EnsembleModel skewed{three.members, {std::log(2.0), 0.0, 0.0}};
    CHECK(ensemble::ensemble_predict(skewed, three)[0] == doctest::Approx(30.0).epsilon(1e-14));
    const ensemble::EnsembleModel other{{"m0", "x"}, {0.0, 0.0}};
    CHECK_THROWS_AS(ensemble::ensemble_predict(other, two), AlignmentError);
}

TEST_CASE("combinations") {
    const auto c = ensemble::enumerate_combinations(5, 3);
    REQUIRE(c.size() == 10);
    CHECK(c.front() == std::vector<std::size_t>{0, 1, 2});
    CHECK(c[1] == std::vector<std::size_t>{0, 1, 3});
    CHECK(c.back() == std::vector<std::size_t>{2, 3, 4});
    CHECK(ensemble::enumerate_combinations(3, 2).size() == 3);
    CHECK(ensemble::enumerate_combinations(4, 4).size() == 1);
    CHECK_THROWS_AS(ensemble::enumerate_combinations(3, 0), DomainError);
    CHECK_THROWS_AS(ensemble::enumerate_combinations(3, 4), DomainError);
}

TEST_CASE("weight distribution quartiles") {
    const std::vector<ensemble::EnsembleModel> models{pair_with_weight("b", 0.2), pair_with_weight("c", 0.4),
                                                      pair_with_weight("d", 0.6), pair_with_weight("b", 0.3),
                                                      pair_with_weight("c", 0.5), {{"b", "c"}, {0.0, 0.0}}};
    const auto s = ensemble::weight_distribution(models, "a");
    CHECK(s.count == 5);
    CHECK(s.min == doctest::Approx(0.2));
    CHECK(s.q1 == doctest::Approx(0.3));
    CHECK(s.median == doctest::Approx(0.4));
    CHECK(s.q3 == doctest::Approx(0.5));
    CHECK(s.max == doctest::Approx(0.6));
    // b appears with weights 0.8, 0.7, 0.5 -> sorted 0.5, 0.7, 0.8; q1 = 0.5 + 0.5 * 0.2
    const auto b = ensemble::weight_distribution(models, "b");
    CHECK(b.q1 == doctest::Approx(0.6));
    CHECK_THROWS_AS(ensemble::weight_distribution(models, "zzz"), DomainError);
}

TEST_CASE("alignment") {
    const std::vector<std::map<std::string, double>> ok{{{"x", 1}, {"y", 2}}, {{"y", 5}, {"x", 4}}};
    const auto p = ensemble::align_members({"a", "b"}, ok, {"y", "x"});
    CHECK(p.pred[1] == std::vector<double>{5, 4});
    const std::vector<std::map<std::string, double>> bad{{{"x", 1}, {"y", 2}}, {{"x", 4}}, {{"x", 1}, {"z", 2}}};
    CHECK_THROWS_WITH_AS(ensemble::align_members({"a", "b", "c"}, bad, {"x", "y"}), doctest::Contains("b"),
                         AlignmentError);
    CHECK_THROWS_WITH_AS(ensemble::align_members({"a", "b", "c"}, bad, {"x", "y"}), doctest::Contains("c"),
                         AlignmentError);
    auto ragged = preds({{1, 2}, {3}});
    CHECK_THROWS_AS(ragged.validate(), ShapeError);
}

TEST_CASE("model json round trip") {
    const ensemble::EnsembleModel m{{"a", "b"}, {0.25, -1.5}};
    const auto back = ensemble::ensemble_model_from_json(ensemble::to_json(m));
    CHECK(back.members == m.members);
    CHECK(back.logits == m.logits);
}

}
