#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "csq/core.hpp"
#include "csq/measure.hpp"
#include "csq/optics.hpp"

using namespace csq;
using core::cplx;
using core::KetSuperposition;

namespace {

const double kPi = std::numbers::pi;
const double kExpM4 = 0.01831563888873418;  // exp(-4)
const double kExpM8 = 3.3546262790251185e-4;

} // namespace

TEST_CASE("onoff detection of a displaced mode") {
  auto [vac, click] = measure::detect_onoff(core::make_ket({2.0}), 0);
  CHECK(vac.symbol == "vac");
  CHECK(click.symbol == "click");
  CHECK(vac.probability == doctest::Approx(kExpM4).epsilon(1e-12));
  CHECK(click.probability == doctest::Approx(1.0 - kExpM4).epsilon(1e-12));
  CHECK(vac.raw_deficit == 0.0);
  // vacuum branch collapses the mode to the zero label
  CHECK(std::abs(vac.post.terms[0].amps[0]) == 0.0);
  CHECK(std::abs(core::norm_squared(click.post) - 1.0) <= 1e-12);
}

TEST_CASE("onoff detection on a plus cat") {
  auto [vac, click] = measure::detect_onoff(optics::cat_state(2.0, 1), 0);
  // both components project onto vacuum coherently: 2 e^-4 / (1 + e^-8)
  double want_vac = 2.0 * kExpM4 / (1.0 + kExpM8);
  CHECK(vac.probability == doctest::Approx(want_vac).epsilon(1e-12));
  CHECK(std::abs(vac.probability + click.probability - 1.0) <= 1e-10);
  CHECK(std::abs(core::norm_squared(click.post) - 1.0) <= 1e-12);
}

TEST_CASE("onoff detection of vacuum yields a null click branch") {
  auto [vac, click] = measure::detect_onoff(core::vacuum_state(2), 1);
  CHECK(vac.probability == 1.0);
  CHECK(click.probability == 0.0);
  CHECK(click.null_state);
  CHECK(click.post.terms.empty());
  CHECK(click.post.mode_count == 2);
}

TEST_CASE("homodyne splits a cat into equal branches") {
  auto [plus, minus] = measure::homodyne_sign(optics::cat_state(2.0, 1), 0);
  CHECK(plus.probability == 0.5);
  CHECK(minus.probability == 0.5);
  // dropped cross-Gram mass: e^-8 / (1 + e^-8)
  CHECK(plus.raw_deficit == doctest::Approx(kExpM8 / (1.0 + kExpM8)).epsilon(1e-12));
  CHECK(core::terms_match(plus.post, core::make_ket({2.0}), 1e-12));
  CHECK(core::terms_match(minus.post, core::make_ket({-2.0}), 1e-12));
}

TEST_CASE("homodyne branch pair closes exactly") {
  KetSuperposition s = core::normalize(core::sum(
      core::sum(core::make_ket({-3.0}, 0.4), core::make_ket({-2.0}, 0.3)),
      core::make_ket({2.0}, 0.8)));
  auto [plus, minus] = measure::homodyne_sign(s, 0);
  CHECK(plus.probability + minus.probability == 1.0);
  CHECK(plus.probability > 0.0);
  CHECK(minus.probability > 0.0);
  CHECK(std::abs(core::norm_squared(plus.post) - 1.0) <= 1e-12);
  CHECK(std::abs(core::norm_squared(minus.post) - 1.0) <= 1e-12);
}

TEST_CASE("homodyne rejects ambiguous amplitudes") {
  KetSuperposition zero_real = core::normalize(
      core::sum(core::make_ket({0.0}), core::make_ket({2.0})));
  CHECK_THROWS_AS((void)measure::homodyne_sign(zero_real, 0), std::runtime_error);

  KetSuperposition imag = core::make_ket({cplx(0.0, 2.0)});
  CHECK_THROWS_AS((void)measure::homodyne_sign(imag, 0), std::runtime_error);
}

TEST_CASE("homodyne of a single-sign state nulls the other branch") {
  auto [plus, minus] = measure::homodyne_sign(core::make_ket({2.0}), 0);
  CHECK(plus.probability == 1.0);
  CHECK(minus.probability == 0.0);
  CHECK(minus.null_state);
  CHECK(plus.raw_deficit == 0.0);
}

TEST_CASE("presence discrimination separates vacuum from lit terms") {
  // N(|0,2> + |2,0>), measured at mode 0
  KetSuperposition s = core::normalize(
      core::sum(core::make_ket({0.0, 2.0}), core::make_ket({2.0, 0.0})));
  auto [vac, click] = measure::discriminate_presence(s, 0);
  CHECK(vac.symbol == "vac");
  CHECK(vac.probability == 0.5);
  CHECK(click.probability == 0.5);
  // cross overlap <0|2><2|0> = e^-4
  CHECK(vac.raw_deficit == doctest::Approx(kExpM4 / (1.0 + kExpM4)).epsilon(1e-12));
  CHECK(core::terms_match(vac.post, core::make_ket({0.0, 2.0}), 1e-12));
  CHECK(core::terms_match(click.post, core::make_ket({2.0, 0.0}), 1e-12));
}

TEST_CASE("presence discrimination rejects the gray zone") {
  KetSuperposition gray = core::make_ket({0.3, 1.0});
  CHECK_THROWS_AS((void)measure::discriminate_presence(gray, 0), std::runtime_error);
  KetSuperposition fine = core::make_ket({2.0, 1.0});
  CHECK_THROWS_AS((void)measure::discriminate_presence(fine, 0, 0.9, 0.5),
                  std::invalid_argument);
}

TEST_CASE("measurements reject bad inputs") {
  KetSuperposition unnormalized = core::make_ket({2.0}, 2.0);
  CHECK_THROWS_AS((void)measure::detect_onoff(unnormalized, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)measure::homodyne_sign(unnormalized, 0), std::invalid_argument);
  KetSuperposition ok = core::make_ket({2.0});
  CHECK_THROWS_AS((void)measure::detect_onoff(ok, 3), std::invalid_argument);
}

TEST_CASE("sequential measurements are order independent") {
  KetSuperposition s = optics::tensor(optics::cat_state(2.0, 1), optics::cat_state(1.5, -1));

  auto [vac_a, click_a] = measure::detect_onoff(s, 0);
  auto [plus_ab, minus_ab] = measure::homodyne_sign(click_a.post, 1);
  double p_ab = click_a.probability * plus_ab.probability;

  auto [plus_b, minus_b] = measure::homodyne_sign(s, 1);
  auto [vac_ba, click_ba] = measure::detect_onoff(plus_b.post, 0);
  double p_ba = plus_b.probability * click_ba.probability;

  CHECK(std::abs(p_ab - p_ba) <= 1e-12);
  CHECK(core::terms_match(plus_ab.post, click_ba.post, 1e-9));
}

TEST_CASE("feed forward applies the matching rule") {
  measure::FeedForwardRule rule = {
      {"plus", std::nullopt},
      {"minus", measure::FeedForwardAction{1, kPi}},
  };

  KetSuperposition s = optics::tensor(optics::cat_state(2.0, 1), optics::coherent_state(1.0));
  auto [plus, minus] = measure::homodyne_sign(s, 0);

  KetSuperposition untouched = measure::feed_forward(plus, rule);
  CHECK(core::terms_match(untouched, plus.post, 1e-12));

  KetSuperposition flipped = measure::feed_forward(minus, rule);
  CHECK(std::abs(flipped.terms[0].amps[1] - cplx(-1.0)) <= 1e-15);

  measure::BranchOutcome odd;
  odd.symbol = "click";
  CHECK_THROWS_AS((void)measure::feed_forward(odd, rule), std::runtime_error);
}
