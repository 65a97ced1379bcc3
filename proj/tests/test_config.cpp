#include "scaling/config.hpp"
#include "scaling/errors.hpp"

#include <doctest.h>

#include <sstream>

using namespace scaling;

namespace {

EngineConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

} // namespace

TEST_CASE("defaults")
{
    const auto c = parse("");
    CHECK(c.bins_per_decade == 10);
    CHECK(c.strict_ingest);
    CHECK(c.fit.space == FitSpace::raw_loss);
    CHECK(c.fit.lm.max_iterations == 500);
    CHECK(c.fit.lm.xtol == 1e-10);
    CHECK(c.fit.huber_delta == 1e-3);
    CHECK(c.fit.max_points_per_run == 512);
    CHECK(c.smoothing.kind == Smoothing::Kind::none);
    CHECK_FALSE(c.envelope_only);
}

TEST_CASE("a full file with comments")
{
    const auto c = parse(R"(
# world-model run
profile.kind = wm_token
profile.d_z = 540
profile.d_a = 16     # action tokens
smoothing = ema
smoothing.half_life_tokens = 1e8
warmup_tokens = 1e7
bins_per_decade = 20
loss_units = bits
ingest.strict = false
fit.space = log_loss_huber
fit.init.alpha = 0.3, 0.6
fit.max_iterations = 200
fit.envelope_only = true
label = wm-540
)");
    CHECK(c.profile.kind == ArchitectureKind::wm_token);
    CHECK(c.profile.d_z == 540);
    CHECK(c.profile.d_a == 16);
    CHECK(c.smoothing.kind == Smoothing::Kind::ema);
    CHECK(c.smoothing.half_life_tokens == 1e8);
    CHECK(c.warmup_tokens == 1e7);
    CHECK(c.bins_per_decade == 20);
    CHECK(c.loss_units == LossUnits::bits);
    CHECK_FALSE(c.strict_ingest);
    CHECK(c.fit.space == FitSpace::log_loss_huber);
    CHECK(c.fit.grid.alphas == std::vector<double>{0.3, 0.6});
    CHECK(c.fit.lm.max_iterations == 200);
    CHECK(c.envelope_only);
    CHECK(c.label == "wm-540");
}

TEST_CASE("errors")
{
    CHECK_THROWS_AS((void)parse("no_such_key = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("bins_per_decade = 5\nbins_per_decade = 6\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("bins_per_decade = ten\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("bins_per_decade = 2.5\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("bins_per_decade = 0\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("fit.space = cubic\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("smoothing = ema\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("ingest.strict = maybe\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("fit.init.alpha = 0.2, -1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("just words\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("profile.kind = wm_token\nprofile.d_z = 0\n"), ConfigError);
    try {
        (void)parse("\n\nwarmup_tokens = x\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("apply_setting overrides a parsed file")
{
    auto c = parse("bins_per_decade = 5\n");
    apply_setting(c, "bins_per_decade", "8");
    CHECK(c.bins_per_decade == 8);
    CHECK_THROWS_AS(apply_setting(c, "bogus", "1"), ConfigError);
}

TEST_CASE("canonical form is stable and reparses to itself")
{
    const auto c = parse("label = x\nfit.init.n_c = 1, 1000\nprofile.kind = bc_cnn\n");
    const std::string text = c.canonical();
    CHECK(text == parse(text).canonical());
    CHECK(text.find("fit.init.n_c = 1,1000") != std::string::npos);
    CHECK(parse("label = y\n").canonical() != parse("label = x\n").canonical());
}

TEST_CASE("every listed key is accepted by apply_setting")
{
    const auto canonical = EngineConfig{}.canonical();
    for (auto key : config_keys()) {
        EngineConfig c;
        std::string value = "1";
        if (key == "profile.kind") value = "wm_token";
        else if (key == "smoothing") value = "none";
        else if (key == "loss_units") value = "nats";
        else if (key == "fit.space") value = "raw_loss";
        else if (key == "ingest.strict" || key == "fit.envelope_only") value = "true";
        else if (key == "label" || key == "output_dir") value = "x";
        CHECK_NOTHROW(apply_setting(c, key, value));
    }
}
