#include <gtest/gtest.h>

#include <string>

#include "beamsim/config.hpp"
#include "beamsim/presets.hpp"

using namespace beamsim;

namespace {

const std::string kMinimal = R"(
scenario_id = "mini"
[array]
sensors = 4
[noise]
power = 0.05
[[sources]]
doa_deg = 90
[[sources]]
doa_deg = 40.5
power_db_rel_soi = 3   # integer accepted for a float field
active_from = 10
active_until = 20
[run]
snapshots = 30
runs = 2
seed = 9
[mechanism.fss]
mu = 1e-3
)";

std::string with(const std::string& extra) { return kMinimal + extra; }

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ParseConfig, MinimalScenario) {
    const auto spec = parse_config(kMinimal);
    const auto& sc = spec.scenario;
    EXPECT_EQ(sc.id, "mini");
    EXPECT_EQ(sc.geometry.sensors, 4u);
    EXPECT_EQ(sc.geometry.spacing_over_wavelength, 0.5);
    EXPECT_EQ(sc.noise_power, 0.05);
    ASSERT_EQ(sc.sources.size(), 2u);
    EXPECT_EQ(sc.sources[0].power, 1.0);
    EXPECT_EQ(sc.sources[0].active_until, kUnbounded);
    EXPECT_NEAR(sc.sources[1].power, 1.9952623149688795, 1e-15);
    EXPECT_EQ(sc.sources[1].active_from, 10u);
    EXPECT_EQ(sc.sources[1].active_until, 20u);
    EXPECT_EQ(sc.snapshots, 30u);
    EXPECT_EQ(sc.runs, 2u);
    EXPECT_EQ(sc.master_seed, 9u);
    EXPECT_EQ(sc.presumed_doa_offset_deg, 0.0);
    ASSERT_EQ(spec.mechanisms.size(), 1u);
    EXPECT_EQ(spec.mechanisms[0].label, "fss");
    EXPECT_EQ(kind_of(spec.mechanisms[0].mechanism), MechanismKind::fss);
}

TEST(ParseConfig, ScenarioOnePreset) {
    const auto spec = load_preset("scenario1");
    const auto& sc = spec.scenario;
    EXPECT_EQ(sc.geometry.sensors, 16u);
    EXPECT_EQ(sc.noise_power, 0.01);
    ASSERT_EQ(sc.sources.size(), 6u);
    EXPECT_EQ(sc.sources[0].power, 1.0);
    EXPECT_NEAR(sc.sources[1].power, from_db(4.0), 1e-15);
    EXPECT_EQ(sc.sources[2].power, 1.0);
    for (int k = 3; k < 6; ++k) EXPECT_NEAR(sc.sources[k].power, from_db(-0.5), 1e-15);
    EXPECT_EQ(spec.mechanisms.size(), 4u);

    const auto& mass = std::get<Mass>(spec.mechanisms[2].mechanism).params();
    EXPECT_EQ(mass.alpha, 0.98);
    EXPECT_EQ(mass.gamma, 1e-3);
    EXPECT_EQ(mass.mu0, 1e-5);
    EXPECT_EQ(mass.bounds.mu_max, 1e-4);
    EXPECT_EQ(mass.bounds.mu_min, 1e-6);
    const auto& taass = std::get<Taass>(spec.mechanisms[3].mechanism).params();
    EXPECT_EQ(taass.beta, 0.99);
    EXPECT_EQ(taass.mu0, 1e-4);
    EXPECT_EQ(taass.bounds.mu_max, 3e-4);
}

TEST(ParseConfig, MismatchAndScenarioTwoPresets) {
    EXPECT_EQ(load_preset("scenario1_mismatch").scenario.presumed_doa_offset_deg, 2.0);
    const auto s2 = load_preset("scenario2");
    EXPECT_EQ(s2.scenario.snapshots, 2000u);
    EXPECT_EQ(s2.scenario.sources.size(), 7u);
    EXPECT_EQ(s2.scenario.sources[5].active_from, 1000u);
    EXPECT_NEAR(s2.scenario.sources[5].power, from_db(2.0), 1e-15);
    EXPECT_EQ(std::get<Mass>(s2.mechanisms[2].mechanism).params().bounds.mu_max, 3e-3);
    EXPECT_EQ(std::get<Taass>(s2.mechanisms[3].mechanism).params().bounds.mu_max, 5e-3);
}

TEST(ParseConfig, InvertedBoundsNameTheCondition) {
    const auto msg = error_of(with("[mechanism.mass]\nalpha = 0.98\ngamma = 1e-3\nmu0 = 1e-5\nmu_min = 1e-4\nmu_max = 1e-6\n"));
    EXPECT_NE(msg.find("0 < mu_min < mu_max"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 20"), std::string::npos) << msg;
}

TEST(ParseConfig, MissingMechanismsIsAnError) {
    std::string text = kMinimal.substr(0, kMinimal.find("[mechanism.fss]"));
    EXPECT_NE(error_of(text).find("[mechanism.<name>]"), std::string::npos);
}

TEST(ParseConfig, ErrorsCarryLinePositions) {
    EXPECT_NE(error_of(with("[mechanism.taass]\nalpha = 0.98\nbeta = 0.99\ngamma = 1e-3\nmu0 = 1e-4\nmu_min = 1e-6\nmu_max = 3e-4\nbogus = 1\n")).find("line 27: [mechanism.taass]: unknown key 'bogus'"),
              std::string::npos);
    EXPECT_NE(error_of(with("[surprise]\n")).find("line 20: unknown table [surprise]"), std::string::npos);
    EXPECT_NE(error_of(with("[mechanism.x]\nkind = \"lms\"\n")).find("unknown mechanism kind 'lms'"), std::string::npos);
    EXPECT_NE(error_of("[array]\nsensors = 16x\n").find("line 2: cannot parse value"), std::string::npos);
    EXPECT_NE(error_of("[array]\nsensors = 16\nsensors = 8\n").find("line 3: duplicate key"), std::string::npos);
    EXPECT_NE(error_of("[array\n").find("line 1: malformed table header"), std::string::npos);
    EXPECT_NE(error_of("just words\n").find("line 1: expected 'key = value'"), std::string::npos);
    EXPECT_NE(error_of(with("[array]\n")).find("duplicate table [array]"), std::string::npos);
    EXPECT_NE(error_of("name = \"open\n").find("unterminated string"), std::string::npos);
}

TEST(ParseConfig, SourceValidation) {
    const auto both = R"(
[[sources]]
doa_deg = 10
power = 1
power_db_rel_soi = 0
)";
    EXPECT_NE(error_of(with(both)).find("either 'power' or 'power_db_rel_soi'"), std::string::npos);
    EXPECT_NE(error_of(with("[[sources]]\ndoa_deg = 190\n")).find("outside (0, 180)"), std::string::npos);
    EXPECT_NE(error_of(with("[[sources]]\ndoa_deg = 10\nactive_from = 5\nactive_until = 5\n")).find("active_from < active_until"),
              std::string::npos);

    std::string soi_db = kMinimal;
    soi_db.replace(soi_db.find("doa_deg = 90"), 12, "doa_deg = 90\npower_db_rel_soi = 3");
    EXPECT_NE(error_of(soi_db).find("must be 0"), std::string::npos);
}

TEST(ParseConfig, EndfireNeedsExplicitOverride) {
    std::string text = kMinimal;
    text.replace(text.find("doa_deg = 90"), 12, "doa_deg = 0");
    EXPECT_NE(error_of(text).find("outside (0, 180)"), std::string::npos);
    text.replace(text.find("sensors = 4"), 11, "sensors = 4\nallow_endfire = true");
    EXPECT_NO_THROW(parse_config(text));
}

TEST(ParseConfig, CommentsStringsAndSpecialFloats) {
    const auto tables = toml::parse("a = \"x # not a comment\" # comment\nb = -inf\nc = 1_000\nd = +2.5e-3\n");
    ASSERT_EQ(tables.size(), 1u);
    const auto& e = tables[0].entries;
    EXPECT_EQ(std::get<std::string>(e[0].second.data), "x # not a comment");
    EXPECT_TRUE(std::isinf(std::get<double>(e[1].second.data)));
    EXPECT_EQ(std::get<std::int64_t>(e[2].second.data), 1000);
    EXPECT_EQ(std::get<double>(e[3].second.data), 2.5e-3);
}

TEST(Presets, AllBundledPresetsParse) {
    const auto names = preset_names();
    EXPECT_EQ(names, (std::vector<std::string>{"scenario1", "scenario1_mismatch", "scenario2"}));
    for (const auto& name : names) EXPECT_NO_THROW(load_preset(name)) << name;
    EXPECT_THROW(preset_text("nope"), std::out_of_range);
}
