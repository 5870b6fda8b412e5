#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "linksim/config.hpp"
#include "linksim/csv.hpp"
#include "linksim/experiments.hpp"

using namespace linksim;

namespace {

KeyValueConfig parse(const std::string& text) {
    std::istringstream in(text);
    return KeyValueConfig::parse(in, "test");
}

} // namespace

TEST_CASE("key-value parsing handles comments, blanks and whitespace") {
    const KeyValueConfig cfg = parse(
        "# topology\n"
        "gpu_count = 2\n"
        "\n"
        "links = 0-1   # one NVLink\n"
        "  clock_hz=1380000000\n"
        "noise_sigma_cycles = 8800\n");
    CHECK(cfg.get_i64("gpu_count", 0) == 2);
    CHECK(cfg.get_double("clock_hz", 0.0) == 1380000000.0);
    CHECK(cfg.get_double("noise_sigma_cycles", 0.0) == 8800.0);
    const auto pairs = cfg.get_link_pairs("links");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::pair<int, int>{0, 1});
    CHECK(cfg.get_string("missing", "fallback") == "fallback");
}

TEST_CASE("malformed lines and values name the problem") {
    CHECK_THROWS_WITH_AS(parse("just some words\n"), doctest::Contains("key = value"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse("a = 1\na = 2\n"), doctest::Contains("duplicate"),
                         config_error);
    CHECK_THROWS_WITH_AS(parse("= 3\n"), doctest::Contains("empty key"), config_error);

    const KeyValueConfig cfg = parse("n = abc\nb = maybe\nl = 0:1\n");
    CHECK_THROWS_WITH_AS(cfg.get_i64("n", 0), doctest::Contains("'n'"), config_error);
    CHECK_THROWS_WITH_AS(cfg.get_bool("b", false), doctest::Contains("'b'"), config_error);
    CHECK_THROWS_WITH_AS(cfg.get_link_pairs("l"), doctest::Contains("a-b"), config_error);
}

TEST_CASE("missing config files are reported") {
    CHECK_THROWS_WITH_AS(KeyValueConfig::load("/no/such/file.cfg"),
                         doctest::Contains("cannot open"), config_error);
}

TEST_CASE("load_sim_setup applies defaults and rejects unknown keys") {
    SUBCASE("defaults") {
        const SimSetup s = load_sim_setup(parse(""));
        CHECK(s.topology.gpu_count == 2);
        CHECK(s.topology.bytes_per_cycle == 64.0);
        CHECK(s.topology.latency.idle_base_cycles == 28356.0);
        CHECK(s.channel.payload_bytes == 1310720);
        CHECK(s.channel.probe_bytes == 256);
        CHECK(s.channel.threshold_cycles == 55000.0);
        CHECK_FALSE(s.threshold_from_config);
        CHECK(s.channel.preamble_len == 4);
        CHECK(s.fingerprint.profiles.size() == 4);
        CHECK(s.runs == 5);
    }

    SUBCASE("unknown keys fail loudly") {
        CHECK_THROWS_WITH_AS(load_sim_setup(parse("slot_cylces = 9\n")),
                             doctest::Contains("slot_cylces"), config_error);
    }

    SUBCASE("contention scope string is validated") {
        CHECK_THROWS_WITH_AS(load_sim_setup(parse("contention_scope = both\n")),
                             doctest::Contains("contention_scope"), config_error);
        CHECK(load_sim_setup(parse("contention_scope = direction\n"))
                  .topology.contention_scope == ContentionScope::Direction);
    }

    SUBCASE("custom profiles extend the built-ins") {
        const SimSetup s = load_sim_setup(parse(
            "profile.spiky.burst_period = 65536\n"
            "profile.spiky.duty = 0.25\n"
            "profile.spiky.jitter_sigma_cycles = 100\n"));
        REQUIRE(s.fingerprint.profiles.size() == 5);
        const WorkloadProfile& p = s.fingerprint.profiles.back();
        CHECK(p.name == "spiky");
        CHECK(p.burst_bytes == 65536 / 4 * 64);
        CHECK(p.duty == 0.25);
    }

    SUBCASE("profile overrides tweak a built-in") {
        const SimSetup s = load_sim_setup(parse("profile.rf.jitter_sigma_cycles = 0\n"));
        CHECK(s.fingerprint.profiles.size() == 4);
        CHECK(s.fingerprint.profiles[0].name == "rf");
        CHECK(s.fingerprint.profiles[0].jitter_sigma_cycles == 0.0);
    }

    SUBCASE("profile with both duty and burst_bytes is rejected") {
        CHECK_THROWS_WITH_AS(load_sim_setup(parse(
                                 "profile.x.burst_period = 1000\n"
                                 "profile.x.duty = 0.5\n"
                                 "profile.x.burst_bytes = 100\n")),
                             doctest::Contains("not both"), config_error);
    }
}

TEST_CASE("format_double prints integers plainly and is stable") {
    CHECK(format_double(48362.0) == "48362");
    CHECK(format_double(55000.0) == "55000");
    CHECK(format_double(0.0322) == "0.0322");
    CHECK(format_double(45.4995) == "45.4995");
}
