// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csisteg/config.hpp"
#include "csisteg/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

using namespace csisteg;
using namespace csisteg::cfg;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents) : path(name) {
        std::ofstream out(path, std::ios::trunc);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("defaults carry the pinned constants") {
    const Config c = Config::defaults();
    CHECK(c.get_int("secret_len") == 14);
    CHECK(c.get_int("tap_count") == 30);
    CHECK(c.get_int("batch_size") == 64);
    CHECK(c.get_double("learning_rate") == 3e-4);
    CHECK(c.get_double("packet_interval_s") == 158e-6);
    CHECK(c.get_double("carrier_hz") == 2.462e9);
    CHECK(c.get_double("snr_db") == 30.0);
    CHECK(c.get_int("trials") == 10000);
    CHECK(c.get_double("threshold") == 0.5);
    CHECK(c.get_double("ft_learning_rate") == 3e-5);
    CHECK(c.get_int("ft_batch_size") == 32);
    CHECK(c.get_int_list("gen_hidden") == std::vector<int>{128, 256, 256, 256, 128});
    CHECK(c.get_int_list("ext_hidden") == std::vector<int>{256, 128});
    CHECK(c.get_int_list("n_grid") == std::vector<int>{14, 21, 28, 35, 42});
}

TEST_CASE("config files parse with comments, blanks and spacing") {
    TempFile f("test_config_tmp1.cfg",
               "# channel section\n"
               "\n"
               "snr_db = 17.5\n"
               "secret_len=21\n"
               "  speed_mps =  1.0  \n"
               "secret_bits = 0101\n");
    const Config c = Config::load_file(f.path);
    CHECK(c.get_double("snr_db") == 17.5);
    CHECK(c.get_int("secret_len") == 21);
    CHECK(c.get_double("speed_mps") == 1.0);
    CHECK(c.get_string("secret_bits") == "0101");
    // untouched keys keep their defaults
    CHECK(c.get_int("tap_count") == 30);
}

TEST_CASE("parse and schema errors carry their location") {
    TempFile noeq("test_config_tmp2.cfg", "snr_db = 10\nthis line is wrong\n");
    try {
        Config::load_file(noeq.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    TempFile unknown("test_config_tmp3.cfg", "\n\nno_such_key = 5\n");
    try {
        Config::load_file(unknown.path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    TempFile emptykey("test_config_tmp4.cfg", " = 5\n");
    CHECK_THROWS_AS(Config::load_file(emptykey.path), ParseError);

    CHECK_THROWS_AS(Config::load_file("does_not_exist.cfg"), ConfigError);
}

TEST_CASE("overrides validate their key") {
    Config c = Config::defaults();
    c.set_pair("trials=250");
    CHECK(c.get_int("trials") == 250);
    c.set_pair("snr_grid = 10, 20, 30");
    CHECK(c.get_double_list("snr_grid") == std::vector<double>{10.0, 20.0, 30.0});
    CHECK_THROWS_AS(c.set_pair("bogus=1"), ConfigError);
    CHECK_THROWS_AS(c.set_pair("no separator"), ConfigError);
    CHECK_THROWS_AS(c.set("also_bogus", "1"), ConfigError);
}

TEST_CASE("typed getters reject malformed values") {
    Config c = Config::defaults();
    c.set("trials", "12.5");
    CHECK_THROWS_AS(c.get_int("trials"), ConfigError);
    c.set("trials", "12x");
    CHECK_THROWS_AS(c.get_int("trials"), ConfigError);
    c.set("snr_db", "fast");
    CHECK_THROWS_AS(c.get_double("snr_db"), ConfigError);
    c.set("snr_db", "inf");
    CHECK(std::isinf(c.get_double("snr_db")));
    c.set("seed", "-3");
    CHECK_THROWS_AS(c.get_u64("seed"), ConfigError);
    c.set("seed", "18446744073709551615");
    CHECK(c.get_u64("seed") == 18446744073709551615ULL);
    c.set("l_grid", "10,,30");
    CHECK_THROWS_AS(c.get_int_list("l_grid"), ConfigError);
    CHECK_THROWS_AS(c.get_string("missing_key"), ConfigError);
}

TEST_CASE("dump round-trips through a file") {
    Config c = Config::defaults();
    c.set("snr_db", "12.25");
    c.set("kind", "robustness");
    const std::string dumped = c.dump();
    TempFile f("test_config_tmp5.cfg", dumped);
    const Config back = Config::load_file(f.path);
    CHECK(back.dump() == dumped);
    // dump covers the whole schema
    for (const auto& [key, entry] : schema())
        CHECK(dumped.find(key + "=") != std::string::npos);
}

TEST_CASE("train config assembly maps and validates") {
    Config c = Config::defaults();
    c.set("secret_len", "21");
    c.set("epochs_max", "77");
    const auto t = train_config_from(c);
    CHECK(t.secret_len == 21);
    CHECK(t.tap_count == 30);
    CHECK(t.batch_size == 64);
    CHECK(t.learning_rate == 3e-4);
    CHECK(t.lr_decay_factor == 0.1);
    CHECK(t.lr_patience_epochs == 10);
    CHECK(t.early_stop_epochs == 20);
    CHECK(t.epochs_max == 77);
    CHECK(t.steps_per_epoch == 50);
    CHECK(t.val_size == 4096);
    CHECK(t.gen_hidden.size() == 5);

    c.set("batch_size", "0");
    CHECK_THROWS_AS(train_config_from(c), std::invalid_argument);
}

TEST_CASE("fine-tune config assembly") {
    Config c = Config::defaults();
    c.set("ft_epochs", "7");
    c.set("seed", "99");
    const auto f = finetune_config_from(c);
    CHECK(f.batch_size == 32);
    CHECK(f.learning_rate == 3e-5);
    CHECK(f.epochs == 7);
    CHECK(f.seed == 99);
}

TEST_CASE("channel profile assembly converts speed to Doppler") {
    CHECK(doppler_from_speed(0.0, 2.462e9) == 0.0);
    CHECK(doppler_from_speed(20.0, 2.462e9) ==
          doctest::Approx(164.2469).epsilon(1e-4));

    Config c = Config::defaults();
    c.set("speed_mps", "20");
    c.set("snr_db", "inf");
    const auto p = profile_from(c);
    CHECK(p.doppler_hz == doctest::Approx(164.2469).epsilon(1e-4));
    CHECK(p.packet_interval_s == 158e-6);
    CHECK(std::isinf(p.snr_db));
    CHECK(p.tap_powers.size() == 7);

    c.set("packet_interval_s", "-1");
    CHECK_THROWS_AS(profile_from(c), std::invalid_argument);
}

TEST_CASE("overlay assembly validates ranges") {
    Config c = Config::defaults();
    c.set("ripple_amp", "0.05");
    c.set("max_delay_samples", "2");
    c.set("iq_imbalance", "0.1");
    const auto o = overlay_from(c);
    CHECK(o.ripple_amp == 0.05);
    CHECK(o.max_delay_samples == 2);
    CHECK(o.iq_imbalance == 0.1);
    CHECK_FALSE(o.is_zero());

    c.set("iq_imbalance", "1.5");
    CHECK_THROWS_AS(overlay_from(c), std::invalid_argument);
}
