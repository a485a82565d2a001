// SPDX-License-Identifier: Apache-2.0
#include "csisteg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csisteg/errors.hpp"

namespace csisteg::cfg {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

const std::vector<std::pair<std::string, SchemaEntry>>& schema() {
    static const std::vector<std::pair<std::string, SchemaEntry>> entries = {
        // codec dimensions
        {"secret_len", {"14", "secret message length N in bits"}},
        {"tap_count", {"30", "FIR taps L per steganographic filter"}},
        {"threshold", {"0.5", "bit decision threshold on extractor outputs"}},

        // training
        {"batch_size", {"64", "training batch size"}},
        {"learning_rate", {"3e-4", "initial RMSProp learning rate"}},
        {"lr_decay_factor", {"0.1", "learning-rate multiplier on validation plateaus"}},
        {"lr_patience_epochs", {"10", "plateau length before each decay"}},
        {"early_stop_epochs", {"20", "plateau length that stops training"}},
        {"epochs_max", {"500", "hard cap on training epochs"}},
        {"steps_per_epoch", {"50", "optimizer steps per epoch"}},
        {"val_size", {"4096", "validation secrets per epoch"}},
        {"val_noise_db", {"20", "center validation noise level, dB below quotient RMS"}},
        {"train_noise_db_min", {"5", "lower edge of the per-batch training noise draw"}},
        {"train_noise_db_max", {"30", "upper edge of the per-batch training noise draw"}},
        {"transparency_floor", {"0.25", "min in-band filter gain, fraction of filter RMS"}},
        {"transparency_weight", {"10", "weight of the transparency hinge in the loss"}},
        {"gen_hidden", {"128,256,256,256,128", "generator hidden layer widths"}},
        {"ext_hidden", {"256,128", "extractor hidden layer widths"}},

        // fine-tuning
        {"ft_batch_size", {"32", "fine-tuning batch size"}},
        {"ft_learning_rate", {"3e-5", "fine-tuning Adam learning rate"}},
        {"ft_epochs", {"100", "fine-tuning epochs"}},

        // channel
        {"packet_interval_s", {"158e-6", "spacing between the two packets of a pair"}},
        {"carrier_hz", {"2.462e9", "carrier frequency for Doppler conversion"}},
        {"speed_mps", {"0", "scatterer speed; 0 freezes the channel between packets"}},
        {"snr_db", {"30", "waveform SNR; inf disables noise"}},

        // hardware overlay
        {"ripple_amp", {"0", "front-end ripple bound on |CSI| deviation"}},
        {"max_delay_samples", {"0", "largest front-end group delay"}},
        {"iq_imbalance", {"0", "IQ gain imbalance epsilon"}},
        {"device_seed", {"7", "seed fixing the simulated device"}},

        // experiments
        {"kind", {"capacity", "experiment kind: capacity, robustness or loopback"}},
        {"n_grid", {"14,21,28,35,42", "secret lengths swept by evaluate"}},
        {"l_grid", {"30", "tap counts swept by evaluate"}},
        {"snr_grid", {"25", "SNR values swept by evaluate"}},
        {"trials", {"10000", "Monte-Carlo trials per grid cell"}},
        {"threads", {"0", "worker threads; 0 uses the hardware count"}},
        {"model_dir", {".", "directory holding model_n{N}_l{L}.csm files"}},

        // io
        {"model_path", {"model.csm", "codec model file to read or write"}},
        {"model_out_path", {"model_tuned.csm", "where finetune writes the updated model"}},
        {"out_path", {"report.csv", "output report or waveform file"}},
        {"trace_path", {"traces.csv", "CSI trace file to read or write"}},
        {"device_tag", {"sim0", "device label written into exported traces"}},
        {"count", {"500", "number of CSI pairs to simulate"}},
        {"payload_symbols", {"1", "OFDM data symbols per packet"}},
        {"secret_bits", {"", "explicit secret as a 0/1 string; empty draws from seed"}},

        {"seed", {"1", "master seed for every random stream"}},
    };
    return entries;
}

Config Config::defaults() {
    Config c;
    for (const auto& [key, entry] : schema()) c.values_[key] = entry.default_value;
    return c;
}

Config Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config c = defaults();
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line has no '=': \"" + stripped + "\"", lineno);
        const std::string key = trim(stripped.substr(0, eq));
        if (key.empty()) throw ParseError("config line has an empty key", lineno);
        try {
            c.set(key, trim(stripped.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        }
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    for (const auto& [known, entry] : schema()) {
        if (known == key) {
            values_[key] = value;
            return;
        }
    }
    throw ConfigError("unknown config key: " + key);
}

void Config::set_pair(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override is not of the form key=value: " + assignment);
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

int Config::get_int(const std::string& key) const {
    const std::string& v = get_string(key);
    try {
        std::size_t used = 0;
        const long long parsed = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        if (parsed < INT32_MIN || parsed > INT32_MAX) throw std::out_of_range("range");
        return static_cast<int>(parsed);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an integer: \"" + v + "\"");
    }
}

double Config::get_double(const std::string& key) const {
    const std::string& v = get_string(key);
    try {
        std::size_t used = 0;
        const double parsed = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: \"" + v + "\"");
    }
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& v = get_string(key);
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long parsed = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an unsigned integer: \"" + v + "\"");
    }
}

namespace {

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) parts.push_back(trim(item));
    return parts;
}

} // namespace

std::vector<int> Config::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& part : split_commas(get_string(key))) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-integer element: \"" + part +
                              "\"");
        }
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& part : split_commas(get_string(key))) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a non-numeric element: \"" + part +
                              "\"");
        }
    }
    return out;
}

std::string Config::dump() const {
    std::ostringstream out;
    for (const auto& [key, entry] : schema()) out << key << '=' << values_.at(key) << '\n';
    return out.str();
}

train::TrainConfig train_config_from(const Config& c) {
    train::TrainConfig t;
    t.secret_len = c.get_int("secret_len");
    t.tap_count = c.get_int("tap_count");
    t.batch_size = c.get_int("batch_size");
    t.learning_rate = c.get_double("learning_rate");
    t.lr_decay_factor = c.get_double("lr_decay_factor");
    t.lr_patience_epochs = c.get_int("lr_patience_epochs");
    t.early_stop_epochs = c.get_int("early_stop_epochs");
    t.train_noise_db_min = c.get_double("train_noise_db_min");
    t.train_noise_db_max = c.get_double("train_noise_db_max");
    t.transparency_floor = c.get_double("transparency_floor");
    t.transparency_weight = c.get_double("transparency_weight");
    t.val_noise_db = c.get_double("val_noise_db");
    t.val_size = c.get_int("val_size");
    t.steps_per_epoch = c.get_int("steps_per_epoch");
    t.epochs_max = c.get_int("epochs_max");
    t.seed = c.get_u64("seed");
    t.gen_hidden = c.get_int_list("gen_hidden");
    t.ext_hidden = c.get_int_list("ext_hidden");
    t.validate();
    return t;
}

train::FinetuneConfig finetune_config_from(const Config& c) {
    train::FinetuneConfig f;
    f.batch_size = c.get_int("ft_batch_size");
    f.learning_rate = c.get_double("ft_learning_rate");
    f.epochs = c.get_int("ft_epochs");
    f.seed = c.get_u64("seed");
    return f;
}

double doppler_from_speed(double speed_mps, double carrier_hz) {
    return speed_mps * carrier_hz / kSpeedOfLight;
}

chan::ChannelProfile profile_from(const Config& c) {
    chan::ChannelProfile p = chan::ChannelProfile::tgn_like_default();
    p.doppler_hz = doppler_from_speed(c.get_double("speed_mps"), c.get_double("carrier_hz"));
    p.packet_interval_s = c.get_double("packet_interval_s");
    p.snr_db = c.get_double("snr_db");
    p.validate();
    return p;
}

chan::ImpairmentCfg overlay_from(const Config& c) {
    chan::ImpairmentCfg o;
    o.ripple_amp = c.get_double("ripple_amp");
    o.max_delay_samples = c.get_int("max_delay_samples");
    o.iq_imbalance = c.get_double("iq_imbalance");
    o.validate();
    return o;
}

} // namespace csisteg::cfg
