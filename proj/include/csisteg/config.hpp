// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_CONFIG_HPP
#define CSISTEG_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "csisteg/channel_sim.hpp"
#include "csisteg/trainer.hpp"

namespace csisteg::cfg {

struct SchemaEntry {
    std::string default_value;
    std::string help;
};

// Every recognized key with its default and one-line description, in
// documentation order. Defaults are the single source for all tuning
// constants; nothing else in the tree hard-codes them.
const std::vector<std::pair<std::string, SchemaEntry>>& schema();

// Flat typed key=value configuration. Keys are validated against the schema
// on every write; values are kept as text and parsed by the typed getters.
class Config {
  public:
    // all keys present at their schema defaults
    static Config defaults();

    // Parses a config file: one key=value per line, blank lines and lines
    // starting with '#' ignored. Throws ParseError (with the line number)
    // for malformed lines and ConfigError for unknown keys.
    static Config load_file(const std::string& path);

    // Single assignment, also used for command-line overrides ("key=value").
    void set(const std::string& key, const std::string& value);
    void set_pair(const std::string& assignment); // splits on the first '='

    const std::string& get_string(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const; // "inf" accepted
    std::uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;       // comma separated
    std::vector<double> get_double_list(const std::string& key) const; // comma separated

    // key=value lines in schema order, suitable for report provenance.
    std::string dump() const;

  private:
    std::map<std::string, std::string> values_;
};

// Assemblers for the typed structs used across the library. Conversions that
// involve physics (vehicle speed to Doppler at the configured carrier) live
// here so the constants appear exactly once.
train::TrainConfig train_config_from(const Config& c);
train::FinetuneConfig finetune_config_from(const Config& c);
chan::ChannelProfile profile_from(const Config& c);
chan::ImpairmentCfg overlay_from(const Config& c);

// speed * carrier / c, the maximum Doppler shift for the configured motion
double doppler_from_speed(double speed_mps, double carrier_hz);

} // namespace csisteg::cfg

#endif
