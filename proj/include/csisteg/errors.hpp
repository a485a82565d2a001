// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_ERRORS_HPP
#define CSISTEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace csisteg {

/// Payload demodulation failed (e.g. a zero-gain subcarrier cannot be equalized).
struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what, int subcarrier = -1)
        : std::runtime_error(what), subcarrier(subcarrier) {}
    int subcarrier;
};

/// FIR filter with no energy; filtering it would produce an all-zero waveform.
struct DegenerateFilterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient.
struct TrainingDivergedError : std::runtime_error {
    explicit TrainingDivergedError(const std::string& what, int epoch = -1)
        : std::runtime_error(what), epoch(epoch) {}
    int epoch;
};

/// Malformed binary or structured file (bad magic, version, truncation, mixed schema).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Text-level parse failure; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what, long line = -1)
        : std::runtime_error(what), line(line) {}
    long line;
};

/// Invalid or inconsistent run configuration (missing model file, bad key, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace csisteg

#endif // CSISTEG_ERRORS_HPP
