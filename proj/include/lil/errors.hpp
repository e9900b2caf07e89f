#pragma once

#include <stdexcept>
#include <string>

namespace lil {

/// Malformed external data (IDX files, CSV, checkpoints). The message names
/// the offending field.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& field, const std::string& detail)
        : std::runtime_error(field + ": " + detail), field_(field) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace lil
