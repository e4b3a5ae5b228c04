// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace s3kit {

/// Failure category. The CLI maps each category to a distinct exit code.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error numeric_error(const std::string& what) { return Error(ErrorKind::numeric, what); }

/// Raised by record parsers; `field()` names the offending key.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& what)
        : Error(ErrorKind::data, "parse error in '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace s3kit
