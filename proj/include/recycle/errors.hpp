/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace recycle {

/// Root of every error thrown by the library. Callers that only need to
/// report and exit can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input bytes (record lines, service responses). Keeps the raw
/// payload so the caller can log exactly what was rejected.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw = {})
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Degenerate numeric input: zero vectors, empty sequences, zero lengths.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// A judge service answered with something that is not a verdict.
class JudgeError : public ParseError {
public:
    using ParseError::ParseError;
};

class EmptyRephraseError : public ParseError {
public:
    using ParseError::ParseError;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class ServiceError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace recycle
