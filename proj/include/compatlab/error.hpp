/*
 * Copyright 2026 The compatlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
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

namespace compatlab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A value violates a domain invariant (bad profile, bad test case, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An input file could not be parsed. Messages name the offending line.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A client/server exchange violated the protocol contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A bundle patch could not be applied (checksum mismatch, corruption).
class PatchError : public Error {
public:
    using Error::Error;
};

/// Invalid campaign or scheduler configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A transport send/receive failed (connection drop, framing garbage).
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace compatlab
