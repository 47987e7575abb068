#pragma once

#include <stdexcept>
#include <string>

namespace simstudy {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed study declaration or configuration document.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A persisted result exists but was produced by a different study setup.
class CacheInvalidError : public Error {
public:
    using Error::Error;
};

/// Unreadable or structurally invalid result file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Framing or decoding failure on the worker pipe.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A backend could not start or lost a worker mid-study.
class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace simstudy
