#pragma once

#include <stdexcept>
#include <string>

namespace quantdesk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad period, too few bars, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Input data could not be ingested (missing file, malformed row, broken invariant).
class DataError : public Error {
public:
    using Error::Error;
};

/// The chat-completion transport failed to deliver a response.
class TransportError : public Error {
public:
    using Error::Error;
};

} // namespace quantdesk
