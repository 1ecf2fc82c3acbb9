#pragma once

#include <stdexcept>
#include <string>

namespace gridshare {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Field-level domain violation (inverse of zero).
class DomainError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

// The supplied cells do not contain a decodable access set.
class InsufficientShares : public Error {
public:
    explicit InsufficientShares(const std::string& what = "insufficient shares") : Error(what) {}
};

// Two observations of the same data disagree.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class MalformedHeader : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gridshare
