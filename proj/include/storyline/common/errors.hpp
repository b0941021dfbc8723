#pragma once

#include <stdexcept>
#include <string>

namespace storyline {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input bytes (JSON, wire frames, RLE) as opposed to well-formed
// input that breaks a rule.
class ParseError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A mock backend was asked for a key its fixture does not list.
class FixtureMissError : public Error {
 public:
  using Error::Error;
};

// The backend does not serve the requested capability.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// The backend answered, but the answer breaks the capability contract.
class InvalidOutputError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace storyline

namespace storyline {

// An error reported by a remote backend that has no more specific mapping.
class RemoteError : public Error {
 public:
  using Error::Error;
};

}  // namespace storyline
