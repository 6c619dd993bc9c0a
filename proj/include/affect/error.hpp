#pragma once

#include <stdexcept>
#include <string>

namespace affect {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input: XML, JSONL records, lexicon lines, model responses.
class ParseError : public Error {
public:
  using Error::Error;
};

// Record that parses but violates the schema (missing key, bad enum value).
class SchemaError : public Error {
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

// Precondition violated by the caller.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

}  // namespace affect
