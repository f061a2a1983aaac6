#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beatscribe {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value fell outside its domain (pitch range, beat position, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Onsets were not strictly increasing.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied invalid input (empty audio, empty split, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Mismatched matrix shapes or feature dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A binary or text file did not follow its documented layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an id that has no entry (e.g. artist mapping).
class KeyError : public Error {
 public:
  using Error::Error;
};

/// Annotation parse failure. `path` is a JSON-pointer-like location.
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The beat grid ran out of beats after the chosen downbeat.
class InsufficientBeatsError : public Error {
 public:
  InsufficientBeatsError(std::size_t needed, std::size_t available)
      : Error("need " + std::to_string(needed) + " beats after the downbeat, only " +
              std::to_string(available) + " available"),
        needed_(needed),
        available_(available) {}

  std::size_t needed() const noexcept { return needed_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t needed_;
  std::size_t available_;
};

/// A sixteenth-note time fell outside the span covered by a feature matrix.
class CoverageError : public Error {
 public:
  CoverageError(std::size_t tick, double time_s)
      : Error("tick " + std::to_string(tick) + " at " + std::to_string(time_s) +
              " s is not covered by the feature frames"),
        tick_(tick) {}

  std::size_t tick() const noexcept { return tick_; }

 private:
  std::size_t tick_;
};

}  // namespace beatscribe
