#pragma once

#include <stdexcept>
#include <string>

namespace nastaliq {

// Every failure surfaced by the library carries one of these kinds. The
// numeric values are the process exit codes used by the command-line tool
// and the status codes returned by the C API.
enum class ErrorKind : int {
  usage = 1,     // bad argument, bad flag, bad configuration key
  data = 2,      // unreadable / malformed / inconsistent input data
  internal = 3,  // invariant violation inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& what) {
  throw Error(ErrorKind::usage, what);
}

[[noreturn]] inline void throw_data(const std::string& what) {
  throw Error(ErrorKind::data, what);
}

[[noreturn]] inline void throw_internal(const std::string& what) {
  throw Error(ErrorKind::internal, what);
}

#define NASTALIQ_CHECK(cond, msg)                                   \
  do {                                                              \
    if (!(cond)) ::nastaliq::throw_internal(std::string(msg) +      \
                                            " [" #cond "]");        \
  } while (0)

}  // namespace nastaliq
