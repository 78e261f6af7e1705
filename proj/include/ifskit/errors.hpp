#pragma once

#include <stdexcept>
#include <string>

namespace ifskit {

// Error taxonomy shared by the library and the CLI exit-code contract:
//   domain_error     -> invalid mathematical input            (exit 1)
//   capability_error -> operation needs data the input lacks  (exit 1)
//   capacity_error   -> tolerance/depth unreachable in budget (exit 2)
//   io_error         -> file system problems                  (exit 3)

class domain_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class capability_error : public domain_error {
public:
  using domain_error::domain_error;
};

class capacity_error : public std::runtime_error {
public:
  explicit capacity_error(const std::string& what, double achieved = -1.0)
      : std::runtime_error(what), achieved_(achieved) {}

  // Best error actually reached before giving up; negative if not applicable.
  double achieved() const noexcept { return achieved_; }

private:
  double achieved_;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ifskit
