#pragma once

#include <stdexcept>
#include <string>

namespace negmn {

// Invalid parameter values (out-of-domain p, nonpositive shapes, bad indices).
class domain_error : public std::invalid_argument {
 public:
  explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// A caller-supplied function violated its stated contract.
class contract_error : public std::logic_error {
 public:
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// A numerical routine could not reach its requested accuracy.
// `achieved` carries the error bound that was actually attained.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

// A request exceeded the configured memory/enumeration budget.
class resource_error : public std::runtime_error {
 public:
  explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace negmn
