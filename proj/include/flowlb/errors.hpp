#pragma once

#include <stdexcept>
#include <string>

namespace flowlb {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define FLOWLB_DEFINE_ERROR(name)                                                                  \
    class name : public error {                                                                    \
      public:                                                                                      \
        explicit name(const std::string& what) : error(#name ": " + what) {}                       \
    }

FLOWLB_DEFINE_ERROR(OutOfDomain);
FLOWLB_DEFINE_ERROR(OutOfTimeRange);
FLOWLB_DEFINE_ERROR(SizeMismatch);
FLOWLB_DEFINE_ERROR(MalformedHeader);
FLOWLB_DEFINE_ERROR(TooFewBlocks);
FLOWLB_DEFINE_ERROR(MalformedTree);
FLOWLB_DEFINE_ERROR(InvalidRecord);
FLOWLB_DEFINE_ERROR(NoData);
FLOWLB_DEFINE_ERROR(DivideByZero);
FLOWLB_DEFINE_ERROR(EmptyNeighborhood);
FLOWLB_DEFINE_ERROR(ZeroWorkload);
FLOWLB_DEFINE_ERROR(NoWork);
FLOWLB_DEFINE_ERROR(IoFailure);
FLOWLB_DEFINE_ERROR(ConfigError);

#undef FLOWLB_DEFINE_ERROR

} // namespace flowlb
