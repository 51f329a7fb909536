#pragma once

#include <stdexcept>
#include <string>

namespace mif {

// Every failure the library reports derives from Error so callers (the CLI in
// particular) can catch one type and still print a specific message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MIF_DECLARE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

MIF_DECLARE_ERROR(ShapeError)
MIF_DECLARE_ERROR(DomainError)
MIF_DECLARE_ERROR(IndexError)
MIF_DECLARE_ERROR(ContractError)
MIF_DECLARE_ERROR(DeterminismError)
MIF_DECLARE_ERROR(CheckpointError)
MIF_DECLARE_ERROR(ConfigError)
MIF_DECLARE_ERROR(TrainingError)
MIF_DECLARE_ERROR(PlanningError)
MIF_DECLARE_ERROR(InstantiationError)
MIF_DECLARE_ERROR(DataError)
MIF_DECLARE_ERROR(HarnessError)
MIF_DECLARE_ERROR(NotFoundError)
MIF_DECLARE_ERROR(IoError)

#undef MIF_DECLARE_ERROR

}  // namespace mif
