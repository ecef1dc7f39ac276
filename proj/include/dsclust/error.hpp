#pragma once

#include <stdexcept>
#include <string>

namespace dsclust {

// Base type for every validation or computation error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define DSCLUST_ERROR(NAME)                                     \
  class NAME : public Error {                                   \
  public:                                                       \
    explicit NAME(const std::string& what) : Error(what) {}     \
  }

// Frame / subset construction
DSCLUST_ERROR(EmptyFrame);
DSCLUST_ERROR(FrameTooLarge);
DSCLUST_ERROR(DuplicateLabel);
DSCLUST_ERROR(UnknownLabel);
DSCLUST_ERROR(FrameMismatch);

// Mass function construction and combination
DSCLUST_ERROR(EmptyFocalElement);
DSCLUST_ERROR(DuplicateFocalElement);
DSCLUST_ERROR(NonPositiveMass);
DSCLUST_ERROR(MassSumOutOfTolerance);
DSCLUST_ERROR(TotalConflict);
DSCLUST_ERROR(EmptyInput);

// Triage
DSCLUST_ERROR(InvalidConfig);
DSCLUST_ERROR(NegativeAge);

// Clustering
DSCLUST_ERROR(TooFewReports);
DSCLUST_ERROR(DegenerateMatrix);
DSCLUST_ERROR(InfiniteWeight);
DSCLUST_ERROR(InstanceTooLarge);
DSCLUST_ERROR(KOutOfRange);
DSCLUST_ERROR(NoConvergence);

// Classification
DSCLUST_ERROR(AllImplausible);
DSCLUST_ERROR(DegeneratePartition);
DSCLUST_ERROR(PartitionMismatch);
DSCLUST_ERROR(EmptyTable);

// Pipeline / persistence
DSCLUST_ERROR(DuplicateReportId);
DSCLUST_ERROR(IoError);
DSCLUST_ERROR(SchemaVersionMismatch);
DSCLUST_ERROR(ParseError);

#undef DSCLUST_ERROR

}  // namespace dsclust
