#pragma once

#include <stdexcept>

namespace dagdist {

// W has spectral radius of W∘W at or above 1, so log det(I - W∘W) is undefined.
struct OutsideDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inner gradient descent left the admissible set and backtracking could not recover.
struct DivergedInnerSolve : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binding l1 constraint with an empty active set (lambda = 0 degenerate case).
struct EmptyActiveSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleSpec : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CyclicInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySampleBag : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truth graph with no positive or no negative pairs; ranking metrics are undefined.
struct DegenerateTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dagdist
