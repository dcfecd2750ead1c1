#pragma once

#include <stdexcept>
#include <string>

namespace renewal_ldp {

/// Invalid model parameters or arguments outside an operation's domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative method stopped without meeting its tolerance. Carries the best
/// estimate found so callers can still report a bound.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double best_estimate, int iterations)
        : std::runtime_error(what), best_estimate_(best_estimate), iterations_(iterations) {}

    double best_estimate() const noexcept { return best_estimate_; }
    int iterations() const noexcept { return iterations_; }

private:
    double best_estimate_;
    int iterations_;
};

}  // namespace renewal_ldp
