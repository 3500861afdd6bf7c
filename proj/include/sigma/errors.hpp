#pragma once

#include <stdexcept>
#include <string>

namespace sigma {

// Error taxonomy. Everything derives from sigma::error so callers can catch
// the whole family; the CLI maps config_error to exit 2 and the rest to
// diagnostic messages.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// numerical integration could not reach the requested tolerance
struct quadrature_failure : error { using error::error; };
// monotone root bracketing/bisection failed
struct bisection_failure : error { using error::error; };
// a dual Hardy-Littlewood transform is +infinity at the requested point
struct divergent_transform : error { using error::error; };
// the survival integrand 1/(z - alpha(z)) is non-integrable at the origin
struct divergent_at_origin : error { using error::error; };
// denominator of a survival integrand is <= 0 where positivity is required
struct nonpositive_denominator : error { using error::error; };
// argument outside an operation's stated domain
struct domain_error : error { using error::error; };
// model/rule specification violates its invariants
struct invalid_spec : error { using error::error; };
// an Euler step produced an increment beyond the stability guard
struct unstable_step : error { using error::error; };
// a barrier function faulted on an encountered argument
struct evaluation_error : error { using error::error; };
// too many unresolved paths for the requested statistical comparison
struct excess_censoring : error { using error::error; };
// scenario/config file is malformed (CLI exit code 2)
struct config_error : error { using error::error; };

} // namespace sigma
