#pragma once

#include "msp/merton.hpp"
#include "msp/numerics.hpp"

#include <memory>
#include <vector>

namespace msp::detail {

class MertonImpl {
public:
    MertonImpl(UtilitySpec u, double sharpe, double horizon, MertonMethod method)
        : utility(std::move(u)), sharpe(sharpe), horizon(horizon), method(method) {}
    virtual ~MertonImpl() = default;

    virtual MertonPoint evaluate(double t, double x) const = 0;

    /// M(T, x) = U(x) and the PDE-implied time derivative.
    MertonPoint terminal(double x) const;

    UtilitySpec utility;
    double sharpe;
    double horizon;
    MertonMethod method;
};

std::shared_ptr<const MertonImpl> make_finite_difference_impl(const UtilitySpec& u,
                                                              double sharpe, double horizon,
                                                              const MertonOptions& options);

}  // namespace msp::detail
