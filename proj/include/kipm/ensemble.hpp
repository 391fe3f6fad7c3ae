#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace kipm
{

/// Maps x into [0, L).
inline double wrap_position( double x, double L ) noexcept
{
    double r = x - L*std::floor(x/L);
    // x slightly below a multiple of L can round up to exactly L.
    if ( r >= L ) r -= L;
    if ( r < 0 ) r = 0;
    return r;
}

/**
 * Particles in 1D-1V phase space. Positions move; the sampled values f_i are
 * fixed at construction and shared (read-only) between copies, e.g. the
 * provisional ensembles of Runge-Kutta stages.
 */
class particle_ensemble
{
public:
    particle_ensemble( double L, double v_max,
                       std::vector<double> x, std::vector<double> v,
                       std::vector<double> f ):
        L_ { L }, v_max_ { v_max }, x_ { std::move(x) }, v_ { std::move(v) },
        f_ { std::make_shared<const std::vector<double>>( std::move(f) ) }
    {
        if ( !(L > 0) )     throw std::invalid_argument( "particle_ensemble: period must be positive" );
        if ( !(v_max > 0) ) throw std::invalid_argument( "particle_ensemble: v_max must be positive" );
        if ( x_.size() != v_.size() || x_.size() != f_->size() )
            throw std::invalid_argument( "particle_ensemble: array lengths differ" );
        for ( double &xi: x_ ) xi = wrap_position( xi, L_ );
    }

    std::size_t size()   const noexcept { return x_.size(); }
    double      period() const noexcept { return L_; }
    double      v_max()  const noexcept { return v_max_; }

    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> v() const noexcept { return v_; }
    std::span<const double> values() const noexcept { return *f_; }

    std::span<double> x() noexcept { return x_; }
    std::span<double> v() noexcept { return v_; }

    /// Same values, new positions (x is wrapped).
    particle_ensemble with_positions( std::vector<double> x, std::vector<double> v ) const
    {
        if ( x.size() != size() || v.size() != size() )
            throw std::invalid_argument( "particle_ensemble: array lengths differ" );
        particle_ensemble result { *this };
        result.x_ = std::move(x);
        result.v_ = std::move(v);
        for ( double &xi: result.x_ ) xi = wrap_position( xi, L_ );
        return result;
    }

    /// True if both ensembles share the same value storage.
    bool shares_values_with( const particle_ensemble &other ) const noexcept
    {
        return f_ == other.f_;
    }

private:
    double L_;
    double v_max_;
    std::vector<double> x_;
    std::vector<double> v_;
    std::shared_ptr<const std::vector<double>> f_;
};

}
