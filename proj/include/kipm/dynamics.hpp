#pragma once

// Time integration of the characteristics dx/dt = v, dv/dt = -E(x).

#include <kipm/ensemble.hpp>

#include <cstddef>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kipm
{

/// Stage of the time-step loop in which a failure occurred.
enum class phase { interpolate, density, poisson, push };

inline std::string_view to_string( phase p ) noexcept
{
    switch ( p )
    {
    case phase::interpolate: return "interpolate";
    case phase::density:     return "density";
    case phase::poisson:     return "poisson";
    case phase::push:        return "push";
    }
    return "unknown";
}

class simulation_error: public std::runtime_error
{
public:
    simulation_error( phase p, const std::string &what ):
        std::runtime_error( std::string( to_string(p) ) + ": " + what ), phase_ { p }
    {}

    phase where() const noexcept { return phase_; }

private:
    phase phase_;
};

using electric_field = std::function<double(double)>;

/// Maps a particle snapshot to its self-consistent field; must not keep state
/// between calls.
using field_builder = std::function<electric_field(const particle_ensemble&)>;

enum class integrator { symplectic_euler, rk4 };

inline std::string_view to_string( integrator s ) noexcept
{
    return s == integrator::rk4 ? "rk4" : "symplectic_euler";
}

struct integrator_config
{
    integrator scheme = integrator::symplectic_euler;
    double dt = 1.0/16;

    bool operator==( const integrator_config& ) const = default;

    void validate() const
    {
        if ( !(dt > 0) ) throw std::invalid_argument( "integrator_config: time step must be positive" );
    }
};

/// Kick then drift: v <- v - dt E(x), then x <- x + dt v with the new v.
inline particle_ensemble symplectic_euler_step( particle_ensemble ensemble,
                                                const field_builder &build, double dt )
{
    const electric_field E = build( ensemble );
    auto x = ensemble.x();
    auto v = ensemble.v();
    const double L = ensemble.period();

    #pragma omp parallel for schedule(static)
    for ( std::size_t i = 0; i < ensemble.size(); ++i )
    {
        v[i] -= dt*E( x[i] );
        x[i]  = wrap_position( x[i] + dt*v[i], L );
    }
    return ensemble;
}

/**
 * Classical Runge-Kutta. The field is rebuilt from every stage's provisional
 * positions (wrapped in x) together with the unchanged particle values.
 */
inline particle_ensemble rk4_step( const particle_ensemble &ensemble,
                                   const field_builder &build, double dt )
{
    const std::size_t n = ensemble.size();
    const auto x0 = ensemble.x();
    const auto v0 = ensemble.v();

    std::vector<double> kx[4], kv[4];
    const double offsets[4] = { 0, 0.5*dt, 0.5*dt, dt };

    for ( int s = 0; s < 4; ++s )
    {
        std::vector<double> xs( x0.begin(), x0.end() ), vs( v0.begin(), v0.end() );
        if ( s > 0 )
        {
            for ( std::size_t i = 0; i < n; ++i )
            {
                xs[i] += offsets[s]*kx[s-1][i];
                vs[i] += offsets[s]*kv[s-1][i];
            }
        }
        const particle_ensemble stage = ensemble.with_positions( std::move(xs), std::move(vs) );

        electric_field E;
        try
        {
            E = build( stage );
        }
        catch ( const simulation_error &e )
        {
            throw simulation_error( e.where(), "RK4 stage " + std::to_string(s+1) + ": " + e.what() );
        }

        kx[s].resize(n);
        kv[s].resize(n);
        const auto sx = stage.x();
        const auto sv = stage.v();
        #pragma omp parallel for schedule(static)
        for ( std::size_t i = 0; i < n; ++i )
        {
            kx[s][i] = sv[i];
            kv[s][i] = -E( sx[i] );
        }
    }

    std::vector<double> x( n ), v( n );
    for ( std::size_t i = 0; i < n; ++i )
    {
        x[i] = x0[i] + dt/6*( kx[0][i] + 2*kx[1][i] + 2*kx[2][i] + kx[3][i] );
        v[i] = v0[i] + dt/6*( kv[0][i] + 2*kv[1][i] + 2*kv[2][i] + kv[3][i] );
    }
    return ensemble.with_positions( std::move(x), std::move(v) );
}

inline particle_ensemble step( const particle_ensemble &ensemble, const field_builder &build,
                               const integrator_config &config )
{
    config.validate();
    return config.scheme == integrator::rk4 ? rk4_step( ensemble, build, config.dt )
                                            : symplectic_euler_step( ensemble, build, config.dt );
}

}
