#pragma once

// Benchmark initial data, the simulation driver and its diagnostics.

#include <kipm/direct_interpolation.hpp>
#include <kipm/dynamics.hpp>
#include <kipm/ensemble.hpp>
#include <kipm/field_solver.hpp>
#include <kipm/kernels.hpp>
#include <kipm/piecewise_interpolation.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace kipm
{

enum class case_tag { weak_landau, two_stream, bump_on_tail, free_streaming };

inline std::string_view to_string( case_tag c ) noexcept
{
    switch ( c )
    {
    case case_tag::weak_landau:    return "weak_landau";
    case case_tag::two_stream:     return "two_stream";
    case case_tag::bump_on_tail:   return "bump_on_tail";
    case case_tag::free_streaming: return "free_streaming";
    }
    return "unknown";
}

inline std::optional<case_tag> parse_case_tag( std::string_view s ) noexcept
{
    for ( case_tag c: { case_tag::weak_landau, case_tag::two_stream,
                        case_tag::bump_on_tail, case_tag::free_streaming } )
        if ( s == to_string(c) ) return c;
    return std::nullopt;
}

struct case_parameters
{
    double alpha = 0.01;
    double k     = 0.5;
    double L     = 4*std::numbers::pi;
    double v_max = 6;
    // Bump-on-tail only.
    double n_p = 0.9;
    double n_b = 0.2;
    double v_b = 4.5;
    double v_t = 0.5;

    bool operator==( const case_parameters& ) const = default;
};

struct benchmark_case
{
    case_tag        tag = case_tag::weak_landau;
    case_parameters params;

    bool operator==( const benchmark_case& ) const = default;

    static benchmark_case defaults( case_tag tag )
    {
        benchmark_case c { tag, {} };
        switch ( tag )
        {
        case case_tag::weak_landau:
        case case_tag::free_streaming:
            break;
        case case_tag::two_stream:
            c.params.v_max = 8;
            break;
        case case_tag::bump_on_tail:
            c.params.alpha = 0.04;
            c.params.k     = 0.3;
            c.params.L     = 2*std::numbers::pi/0.3;
            c.params.v_max = 10;
            break;
        }
        return c;
    }
};

inline constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;

inline double maxwellian( double v ) noexcept
{
    return inv_sqrt_2pi * std::exp( -0.5*v*v );
}

/// f_0(x, v) of the benchmark.
inline double initial_value( const benchmark_case &c, double x, double v ) noexcept
{
    const case_parameters &p = c.params;
    const double modulation = 1 + p.alpha*std::cos( p.k*x );
    switch ( c.tag )
    {
    case case_tag::weak_landau:
    case case_tag::free_streaming:
        return maxwellian(v) * modulation;
    case case_tag::two_stream:
        return v*v*maxwellian(v) * modulation;
    case case_tag::bump_on_tail:
    {
        const double d = ( v - p.v_b )/p.v_t;
        return inv_sqrt_2pi*( p.n_p*std::exp( -0.5*v*v ) + p.n_b*std::exp( -0.5*d*d ) ) * modulation;
    }
    }
    return 0;
}

/// One particle at the centre of every cell of an nx x nv grid on
/// [0, L) x [-v_max, v_max]; x is the outer index.
inline particle_ensemble sample_particles( const benchmark_case &c, std::size_t nx, std::size_t nv )
{
    if ( nx < 2 || nv < 2 ) throw std::invalid_argument( "sample_particles: need at least 2 cells per direction" );
    const double L = c.params.L, vmax = c.params.v_max;
    const double hx = L/double(nx), hv = 2*vmax/double(nv);
    std::vector<double> x, v, f;
    x.reserve( nx*nv ); v.reserve( nx*nv ); f.reserve( nx*nv );
    for ( std::size_t i = 0; i < nx; ++i )
        for ( std::size_t j = 0; j < nv; ++j )
        {
            const double xi = ( double(i) + 0.5 )*hx;
            const double vj = -vmax + ( double(j) + 0.5 )*hv;
            x.push_back(xi); v.push_back(vj);
            f.push_back( initial_value( c, xi, vj ) );
        }
    return particle_ensemble( L, vmax, std::move(x), std::move(v), std::move(f) );
}

enum class method_kind { direct, pw };

inline std::string_view to_string( method_kind m ) noexcept
{
    return m == method_kind::direct ? "direct" : "pw";
}

/// Either interpolant behind one interface.
class phase_space_interpolant
{
public:
    explicit phase_space_interpolant( direct_interpolant d ): impl_ { std::move(d) } {}
    explicit phase_space_interpolant( piecewise_interpolant p ): impl_ { std::move(p) } {}

    static phase_space_interpolant fit( method_kind m, const particle_ensemble &e,
                                        const kernel_spec &k, double mu, std::size_t n_box )
    {
        if ( m == method_kind::direct ) return phase_space_interpolant( direct_interpolant( e, k, mu ) );
        return phase_space_interpolant( piecewise_interpolant( e, k, mu, n_box ) );
    }

    double operator()( phase_point z ) const
    {
        return std::visit( [z]( const auto &i ) { return i(z); }, impl_ );
    }

    std::vector<double> integrate_density( std::span<const double> xs ) const
    {
        if ( const auto *d = std::get_if<direct_interpolant>( &impl_ ) )
        {
            std::vector<double> rho( xs.size() );
            #pragma omp parallel for schedule(static)
            for ( std::size_t i = 0; i < xs.size(); ++i )
                rho[i] = 1 - d->integrate_v( xs[i] );
            return rho;
        }
        return std::get<piecewise_interpolant>( impl_ ).integrate_density( xs );
    }

    const direct_interpolant*    as_direct()    const noexcept { return std::get_if<direct_interpolant>( &impl_ ); }
    const piecewise_interpolant* as_piecewise() const noexcept { return std::get_if<piecewise_interpolant>( &impl_ ); }

private:
    std::variant<direct_interpolant,piecewise_interpolant> impl_;
};

/// Max norm and discrete L2 norm of E on G uniform points x_g = g L / G.
struct field_amplitude
{
    double max_norm = 0;
    double l2_norm  = 0;
};

template <typename Field>
field_amplitude amplitude( const Field &E, double L, std::size_t G )
{
    if ( G < 2 ) throw std::invalid_argument( "amplitude: need at least two sample points" );
    const double h = L/double(G);
    field_amplitude a;
    double sq = 0;
    for ( std::size_t g = 0; g < G; ++g )
    {
        const double e = E( double(g)*h );
        a.max_norm = std::max( a.max_norm, std::abs(e) );
        sq += e*e;
    }
    a.l2_norm = std::sqrt( h*sq );
    return a;
}

inline constexpr std::size_t default_amplitude_grid = 512;

struct diagnostics_row
{
    double t = 0;
    double e_max = 0;
    double e_l2 = 0;
    double mass = 0;
    double f_l2 = 0;
    double kinetic_energy = 0;
    double field_energy = 0;
};

using diagnostics_series = std::vector<diagnostics_row>;

enum class snapshot_reference { none, maxwellian };

inline std::string_view to_string( snapshot_reference r ) noexcept
{
    return r == snapshot_reference::maxwellian ? "maxwellian" : "none";
}

struct snapshot_grid
{
    double t = 0;
    double L = 0;
    double v_max = 0;
    std::size_t nx = 0;
    std::size_t nv = 0;
    snapshot_reference reference = snapshot_reference::none;
    std::vector<double> values;   // nv rows of nx, v ascending by row

    double at( std::size_t row, std::size_t col ) const { return values.at( row*nx + col ); }

    double x_node( std::size_t col ) const noexcept { return L*double(col)/double(nx); }
    double v_node( std::size_t row ) const noexcept
    {
        return -v_max + 2*v_max*double(row)/double(nv - 1);
    }
};

/// f_h (or f_h - f_M) on x_j = j L / nx, v_k = -v_max + 2 v_max k / (nv - 1).
template <typename Interpolant>
snapshot_grid snapshot( const Interpolant &f, double L, double v_max, std::size_t nx, std::size_t nv,
                        snapshot_reference ref = snapshot_reference::none, double t = 0 )
{
    if ( nx < 1 || nv < 2 ) throw std::invalid_argument( "snapshot: grid too small" );
    snapshot_grid s { t, L, v_max, nx, nv, ref, std::vector<double>( nx*nv ) };
    #pragma omp parallel for schedule(static)
    for ( std::size_t row = 0; row < nv; ++row )
    {
        const double v = s.v_node(row);
        const double fm = ref == snapshot_reference::maxwellian ? maxwellian(v) : 0.0;
        for ( std::size_t col = 0; col < nx; ++col )
            s.values[ row*nx + col ] = f( phase_point { s.x_node(col), v } ) - fm;
    }
    return s;
}

class insufficient_data_error: public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct damping_fit
{
    double gamma = 0;
    double omega = 0;
    std::vector<std::pair<double,double>> peaks;   // (t, amplitude)
};

/**
 * Fits log(peak amplitude) = a - gamma t by least squares over the local
 * maxima inside [t_lo, t_hi]. A peak must exceed its direct neighbours and
 * must not be smaller than any sample within min_separation of it, which
 * suppresses step-to-step jitter. |E| peaks twice per period of the field
 * oscillation, hence omega = pi / mean peak spacing.
 */
inline damping_fit fit_damping( std::span<const double> t, std::span<const double> amp,
                                double t_lo, double t_hi, double min_separation = 0 )
{
    if ( t.size() != amp.size() ) throw std::invalid_argument( "fit_damping: length mismatch" );
    damping_fit fit;
    for ( std::size_t i = 1; i + 1 < t.size(); ++i )
    {
        if ( t[i] < t_lo || t[i] > t_hi ) continue;
        if ( !( amp[i] > amp[i-1] && amp[i] > amp[i+1] && amp[i] >= 1e-12 ) ) continue;

        bool dominant = true;
        for ( std::size_t j = i; j-- > 0 && t[i] - t[j] <= min_separation; )
            if ( amp[j] > amp[i] ) { dominant = false; break; }
        for ( std::size_t j = i + 1; dominant && j < t.size() && t[j] - t[i] <= min_separation; ++j )
            if ( amp[j] > amp[i] ) dominant = false;
        if ( dominant && ( fit.peaks.empty() || t[i] - fit.peaks.back().first > min_separation ) )
            fit.peaks.emplace_back( t[i], amp[i] );
    }
    if ( fit.peaks.size() < 4 )
        throw insufficient_data_error( "fit_damping: found " + std::to_string( fit.peaks.size() )
                                       + " peaks, need at least 4" );

    const double n = double( fit.peaks.size() );
    double st = 0, sy = 0, stt = 0, sty = 0;
    for ( auto [tp, ap]: fit.peaks )
    {
        const double y = std::log(ap);
        st += tp; sy += y; stt += tp*tp; sty += tp*y;
    }
    const double slope = ( n*sty - st*sy ) / ( n*stt - st*st );
    fit.gamma = -slope;
    const double spacing = ( fit.peaks.back().first - fit.peaks.front().first ) / ( n - 1 );
    fit.omega = std::numbers::pi / spacing;
    return fit;
}

inline damping_fit fit_damping( const diagnostics_series &series, double t_lo, double t_hi,
                                double min_separation = 0 )
{
    std::vector<double> t, a;
    for ( const auto &r: series ) { t.push_back(r.t); a.push_back(r.e_max); }
    return fit_damping( t, a, t_lo, t_hi, min_separation );
}

/// Everything a run needs; defaults follow the weak Landau PW setup.
struct simulation_settings
{
    benchmark_case problem = benchmark_case::defaults( case_tag::weak_landau );
    method_kind method = method_kind::pw;
    std::size_t nx = 512, nv = 512;
    int kernel_order = 2;
    double sigma_x = 6, sigma_v = 3;
    double mu = default_tikhonov_mu;
    std::size_t n_box = default_box_capacity;
    std::size_t poisson_cells = default_poisson_cells;
    integrator_config time { integrator::symplectic_euler, 1.0/16 };
    double t_end = 50;
    std::size_t amplitude_grid = default_amplitude_grid;
    std::size_t moment_grid = 64;          // midpoint grid per direction for f_l2 and kinetic energy
    std::vector<double> snapshot_times;
    std::size_t snapshot_nx = 256, snapshot_nv = 256;
    snapshot_reference reference = snapshot_reference::none;
    std::size_t error_grid = 257;          // free streaming: grid per direction for the exact-solution error
    bool keep_field_samples = false;       // store E on the amplitude grid at every recorded time

    bool operator==( const simulation_settings& ) const = default;

    kernel_spec kernel() const { return kernel_spec( kernel_order, sigma_x, sigma_v ); }

    /// Particle spacing h = max(h_x, h_v).
    double spacing() const noexcept
    {
        return std::max( problem.params.L/double(nx), 2*problem.params.v_max/double(nv) );
    }

    std::size_t step_count() const noexcept
    {
        return static_cast<std::size_t>( std::ceil( t_end/time.dt - 1e-9 ) );
    }
};

struct exact_error_sample
{
    double t = 0;
    double linf = 0;
};

struct run_result
{
    diagnostics_series series;
    std::vector<snapshot_grid> snapshots;
    std::vector<exact_error_sample> exact_errors;       // free streaming only
    std::vector<std::vector<double>> field_samples;     // if keep_field_samples
    std::size_t neutrality_warnings = 0;
};

/// Interpolant, density at the Poisson nodes and field for one particle state.
struct field_state
{
    std::shared_ptr<const phase_space_interpolant> f;
    std::vector<double> rho;
    std::optional<field_solution> field;   // empty: E vanishes identically

    double E( double x ) const { return field ? field->electric_field(x) : 0.0; }
};

namespace detail
{

inline void fill_moments( diagnostics_row &row, const phase_space_interpolant &f,
                          double L, double vmax, std::size_t G )
{
    const double hx = L/double(G), hv = 2*vmax/double(G);
    std::vector<double> sq( G, 0.0 ), kin( G, 0.0 );
    #pragma omp parallel for schedule(static)
    for ( std::size_t j = 0; j < G; ++j )
    {
        const double v = -vmax + ( double(j) + 0.5 )*hv;
        for ( std::size_t i = 0; i < G; ++i )
        {
            const double val = f( { ( double(i) + 0.5 )*hx, v } );
            sq[j]  += val*val;
            kin[j] += v*v*val;
        }
    }
    double s = 0, k = 0;
    for ( std::size_t j = 0; j < G; ++j ) { s += sq[j]; k += kin[j]; }
    row.f_l2 = std::sqrt( s*hx*hv );
    row.kinetic_energy = 0.5*k*hx*hv;
}

inline double exact_linf_error( const phase_space_interpolant &f, const benchmark_case &c,
                                double t, std::size_t G )
{
    const double L = c.params.L, vmax = c.params.v_max;
    const double hx = L/double(G), hv = 2*vmax/double(G);
    std::vector<double> err( G, 0.0 );
    #pragma omp parallel for schedule(static)
    for ( std::size_t j = 0; j < G; ++j )
    {
        const double v = -vmax + ( double(j) + 0.5 )*hv;
        for ( std::size_t i = 0; i < G; ++i )
        {
            const double x = ( double(i) + 0.5 )*hx;
            const double exact = initial_value( c, wrap_position( x - v*t, L ), v );
            err[j] = std::max( err[j], std::abs( f( {x, v} ) - exact ) );
        }
    }
    return *std::max_element( err.begin(), err.end() );
}

}

/**
 * The time-step loop: interpolate, integrate the density, solve for the
 * field, record, push. Free streaming skips the field (E = 0) and records the
 * max error against f_0(x - v t, v) instead.
 */
class simulation
{
public:
    explicit simulation( simulation_settings s ):
        settings_ { std::move(s) },
        kernel_ { settings_.kernel() },
        poisson_ { settings_.problem.params.L, settings_.poisson_cells }
    {
        settings_.time.validate();
        if ( !(settings_.t_end >= 0) ) throw std::invalid_argument( "simulation: negative end time" );
        if ( !(settings_.mu >= 0) ) throw std::invalid_argument( "simulation: negative mu" );
    }

    const simulation_settings& settings() const noexcept { return settings_; }
    const poisson_solver& poisson() const noexcept { return poisson_; }
    const kernel_spec& kernel() const noexcept { return kernel_; }

    particle_ensemble initial_ensemble() const
    {
        return sample_particles( settings_.problem, settings_.nx, settings_.nv );
    }

    field_state build_state( const particle_ensemble &e ) const
    {
        field_state st;
        try
        {
            st.f = std::make_shared<const phase_space_interpolant>(
                phase_space_interpolant::fit( settings_.method, e, kernel_, settings_.mu, settings_.n_box ) );
        }
        catch ( const std::exception &ex ) { throw simulation_error( phase::interpolate, ex.what() ); }

        try { st.rho = st.f->integrate_density( poisson_.density_nodes() ); }
        catch ( const std::exception &ex ) { throw simulation_error( phase::density, ex.what() ); }

        if ( settings_.problem.tag != case_tag::free_streaming )
        {
            try { st.field.emplace( poisson_.solve( st.rho ) ); }
            catch ( const std::exception &ex ) { throw simulation_error( phase::poisson, ex.what() ); }
        }
        return st;
    }

    diagnostics_row diagnose( const field_state &st, double t ) const
    {
        const auto &p = settings_.problem.params;
        diagnostics_row row;
        row.t = t;
        const auto a = amplitude( [&st]( double x ) { return st.E(x); }, p.L, settings_.amplitude_grid );
        row.e_max = a.max_norm;
        row.e_l2  = a.l2_norm;
        row.field_energy = 0.5*a.l2_norm*a.l2_norm;

        const auto nodes = poisson_.density_nodes();
        const auto weights = poisson_.space().quadrature_weights();
        double m = 0;
        for ( std::size_t i = 0; i < nodes.size(); ++i )
            m += weights[i]*( 1 - st.rho[i] );
        row.mass = m/p.L;

        if ( settings_.moment_grid > 0 )
            detail::fill_moments( row, *st.f, p.L, p.v_max, settings_.moment_grid );
        return row;
    }

    /// Runs to t_end; on_record (optional) sees every diagnostics row as produced.
    run_result run( const std::function<void(const diagnostics_row&)> &on_record = {} ) const
    {
        const auto &p = settings_.problem.params;
        const std::size_t steps = settings_.step_count();
        const double dt = settings_.time.dt;

        std::vector<std::size_t> snapshot_steps;
        for ( double ts: settings_.snapshot_times )
            snapshot_steps.push_back( static_cast<std::size_t>( std::llround( ts/dt ) ) );

        run_result result;
        particle_ensemble ensemble = initial_ensemble();

        for ( std::size_t n = 0; ; ++n )
        {
            const double t = double(n)*dt;
            field_state state;
            try
            {
                state = build_state( ensemble );
            }
            catch ( const simulation_error &e )
            {
                throw simulation_error( e.where(), "step " + std::to_string(n) + ": " + e.what() );
            }
            if ( state.field && state.field->neutrality_violated() ) ++result.neutrality_warnings;

            result.series.push_back( diagnose( state, t ) );
            if ( on_record ) on_record( result.series.back() );

            if ( settings_.keep_field_samples )
            {
                std::vector<double> e( settings_.amplitude_grid );
                for ( std::size_t g = 0; g < e.size(); ++g )
                    e[g] = state.E( p.L*double(g)/double(e.size()) );
                result.field_samples.push_back( std::move(e) );
            }

            for ( std::size_t k = 0; k < snapshot_steps.size(); ++k )
                if ( snapshot_steps[k] == n )
                    result.snapshots.push_back( snapshot( *state.f, p.L, p.v_max, settings_.snapshot_nx,
                                                          settings_.snapshot_nv, settings_.reference,
                                                          settings_.snapshot_times[k] ) );

            if ( settings_.problem.tag == case_tag::free_streaming )
                result.exact_errors.push_back( { t, detail::exact_linf_error( *state.f, settings_.problem,
                                                                              t, settings_.error_grid ) } );

            if ( n >= steps ) break;

            // The first field request of a step is at the current positions,
            // which is the state just built.
            bool first = true;
            const field_builder builder = [&]( const particle_ensemble &e ) -> electric_field
            {
                if ( first )
                {
                    first = false;
                    return [&state]( double x ) { return state.E(x); };
                }
                auto st = std::make_shared<const field_state>( build_state(e) );
                return [st]( double x ) { return st->E(x); };
            };

            try
            {
                ensemble = step( ensemble, builder, settings_.time );
            }
            catch ( const simulation_error &e )
            {
                throw simulation_error( e.where(), "step " + std::to_string(n) + ": " + e.what() );
            }
            catch ( const std::exception &e )
            {
                throw simulation_error( phase::push, "step " + std::to_string(n) + ": " + e.what() );
            }
        }
        return result;
    }

private:
    simulation_settings settings_;
    kernel_spec kernel_;
    poisson_solver poisson_;
};

inline run_result run( const simulation_settings &s,
                       const std::function<void(const diagnostics_row&)> &on_record = {} )
{
    return simulation(s).run( on_record );
}

struct grid_resolution
{
    std::size_t nx = 0, nv = 0;
    bool operator==( const grid_resolution& ) const = default;
};

struct convergence_row
{
    double t = 0;
    double h = 0;
    double err_einf = 0;
};

/**
 * Runs every resolution and the reference with identical time stepping and
 * records max_g |E_h - E_ref| on the amplitude grid at every step.
 */
inline std::vector<convergence_row> convergence_study( const simulation_settings &base,
                                                       std::span<const grid_resolution> resolutions,
                                                       grid_resolution reference )
{
    auto spacing = [&base]( grid_resolution r )
    {
        simulation_settings s = base; s.nx = r.nx; s.nv = r.nv;
        return s.spacing();
    };
    for ( const auto &r: resolutions )
        if ( spacing(reference) > spacing(r) )
            throw std::invalid_argument( "convergence_study: reference must not be coarser than the study resolutions" );

    auto field_run = [&base]( grid_resolution r )
    {
        simulation_settings s = base;
        s.nx = r.nx; s.nv = r.nv;
        s.keep_field_samples = true;
        s.snapshot_times.clear();
        s.moment_grid = 0;
        return run(s);
    };

    const run_result ref = field_run( reference );
    std::vector<convergence_row> rows;
    for ( const auto &r: resolutions )
    {
        const run_result res = r == reference ? ref : field_run(r);
        const double h = spacing(r);
        for ( std::size_t n = 0; n < res.series.size(); ++n )
        {
            double err = 0;
            for ( std::size_t g = 0; g < res.field_samples[n].size(); ++g )
                err = std::max( err, std::abs( res.field_samples[n][g] - ref.field_samples[n][g] ) );
            rows.push_back( { res.series[n].t, h, err } );
        }
    }
    return rows;
}

}
