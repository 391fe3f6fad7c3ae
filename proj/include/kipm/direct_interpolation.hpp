#pragma once

// Global kernel interpolant: (K + mu^2 I) c = f over all particles, with
// x-periodicity handled by replicating boundary particles as ghost centres.

#include <kipm/ensemble.hpp>
#include <kipm/kernels.hpp>
#include <kipm/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kipm
{

inline constexpr double default_tikhonov_mu = 1e-5;

/// Two centres coincide up to the duplicate tolerance.
class duplicate_centers_error: public std::runtime_error
{
public:
    duplicate_centers_error( std::size_t i, std::size_t j ):
        std::runtime_error( "kernel matrix is singular: centres " + std::to_string(i)
                            + " and " + std::to_string(j) + " coincide" ),
        first_ { i }, second_ { j }
    {}

    std::size_t first()  const noexcept { return first_; }
    std::size_t second() const noexcept { return second_; }

private:
    std::size_t first_, second_;
};

/// Interpolation nodes with their data values (structure of arrays).
struct node_set
{
    std::vector<double> x, v, f;

    std::size_t size() const noexcept { return x.size(); }

    void push_back( double xi, double vi, double fi )
    {
        x.push_back(xi); v.push_back(vi); f.push_back(fi);
    }
};

/**
 * Appends copies shifted by +L of nodes with x < sigma_x and copies shifted by
 * -L of nodes with x > L - sigma_x. The kernel itself only sees plain
 * Euclidean distances.
 */
inline node_set with_periodic_ghosts( node_set nodes, double L, double sigma_x )
{
    const std::size_t n = nodes.size();
    for ( std::size_t i = 0; i < n; ++i )
    {
        const double xi = nodes.x[i], vi = nodes.v[i], fi = nodes.f[i];
        if ( xi < sigma_x )     nodes.push_back( xi + L, vi, fi );
        if ( xi > L - sigma_x ) nodes.push_back( xi - L, vi, fi );
    }
    return nodes;
}

/// Thresholds below which two centres count as duplicates.
struct duplicate_tolerance
{
    double dx = 0;
    double dv = 0;

    static duplicate_tolerance for_domain( double L, double v_max ) noexcept
    {
        return { 1e-12*L, 1e-12*2*v_max };
    }
};

/**
 * K_ij = k(z_i, z_j). Symmetric with unit diagonal. When the centres are
 * sorted by x the zero blocks beyond the x-support are skipped.
 */
inline dense_matrix assemble_kernel_matrix( std::span<const double> x, std::span<const double> v,
                                            const kernel_spec &k, duplicate_tolerance tol = {} )
{
    const std::size_t n = x.size();
    if ( v.size() != n ) throw std::invalid_argument( "assemble_kernel_matrix: length mismatch" );

    const bool sorted = std::is_sorted( x.begin(), x.end() );
    dense_matrix K( n, 0.0 );

    // Exceptions must not leave the parallel region; remember the first
    // duplicate column instead.
    std::vector<std::size_t> duplicate_of( n, n );

    #pragma omp parallel for schedule(dynamic,16)
    for ( std::size_t j = 0; j < n; ++j )
    {
        K(j,j) = 1;
        for ( std::size_t i = j + 1; i < n; ++i )
        {
            const double dx = std::abs( x[i] - x[j] );
            if ( sorted && dx >= k.sigma_x ) break;
            const double dv = std::abs( v[i] - v[j] );
            if ( dx <= tol.dx && dv <= tol.dv && duplicate_of[j] == n ) duplicate_of[j] = i;
            const double kij = eval_tensor( k, {x[i],v[i]}, {x[j],v[j]} );
            K(i,j) = kij;
            K(j,i) = kij;
        }
    }
    for ( std::size_t j = 0; j < n; ++j )
        if ( duplicate_of[j] != n ) throw duplicate_centers_error( j, duplicate_of[j] );
    return K;
}

inline dense_matrix assemble_kernel_matrix( const particle_ensemble &ensemble, const kernel_spec &k )
{
    return assemble_kernel_matrix( ensemble.x(), ensemble.v(), k,
                                   duplicate_tolerance::for_domain( ensemble.period(), ensemble.v_max() ) );
}

/// Number of sub-diagonals of K for centres sorted by x.
inline std::size_t kernel_bandwidth( std::span<const double> x, double sigma_x ) noexcept
{
    std::size_t kd = 0;
    for ( std::size_t j = 0, i = 0; j < x.size(); ++j )
    {
        i = std::max( i, j );
        while ( i + 1 < x.size() && x[i+1] - x[j] < sigma_x ) ++i;
        kd = std::max( kd, i - j );
    }
    return kd;
}

/// Lower band of K (plus mu^2 on the diagonal) for centres sorted by x.
inline banded_matrix assemble_banded_system( std::span<const double> x, std::span<const double> v,
                                             const kernel_spec &k, double mu,
                                             duplicate_tolerance tol = {} )
{
    const std::size_t n = x.size();
    const std::size_t kd = kernel_bandwidth( x, k.sigma_x );
    banded_matrix K( n, kd );
    std::vector<std::size_t> duplicate_of( n, n );

    #pragma omp parallel for schedule(static)
    for ( std::size_t j = 0; j < n; ++j )
    {
        K(j,j) = 1 + mu*mu;
        const std::size_t last = std::min( n, j + kd + 1 );
        for ( std::size_t i = j + 1; i < last; ++i )
        {
            const double dx = std::abs( x[i] - x[j] );
            const double dv = std::abs( v[i] - v[j] );
            if ( dx <= tol.dx && dv <= tol.dv && duplicate_of[j] == n ) duplicate_of[j] = i;
            K(i,j) = eval_tensor( k, {x[i],v[i]}, {x[j],v[j]} );
        }
    }
    for ( std::size_t j = 0; j < n; ++j )
        if ( duplicate_of[j] != n ) throw duplicate_centers_error( j, duplicate_of[j] );
    return K;
}

/// Solves (K + mu^2 I) c = f by Cholesky factorisation.
inline std::vector<double> solve_coefficients( dense_matrix K, std::span<const double> f, double mu )
{
    if ( !(mu >= 0) ) throw std::invalid_argument( "solve_coefficients: mu must be non-negative" );
    if ( f.size() != K.size() ) throw std::invalid_argument( "solve_coefficients: length mismatch" );
    const double shift = mu*mu;
    for ( std::size_t i = 0; i < K.size(); ++i )
        K(i,i) += shift;
    cholesky llt { std::move(K) };
    return llt.solve(f);
}

/**
 * f_h(z) = sum_i c_i k(z, z_i) over all (ghost-augmented) centres.
 *
 * Centres are stored sorted lexicographically by (x, v), which makes the
 * assembled system independent of the input ordering and lets evaluation
 * restrict itself to the x-window [x - sigma_x, x + sigma_x].
 */
class direct_interpolant
{
public:
    /// Fits the nodes as given; ghost replication is the caller's business.
    direct_interpolant( node_set nodes, const kernel_spec &k, double mu,
                        double period, duplicate_tolerance tol = {} ):
        spec_ { k }, mu_ { mu }, L_ { period }
    {
        if ( nodes.v.size() != nodes.size() || nodes.f.size() != nodes.size() )
            throw std::invalid_argument( "direct_interpolant: length mismatch" );

        std::vector<std::size_t> perm( nodes.size() );
        std::iota( perm.begin(), perm.end(), std::size_t(0) );
        std::sort( perm.begin(), perm.end(), [&nodes]( std::size_t a, std::size_t b )
        {
            if ( nodes.x[a] != nodes.x[b] ) return nodes.x[a] < nodes.x[b];
            if ( nodes.v[a] != nodes.v[b] ) return nodes.v[a] < nodes.v[b];
            return a < b;
        });

        x_.resize( perm.size() ); v_.resize( perm.size() );
        std::vector<double> f( perm.size() );
        for ( std::size_t i = 0; i < perm.size(); ++i )
        {
            x_[i] = nodes.x[perm[i]];
            v_[i] = nodes.v[perm[i]];
            f[i]  = nodes.f[perm[i]];
        }

        // Sorted by x, K is banded; the band factorisation is much cheaper
        // once the x-support covers a small part of the domain.
        if ( !(mu_ >= 0) ) throw std::invalid_argument( "direct_interpolant: mu must be non-negative" );
        if ( 4*( kernel_bandwidth( x_, spec_.sigma_x ) + 1 ) < x_.size() )
            coeffs_ = banded_cholesky( assemble_banded_system( x_, v_, spec_, mu_, tol ) ).solve(f);
        else
            coeffs_ = solve_coefficients( assemble_kernel_matrix( x_, v_, spec_, tol ), f, mu_ );
    }

    /// Global interpolant over an ensemble with periodic ghosts.
    direct_interpolant( const particle_ensemble &ensemble, const kernel_spec &k,
                        double mu = default_tikhonov_mu ):
        direct_interpolant( with_periodic_ghosts( to_nodes(ensemble), ensemble.period(), k.sigma_x ),
                            k, mu, ensemble.period(),
                            duplicate_tolerance::for_domain( ensemble.period(), ensemble.v_max() ) )
    {}

    const kernel_spec& spec() const noexcept { return spec_; }
    double mu() const noexcept { return mu_; }
    double period() const noexcept { return L_; }
    std::size_t size() const noexcept { return x_.size(); }

    std::span<const double> center_x() const noexcept { return x_; }
    std::span<const double> center_v() const noexcept { return v_; }
    std::span<const double> coefficients() const noexcept { return coeffs_; }

    /// Value at z; x is wrapped into [0, L) first.
    double operator()( phase_point z ) const noexcept
    {
        return evaluate_unwrapped( { wrap_position( z.x, L_ ), z.v } );
    }

    double evaluate_unwrapped( phase_point z ) const noexcept
    {
        const auto [first, last] = window( z.x );
        double sum = 0;
        for ( std::size_t i = first; i < last; ++i )
            sum += coeffs_[i] * eval_tensor( spec_, z, { x_[i], v_[i] } );
        return sum;
    }

    /// Integral of the interpolant over the whole v-line at position x.
    double integrate_v( double x ) const noexcept
    {
        x = wrap_position( x, L_ );
        const auto [first, last] = window(x);
        double sum = 0;
        for ( std::size_t i = first; i < last; ++i )
            sum += coeffs_[i] * spec_.radial.value_unchecked( std::abs(x - x_[i]) / spec_.sigma_x );
        return sum * full_line_integral(spec_);
    }

    /// Integral over v in [lo, hi] at position x (x taken as given).
    double integrate_v_clipped( double x, double lo, double hi ) const noexcept
    {
        const auto [first, last] = window(x);
        double sum = 0;
        for ( std::size_t i = first; i < last; ++i )
        {
            const double bx = spec_.radial.value_unchecked( std::abs(x - x_[i]) / spec_.sigma_x );
            if ( bx == 0 ) continue;
            sum += coeffs_[i] * bx * clipped_integral( spec_.radial, spec_.sigma_v, v_[i], lo, hi );
        }
        return sum;
    }

    static node_set to_nodes( const particle_ensemble &ensemble )
    {
        node_set nodes;
        nodes.x.assign( ensemble.x().begin(), ensemble.x().end() );
        nodes.v.assign( ensemble.v().begin(), ensemble.v().end() );
        nodes.f.assign( ensemble.values().begin(), ensemble.values().end() );
        return nodes;
    }

private:
    std::pair<std::size_t,std::size_t> window( double x ) const noexcept
    {
        const auto lo = std::upper_bound( x_.begin(), x_.end(), x - spec_.sigma_x );
        const auto hi = std::lower_bound( lo, x_.end(), x + spec_.sigma_x );
        return { std::size_t( lo - x_.begin() ), std::size_t( hi - x_.begin() ) };
    }

    kernel_spec spec_;
    double mu_;
    double L_;
    std::vector<double> x_, v_;
    std::vector<double> coeffs_;
};

}
