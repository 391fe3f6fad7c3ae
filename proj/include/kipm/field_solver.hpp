#pragma once

// Galerkin solver for -phi'' = rho on [0, L) with periodic B-splines of
// order 8 (degree 7) on a uniform grid of M cells.

#include <kipm/ensemble.hpp>
#include <kipm/linalg.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kipm
{

inline constexpr std::size_t spline_degree = 7;
inline constexpr std::size_t default_poisson_cells = 256;
inline constexpr double neutrality_tolerance = 1e-3;

namespace detail
{

/// Values of the p+1 uniform B-splines of degree p that are nonzero at local
/// coordinate t in [0,1) of a cell, ordered from leftmost support to rightmost.
template <std::size_t p>
std::array<double,p+1> cardinal_bspline( double t ) noexcept
{
    std::array<double,p+1> N {};
    N[0] = 1;
    for ( std::size_t j = 1; j <= p; ++j )
    {
        double saved = 0;
        for ( std::size_t r = 0; r < j; ++r )
        {
            // left[j-r] = t + j - r - 1, right[r+1] = r + 1 - t, their sum is j.
            const double temp = N[r] / double(j);
            N[r]  = saved + ( double(r) + 1 - t )*temp;
            saved = ( t + double(j) - double(r) - 1 )*temp;
        }
        N[j] = saved;
    }
    return N;
}

/// Derivatives (w.r.t. the local coordinate) of the same p+1 functions.
template <std::size_t p>
std::array<double,p+1> cardinal_bspline_derivative( double t ) noexcept
{
    const std::array<double,p> low = cardinal_bspline<p-1>(t);
    std::array<double,p+1> d {};
    for ( std::size_t r = 0; r <= p; ++r )
        d[r] = ( r >= 1 ? low[r-1] : 0.0 ) - ( r < p ? low[r] : 0.0 );
    return d;
}

}

/// Periodic spline space of degree 7 on M uniform cells over [0, L).
class spline_space
{
public:
    static constexpr std::size_t degree = spline_degree;
    static constexpr std::size_t order  = degree + 1;
    static constexpr std::size_t quad_points = 8;

    spline_space( double L, std::size_t cells ): L_ { L }, M_ { cells }, h_ { L/double(cells) }
    {
        if ( !(L > 0) ) throw std::invalid_argument( "spline_space: L must be positive" );
        if ( cells < order )
            throw std::invalid_argument( "spline_space: need at least " + std::to_string(order) + " cells" );

        // Gauss-Legendre rule on [0,1].
        using rule = boost::math::quadrature::gauss<double,quad_points>;
        const auto &a = rule::abscissa();
        const auto &w = rule::weights();
        std::size_t q = 0;
        for ( std::size_t i = a.size(); i-- > 0; )
        {
            ref_nodes_[q] = 0.5*( 1 - a[i] ); ref_weights_[q++] = 0.5*w[i];
        }
        for ( std::size_t i = 0; i < a.size(); ++i )
        {
            if ( a[i] == 0 ) continue;
            ref_nodes_[q] = 0.5*( 1 + a[i] ); ref_weights_[q++] = 0.5*w[i];
        }
        if ( q != quad_points ) throw std::logic_error( "spline_space: unexpected Gauss rule layout" );
    }

    double      length()     const noexcept { return L_; }
    std::size_t cells()      const noexcept { return M_; }
    std::size_t dimension()  const noexcept { return M_; }
    double      cell_width() const noexcept { return h_; }

    /// Gauss nodes (8 per cell) and weights covering [0, L).
    std::vector<double> quadrature_nodes() const
    {
        std::vector<double> xs; xs.reserve( M_*quad_points );
        for ( std::size_t i = 0; i < M_; ++i )
            for ( double t: ref_nodes_ ) xs.push_back( ( double(i) + t )*h_ );
        return xs;
    }

    std::vector<double> quadrature_weights() const
    {
        std::vector<double> ws; ws.reserve( M_*quad_points );
        for ( std::size_t i = 0; i < M_; ++i )
            for ( double w: ref_weights_ ) ws.push_back( w*h_ );
        return ws;
    }

    const std::array<double,quad_points>& reference_nodes()   const noexcept { return ref_nodes_; }
    const std::array<double,quad_points>& reference_weights() const noexcept { return ref_weights_; }

    /// Cell index and local coordinate of a (wrapped) position.
    std::pair<std::size_t,double> locate( double x ) const noexcept
    {
        x = wrap_position( x, L_ );
        double s = x / h_;
        std::size_t i = static_cast<std::size_t>( s );
        if ( i >= M_ ) i = M_ - 1;
        return { i, s - double(i) };
    }

    /// Global index of the r-th basis function that is nonzero on cell i.
    std::size_t basis_index( std::size_t cell, std::size_t r ) const noexcept
    {
        return ( cell + M_ - degree + r ) % M_;
    }

    double evaluate( std::span<const double> coeffs, double x ) const
    {
        const auto [cell, t] = locate(x);
        const auto N = detail::cardinal_bspline<degree>(t);
        double s = 0;
        for ( std::size_t r = 0; r <= degree; ++r )
            s += coeffs[ basis_index(cell,r) ] * N[r];
        return s;
    }

    double evaluate_derivative( std::span<const double> coeffs, double x ) const
    {
        const auto [cell, t] = locate(x);
        const auto dN = detail::cardinal_bspline_derivative<degree>(t);
        double s = 0;
        for ( std::size_t r = 0; r <= degree; ++r )
            s += coeffs[ basis_index(cell,r) ] * dN[r];
        return s / h_;
    }

private:
    double L_;
    std::size_t M_;
    double h_;
    std::array<double,quad_points> ref_nodes_ {};
    std::array<double,quad_points> ref_weights_ {};
};

/// A_jk = integral of B_j' B_k' over [0, L), by Gauss quadrature (exact here).
inline dense_matrix assemble_stiffness( const spline_space &space )
{
    constexpr std::size_t p = spline_space::degree;
    const std::size_t M = space.cells();
    const double h = space.cell_width();
    dense_matrix A( M, 0.0 );

    // All cells are translates of each other: the local matrix is shared.
    std::array<std::array<double,p+1>,p+1> local {};
    for ( std::size_t q = 0; q < spline_space::quad_points; ++q )
    {
        const auto dN = detail::cardinal_bspline_derivative<p>( space.reference_nodes()[q] );
        const double w = space.reference_weights()[q] * h / (h*h);
        for ( std::size_t a = 0; a <= p; ++a )
            for ( std::size_t b = 0; b <= p; ++b )
                local[a][b] += w * dN[a]*dN[b];
    }

    for ( std::size_t cell = 0; cell < M; ++cell )
        for ( std::size_t a = 0; a <= p; ++a )
            for ( std::size_t b = 0; b <= p; ++b )
                A( space.basis_index(cell,a), space.basis_index(cell,b) ) += local[a][b];
    return A;
}

/// Potential in spline coefficients; E = -phi'.
class field_solution
{
public:
    field_solution( std::shared_ptr<const spline_space> space, std::vector<double> coeffs,
                    double mean_density ):
        space_ { std::move(space) }, coeffs_ { std::move(coeffs) }, mean_density_ { mean_density }
    {}

    double potential( double x ) const { return space_->evaluate( coeffs_, x ); }
    double electric_field( double x ) const { return -space_->evaluate_derivative( coeffs_, x ); }
    double operator()( double x ) const { return electric_field(x); }

    std::span<const double> coefficients() const noexcept { return coeffs_; }
    const spline_space& space() const noexcept { return *space_; }

    /// Mean of the supplied density before it was removed.
    double mean_density() const noexcept { return mean_density_; }
    bool neutrality_violated() const noexcept { return std::abs(mean_density_) > neutrality_tolerance; }

private:
    std::shared_ptr<const spline_space> space_;
    std::vector<double> coeffs_;
    double mean_density_;
};

/**
 * Factorises the stiffness matrix once. The constant nullspace is removed by
 * adding a multiple of 1 1^T; with a mean-free load vector the solution of
 * the regularised system is exactly the zero-sum (zero-mean) Galerkin
 * solution.
 */
class poisson_solver
{
public:
    explicit poisson_solver( spline_space space ):
        space_ { std::make_shared<const spline_space>( std::move(space) ) },
        nodes_ { space_->quadrature_nodes() },
        weights_ { space_->quadrature_weights() }
    {
        dense_matrix A = assemble_stiffness( *space_ );
        const std::size_t M = A.size();
        const double tau = A(0,0) / double(M);
        for ( std::size_t j = 0; j < M; ++j )
            for ( std::size_t i = 0; i < M; ++i )
                A(i,j) += tau;
        llt_ = cholesky( std::move(A) );

        for ( std::size_t q = 0; q < spline_space::quad_points; ++q )
            basis_at_nodes_[q] = detail::cardinal_bspline<spline_space::degree>( space_->reference_nodes()[q] );
    }

    poisson_solver( double L, std::size_t cells ): poisson_solver( spline_space( L, cells ) ) {}

    const spline_space& space() const noexcept { return *space_; }

    /// Positions at which the density has to be supplied.
    std::span<const double> density_nodes() const noexcept { return nodes_; }

    field_solution solve( std::span<const double> rho ) const
    {
        if ( rho.size() != nodes_.size() )
            throw std::invalid_argument( "poisson_solver: density must be given at all quadrature nodes" );

        double mean = 0;
        for ( std::size_t i = 0; i < rho.size(); ++i )
            mean += weights_[i]*rho[i];
        mean /= space_->length();

        const std::size_t M = space_->cells();
        constexpr std::size_t Q = spline_space::quad_points;
        std::vector<double> load( M, 0.0 );
        for ( std::size_t cell = 0; cell < M; ++cell )
            for ( std::size_t q = 0; q < Q; ++q )
            {
                const std::size_t i = cell*Q + q;
                const double wr = weights_[i]*( rho[i] - mean );
                for ( std::size_t r = 0; r <= spline_space::degree; ++r )
                    load[ space_->basis_index(cell,r) ] += wr*basis_at_nodes_[q][r];
            }

        llt_.solve_in_place( load );

        // Partition of unity: shifting all coefficients shifts phi by a constant.
        double shift = 0;
        for ( double c: load ) shift += c;
        shift /= double(M);
        for ( double &c: load ) c -= shift;

        return field_solution( space_, std::move(load), mean );
    }

    template <typename Density>
    field_solution solve_function( Density &&rho ) const
    {
        std::vector<double> values( nodes_.size() );
        for ( std::size_t i = 0; i < nodes_.size(); ++i )
            values[i] = rho( nodes_[i] );
        return solve( values );
    }

private:
    std::shared_ptr<const spline_space> space_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    cholesky llt_;
    std::array<std::array<double,spline_space::degree+1>,spline_space::quad_points> basis_at_nodes_ {};
};

}
